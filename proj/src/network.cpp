#include "qualnet/network.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <unordered_map>
#include <unordered_set>

#include "qualnet/error.hpp"

namespace qualnet::network {

using nlohmann::json;

const IndicatorNode* IndicatorGraph::find(IndicatorId id) const {
    auto it = std::lower_bound(nodes.begin(), nodes.end(), id,
                               [](const IndicatorNode& n, IndicatorId v) { return n.id < v; });
    return it != nodes.end() && it->id == id ? &*it : nullptr;
}

const ConceptNode* ConceptGraph::find(ConceptId id) const {
    for (const auto& n : nodes) {
        if (n.id == id) return &n;
    }
    return nullptr;
}

IndicatorGraph build_indicator_graph(const Project& project) {
    IndicatorGraph g;
    std::unordered_map<IndicatorId, std::size_t> index;
    for (const auto& ind : project.indicators) {
        if (!ind.live()) continue;
        g.nodes.push_back({ind.indicator_id, ind.text, ind.sentence_id, ind.concept_id, 0});
    }
    std::sort(g.nodes.begin(), g.nodes.end(),
              [](const IndicatorNode& a, const IndicatorNode& b) { return a.id < b.id; });
    for (std::size_t i = 0; i < g.nodes.size(); ++i) index.emplace(g.nodes[i].id, i);

    for (const auto& e : project.causal_edges) {
        if (!e.active()) continue;
        auto c = index.find(e.cause);
        auto f = index.find(e.effect);
        if (c == index.end() || f == index.end()) continue;
        g.edges.push_back({e.edge_id, e.cause, e.effect, e.origin});
        ++g.nodes[c->second].degree;
        ++g.nodes[f->second].degree;
    }
    std::sort(g.edges.begin(), g.edges.end(),
              [](const GraphEdge& a, const GraphEdge& b) { return a.id < b.id; });
    return g;
}

ConceptGraph consolidate(const IndicatorGraph& graph, const std::vector<Concept>& concepts) {
    ConceptGraph cg;
    std::unordered_map<ConceptId, std::size_t> node_index;
    for (const auto& c : concepts) {
        cg.nodes.push_back({c.concept_id, c.name, c.color, 0});
    }
    std::sort(cg.nodes.begin(), cg.nodes.end(),
              [](const ConceptNode& a, const ConceptNode& b) { return a.id < b.id; });
    for (std::size_t i = 0; i < cg.nodes.size(); ++i) node_index.emplace(cg.nodes[i].id, i);

    std::unordered_map<IndicatorId, ConceptId> assignment;
    for (const auto& n : graph.nodes) {
        if (!n.concept_id) continue;
        auto it = node_index.find(*n.concept_id);
        if (it == node_index.end()) continue;
        assignment.emplace(n.id, *n.concept_id);
        ++cg.nodes[it->second].indicator_count;
        ++cg.mapped_indicators;
    }

    std::map<std::pair<ConceptId, ConceptId>, ConceptEdge> merged;
    for (const auto& e : graph.edges) {
        auto c = assignment.find(e.cause);
        auto f = assignment.find(e.effect);
        if (c == assignment.end() || f == assignment.end()) {
            ++cg.excluded_edges;
            continue;
        }
        auto& ce = merged[{c->second, f->second}];
        ce.cause = c->second;
        ce.effect = f->second;
        ce.contributing_edge_ids.push_back(e.id);
        ce.weight = ce.contributing_edge_ids.size();
        ++cg.total_indicator_edges;
    }
    for (auto& [key, ce] : merged) cg.edges.push_back(std::move(ce));
    return cg;
}

void refresh_concept_edges(Project& project) {
    project.concept_edges = consolidate(build_indicator_graph(project), project.concepts).edges;
}

std::string Percentage::str() const {
    const std::int64_t whole = hundredths / 100;
    const std::int64_t frac = hundredths % 100;
    return std::to_string(whole) + "." + (frac < 10 ? "0" : "") + std::to_string(frac);
}

Percentage percentage(std::uint64_t numerator, std::uint64_t denominator) {
    // round(10000 * n / d) with halves rounded up, in integers.
    const std::uint64_t scaled = 10000 * numerator;
    return Percentage{static_cast<std::int64_t>((2 * scaled + denominator) / (2 * denominator))};
}

Percentage concept_share(const ConceptGraph& graph, ConceptId concept_id) {
    if (graph.mapped_indicators == 0) {
        throw Error(ErrorKind::NoMappedIndicators, "no indicator is mapped to a concept");
    }
    const auto* node = graph.find(concept_id);
    return percentage(node ? node->indicator_count : 0, graph.mapped_indicators);
}

Percentage edge_share(const ConceptGraph& graph, const ConceptEdge& edge) {
    if (graph.total_indicator_edges == 0) {
        throw Error(ErrorKind::NoEdges, "no indicator edge joins two mapped indicators");
    }
    return percentage(edge.weight, graph.total_indicator_edges);
}

namespace {

IndicatorGraph induced(const IndicatorGraph& graph, const std::unordered_set<IndicatorId>& keep) {
    IndicatorGraph out;
    for (const auto& n : graph.nodes) {
        if (keep.count(n.id)) out.nodes.push_back(n);
    }
    for (const auto& e : graph.edges) {
        if (keep.count(e.cause) && keep.count(e.effect)) out.edges.push_back(e);
    }
    return out;
}

}  // namespace

IndicatorGraph degree_filter(const IndicatorGraph& graph, double fraction) {
    if (!(fraction > 0.0 && fraction <= 1.0)) {
        throw Error(ErrorKind::InvalidInput, "fraction must lie in (0, 1]");
    }
    const auto n = graph.nodes.size();
    // 0.3 * 10 is 3.0000000000000004 in binary floating point.
    auto keep_count = static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(n) - 1e-9));
    keep_count = std::clamp<std::size_t>(keep_count, n > 0 ? 1 : 0, n);

    std::vector<const IndicatorNode*> order;
    for (const auto& node : graph.nodes) order.push_back(&node);
    std::sort(order.begin(), order.end(), [](const IndicatorNode* a, const IndicatorNode* b) {
        if (a->degree != b->degree) return a->degree > b->degree;
        return a->id < b->id;
    });
    std::unordered_set<IndicatorId> keep;
    for (std::size_t i = 0; i < keep_count; ++i) keep.insert(order[i]->id);
    return induced(graph, keep);
}

IndicatorGraph component_of(const IndicatorGraph& graph, Selection selection) {
    IndicatorId start;
    if (const auto* node = std::get_if<IndicatorId>(&selection)) {
        if (!graph.find(*node)) throw Error(ErrorKind::UnknownNode, "node is not in the graph");
        start = *node;
    } else {
        const auto eid = std::get<EdgeId>(selection);
        auto it = std::find_if(graph.edges.begin(), graph.edges.end(),
                               [&](const GraphEdge& e) { return e.id == eid; });
        if (it == graph.edges.end()) throw Error(ErrorKind::UnknownNode, "edge is not in the graph");
        start = it->cause;
    }

    std::unordered_map<IndicatorId, std::vector<IndicatorId>> adjacent;
    for (const auto& e : graph.edges) {
        adjacent[e.cause].push_back(e.effect);
        adjacent[e.effect].push_back(e.cause);
    }
    std::unordered_set<IndicatorId> seen{start};
    std::vector<IndicatorId> stack{start};
    while (!stack.empty()) {
        auto v = stack.back();
        stack.pop_back();
        for (auto w : adjacent[v]) {
            if (seen.insert(w).second) stack.push_back(w);
        }
    }
    return induced(graph, seen);
}

std::vector<provider::EmbeddingVector> EmbeddingCache::get(provider::EmbeddingProvider& embedder,
                                                           const std::vector<std::string>& texts) {
    std::vector<std::string> missing;
    {
        std::lock_guard lock(mutex_);
        std::unordered_set<std::string> queued;
        for (const auto& t : texts) {
            if (!cache_.count(t) && queued.insert(t).second) missing.push_back(t);
        }
    }
    if (!missing.empty()) {
        auto vectors = embedder.embed(missing);
        std::lock_guard lock(mutex_);
        for (std::size_t i = 0; i < missing.size(); ++i) {
            cache_.emplace(missing[i], std::move(vectors[i]));
        }
    }
    std::lock_guard lock(mutex_);
    std::vector<provider::EmbeddingVector> out;
    out.reserve(texts.size());
    for (const auto& t : texts) out.push_back(cache_.at(t));
    return out;
}

std::size_t EmbeddingCache::size() const {
    std::lock_guard lock(mutex_);
    return cache_.size();
}

std::vector<SearchHit> semantic_search(const std::string& query, const IndicatorGraph& graph,
                                       provider::EmbeddingProvider& embedder, std::size_t k,
                                       EmbeddingCache& cache) {
    if (k == 0) throw Error(ErrorKind::InvalidInput, "k must be at least 1");
    if (graph.nodes.empty()) throw Error(ErrorKind::EmptyGraph, "graph has no nodes");
    std::vector<std::string> texts;
    for (const auto& n : graph.nodes) texts.push_back(n.text);
    const auto vectors = cache.get(embedder, texts);
    const auto q = embedder.embed({query}).front();

    std::vector<SearchHit> hits;
    for (std::size_t i = 0; i < graph.nodes.size(); ++i) {
        hits.push_back({graph.nodes[i].id, provider::cosine(q, vectors[i])});
    }
    std::sort(hits.begin(), hits.end(), [](const SearchHit& a, const SearchHit& b) {
        if (a.similarity != b.similarity) return a.similarity > b.similarity;
        return a.id < b.id;
    });
    if (hits.size() > k) hits.resize(k);
    return hits;
}

json indicator_view_json(const IndicatorGraph& graph) {
    json nodes = json::array();
    for (const auto& n : graph.nodes) {
        nodes.push_back({{"id", n.id.value},
                         {"text", n.text},
                         {"sentence_id", n.sentence_id.value},
                         {"concept_id", n.concept_id ? json(n.concept_id->value) : json(nullptr)},
                         {"degree", n.degree}});
    }
    json edges = json::array();
    for (const auto& e : graph.edges) {
        edges.push_back({{"id", e.id.value},
                         {"cause", e.cause.value},
                         {"effect", e.effect.value},
                         {"origin", to_string(e.origin)}});
    }
    return {{"nodes", nodes}, {"edges", edges}};
}

json concept_view_json(const ConceptGraph& graph) {
    json nodes = json::array();
    for (const auto& n : graph.nodes) {
        json share = nullptr;
        if (graph.mapped_indicators > 0) {
            share = percentage(n.indicator_count, graph.mapped_indicators).str();
        }
        nodes.push_back({{"id", n.id.value},
                         {"name", n.name},
                         {"color", n.color},
                         {"indicator_count", n.indicator_count},
                         {"share", share}});
    }
    json edges = json::array();
    for (const auto& e : graph.edges) {
        json ids = json::array();
        for (auto id : e.contributing_edge_ids) ids.push_back(id.value);
        edges.push_back({{"cause", e.cause.value},
                         {"effect", e.effect.value},
                         {"weight", e.weight},
                         {"contributing_edge_ids", ids},
                         {"share", edge_share(graph, e).str()}});
    }
    return {{"concept_nodes", nodes},
            {"concept_edges", edges},
            {"total_indicator_edges", graph.total_indicator_edges},
            {"excluded_edges", graph.excluded_edges},
            {"mapped_indicators", graph.mapped_indicators}};
}

json network_json(const IndicatorGraph& graph, const ConceptGraph& concepts) {
    json out = indicator_view_json(graph);
    const json concept_view = concept_view_json(concepts);
    for (const auto& [key, value] : concept_view.items()) out[key] = value;
    return out;
}

}  // namespace qualnet::network
