#pragma once

#include <cstddef>
#include <cstdint>
#include <mutex>
#include <optional>
#include <string>
#include <unordered_map>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "qualnet/model.hpp"
#include "qualnet/provider.hpp"

namespace qualnet::network {

struct IndicatorNode {
    IndicatorId id;
    std::string text;
    SentenceId sentence_id;
    std::optional<ConceptId> concept_id;
    std::size_t degree = 0;
    bool operator==(const IndicatorNode&) const = default;
};

struct GraphEdge {
    EdgeId id;
    IndicatorId cause;
    IndicatorId effect;
    EdgeOrigin origin = EdgeOrigin::Pipeline;
    bool operator==(const GraphEdge&) const = default;
};

// Nodes and edges are sorted by id.
struct IndicatorGraph {
    std::vector<IndicatorNode> nodes;
    std::vector<GraphEdge> edges;

    const IndicatorNode* find(IndicatorId id) const;
    bool operator==(const IndicatorGraph&) const = default;
};

struct ConceptNode {
    ConceptId id;
    std::string name;
    std::string color;
    std::size_t indicator_count = 0;
    bool operator==(const ConceptNode&) const = default;
};

struct ConceptGraph {
    std::vector<ConceptNode> nodes;   // every project concept, by id
    std::vector<ConceptEdge> edges;   // by (cause, effect)
    std::size_t total_indicator_edges = 0;  // active edges with both endpoints mapped
    std::size_t excluded_edges = 0;         // active edges with an unmapped endpoint
    std::size_t mapped_indicators = 0;

    const ConceptNode* find(ConceptId id) const;
    bool operator==(const ConceptGraph&) const = default;
};

IndicatorGraph build_indicator_graph(const Project& project);

ConceptGraph consolidate(const IndicatorGraph& graph, const std::vector<Concept>& concepts);

// Recomputes project.concept_edges from the current indicator graph.
void refresh_concept_edges(Project& project);

// A percentage rounded half-up to two decimals. `hundredths` is exact.
struct Percentage {
    std::int64_t hundredths = 0;

    double value() const { return static_cast<double>(hundredths) / 100.0; }
    std::string str() const;  // "25.00"
    bool operator==(const Percentage&) const = default;
};

// 100 * numerator / denominator, rounded half-up to two decimals.
Percentage percentage(std::uint64_t numerator, std::uint64_t denominator);

// Throws NoMappedIndicators.
Percentage concept_share(const ConceptGraph& graph, ConceptId concept_id);
// Throws NoEdges.
Percentage edge_share(const ConceptGraph& graph, const ConceptEdge& edge);

// Keeps ceil(fraction * |nodes|) nodes of highest degree (ties: lower id
// first) and the edges among them. Throws InvalidInput outside (0, 1].
IndicatorGraph degree_filter(const IndicatorGraph& graph, double fraction);

using Selection = std::variant<IndicatorId, EdgeId>;

// Weakly connected component containing the selected node or edge. Throws
// UnknownNode when the selection is not in the graph.
IndicatorGraph component_of(const IndicatorGraph& graph, Selection selection);

// Embeddings keyed by exact indicator text; edits produce new keys.
class EmbeddingCache {
public:
    std::vector<provider::EmbeddingVector> get(provider::EmbeddingProvider& embedder,
                                               const std::vector<std::string>& texts);
    std::size_t size() const;

private:
    mutable std::mutex mutex_;
    std::unordered_map<std::string, provider::EmbeddingVector> cache_;
};

struct SearchHit {
    IndicatorId id;
    double similarity = 0.0;
    bool operator==(const SearchHit&) const = default;
};

// Top-k nodes by cosine similarity to the query, descending; ties by
// ascending id. Throws EmptyGraph, or InvalidInput when k == 0.
std::vector<SearchHit> semantic_search(const std::string& query, const IndicatorGraph& graph,
                                       provider::EmbeddingProvider& embedder, std::size_t k,
                                       EmbeddingCache& cache);

// Wire format consumed by clients:
//   nodes [{id, text, concept_id, degree, sentence_id}],
//   edges [{id, cause, effect, origin}],
//   concept_nodes [{id, name, color, indicator_count, share}],
//   concept_edges [{cause, effect, weight, contributing_edge_ids, share}]
nlohmann::json indicator_view_json(const IndicatorGraph& graph);
nlohmann::json concept_view_json(const ConceptGraph& graph);
nlohmann::json network_json(const IndicatorGraph& graph, const ConceptGraph& concepts);

}  // namespace qualnet::network
