#include "qualnet/model.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "qualnet/error.hpp"
#include "qualnet/text.hpp"

namespace qualnet {

std::string_view to_string(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::EmptyCorpus: return "EmptyCorpus";
        case ErrorKind::MalformedRecord: return "MalformedRecord";
        case ErrorKind::Precondition: return "Precondition";
        case ErrorKind::ProviderUnavailable: return "ProviderUnavailable";
        case ErrorKind::ProviderRejected: return "ProviderRejected";
        case ErrorKind::MalformedProviderOutput: return "MalformedProviderOutput";
        case ErrorKind::InvalidLabel: return "InvalidLabel";
        case ErrorKind::NoMappedIndicators: return "NoMappedIndicators";
        case ErrorKind::NoEdges: return "NoEdges";
        case ErrorKind::UnknownNode: return "UnknownNode";
        case ErrorKind::EmptyGraph: return "EmptyGraph";
        case ErrorKind::MissingAdjudication: return "MissingAdjudication";
        case ErrorKind::NoMatchedPairs: return "NoMatchedPairs";
        case ErrorKind::DegenerateInput: return "DegenerateInput";
        case ErrorKind::DegenerateMarginals: return "DegenerateMarginals";
        case ErrorKind::IoError: return "IoError";
        case ErrorKind::ValidationFailed: return "ValidationFailed";
        case ErrorKind::SchemaMismatch: return "SchemaMismatch";
        case ErrorKind::NotFound: return "NotFound";
        case ErrorKind::InvalidInput: return "InvalidInput";
        case ErrorKind::Conflict: return "Conflict";
    }
    return "Unknown";
}

namespace {

template <class T, class IdT, class Proj>
auto* find_by_id(T& items, IdT id, Proj proj) {
    auto it = std::find_if(items.begin(), items.end(),
                           [&](const auto& item) { return proj(item) == id; });
    return it == items.end() ? nullptr : &*it;
}

template <class T, class Proj>
std::uint64_t next_value(const std::vector<T>& items, Proj proj) {
    std::uint64_t max_seen = 0;
    for (const auto& item : items) max_seen = std::max(max_seen, proj(item).value);
    return max_seen + 1;
}

}  // namespace

const Sentence* Project::find_sentence(SentenceId id) const {
    return find_by_id(sentences, id, [](const Sentence& s) { return s.sentence_id; });
}
const Indicator* Project::find_indicator(IndicatorId id) const {
    return find_by_id(indicators, id, [](const Indicator& i) { return i.indicator_id; });
}
Indicator* Project::find_indicator(IndicatorId id) {
    return find_by_id(indicators, id, [](const Indicator& i) { return i.indicator_id; });
}
const Concept* Project::find_concept(ConceptId id) const {
    return find_by_id(concepts, id, [](const Concept& c) { return c.concept_id; });
}
Concept* Project::find_concept(ConceptId id) {
    return find_by_id(concepts, id, [](const Concept& c) { return c.concept_id; });
}
const Concept* Project::find_concept_by_name(const std::string& name) const {
    return find_by_id(concepts, name, [](const Concept& c) { return c.name; });
}
const CausalEdge* Project::find_edge(EdgeId id) const {
    return find_by_id(causal_edges, id, [](const CausalEdge& e) { return e.edge_id; });
}

CausalEdge* Project::find_edge(EdgeId id) {
    return find_by_id(causal_edges, id, [](const CausalEdge& e) { return e.edge_id; });
}

UnitId Project::next_unit_id() const {
    return UnitId{next_value(units, [](const SourceUnit& u) { return u.unit_id; })};
}
SentenceId Project::next_sentence_id() const {
    return SentenceId{next_value(sentences, [](const Sentence& s) { return s.sentence_id; })};
}
IndicatorId Project::next_indicator_id() const {
    return IndicatorId{
        next_value(indicators, [](const Indicator& i) { return i.indicator_id; })};
}
ConceptId Project::next_concept_id() const {
    return ConceptId{next_value(concepts, [](const Concept& c) { return c.concept_id; })};
}
EdgeId Project::next_edge_id() const {
    return EdgeId{next_value(causal_edges, [](const CausalEdge& e) { return e.edge_id; })};
}

std::vector<const Indicator*> Project::live_indicators_of(SentenceId sentence) const {
    std::vector<const Indicator*> out;
    for (const auto& ind : indicators) {
        if (ind.sentence_id == sentence && ind.live()) out.push_back(&ind);
    }
    std::sort(out.begin(), out.end(), [](const Indicator* a, const Indicator* b) {
        return a->indicator_id < b->indicator_id;
    });
    return out;
}

std::string to_string(IndicatorStatus s) {
    switch (s) {
        case IndicatorStatus::Auto: return "auto";
        case IndicatorStatus::Edited: return "edited";
        case IndicatorStatus::Deleted: return "deleted";
    }
    return "auto";
}

std::string to_string(EdgeOrigin o) {
    switch (o) {
        case EdgeOrigin::Pipeline: return "pipeline";
        case EdgeOrigin::Cooccurrence: return "cooccurrence";
        case EdgeOrigin::Cue: return "cue";
        case EdgeOrigin::Manual: return "manual";
    }
    return "pipeline";
}

std::string to_string(EdgeStatus s) {
    return s == EdgeStatus::Active ? "active" : "deleted";
}

IndicatorStatus parse_indicator_status(const std::string& s) {
    if (s == "auto") return IndicatorStatus::Auto;
    if (s == "edited") return IndicatorStatus::Edited;
    if (s == "deleted") return IndicatorStatus::Deleted;
    throw Error(ErrorKind::InvalidInput, "unknown indicator status: " + s);
}

EdgeOrigin parse_edge_origin(const std::string& s) {
    if (s == "pipeline") return EdgeOrigin::Pipeline;
    if (s == "cooccurrence") return EdgeOrigin::Cooccurrence;
    if (s == "cue") return EdgeOrigin::Cue;
    if (s == "manual") return EdgeOrigin::Manual;
    throw Error(ErrorKind::InvalidInput, "unknown edge origin: " + s);
}

EdgeStatus parse_edge_status(const std::string& s) {
    if (s == "active") return EdgeStatus::Active;
    if (s == "deleted") return EdgeStatus::Deleted;
    throw Error(ErrorKind::InvalidInput, "unknown edge status: " + s);
}

void add_reference(Concept& target, const std::string& reference) {
    if (reference.empty()) return;
    if (std::find(target.references.begin(), target.references.end(), reference) !=
        target.references.end()) {
        return;
    }
    target.references.push_back(reference);
    while (target.references.size() > kMaxConceptReferences) {
        target.references.erase(target.references.begin());
    }
}

std::vector<std::string> validate_project(const Project& p) {
    std::vector<std::string> out;
    auto report = [&out](auto&&... parts) {
        std::ostringstream os;
        (os << ... << parts);
        out.push_back(os.str());
    };

    if (p.overview && trim(p.overview->text).empty()) {
        report("overview: text is blank");
    }

    // units
    std::unordered_set<UnitId> unit_ids;
    std::vector<std::size_t> unit_ordinals;
    for (const auto& u : p.units) {
        if (!u.unit_id.valid()) report("unit: invalid id");
        if (!unit_ids.insert(u.unit_id).second) report("unit ", u.unit_id.value, ": duplicate id");
        if (u.raw_text.empty()) report("unit ", u.unit_id.value, ": empty raw_text");
        unit_ordinals.push_back(u.ordinal);
    }
    std::sort(unit_ordinals.begin(), unit_ordinals.end());
    for (std::size_t i = 0; i < unit_ordinals.size(); ++i) {
        if (unit_ordinals[i] != i) {
            report("units: ordinals are not unique and contiguous from 0");
            break;
        }
    }

    // sentences
    std::unordered_map<SentenceId, const Sentence*> sentences;
    std::set<std::pair<UnitId, std::size_t>> sentence_slots;
    for (const auto& s : p.sentences) {
        if (!s.sentence_id.valid()) report("sentence: invalid id");
        if (!sentences.emplace(s.sentence_id, &s).second) {
            report("sentence ", s.sentence_id.value, ": duplicate id");
        }
        if (s.text.empty()) report("sentence ", s.sentence_id.value, ": empty text");
        if (!unit_ids.count(s.unit_id)) {
            report("sentence ", s.sentence_id.value, ": unknown unit ", s.unit_id.value);
        }
        if (!sentence_slots.emplace(s.unit_id, s.ordinal).second) {
            report("sentence ", s.sentence_id.value, ": duplicate (unit, ordinal)");
        }
    }

    // concepts
    std::unordered_set<ConceptId> concept_ids;
    std::set<std::string> concept_names;
    for (const auto& c : p.concepts) {
        if (!c.concept_id.valid()) report("concept: invalid id");
        if (!concept_ids.insert(c.concept_id).second) {
            report("concept ", c.concept_id.value, ": duplicate id");
        }
        if (c.name.empty()) report("concept ", c.concept_id.value, ": empty name");
        if (!concept_names.insert(c.name).second) {
            report("concept ", c.concept_id.value, ": duplicate name '", c.name, "'");
        }
        if (c.references.size() > kMaxConceptReferences) {
            report("concept ", c.concept_id.value, ": ", c.references.size(),
                   " references exceed the cap of ", kMaxConceptReferences);
        }
    }

    // indicators
    std::unordered_map<IndicatorId, const Indicator*> indicators;
    for (const auto& ind : p.indicators) {
        const auto id = ind.indicator_id.value;
        if (!ind.indicator_id.valid()) report("indicator: invalid id");
        if (!indicators.emplace(ind.indicator_id, &ind).second) {
            report("indicator ", id, ": duplicate id");
        }
        auto sit = sentences.find(ind.sentence_id);
        if (sit == sentences.end()) {
            report("indicator ", id, ": unknown sentence ", ind.sentence_id.value);
        } else if (ind.span) {
            const auto& span = *ind.span;
            if (!(span.start < span.end && span.end <= sit->second->text.size())) {
                report("indicator ", id, ": span [", span.start, ",", span.end,
                       ") outside sentence");
            }
        }
        if (ind.live() && ind.text.empty()) report("indicator ", id, ": empty text");
        if (ind.concept_id && !concept_ids.count(*ind.concept_id)) {
            report("indicator ", id, ": unknown concept ", ind.concept_id->value);
        }
    }

    // merge records
    std::unordered_map<IndicatorId, IndicatorId> absorbed_into;  // absorbed -> canonical
    std::unordered_set<IndicatorId> seen_in_records;
    for (const auto& rec : p.merge_records) {
        const auto cid = rec.canonical.value;
        if (rec.absorbed.empty()) report("merge record ", cid, ": empty absorbed list");
        if (!indicators.count(rec.canonical)) report("merge record ", cid, ": unknown canonical");
        if (!seen_in_records.insert(rec.canonical).second) {
            report("merge record ", cid, ": indicator ", cid, " appears in more than one record");
        }
        for (const auto& a : rec.absorbed) {
            if (a == rec.canonical) report("merge record ", cid, ": canonical is also absorbed");
            else if (!seen_in_records.insert(a).second) {
                report("merge record ", cid, ": indicator ", a.value,
                       " appears in more than one record");
            }
            if (!indicators.count(a)) report("merge record ", cid, ": unknown absorbed ", a.value);
            absorbed_into[a] = rec.canonical;
        }
    }

    // causal edges
    std::unordered_map<EdgeId, const CausalEdge*> edges;
    for (const auto& e : p.causal_edges) {
        const auto eid = e.edge_id.value;
        if (!e.edge_id.valid()) report("edge: invalid id");
        if (!edges.emplace(e.edge_id, &e).second) report("edge ", eid, ": duplicate id");
        if (!sentences.count(e.sentence_id)) {
            report("edge ", eid, ": unknown sentence ", e.sentence_id.value);
        }
        if (!e.active()) continue;
        if (e.cause == e.effect) report("edge ", eid, ": cause equals effect");
        for (auto endpoint : {e.cause, e.effect}) {
            auto it = indicators.find(endpoint);
            if (it == indicators.end()) {
                report("edge ", eid, ": unknown endpoint indicator ", endpoint.value);
                continue;
            }
            if (!it->second->live()) {
                report("edge ", eid, ": endpoint indicator ", endpoint.value, " is deleted");
                continue;
            }
            // The evidence sentence must be the endpoint's own sentence, or the
            // sentence of an indicator that was merged into it.
            bool sentence_ok = it->second->sentence_id == e.sentence_id;
            if (!sentence_ok) {
                for (const auto& [absorbed, canonical] : absorbed_into) {
                    if (canonical != endpoint) continue;
                    auto ait = indicators.find(absorbed);
                    if (ait != indicators.end() && ait->second->sentence_id == e.sentence_id) {
                        sentence_ok = true;
                        break;
                    }
                }
            }
            if (!sentence_ok) {
                report("edge ", eid, ": sentence ", e.sentence_id.value,
                       " is not the sentence of endpoint ", endpoint.value);
            }
        }
    }

    // concept edges
    std::set<std::pair<ConceptId, ConceptId>> concept_pairs;
    std::unordered_set<EdgeId> contributing_seen;
    for (const auto& ce : p.concept_edges) {
        std::ostringstream key;
        key << "concept edge " << ce.cause.value << "->" << ce.effect.value;
        const std::string label = key.str();
        if (!concept_pairs.emplace(ce.cause, ce.effect).second) report(label, ": duplicate pair");
        if (ce.weight == 0 || ce.weight != ce.contributing_edge_ids.size()) {
            report(label, ": weight ", ce.weight, " does not match ",
                   ce.contributing_edge_ids.size(), " contributing edges");
        }
        for (const auto& eid : ce.contributing_edge_ids) {
            if (!contributing_seen.insert(eid).second) {
                report(label, ": edge ", eid.value, " contributes more than once");
            }
            auto it = edges.find(eid);
            if (it == edges.end()) {
                report(label, ": unknown contributing edge ", eid.value);
                continue;
            }
            const auto& e = *it->second;
            if (!e.active()) {
                report(label, ": contributing edge ", eid.value, " is deleted");
                continue;
            }
            auto c = indicators.find(e.cause);
            auto f = indicators.find(e.effect);
            if (c == indicators.end() || f == indicators.end() ||
                c->second->concept_id != std::optional<ConceptId>(ce.cause) ||
                f->second->concept_id != std::optional<ConceptId>(ce.effect)) {
                report(label, ": contributing edge ", eid.value,
                       " does not join the concept pair");
            }
        }
    }

    return out;
}

}  // namespace qualnet
