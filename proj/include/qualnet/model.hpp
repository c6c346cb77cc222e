#pragma once

// Domain types shared by every other module. All types are plain values;
// equality is field-for-field so store round trips can be checked directly.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "qualnet/ids.hpp"

namespace qualnet {

struct ResearchOverview {
    std::string text;
    bool operator==(const ResearchOverview&) const = default;
};

struct SourceUnit {
    UnitId unit_id;
    std::string raw_text;
    std::size_t ordinal = 0;
    bool operator==(const SourceUnit&) const = default;
};

struct Sentence {
    SentenceId sentence_id;
    UnitId unit_id;
    std::size_t ordinal = 0;
    std::string text;
    bool operator==(const Sentence&) const = default;
};

// Byte offsets into the owning sentence's text, half-open.
struct Span {
    std::size_t start = 0;
    std::size_t end = 0;
    std::size_t length() const { return end - start; }
    bool operator==(const Span&) const = default;
};

enum class IndicatorStatus { Auto, Edited, Deleted };

struct Indicator {
    IndicatorId indicator_id;
    SentenceId sentence_id;
    std::string text;
    std::optional<Span> span;
    std::optional<ConceptId> concept_id;
    IndicatorStatus status = IndicatorStatus::Auto;
    std::optional<std::string> memo;

    bool live() const { return status != IndicatorStatus::Deleted; }
    bool operator==(const Indicator&) const = default;
};

inline constexpr std::size_t kMaxConceptReferences = 3;

struct Concept {
    ConceptId concept_id;
    std::string name;
    std::string definition;
    std::string color;  // "#rrggbb"
    std::vector<std::string> references;
    bool operator==(const Concept&) const = default;
};

enum class EdgeOrigin { Pipeline, Cooccurrence, Cue, Manual };
enum class EdgeStatus { Active, Deleted };

struct CausalEdge {
    EdgeId edge_id;
    IndicatorId cause;
    IndicatorId effect;
    SentenceId sentence_id;
    EdgeOrigin origin = EdgeOrigin::Pipeline;
    EdgeStatus status = EdgeStatus::Active;

    bool active() const { return status == EdgeStatus::Active; }
    bool operator==(const CausalEdge&) const = default;
};

struct ConceptEdge {
    ConceptId cause;
    ConceptId effect;
    std::size_t weight = 0;
    std::vector<EdgeId> contributing_edge_ids;
    bool operator==(const ConceptEdge&) const = default;
};

struct MergeRecord {
    IndicatorId canonical;
    std::vector<IndicatorId> absorbed;
    bool operator==(const MergeRecord&) const = default;
};

struct ProjectSettings {
    // Overrides the shipped sentence-splitting abbreviation list.
    std::optional<std::vector<std::string>> abbreviations;
    bool operator==(const ProjectSettings&) const = default;
};

struct Project {
    std::string project_id;
    std::optional<ResearchOverview> overview;
    ProjectSettings settings;
    std::vector<SourceUnit> units;
    std::vector<Sentence> sentences;
    std::vector<Indicator> indicators;
    std::vector<Concept> concepts;
    std::vector<CausalEdge> causal_edges;
    std::vector<ConceptEdge> concept_edges;
    std::vector<MergeRecord> merge_records;
    std::uint64_t revision = 0;

    bool operator==(const Project&) const = default;

    const Sentence* find_sentence(SentenceId id) const;
    const Indicator* find_indicator(IndicatorId id) const;
    Indicator* find_indicator(IndicatorId id);
    const Concept* find_concept(ConceptId id) const;
    Concept* find_concept(ConceptId id);
    const Concept* find_concept_by_name(const std::string& name) const;
    const CausalEdge* find_edge(EdgeId id) const;
    CausalEdge* find_edge(EdgeId id);

    // Next free ids (max existing + 1).
    UnitId next_unit_id() const;
    SentenceId next_sentence_id() const;
    IndicatorId next_indicator_id() const;
    ConceptId next_concept_id() const;
    EdgeId next_edge_id() const;

    // Live indicators of one sentence in extraction (id) order.
    std::vector<const Indicator*> live_indicators_of(SentenceId sentence) const;
};

std::string to_string(IndicatorStatus s);
std::string to_string(EdgeOrigin o);
std::string to_string(EdgeStatus s);
IndicatorStatus parse_indicator_status(const std::string& s);
EdgeOrigin parse_edge_origin(const std::string& s);
EdgeStatus parse_edge_status(const std::string& s);

// Pushes `reference` onto the concept, evicting the oldest entries beyond
// kMaxConceptReferences. Exact duplicates are not added twice.
void add_reference(Concept& target, const std::string& reference);

// Returns one human-readable description per broken invariant; empty means
// the project is well formed.
std::vector<std::string> validate_project(const Project& project);

}  // namespace qualnet
