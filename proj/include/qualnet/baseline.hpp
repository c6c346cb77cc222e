#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "qualnet/model.hpp"

namespace qualnet::baseline {

enum class CooccurrenceMode { Consecutive, AllOrdered };
enum class CueDirection { Forward, Backward };  // forward: earlier text causes later text
enum class CueKind { Literal, Pattern };

// A literal cue ("because") or a pattern with [cause]/[effect] slots
// ("[effect] is the result of [cause]"). For patterns the connective text is
// what lies between the slots and the direction follows from slot order.
struct CueRule {
    std::string cue;
    CueKind kind = CueKind::Literal;
    CueDirection direction = CueDirection::Forward;

    // Text searched for between two indicators.
    std::string connective() const;
    bool operator==(const CueRule&) const = default;
};

// Builds a rule, deriving direction from slot order for patterns. Throws
// InvalidInput on an empty cue or a pattern without both slots.
CueRule make_rule(std::string cue, CueKind kind, CueDirection direction);

// Default inventory; multi-word cues precede their one-word prefixes so the
// first match is the most specific one.
const std::vector<CueRule>& default_cue_rules();

// JSON array of {cue, kind: literal|pattern, direction: forward|backward}.
std::vector<CueRule> cue_rules_from_json(const nlohmann::json& j);
nlohmann::json cue_rules_to_json(const std::vector<CueRule>& rules);
std::vector<CueRule> load_cue_rules(const std::filesystem::path& path);

// Text order: by span start, span-less indicators after spanned ones in id
// order. Deleted indicators are dropped.
std::vector<const Indicator*> text_order(const std::vector<const Indicator*>& indicators);

// Edges are returned with edge_id unset and status active; `sentence` is the
// evidence scope recorded on each edge.
std::vector<CausalEdge> cooccurrence_edges(const std::vector<const Indicator*>& ordered,
                                           SentenceId sentence, CooccurrenceMode mode);

// For each adjacent pair in text order, the first rule whose connective
// occurs (whole words, case-insensitive) in the text between the two spans
// yields one edge. Span-less indicators are skipped.
std::vector<CausalEdge> cue_edges(const Sentence& sentence,
                                  const std::vector<const Indicator*>& indicators,
                                  const std::vector<CueRule>& rules);

enum class Method { Cooccurrence, Cue };

// Runs a baseline over every sentence of the project and appends the edges
// (new ids, given origin). Returns the number of edges added.
std::size_t apply_to_project(Project& project, Method method,
                             CooccurrenceMode mode = CooccurrenceMode::Consecutive,
                             const std::vector<CueRule>& rules = default_cue_rules());

}  // namespace qualnet::baseline
