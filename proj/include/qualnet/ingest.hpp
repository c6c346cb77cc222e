#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "qualnet/model.hpp"

namespace qualnet::ingest {

// One unit per non-blank line, in file order. Throws EmptyCorpus when the
// text has no non-blank line and InvalidInput when it is not valid UTF-8.
std::vector<SourceUnit> split_units(std::string_view corpus_text, UnitId first_id = UnitId{1},
                                    std::size_t first_ordinal = 0);

// Splits on . ! ? followed by whitespace or end of text, except where the
// token ending at a period is one of `abbreviations` (case-insensitive).
// A unit without any terminator yields a single sentence.
std::vector<Sentence> split_sentences(const SourceUnit& unit,
                                      const std::vector<std::string>& abbreviations,
                                      SentenceId first_id = SentenceId{1});

const std::vector<std::string>& default_abbreviations();

// One abbreviation per line; blank lines and lines starting with '#' ignored.
std::vector<std::string> load_abbreviations(const std::filesystem::path& path);

// Appends the corpus to the project: units continue the project's ordinals,
// sentences are split with the project's abbreviation override (or the
// default list). Returns the number of units added.
std::size_t ingest_corpus(Project& project, std::string_view corpus_text);

enum class CausalDirection { E1CausesE2, E2CausesE1, NonCausal };

struct SemEvalRecord {
    long record_id = 0;
    std::string sentence_text;
    Span e1_span;
    Span e2_span;
    std::string relation_label;
    CausalDirection causal_direction = CausalDirection::NonCausal;

    std::string e1_text() const { return sentence_text.substr(e1_span.start, e1_span.length()); }
    std::string e2_text() const { return sentence_text.substr(e2_span.start, e2_span.length()); }
    bool operator==(const SemEvalRecord&) const = default;
};

// Parses the SemEval-2010 Task 8 TXT layout:
//   <id>\t"<sentence with <e1>..</e1> and <e2>..</e2> tags>"
//   <Relation>(e1,e2) | Other
//   Comment: ...            (optional)
// Throws MalformedRecord naming the 1-based line on any layout violation.
std::vector<SemEvalRecord> parse_semeval(std::string_view file_text);

struct GoldSpanEdge {
    long record_id = 0;
    Span cause;
    Span effect;
    bool operator==(const GoldSpanEdge&) const = default;
};

std::vector<GoldSpanEdge> semeval_gold_edges(const std::vector<SemEvalRecord>& records);

std::string to_string(CausalDirection d);

}  // namespace qualnet::ingest
