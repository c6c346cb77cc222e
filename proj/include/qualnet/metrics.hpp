#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "qualnet/model.hpp"
#include "qualnet/provider.hpp"

namespace qualnet::metrics {

enum class MatchMode { ExactNormalized, EmbeddingThreshold, Adjudication };

// Adjudication keys are the raw (predicted, gold) text pairs.
using Adjudication = std::map<std::pair<std::string, std::string>, bool>;

struct MatchPolicy {
    MatchMode mode = MatchMode::ExactNormalized;
    double threshold = 0.90;                      // embedding mode only
    provider::EmbeddingProvider* embedder = nullptr;  // embedding mode only
    std::optional<Adjudication> adjudication;     // adjudication mode only

    static MatchPolicy exact() { return {}; }
    static MatchPolicy embedding(provider::EmbeddingProvider& embedder, double threshold = 0.90);
    static MatchPolicy adjudicated(Adjudication table);
};

// A comparable item: one text (indicator) or a cause/effect pair (edge).
// Items only match when their `group` values are equal (e.g. the sentence
// they belong to, or a concept name).
struct Item {
    std::vector<std::string> texts;
    std::string group;
    bool unordered = false;  // pairs may match in either orientation

    static Item text(std::string t, std::string group = {});
    static Item edge(std::string cause, std::string effect, std::string group = {});
    bool operator==(const Item&) const = default;
};

struct Match {
    std::size_t predicted = 0;  // index into predicted
    std::size_t gold = 0;       // index into gold
    double similarity = 1.0;
    bool same_orientation = true;  // pairs: cause matched cause
};

// Greedy one-to-one matching. Embedding mode processes candidate pairs by
// descending similarity; exact and adjudication modes in normalized key
// order. Throws MissingAdjudication when a needed pair has no verdict (pairs
// that are equal after normalization need none).
std::vector<Match> match_sets(const std::vector<Item>& predicted, const std::vector<Item>& gold,
                              const MatchPolicy& policy);

struct LedgerEntry {
    std::string predicted;
    std::optional<std::string> gold;
    bool operator==(const LedgerEntry&) const = default;
};

struct EvalReport {
    std::size_t true_positive = 0;
    std::size_t false_positive = 0;
    std::size_t false_negative = 0;
    double precision = 0.0;
    double recall = 0.0;
    bool precision_undefined = false;  // nothing predicted
    bool recall_undefined = false;     // empty gold set
    std::size_t direction_correct = 0;
    std::size_t direction_total = 0;
    std::optional<double> direction_accuracy;
    std::vector<LedgerEntry> ledger;

    nlohmann::json to_json() const;
};

std::string describe(const Item& item);

EvalReport precision_recall(const std::vector<Match>& matching, const std::vector<Item>& predicted,
                            const std::vector<Item>& gold);

// Fraction of matched pairs whose orientation agrees with gold. Throws
// NoMatchedPairs when the matching is empty.
double direction_accuracy(const std::vector<Match>& matching);

// Fills the direction fields of `report` (no-op for an empty matching).
void add_direction(EvalReport& report, const std::vector<Match>& matching);

enum class AgreementMeasure { Psa, Kappa };

struct AgreementReport {
    AgreementMeasure measure = AgreementMeasure::Psa;
    double value = 0.0;
    // PSA counts
    std::size_t a = 0;
    std::size_t b = 0;
    std::size_t c = 0;
    // kappa contingency: table[i][j] = items rater A put in categories[i], B in categories[j]
    std::vector<std::string> categories;
    std::vector<std::vector<std::size_t>> table;
    double observed = 0.0;
    double expected = 0.0;

    nlohmann::json to_json() const;
};

// 2a / (2a + b + c). Throws DegenerateInput when both sets are empty.
AgreementReport psa(const std::vector<Item>& set_a, const std::vector<Item>& set_b,
                    const MatchPolicy& policy);

// Cohen's kappa. Throws InvalidInput on length mismatch or empty input and
// DegenerateMarginals when chance agreement is 1.
AgreementReport kappa(const std::vector<std::string>& labels_a,
                      const std::vector<std::string>& labels_b);

// ---------------------------------------------------------------------------
// Gold annotation files and project evaluation

struct GoldEdge {
    std::string cause;
    std::string effect;
};

struct GoldConcept {
    std::string indicator_text;
    std::string concept_name;
};

struct GoldSentence {
    SentenceId sentence_id;
    std::vector<std::string> indicators;
    std::vector<GoldEdge> edges;
    std::vector<GoldConcept> concepts;
};

struct GoldFile {
    std::vector<GoldSentence> sentences;

    static GoldFile from_json(const nlohmann::json& j);
    static GoldFile load(const std::filesystem::path& path);
};

// Adjudication table file: JSON array of {predicted, gold, match}.
Adjudication load_adjudication(const std::filesystem::path& path);

struct ProjectEvaluation {
    EvalReport indicators;
    EvalReport edges;     // with direction fields
    EvalReport concepts;  // (indicator text, concept name) items
    std::optional<double> concept_accuracy;  // over gold concepts whose indicator was matched

    nlohmann::json to_json() const;
};

// Compares live indicators, active edges, and concept assignments of the
// sentences named in the gold file. Matching is per sentence.
ProjectEvaluation evaluate_project(const Project& project, const GoldFile& gold,
                                   const MatchPolicy& policy);

// Aligned plain-text table with Prec / Rec / DirAcc columns.
std::string format_table(const std::vector<std::pair<std::string, EvalReport>>& rows);

// "86.46%" style, two decimals.
std::string format_percent(double fraction);

}  // namespace qualnet::metrics
