#include "qualnet/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>
#include <unordered_map>

#include "qualnet/error.hpp"
#include "qualnet/text.hpp"

namespace qualnet::metrics {

using nlohmann::json;

MatchPolicy MatchPolicy::embedding(provider::EmbeddingProvider& embedder, double threshold) {
    if (!(threshold >= 0.0 && threshold <= 1.0)) {
        throw Error(ErrorKind::InvalidInput, "embedding threshold must lie in [0, 1]");
    }
    MatchPolicy p;
    p.mode = MatchMode::EmbeddingThreshold;
    p.threshold = threshold;
    p.embedder = &embedder;
    return p;
}

MatchPolicy MatchPolicy::adjudicated(Adjudication table) {
    MatchPolicy p;
    p.mode = MatchMode::Adjudication;
    p.adjudication = std::move(table);
    return p;
}

Item Item::text(std::string t, std::string group) {
    return Item{{std::move(t)}, std::move(group), false};
}

Item Item::edge(std::string cause, std::string effect, std::string group) {
    return Item{{std::move(cause), std::move(effect)}, std::move(group), true};
}

std::string describe(const Item& item) {
    std::string out = join(item.texts, " -> ");
    if (!item.group.empty()) out = "[" + item.group + "] " + out;
    return out;
}

namespace {

class Judge {
public:
    Judge(const MatchPolicy& policy, const std::vector<Item>& predicted,
          const std::vector<Item>& gold)
        : policy_(policy) {
        if (policy.mode == MatchMode::EmbeddingThreshold) {
            if (!policy.embedder) {
                throw Error(ErrorKind::InvalidInput, "embedding match policy needs an embedder");
            }
            std::vector<std::string> texts;
            std::set<std::string> seen;
            for (const auto* items : {&predicted, &gold}) {
                for (const auto& item : *items) {
                    for (const auto& t : item.texts) {
                        if (!t.empty() && seen.insert(t).second) texts.push_back(t);
                    }
                }
            }
            if (!texts.empty()) {
                auto vectors = policy.embedder->embed(texts);
                for (std::size_t i = 0; i < texts.size(); ++i) {
                    vectors_.emplace(texts[i], std::move(vectors[i]));
                }
            }
        }
        if (policy.mode == MatchMode::Adjudication && !policy.adjudication) {
            throw Error(ErrorKind::InvalidInput, "adjudication match policy needs a table");
        }
    }

    // Similarity when the policy accepts the two texts as equivalent.
    std::optional<double> part(const std::string& p, const std::string& g) const {
        const bool equal = normalize_for_match(p) == normalize_for_match(g);
        switch (policy_.mode) {
            case MatchMode::ExactNormalized:
                return equal ? std::optional<double>(1.0) : std::nullopt;
            case MatchMode::EmbeddingThreshold: {
                if (p.empty() || g.empty()) return std::nullopt;
                const double sim = provider::cosine(vectors_.at(p), vectors_.at(g));
                return sim >= policy_.threshold ? std::optional<double>(sim) : std::nullopt;
            }
            case MatchMode::Adjudication: {
                if (equal) return 1.0;
                auto it = policy_.adjudication->find({p, g});
                if (it == policy_.adjudication->end()) {
                    throw Error(ErrorKind::MissingAdjudication,
                                "no adjudication for ('" + p + "', '" + g + "')");
                }
                return it->second ? std::optional<double>(1.0) : std::nullopt;
            }
        }
        return std::nullopt;
    }

    std::optional<double> oriented(const Item& p, const Item& g, bool reversed) const {
        double score = 1.0;
        const auto n = p.texts.size();
        for (std::size_t i = 0; i < n; ++i) {
            auto s = part(p.texts[i], g.texts[reversed ? n - 1 - i : i]);
            if (!s) return std::nullopt;
            score = std::min(score, *s);
        }
        return score;
    }

    std::optional<Match> score(const Item& p, const Item& g) const {
        if (p.group != g.group || p.texts.size() != g.texts.size() || p.texts.empty()) {
            return std::nullopt;
        }
        auto forward = oriented(p, g, false);
        std::optional<double> backward;
        if ((p.unordered || g.unordered) && p.texts.size() == 2) backward = oriented(p, g, true);
        if (forward && (!backward || *forward >= *backward)) return Match{0, 0, *forward, true};
        if (backward) return Match{0, 0, *backward, false};
        return std::nullopt;
    }

private:
    const MatchPolicy& policy_;
    std::unordered_map<std::string, provider::EmbeddingVector> vectors_;
};

std::string sort_key(const Item& item) {
    std::string key = item.group;
    for (const auto& t : item.texts) {
        key += '\x1f';
        key += normalize_for_match(t);
    }
    return key;
}

}  // namespace

std::vector<Match> match_sets(const std::vector<Item>& predicted, const std::vector<Item>& gold,
                              const MatchPolicy& policy) {
    if (predicted.empty() || gold.empty()) return {};
    Judge judge(policy, predicted, gold);

    std::vector<Match> candidates;
    for (std::size_t i = 0; i < predicted.size(); ++i) {
        for (std::size_t j = 0; j < gold.size(); ++j) {
            if (auto m = judge.score(predicted[i], gold[j])) {
                m->predicted = i;
                m->gold = j;
                candidates.push_back(*m);
            }
        }
    }

    if (policy.mode == MatchMode::EmbeddingThreshold) {
        std::stable_sort(candidates.begin(), candidates.end(), [](const Match& a, const Match& b) {
            if (a.similarity != b.similarity) return a.similarity > b.similarity;
            if (a.same_orientation != b.same_orientation) return a.same_orientation;
            return std::tie(a.predicted, a.gold) < std::tie(b.predicted, b.gold);
        });
    } else {
        std::vector<std::string> pkeys;
        std::vector<std::string> gkeys;
        for (const auto& p : predicted) pkeys.push_back(sort_key(p));
        for (const auto& g : gold) gkeys.push_back(sort_key(g));
        std::stable_sort(candidates.begin(), candidates.end(), [&](const Match& a, const Match& b) {
            if (a.same_orientation != b.same_orientation) return a.same_orientation;
            return std::tie(pkeys[a.predicted], gkeys[a.gold], a.predicted, a.gold) <
                   std::tie(pkeys[b.predicted], gkeys[b.gold], b.predicted, b.gold);
        });
    }

    std::vector<bool> used_p(predicted.size(), false);
    std::vector<bool> used_g(gold.size(), false);
    std::vector<Match> out;
    for (const auto& m : candidates) {
        if (used_p[m.predicted] || used_g[m.gold]) continue;
        used_p[m.predicted] = true;
        used_g[m.gold] = true;
        out.push_back(m);
    }
    std::sort(out.begin(), out.end(),
              [](const Match& a, const Match& b) { return a.predicted < b.predicted; });
    return out;
}

EvalReport precision_recall(const std::vector<Match>& matching, const std::vector<Item>& predicted,
                            const std::vector<Item>& gold) {
    EvalReport r;
    r.true_positive = matching.size();
    r.false_positive = predicted.size() - r.true_positive;
    r.false_negative = gold.size() - r.true_positive;
    if (predicted.empty()) r.precision_undefined = true;
    else r.precision = static_cast<double>(r.true_positive) / static_cast<double>(predicted.size());
    if (gold.empty()) r.recall_undefined = true;
    else r.recall = static_cast<double>(r.true_positive) / static_cast<double>(gold.size());

    std::vector<std::optional<std::size_t>> gold_of(predicted.size());
    for (const auto& m : matching) gold_of[m.predicted] = m.gold;
    for (std::size_t i = 0; i < predicted.size(); ++i) {
        LedgerEntry entry{describe(predicted[i]), std::nullopt};
        if (gold_of[i]) entry.gold = describe(gold[*gold_of[i]]);
        r.ledger.push_back(std::move(entry));
    }
    return r;
}

double direction_accuracy(const std::vector<Match>& matching) {
    if (matching.empty()) throw Error(ErrorKind::NoMatchedPairs, "no matched pairs");
    const auto correct = std::count_if(matching.begin(), matching.end(),
                                       [](const Match& m) { return m.same_orientation; });
    return static_cast<double>(correct) / static_cast<double>(matching.size());
}

void add_direction(EvalReport& report, const std::vector<Match>& matching) {
    report.direction_total = matching.size();
    report.direction_correct = static_cast<std::size_t>(std::count_if(
        matching.begin(), matching.end(), [](const Match& m) { return m.same_orientation; }));
    if (!matching.empty()) report.direction_accuracy = direction_accuracy(matching);
}

json EvalReport::to_json() const {
    json ledger_json = json::array();
    for (const auto& e : ledger) {
        ledger_json.push_back({{"predicted", e.predicted},
                               {"gold", e.gold ? json(*e.gold) : json(nullptr)}});
    }
    json out = {{"true_positive", true_positive},
                {"false_positive", false_positive},
                {"false_negative", false_negative},
                {"precision", precision_undefined ? json(nullptr) : json(precision)},
                {"recall", recall_undefined ? json(nullptr) : json(recall)},
                {"direction_correct", direction_correct},
                {"direction_total", direction_total},
                {"direction_accuracy",
                 direction_accuracy ? json(*direction_accuracy) : json(nullptr)},
                {"ledger", ledger_json}};
    return out;
}

AgreementReport psa(const std::vector<Item>& set_a, const std::vector<Item>& set_b,
                    const MatchPolicy& policy) {
    if (set_a.empty() && set_b.empty()) {
        throw Error(ErrorKind::DegenerateInput, "PSA is undefined for two empty sets");
    }
    AgreementReport r;
    r.measure = AgreementMeasure::Psa;
    r.a = match_sets(set_a, set_b, policy).size();
    r.b = set_a.size() - r.a;
    r.c = set_b.size() - r.a;
    r.value = 2.0 * static_cast<double>(r.a) / static_cast<double>(2 * r.a + r.b + r.c);
    return r;
}

AgreementReport kappa(const std::vector<std::string>& labels_a,
                      const std::vector<std::string>& labels_b) {
    if (labels_a.size() != labels_b.size()) {
        throw Error(ErrorKind::InvalidInput, "kappa needs two labelings of equal length");
    }
    if (labels_a.empty()) throw Error(ErrorKind::InvalidInput, "kappa needs at least one item");

    AgreementReport r;
    r.measure = AgreementMeasure::Kappa;
    std::set<std::string> universe(labels_a.begin(), labels_a.end());
    universe.insert(labels_b.begin(), labels_b.end());
    r.categories.assign(universe.begin(), universe.end());
    std::unordered_map<std::string, std::size_t> index;
    for (std::size_t i = 0; i < r.categories.size(); ++i) index.emplace(r.categories[i], i);

    const std::size_t k = r.categories.size();
    r.table.assign(k, std::vector<std::size_t>(k, 0));
    for (std::size_t i = 0; i < labels_a.size(); ++i) {
        ++r.table[index.at(labels_a[i])][index.at(labels_b[i])];
    }
    const double n = static_cast<double>(labels_a.size());
    double agree = 0.0;
    double expected = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
        agree += static_cast<double>(r.table[i][i]);
        double row = 0.0;
        double col = 0.0;
        for (std::size_t j = 0; j < k; ++j) {
            row += static_cast<double>(r.table[i][j]);
            col += static_cast<double>(r.table[j][i]);
        }
        expected += (row / n) * (col / n);
    }
    r.observed = agree / n;
    r.expected = expected;
    if (k == 1 || std::abs(1.0 - expected) < 1e-15) {
        throw Error(ErrorKind::DegenerateMarginals, "chance agreement is 1; kappa is undefined");
    }
    r.value = (r.observed - r.expected) / (1.0 - r.expected);
    return r;
}

json AgreementReport::to_json() const {
    json out = {{"measure", measure == AgreementMeasure::Psa ? "psa" : "kappa"}, {"value", value}};
    if (measure == AgreementMeasure::Psa) {
        out["a"] = a;
        out["b"] = b;
        out["c"] = c;
    } else {
        out["categories"] = categories;
        out["table"] = table;
        out["observed"] = observed;
        out["expected"] = expected;
    }
    return out;
}

// ---------------------------------------------------------------------------

GoldFile GoldFile::from_json(const json& j) {
    GoldFile gold;
    try {
        for (const auto& s : j.at("sentences")) {
            GoldSentence gs;
            gs.sentence_id = SentenceId{s.at("sentence_id").get<std::uint64_t>()};
            gs.indicators = s.value("gold_indicators", std::vector<std::string>{});
            for (const auto& e : s.value("gold_edges", json::array())) {
                gs.edges.push_back({e.at("cause").get<std::string>(),
                                    e.at("effect").get<std::string>()});
            }
            for (const auto& c : s.value("gold_concepts", json::array())) {
                gs.concepts.push_back({c.at("indicator_text").get<std::string>(),
                                       c.at("concept_name").get<std::string>()});
            }
            gold.sentences.push_back(std::move(gs));
        }
    } catch (const json::exception& e) {
        throw Error(ErrorKind::InvalidInput, std::string("malformed gold file: ") + e.what());
    }
    return gold;
}

GoldFile GoldFile::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::IoError, "cannot read gold file " + path.string());
    auto j = json::parse(in, nullptr, false);
    if (j.is_discarded()) throw Error(ErrorKind::InvalidInput, "gold file is not valid JSON");
    return from_json(j);
}

Adjudication load_adjudication(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::IoError, "cannot read adjudication file " + path.string());
    auto j = json::parse(in, nullptr, false);
    if (j.is_discarded() || !j.is_array()) {
        throw Error(ErrorKind::InvalidInput, "adjudication file must be a JSON array");
    }
    Adjudication table;
    try {
        for (const auto& item : j) {
            table[{item.at("predicted").get<std::string>(), item.at("gold").get<std::string>()}] =
                item.at("match").get<bool>();
        }
    } catch (const json::exception& e) {
        throw Error(ErrorKind::InvalidInput, std::string("malformed adjudication: ") + e.what());
    }
    return table;
}

ProjectEvaluation evaluate_project(const Project& project, const GoldFile& gold,
                                   const MatchPolicy& policy) {
    std::vector<Item> pred_ind, gold_ind, pred_edge, gold_edge, pred_con, gold_con, gold_con_ind;
    std::vector<std::string> gold_con_names;
    std::vector<std::string> pred_ind_concepts;

    auto concept_name = [&](const Indicator& ind) -> std::string {
        if (!ind.concept_id) return {};
        const auto* c = project.find_concept(*ind.concept_id);
        return c ? c->name : std::string{};
    };

    for (const auto& gs : gold.sentences) {
        const std::string group = std::to_string(gs.sentence_id.value);
        for (const auto* ind : project.live_indicators_of(gs.sentence_id)) {
            pred_ind.push_back(Item::text(ind->text, group));
            pred_ind_concepts.push_back(concept_name(*ind));
            if (ind->concept_id) {
                pred_con.push_back(Item::text(ind->text, group + "\x1f" + concept_name(*ind)));
            }
        }
        for (const auto& e : project.causal_edges) {
            if (!e.active() || e.sentence_id != gs.sentence_id) continue;
            const auto* c = project.find_indicator(e.cause);
            const auto* f = project.find_indicator(e.effect);
            if (!c || !f) continue;
            pred_edge.push_back(Item::edge(c->text, f->text, group));
        }
        for (const auto& t : gs.indicators) gold_ind.push_back(Item::text(t, group));
        for (const auto& e : gs.edges) gold_edge.push_back(Item::edge(e.cause, e.effect, group));
        for (const auto& c : gs.concepts) {
            gold_con.push_back(Item::text(c.indicator_text, group + "\x1f" + c.concept_name));
            gold_con_ind.push_back(Item::text(c.indicator_text, group));
            gold_con_names.push_back(c.concept_name);
        }
    }

    ProjectEvaluation out;
    out.indicators = precision_recall(match_sets(pred_ind, gold_ind, policy), pred_ind, gold_ind);
    const auto edge_matching = match_sets(pred_edge, gold_edge, policy);
    out.edges = precision_recall(edge_matching, pred_edge, gold_edge);
    add_direction(out.edges, edge_matching);
    out.concepts = precision_recall(match_sets(pred_con, gold_con, policy), pred_con, gold_con);

    const auto concept_matching = match_sets(pred_ind, gold_con_ind, policy);
    if (!concept_matching.empty()) {
        std::size_t correct = 0;
        for (const auto& m : concept_matching) {
            if (pred_ind_concepts[m.predicted] == gold_con_names[m.gold]) ++correct;
        }
        out.concept_accuracy =
            static_cast<double>(correct) / static_cast<double>(concept_matching.size());
    }
    return out;
}

json ProjectEvaluation::to_json() const {
    return {{"indicators", indicators.to_json()},
            {"edges", edges.to_json()},
            {"concepts", concepts.to_json()},
            {"concept_accuracy", concept_accuracy ? json(*concept_accuracy) : json(nullptr)}};
}

std::string format_percent(double fraction) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f%%", 100.0 * fraction);
    return buf;
}

std::string format_table(const std::vector<std::pair<std::string, EvalReport>>& rows) {
    std::size_t width = 6;
    for (const auto& [name, _] : rows) width = std::max(width, name.size());
    std::ostringstream os;
    auto cell = [&os](const std::string& s, std::size_t w) { os << std::setw(static_cast<int>(w)) << s; };
    os << std::left << std::setw(static_cast<int>(width)) << "Method" << std::right;
    cell("TP", 6);
    cell("FP", 6);
    cell("FN", 6);
    cell("Prec", 10);
    cell("Rec", 10);
    cell("DirAcc", 10);
    os << '\n';
    for (const auto& [name, r] : rows) {
        os << std::left << std::setw(static_cast<int>(width)) << name << std::right;
        cell(std::to_string(r.true_positive), 6);
        cell(std::to_string(r.false_positive), 6);
        cell(std::to_string(r.false_negative), 6);
        cell(r.precision_undefined ? "-" : format_percent(r.precision), 10);
        cell(r.recall_undefined ? "-" : format_percent(r.recall), 10);
        cell(r.direction_accuracy ? format_percent(*r.direction_accuracy) : "-", 10);
        os << '\n';
    }
    return os.str();
}

}  // namespace qualnet::metrics
