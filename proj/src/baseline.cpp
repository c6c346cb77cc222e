#include "qualnet/baseline.hpp"

#include <algorithm>
#include <fstream>

#include "qualnet/error.hpp"
#include "qualnet/text.hpp"

namespace qualnet::baseline {

using nlohmann::json;

namespace {
constexpr std::string_view kCause = "[cause]";
constexpr std::string_view kEffect = "[effect]";
}  // namespace

std::string CueRule::connective() const {
    if (kind == CueKind::Literal) return cue;
    const auto c = cue.find(kCause);
    const auto e = cue.find(kEffect);
    const auto first_end = std::min(c, e) + (c < e ? kCause.size() : kEffect.size());
    return trim(std::string_view(cue).substr(first_end, std::max(c, e) - first_end));
}

CueRule make_rule(std::string cue, CueKind kind, CueDirection direction) {
    if (trim(cue).empty()) throw Error(ErrorKind::InvalidInput, "cue rule has an empty cue");
    CueRule rule{std::move(cue), kind, direction};
    if (kind == CueKind::Pattern) {
        const auto c = rule.cue.find(kCause);
        const auto e = rule.cue.find(kEffect);
        if (c == std::string::npos || e == std::string::npos) {
            throw Error(ErrorKind::InvalidInput,
                        "pattern cue needs both [cause] and [effect]: " + rule.cue);
        }
        rule.direction = c < e ? CueDirection::Forward : CueDirection::Backward;
        if (rule.connective().empty()) {
            throw Error(ErrorKind::InvalidInput, "pattern cue has no connective: " + rule.cue);
        }
    }
    return rule;
}

const std::vector<CueRule>& default_cue_rules() {
    static const std::vector<CueRule> rules = [] {
        const auto F = CueDirection::Forward;
        const auto B = CueDirection::Backward;
        const auto L = CueKind::Literal;
        const auto P = CueKind::Pattern;
        return std::vector<CueRule>{
            make_rule("[effect] is the result of [cause]", P, B),
            make_rule("[cause] is the reason for [effect]", P, F),
            make_rule("as a result", L, F),
            make_rule("consequently", L, F),
            make_rule("therefore", L, F),
            make_rule("thus", L, F),
            make_rule("hence", L, F),
            make_rule("leads to", L, F),
            make_rule("led to", L, F),
            make_rule("results in", L, F),
            make_rule("resulted in", L, F),
            make_rule("so", L, F),
            make_rule("because", L, B),
            make_rule("since", L, B),
            make_rule("due to", L, B),
            make_rule("caused by", L, B),
            make_rule("owing to", L, B),
            make_rule("as", L, B),
        };
    }();
    return rules;
}

std::vector<CueRule> cue_rules_from_json(const json& j) {
    if (!j.is_array()) throw Error(ErrorKind::InvalidInput, "cue rule file must be a JSON array");
    std::vector<CueRule> out;
    for (const auto& item : j) {
        try {
            const auto kind_s = item.value("kind", std::string("literal"));
            const auto dir_s = item.value("direction", std::string("forward"));
            CueKind kind;
            if (kind_s == "literal") kind = CueKind::Literal;
            else if (kind_s == "pattern") kind = CueKind::Pattern;
            else throw Error(ErrorKind::InvalidInput, "unknown cue kind '" + kind_s + "'");
            CueDirection dir;
            if (dir_s == "forward") dir = CueDirection::Forward;
            else if (dir_s == "backward") dir = CueDirection::Backward;
            else throw Error(ErrorKind::InvalidInput, "unknown cue direction '" + dir_s + "'");
            out.push_back(make_rule(item.at("cue").get<std::string>(), kind, dir));
        } catch (const json::exception& e) {
            throw Error(ErrorKind::InvalidInput, std::string("bad cue rule: ") + e.what());
        }
    }
    return out;
}

json cue_rules_to_json(const std::vector<CueRule>& rules) {
    json out = json::array();
    for (const auto& r : rules) {
        out.push_back({{"cue", r.cue},
                       {"kind", r.kind == CueKind::Literal ? "literal" : "pattern"},
                       {"direction", r.direction == CueDirection::Forward ? "forward" : "backward"}});
    }
    return out;
}

std::vector<CueRule> load_cue_rules(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::IoError, "cannot read cue rules " + path.string());
    auto j = json::parse(in, nullptr, false);
    if (j.is_discarded()) throw Error(ErrorKind::InvalidInput, "cue rules are not valid JSON");
    return cue_rules_from_json(j);
}

std::vector<const Indicator*> text_order(const std::vector<const Indicator*>& indicators) {
    std::vector<const Indicator*> out;
    for (const auto* ind : indicators) {
        if (ind && ind->live()) out.push_back(ind);
    }
    std::stable_sort(out.begin(), out.end(), [](const Indicator* a, const Indicator* b) {
        if (a->span.has_value() != b->span.has_value()) return a->span.has_value();
        if (a->span && a->span->start != b->span->start) return a->span->start < b->span->start;
        return a->indicator_id < b->indicator_id;
    });
    return out;
}

namespace {

CausalEdge edge(IndicatorId cause, IndicatorId effect, SentenceId sentence, EdgeOrigin origin) {
    CausalEdge e;
    e.cause = cause;
    e.effect = effect;
    e.sentence_id = sentence;
    e.origin = origin;
    return e;
}

}  // namespace

std::vector<CausalEdge> cooccurrence_edges(const std::vector<const Indicator*>& ordered,
                                           SentenceId sentence, CooccurrenceMode mode) {
    std::vector<CausalEdge> out;
    for (std::size_t j = 0; j < ordered.size(); ++j) {
        if (mode == CooccurrenceMode::Consecutive) {
            if (j + 1 < ordered.size()) {
                out.push_back(edge(ordered[j]->indicator_id, ordered[j + 1]->indicator_id,
                                   sentence, EdgeOrigin::Cooccurrence));
            }
            continue;
        }
        for (std::size_t k = j + 1; k < ordered.size(); ++k) {
            out.push_back(edge(ordered[j]->indicator_id, ordered[k]->indicator_id, sentence,
                               EdgeOrigin::Cooccurrence));
        }
    }
    return out;
}

std::vector<CausalEdge> cue_edges(const Sentence& sentence,
                                  const std::vector<const Indicator*>& indicators,
                                  const std::vector<CueRule>& rules) {
    std::vector<const Indicator*> spanned;
    for (const auto* ind : text_order(indicators)) {
        if (ind->span) spanned.push_back(ind);
    }
    std::vector<CausalEdge> out;
    for (std::size_t i = 0; i + 1 < spanned.size(); ++i) {
        const auto* earlier = spanned[i];
        const auto* later = spanned[i + 1];
        const auto from = earlier->span->end;
        const auto to = later->span->start;
        if (from >= to || to > sentence.text.size()) continue;
        const std::string_view between = std::string_view(sentence.text).substr(from, to - from);
        for (const auto& rule : rules) {
            if (!find_whole_words(between, rule.connective())) continue;
            if (rule.direction == CueDirection::Forward) {
                out.push_back(edge(earlier->indicator_id, later->indicator_id,
                                   sentence.sentence_id, EdgeOrigin::Cue));
            } else {
                out.push_back(edge(later->indicator_id, earlier->indicator_id,
                                   sentence.sentence_id, EdgeOrigin::Cue));
            }
            break;
        }
    }
    return out;
}

std::size_t apply_to_project(Project& project, Method method, CooccurrenceMode mode,
                             const std::vector<CueRule>& rules) {
    std::vector<CausalEdge> added;
    for (const auto& s : project.sentences) {
        const auto live = project.live_indicators_of(s.sentence_id);
        auto edges = method == Method::Cooccurrence
                         ? cooccurrence_edges(text_order(live), s.sentence_id, mode)
                         : cue_edges(s, live, rules);
        added.insert(added.end(), edges.begin(), edges.end());
    }
    auto next = project.next_edge_id();
    for (auto& e : added) {
        e.edge_id = next;
        next = EdgeId{next.value + 1};
        project.causal_edges.push_back(e);
    }
    return added.size();
}

}  // namespace qualnet::baseline
