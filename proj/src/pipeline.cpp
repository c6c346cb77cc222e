#include "qualnet/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <map>
#include <numeric>
#include <regex>
#include <sstream>
#include <thread>
#include <unordered_map>
#include <unordered_set>

#include "qualnet/error.hpp"
#include "qualnet/network.hpp"
#include "qualnet/text.hpp"

namespace qualnet::pipeline {

using nlohmann::json;
using provider::ChatProvider;
using provider::ChatRequest;

std::string to_string(Stage stage) {
    switch (stage) {
        case Stage::Extract: return "extract";
        case Stage::Map: return "map";
        case Stage::Classify: return "classify";
        case Stage::Merge: return "merge";
    }
    return "extract";
}

std::string to_string(CausalVerdict verdict) {
    switch (verdict) {
        case CausalVerdict::FirstCausesSecond: return "first_causes_second";
        case CausalVerdict::SecondCausesFirst: return "second_causes_first";
        case CausalVerdict::NotRelated: return "not_related";
    }
    return "not_related";
}

std::set<Stage> parse_stages(std::string_view list) {
    std::set<Stage> out;
    std::string item;
    std::istringstream in{std::string(list)};
    while (std::getline(in, item, ',')) {
        item = trim(item);
        if (item.empty()) continue;
        if (item == "extract") out.insert(Stage::Extract);
        else if (item == "map") out.insert(Stage::Map);
        else if (item == "classify") out.insert(Stage::Classify);
        else if (item == "merge") out.insert(Stage::Merge);
        else throw Error(ErrorKind::InvalidInput, "unknown stage '" + item + "'");
    }
    if (out.empty()) throw Error(ErrorKind::InvalidInput, "no stages given");
    return out;
}

namespace {

// Runs fn(0..n-1) on up to `limit` threads. Results and transcript entries
// are committed in index order regardless of scheduling; the first failure
// by index is rethrown after all started tasks finish.
template <class R, class F>
std::vector<R> ordered_parallel(std::size_t n, std::size_t limit, F fn) {
    std::vector<std::optional<R>> results(n);
    std::vector<std::exception_ptr> errors(n);
    std::vector<std::vector<std::pair<provider::TranscriptLog*, provider::TranscriptEntry>>>
        captured(n);
    std::atomic<std::size_t> next{0};
    std::atomic<bool> failed{false};

    auto worker = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= n || failed.load()) return;
            provider::TranscriptCapture capture;
            try {
                results[i].emplace(fn(i));
            } catch (...) {
                errors[i] = std::current_exception();
                failed.store(true);
            }
            captured[i] = capture.take();
        }
    };

    const std::size_t threads = std::min(std::max<std::size_t>(limit, 1), n);
    if (threads <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(threads);
        for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }
    for (auto& entries : captured) provider::TranscriptCapture::commit(entries);
    for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
    std::vector<R> out;
    out.reserve(n);
    for (auto& r : results) out.push_back(std::move(*r));
    return out;
}

class CountingChat final : public ChatProvider {
public:
    explicit CountingChat(ChatProvider& inner) : inner_(inner) {}
    std::size_t take() { return calls_.exchange(0); }

protected:
    std::string do_complete(const ChatRequest& request) override {
        ++calls_;
        return inner_.complete(request);
    }

private:
    ChatProvider& inner_;
    std::atomic<std::size_t> calls_{0};
};

ChatRequest make_request(std::string prompt, const PipelineConfig& config) {
    return ChatRequest{std::move(prompt), config.temperature, config.max_output_chars};
}

std::size_t ask_for_label(ChatProvider& chat, const std::string& prompt, std::size_t option_count,
                          const PipelineConfig& config) {
    auto first = chat.complete(make_request(prompt, config));
    if (auto idx = parse_label(first, option_count)) return *idx;
    const std::string reask =
        prompt + "\nYour previous answer could not be read. Reply with exactly one line of the "
                 "form \"label: <letter>\".\n";
    auto second = chat.complete(make_request(reask, config));
    if (auto idx = parse_label(second, option_count)) return *idx;
    throw Error(ErrorKind::InvalidLabel,
                "no valid label among " + std::to_string(option_count) +
                    " options in response: " + second.substr(0, 200));
}

std::optional<std::vector<std::string>> indicator_strings(const json& j) {
    if (!j.is_object() || !j.contains("indicators") || !j.at("indicators").is_array()) {
        return std::nullopt;
    }
    std::vector<std::string> out;
    for (const auto& item : j.at("indicators")) {
        if (!item.is_string()) return std::nullopt;
        auto t = trim(item.get<std::string>());
        if (!t.empty()) out.push_back(std::move(t));
    }
    return out;
}

// Index of the bracket closing the one at `open`, honoring JSON strings.
std::optional<std::size_t> matching_close(std::string_view s, std::size_t open) {
    std::vector<char> stack;
    bool in_string = false;
    bool escaped = false;
    for (std::size_t i = open; i < s.size(); ++i) {
        const char c = s[i];
        if (in_string) {
            if (escaped) escaped = false;
            else if (c == '\\') escaped = true;
            else if (c == '"') in_string = false;
            continue;
        }
        if (c == '"') in_string = true;
        else if (c == '{' || c == '[') stack.push_back(c == '{' ? '}' : ']');
        else if (c == '}' || c == ']') {
            if (stack.empty() || stack.back() != c) return std::nullopt;
            stack.pop_back();
            if (stack.empty()) return i;
        }
    }
    return std::nullopt;
}

std::string repair_json(std::string_view s) {
    std::string text(s);
    for (std::size_t p; (p = text.find("```")) != std::string::npos;) text.erase(p, 3);

    std::string out;
    std::vector<char> stack;
    bool in_string = false;
    bool escaped = false;
    for (char c : text) {
        if (in_string) {
            out.push_back(c);
            if (escaped) escaped = false;
            else if (c == '\\') escaped = true;
            else if (c == '"') in_string = false;
            continue;
        }
        if (c == '"') {
            in_string = true;
        } else if (c == '{' || c == '[') {
            stack.push_back(c == '{' ? '}' : ']');
        } else if (c == '}' || c == ']') {
            if (stack.empty()) break;
            // Drop a dangling comma before the closer.
            auto last = out.find_last_not_of(" \t\r\n");
            if (last != std::string::npos && out[last] == ',') out.erase(last, 1);
            out.push_back(stack.back());
            stack.pop_back();
            if (stack.empty()) return out;
            continue;
        }
        out.push_back(c);
    }
    if (in_string) out.push_back('"');
    auto last = out.find_last_not_of(" \t\r\n");
    if (last != std::string::npos && out[last] == ',') out.erase(last);
    while (!stack.empty()) {
        out.push_back(stack.back());
        stack.pop_back();
    }
    return out;
}

std::string render_with_concept(const Indicator& ind, const std::vector<Concept>& concepts) {
    if (ind.concept_id) {
        for (const auto& c : concepts) {
            if (c.concept_id == *ind.concept_id) return ind.text + " (" + c.name + ")";
        }
    }
    return ind.text;
}

}  // namespace

std::vector<std::string> parse_indicator_list(std::string_view response) {
    for (std::size_t i = response.find('{'); i != std::string_view::npos;
         i = response.find('{', i + 1)) {
        auto close = matching_close(response, i);
        if (!close) continue;
        auto parsed = json::parse(response.substr(i, *close - i + 1), nullptr, false);
        if (parsed.is_discarded()) continue;
        if (auto list = indicator_strings(parsed)) return *list;
    }
    const auto start = response.find('{');
    if (start != std::string_view::npos) {
        auto parsed = json::parse(repair_json(response.substr(start)), nullptr, false);
        if (!parsed.is_discarded()) {
            if (auto list = indicator_strings(parsed)) return *list;
        }
    }
    throw Error(ErrorKind::MalformedProviderOutput,
                "no JSON object with an \"indicators\" string array in response: " +
                    std::string(response.substr(0, 200)));
}

std::optional<std::size_t> parse_label(std::string_view response, std::size_t option_count) {
    static const std::regex label_re(R"(label\s*[:=]?\s*[\[\(]?\s*([a-z])(?![a-z0-9]))",
                                     std::regex::icase);
    static const std::regex letter_re(R"((?:^|[^A-Za-z0-9])([A-Za-z])(?![A-Za-z0-9]))");
    const std::string text(response);
    auto in_range = [&](char c) -> std::optional<std::size_t> {
        const auto idx = static_cast<std::size_t>(std::tolower(static_cast<unsigned char>(c)) - 'a');
        if (idx < option_count) return idx;
        return std::nullopt;
    };

    std::smatch m;
    if (std::regex_search(text, m, label_re)) return in_range(m[1].str()[0]);
    for (auto it = std::sregex_iterator(text.begin(), text.end(), letter_re);
         it != std::sregex_iterator(); ++it) {
        if (auto idx = in_range((*it)[1].str()[0])) return idx;
    }
    return std::nullopt;
}

std::vector<Indicator> extract_indicators(const ResearchOverview& overview,
                                          const Sentence& sentence, ChatProvider& chat,
                                          const PipelineConfig& config) {
    if (trim(sentence.text).empty()) {
        throw Error(ErrorKind::Precondition, "cannot extract from an empty sentence");
    }
    const auto prompt = config.prompts.extraction.render(
        {{"overview", overview.text}, {"sentence", sentence.text}});
    const auto texts = parse_indicator_list(chat.complete(make_request(prompt, config)));

    std::vector<Indicator> out;
    out.reserve(texts.size());
    for (const auto& t : texts) {
        Indicator ind;
        ind.sentence_id = sentence.sentence_id;
        ind.text = t;
        if (auto pos = find_case_insensitive(sentence.text, t)) {
            ind.span = Span{*pos, *pos + t.size()};
        }
        out.push_back(std::move(ind));
    }
    return out;
}

ConceptId map_concept(const Indicator& indicator, const Sentence& sentence,
                      const std::vector<Concept>& concepts, ChatProvider& chat,
                      const PipelineConfig& config) {
    if (concepts.empty()) throw Error(ErrorKind::Precondition, "no concepts to map onto");
    if (concepts.size() > 26) {
        throw Error(ErrorKind::Precondition, "concept mapping supports at most 26 options");
    }
    if (indicator.concept_id) {
        throw Error(ErrorKind::Precondition, "indicator is already mapped");
    }
    std::string options;
    std::string letters;
    std::string details;
    for (std::size_t i = 0; i < concepts.size(); ++i) {
        const char letter = static_cast<char>('a' + i);
        const auto& c = concepts[i];
        options += std::string(1, letter) + ". " + c.name + "\n";
        if (i) letters += "/";
        letters += letter;
        details += "    " + std::string(1, letter) + ". " + c.name + ": " + c.definition + "\n";
        details += "    References: " +
                   (c.references.empty() ? std::string("(none)") : join(c.references, ", ")) +
                   "\n\n";
    }
    if (!options.empty()) options.pop_back();
    const auto prompt = config.prompts.mapping.render({{"options", options},
                                                       {"letters", letters},
                                                       {"indicator", indicator.text},
                                                       {"sentence", sentence.text},
                                                       {"concepts", details}});
    return concepts[ask_for_label(chat, prompt, concepts.size(), config)].concept_id;
}

CausalVerdict classify_pair(const Sentence& sentence, const Indicator& first,
                            const Indicator& second, const std::vector<Concept>& concepts,
                            ChatProvider& chat, const PipelineConfig& config) {
    if (first.sentence_id != sentence.sentence_id || second.sentence_id != sentence.sentence_id) {
        throw Error(ErrorKind::Precondition, "both indicators must belong to the sentence");
    }
    const auto prompt = config.prompts.causal.render(
        {{"sentence", sentence.text},
         {"indicator1", render_with_concept(first, concepts)},
         {"indicator2", render_with_concept(second, concepts)}});
    switch (ask_for_label(chat, prompt, 3, config)) {
        case 0: return CausalVerdict::FirstCausesSecond;
        case 1: return CausalVerdict::SecondCausesFirst;
        default: return CausalVerdict::NotRelated;
    }
}

std::vector<IndicatorPair> generate_pairs(const std::vector<const Indicator*>& indicators) {
    std::vector<const Indicator*> live;
    for (const auto* ind : indicators) {
        if (ind && ind->live()) live.push_back(ind);
    }
    std::vector<IndicatorPair> out;
    out.reserve(live.size() * (live.size() > 0 ? live.size() - 1 : 0) / 2);
    for (std::size_t i = 0; i < live.size(); ++i) {
        for (std::size_t j = i + 1; j < live.size(); ++j) {
            out.push_back({live[i]->indicator_id, live[j]->indicator_id});
        }
    }
    return out;
}

std::vector<MergeRecord> merge_components(
    const std::vector<std::pair<IndicatorId, IndicatorId>>& merge_decisions) {
    std::map<IndicatorId, IndicatorId> parent;
    std::function<IndicatorId(IndicatorId)> find = [&](IndicatorId x) {
        auto it = parent.find(x);
        if (it == parent.end()) {
            parent.emplace(x, x);
            return x;
        }
        if (it->second == x) return x;
        const auto root = find(it->second);
        parent[x] = root;
        return root;
    };
    for (const auto& [a, b] : merge_decisions) {
        const auto ra = find(a);
        const auto rb = find(b);
        if (ra == rb) continue;
        // Lower id becomes the root so the root is the component minimum.
        if (ra < rb) parent[rb] = ra;
        else parent[ra] = rb;
    }
    std::map<IndicatorId, std::vector<IndicatorId>> groups;
    for (const auto& [id, _] : parent) groups[find(id)].push_back(id);

    std::vector<MergeRecord> out;
    for (auto& [root, members] : groups) {
        if (members.size() < 2) continue;
        std::sort(members.begin(), members.end());
        MergeRecord rec;
        rec.canonical = members.front();
        rec.absorbed.assign(members.begin() + 1, members.end());
        out.push_back(std::move(rec));
    }
    return out;
}

MergeOutcome apply_merges(Project& project, const std::vector<MergeRecord>& records) {
    MergeOutcome outcome;
    std::unordered_map<IndicatorId, IndicatorId> canonical_of;

    for (const auto& incoming : records) {
        std::set<IndicatorId> members(incoming.absorbed.begin(), incoming.absorbed.end());
        members.insert(incoming.canonical);
        // Fold existing records that touch this component.
        for (auto it = project.merge_records.begin(); it != project.merge_records.end();) {
            bool touches = members.count(it->canonical) > 0;
            for (auto a : it->absorbed) touches = touches || members.count(a) > 0;
            if (touches) {
                members.insert(it->canonical);
                members.insert(it->absorbed.begin(), it->absorbed.end());
                it = project.merge_records.erase(it);
            } else {
                ++it;
            }
        }
        MergeRecord rec;
        rec.canonical = *members.begin();
        rec.absorbed.assign(std::next(members.begin()), members.end());
        for (auto a : rec.absorbed) {
            canonical_of[a] = rec.canonical;
            if (auto* ind = project.find_indicator(a)) ind->status = IndicatorStatus::Deleted;
        }
        outcome.records.push_back(rec);
        project.merge_records.push_back(std::move(rec));
    }
    std::sort(project.merge_records.begin(), project.merge_records.end(),
              [](const MergeRecord& a, const MergeRecord& b) { return a.canonical < b.canonical; });

    auto resolve = [&](IndicatorId id) {
        auto it = canonical_of.find(id);
        return it == canonical_of.end() ? id : it->second;
    };

    std::set<std::tuple<IndicatorId, IndicatorId, SentenceId>> touched_keys;
    for (auto& e : project.causal_edges) {
        if (!e.active()) continue;
        const auto cause = resolve(e.cause);
        const auto effect = resolve(e.effect);
        if (cause == e.cause && effect == e.effect) continue;
        ++outcome.rewired_edges;
        e.cause = cause;
        e.effect = effect;
        if (cause == effect) {
            e.status = EdgeStatus::Deleted;
            ++outcome.collapsed_edges;
            continue;
        }
        touched_keys.emplace(cause, effect, e.sentence_id);
    }

    std::map<std::tuple<IndicatorId, IndicatorId, SentenceId>, EdgeId> survivor;
    for (const auto& e : project.causal_edges) {
        if (!e.active()) continue;
        const auto key = std::make_tuple(e.cause, e.effect, e.sentence_id);
        if (!touched_keys.count(key)) continue;
        auto [it, inserted] = survivor.emplace(key, e.edge_id);
        if (!inserted && e.edge_id < it->second) it->second = e.edge_id;
    }
    for (auto& e : project.causal_edges) {
        if (!e.active()) continue;
        auto it = survivor.find(std::make_tuple(e.cause, e.effect, e.sentence_id));
        if (it != survivor.end() && it->second != e.edge_id) {
            e.status = EdgeStatus::Deleted;
            ++outcome.deduplicated_edges;
        }
    }
    return outcome;
}

MergeOutcome merge_indicators(Project& project, provider::EmbeddingProvider& embedder,
                              ChatProvider& chat, const PipelineConfig& config) {
    std::vector<const Indicator*> live;
    for (const auto& ind : project.indicators) {
        if (ind.live()) live.push_back(&ind);
    }
    std::sort(live.begin(), live.end(), [](const Indicator* a, const Indicator* b) {
        return a->indicator_id < b->indicator_id;
    });

    std::vector<std::pair<IndicatorId, IndicatorId>> decisions;
    std::set<std::pair<IndicatorId, IndicatorId>> same_text;
    {
        std::map<std::pair<ConceptId, std::string>, IndicatorId> first_seen;
        for (const auto* ind : live) {
            if (!ind->concept_id) continue;
            auto [it, inserted] = first_seen.emplace(
                std::make_pair(*ind->concept_id, normalize_for_match(ind->text)), ind->indicator_id);
            if (!inserted) {
                decisions.emplace_back(it->second, ind->indicator_id);
                same_text.emplace(it->second, ind->indicator_id);
            }
        }
    }

    std::set<std::pair<IndicatorId, IndicatorId>> candidates;
    if (live.size() >= 2) {
        std::vector<std::string> texts;
        for (const auto* ind : live) texts.push_back(ind->text);
        const auto vectors = embedder.embed(texts);
        for (std::size_t i = 0; i < live.size(); ++i) {
            if (!live[i]->concept_id) continue;
            std::vector<std::pair<double, std::size_t>> ranked;
            for (std::size_t j = 0; j < live.size(); ++j) {
                if (j != i) ranked.emplace_back(provider::cosine(vectors[i], vectors[j]), j);
            }
            std::sort(ranked.begin(), ranked.end(), [&](const auto& a, const auto& b) {
                if (a.first != b.first) return a.first > b.first;
                return live[a.second]->indicator_id < live[b.second]->indicator_id;
            });
            if (ranked.size() > config.neighbors) ranked.resize(config.neighbors);
            for (const auto& [sim, j] : ranked) {
                if (live[j]->concept_id != live[i]->concept_id) continue;
                auto a = live[i]->indicator_id;
                auto b = live[j]->indicator_id;
                if (b < a) std::swap(a, b);
                if (!same_text.count({a, b})) candidates.emplace(a, b);
            }
        }
    }

    const std::vector<std::pair<IndicatorId, IndicatorId>> pairs(candidates.begin(),
                                                                 candidates.end());
    const Project& view = project;
    auto merged = ordered_parallel<bool>(pairs.size(), config.parallelism, [&](std::size_t i) {
        const auto* a = view.find_indicator(pairs[i].first);
        const auto* b = view.find_indicator(pairs[i].second);
        const auto* shared = view.find_concept(*a->concept_id);
        const auto* sa = view.find_sentence(a->sentence_id);
        const auto* sb = view.find_sentence(b->sentence_id);
        const auto prompt = config.prompts.merging.render({{"concept", shared->name},
                                                           {"indicator1", a->text},
                                                           {"sentence1", sa ? sa->text : ""},
                                                           {"indicator2", b->text},
                                                           {"sentence2", sb ? sb->text : ""}});
        return ask_for_label(chat, prompt, 2, config) == 0;
    });
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        if (merged[i]) decisions.push_back(pairs[i]);
    }

    auto outcome = apply_merges(project, merge_components(decisions));
    outcome.provider_calls = pairs.size();
    return outcome;
}

json RunReport::to_json(bool include_timings) const {
    json stages_json = json::array();
    for (const auto& s : stages) {
        json j = {{"stage", pipeline::to_string(s.stage)},
                  {"items", s.items},
                  {"provider_calls", s.provider_calls},
                  {"skipped", s.skipped}};
        if (!s.warning.empty()) j["warning"] = s.warning;
        if (include_timings) j["duration_ms"] = s.duration.count();
        stages_json.push_back(std::move(j));
    }
    json out = {{"stages", stages_json},
                {"indicators", indicators},
                {"edges", edges},
                {"merge_records", merge_records},
                {"revision", revision}};
    if (transcript) out["transcript"] = *transcript;
    return out;
}

namespace {

std::vector<const Sentence*> sentences_in_corpus_order(const Project& project) {
    std::unordered_map<UnitId, std::size_t> unit_ordinal;
    for (const auto& u : project.units) unit_ordinal.emplace(u.unit_id, u.ordinal);
    std::vector<const Sentence*> out;
    for (const auto& s : project.sentences) out.push_back(&s);
    std::sort(out.begin(), out.end(), [&](const Sentence* a, const Sentence* b) {
        const auto ua = unit_ordinal[a->unit_id];
        const auto ub = unit_ordinal[b->unit_id];
        if (ua != ub) return ua < ub;
        return a->ordinal < b->ordinal;
    });
    return out;
}

StageReport run_extract(Project& project, const PipelineConfig& config, ChatProvider& chat) {
    StageReport report;
    report.stage = Stage::Extract;
    if (!project.overview) {
        throw Error(ErrorKind::Precondition, "research overview must be set before extraction");
    }
    std::unordered_set<SentenceId> covered;
    for (const auto& ind : project.indicators) covered.insert(ind.sentence_id);
    std::vector<const Sentence*> pending;
    for (const auto* s : sentences_in_corpus_order(project)) {
        if (!covered.count(s->sentence_id)) pending.push_back(s);
    }
    const auto overview = *project.overview;
    auto results = ordered_parallel<std::vector<Indicator>>(
        pending.size(), config.parallelism,
        [&](std::size_t i) { return extract_indicators(overview, *pending[i], chat, config); });

    auto next = project.next_indicator_id();
    for (auto& batch : results) {
        for (auto& ind : batch) {
            ind.indicator_id = next;
            next = IndicatorId{next.value + 1};
            project.indicators.push_back(std::move(ind));
            ++report.items;
        }
    }
    return report;
}

StageReport run_map(Project& project, const PipelineConfig& config, ChatProvider& chat) {
    StageReport report;
    report.stage = Stage::Map;
    std::vector<Concept> concepts = project.concepts;
    std::sort(concepts.begin(), concepts.end(),
              [](const Concept& a, const Concept& b) { return a.concept_id < b.concept_id; });
    if (concepts.empty()) {
        report.skipped = true;
        report.warning = "no concepts defined; mapping left undone";
        return report;
    }
    std::vector<const Indicator*> targets;
    for (const auto& ind : project.indicators) {
        if (ind.live() && !ind.concept_id) targets.push_back(&ind);
    }
    std::sort(targets.begin(), targets.end(), [](const Indicator* a, const Indicator* b) {
        return a->indicator_id < b->indicator_id;
    });
    const Project& view = project;
    auto results = ordered_parallel<ConceptId>(targets.size(), config.parallelism,
                                               [&](std::size_t i) {
        const auto* sentence = view.find_sentence(targets[i]->sentence_id);
        return map_concept(*targets[i], *sentence, concepts, chat, config);
    });
    std::vector<IndicatorId> ids;
    for (const auto* t : targets) ids.push_back(t->indicator_id);
    for (std::size_t i = 0; i < ids.size(); ++i) {
        project.find_indicator(ids[i])->concept_id = results[i];
        ++report.items;
    }
    return report;
}

StageReport run_classify(Project& project, const PipelineConfig& config, ChatProvider& chat) {
    StageReport report;
    report.stage = Stage::Classify;
    std::set<std::pair<IndicatorId, IndicatorId>> already;
    for (const auto& e : project.causal_edges) {
        if (e.origin != EdgeOrigin::Pipeline) continue;
        already.emplace(std::min(e.cause, e.effect), std::max(e.cause, e.effect));
    }
    struct Task {
        const Sentence* sentence;
        IndicatorPair pair;
    };
    std::vector<Task> tasks;
    for (const auto* s : sentences_in_corpus_order(project)) {
        for (const auto& pair : generate_pairs(project.live_indicators_of(s->sentence_id))) {
            if (already.count({std::min(pair.first, pair.second),
                               std::max(pair.first, pair.second)})) {
                continue;
            }
            tasks.push_back({s, pair});
        }
    }
    const Project& view = project;
    const auto concepts = project.concepts;
    auto verdicts = ordered_parallel<CausalVerdict>(tasks.size(), config.parallelism,
                                                    [&](std::size_t i) {
        const auto& t = tasks[i];
        return classify_pair(*t.sentence, *view.find_indicator(t.pair.first),
                             *view.find_indicator(t.pair.second), concepts, chat, config);
    });

    auto next = project.next_edge_id();
    for (std::size_t i = 0; i < tasks.size(); ++i) {
        if (verdicts[i] == CausalVerdict::NotRelated) continue;
        CausalEdge e;
        e.edge_id = next;
        next = EdgeId{next.value + 1};
        const bool forward = verdicts[i] == CausalVerdict::FirstCausesSecond;
        e.cause = forward ? tasks[i].pair.first : tasks[i].pair.second;
        e.effect = forward ? tasks[i].pair.second : tasks[i].pair.first;
        e.sentence_id = tasks[i].sentence->sentence_id;
        e.origin = EdgeOrigin::Pipeline;
        project.causal_edges.push_back(e);
        ++report.items;
    }
    return report;
}

}  // namespace

RunReport run_pipeline(Project& project, const PipelineConfig& config, Providers providers,
                       const StageObserver& observer) {
    RunReport report;
    CountingChat chat(providers.chat);
    for (const Stage stage : {Stage::Extract, Stage::Map, Stage::Classify, Stage::Merge}) {
        if (!config.stages.count(stage)) continue;
        const auto started = std::chrono::steady_clock::now();
        Project working = project;
        StageReport stage_report;
        switch (stage) {
            case Stage::Extract: stage_report = run_extract(working, config, chat); break;
            case Stage::Map: stage_report = run_map(working, config, chat); break;
            case Stage::Classify: stage_report = run_classify(working, config, chat); break;
            case Stage::Merge: {
                auto outcome = merge_indicators(working, providers.embed, chat, config);
                stage_report.stage = Stage::Merge;
                stage_report.items = outcome.records.size();
                break;
            }
        }
        stage_report.provider_calls = chat.take();
        network::refresh_concept_edges(working);
        ++working.revision;
        stage_report.duration = std::chrono::duration_cast<std::chrono::milliseconds>(
            std::chrono::steady_clock::now() - started);
        project = std::move(working);
        report.stages.push_back(stage_report);
        if (observer) observer(project, stage_report);
    }

    for (const auto& ind : project.indicators) report.indicators += ind.live() ? 1 : 0;
    for (const auto& e : project.causal_edges) report.edges += e.active() ? 1 : 0;
    report.merge_records = project.merge_records.size();
    report.revision = project.revision;
    return report;
}

}  // namespace qualnet::pipeline
