#include "qualnet/semeval.hpp"

#include <unordered_map>

namespace qualnet::semeval {

using nlohmann::json;

std::vector<ingest::SemEvalRecord> causal_records(const std::vector<ingest::SemEvalRecord>& records) {
    std::vector<ingest::SemEvalRecord> out;
    for (const auto& r : records) {
        if (r.causal_direction != ingest::CausalDirection::NonCausal) out.push_back(r);
    }
    return out;
}

Project to_project(const std::vector<ingest::SemEvalRecord>& records) {
    Project p;
    p.project_id = "semeval";
    std::uint64_t next_indicator = 1;
    for (std::size_t i = 0; i < records.size(); ++i) {
        const auto& r = records[i];
        const UnitId uid{i + 1};
        const SentenceId sid{i + 1};
        p.units.push_back({uid, r.sentence_text, i});
        p.sentences.push_back({sid, uid, 0, r.sentence_text});
        for (const auto& span : {r.e1_span, r.e2_span}) {
            Indicator ind;
            ind.indicator_id = IndicatorId{next_indicator++};
            ind.sentence_id = sid;
            ind.text = r.sentence_text.substr(span.start, span.length());
            ind.span = span;
            p.indicators.push_back(std::move(ind));
        }
    }
    return p;
}

namespace {

std::string span_key(const Span& s) {
    return std::to_string(s.start) + "-" + std::to_string(s.end);
}

}  // namespace

Evaluation score(const Project& project, const std::vector<ingest::SemEvalRecord>& records) {
    std::unordered_map<SentenceId, std::size_t> record_of;
    for (std::size_t i = 0; i < project.sentences.size() && i < records.size(); ++i) {
        record_of.emplace(project.sentences[i].sentence_id, i);
    }

    std::vector<metrics::Item> predicted;
    for (const auto& e : project.causal_edges) {
        if (!e.active()) continue;
        const auto* c = project.find_indicator(e.cause);
        const auto* f = project.find_indicator(e.effect);
        auto it = record_of.find(e.sentence_id);
        if (!c || !f || !c->span || !f->span || it == record_of.end()) continue;
        predicted.push_back(metrics::Item::edge(span_key(*c->span), span_key(*f->span),
                                                std::to_string(records[it->second].record_id)));
    }
    std::vector<metrics::Item> gold;
    for (const auto& g : ingest::semeval_gold_edges(records)) {
        gold.push_back(metrics::Item::edge(span_key(g.cause), span_key(g.effect), std::to_string(g.record_id)));
    }

    Evaluation out;
    out.records = records.size();
    const auto matching = metrics::match_sets(predicted, gold, metrics::MatchPolicy::exact());
    out.report = metrics::precision_recall(matching, predicted, gold);
    metrics::add_direction(out.report, matching);
    out.directed_correct = out.report.direction_correct;
    if (!predicted.empty()) {
        out.directed_precision =
            static_cast<double>(out.directed_correct) / static_cast<double>(predicted.size());
    }
    return out;
}

Evaluation evaluate(const std::vector<ingest::SemEvalRecord>& records, baseline::Method method,
                    baseline::CooccurrenceMode mode, const std::vector<baseline::CueRule>& rules) {
    auto project = to_project(records);
    baseline::apply_to_project(project, method, mode, rules);
    return score(project, records);
}

json Evaluation::to_json() const {
    auto out = report.to_json();
    out.erase("ledger");
    out["records"] = records;
    out["directed_correct"] = directed_correct;
    out["directed_precision"] = directed_precision;
    return out;
}

}  // namespace qualnet::semeval
