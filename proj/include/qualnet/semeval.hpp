#pragma once

#include <vector>

#include <nlohmann/json.hpp>

#include "qualnet/baseline.hpp"
#include "qualnet/ingest.hpp"
#include "qualnet/metrics.hpp"
#include "qualnet/model.hpp"

namespace qualnet::semeval {

// Cause-Effect records only (relation label other than Other / non-causal).
std::vector<ingest::SemEvalRecord> causal_records(const std::vector<ingest::SemEvalRecord>& records);

// One unit and one sentence per record; the two tagged entities become
// spanned indicators (e1 gets the lower id).
Project to_project(const std::vector<ingest::SemEvalRecord>& records);

struct Evaluation {
    std::size_t records = 0;
    metrics::EvalReport report;      // undirected span-pair matching + DirAcc
    std::size_t directed_correct = 0;
    double directed_precision = 0.0;  // correctly oriented matches / predictions

    nlohmann::json to_json() const;
};

// Runs a baseline over the records and scores it against the gold spans.
Evaluation evaluate(const std::vector<ingest::SemEvalRecord>& records, baseline::Method method,
                    baseline::CooccurrenceMode mode = baseline::CooccurrenceMode::Consecutive,
                    const std::vector<baseline::CueRule>& rules = baseline::default_cue_rules());

// Scores edges of a project built by to_project.
Evaluation score(const Project& project, const std::vector<ingest::SemEvalRecord>& records);

}  // namespace qualnet::semeval
