#include <gtest/gtest.h>

#include "qualnet/semeval.hpp"
#include "support/fixtures.hpp"

using namespace qualnet;
namespace qt = qualnet::testing;

namespace {

std::vector<ingest::SemEvalRecord> sample() {
    return semeval::causal_records(
        ingest::parse_semeval(qt::read_text(qt::fixture("semeval_sample.txt"))));
}

}  // namespace

TEST(SemEval, KeepsCauseEffectOnly) {
    const auto records = sample();
    ASSERT_EQ(records.size(), 6u);
    for (const auto& r : records) EXPECT_EQ(r.relation_label.rfind("Cause-Effect", 0), 0u);
}

TEST(SemEval, ProjectHasTwoSpannedIndicatorsPerRecord) {
    const auto p = semeval::to_project(sample());
    EXPECT_EQ(p.sentences.size(), 6u);
    ASSERT_EQ(p.indicators.size(), 12u);
    EXPECT_EQ(p.indicators[0].text, "gaps");
    EXPECT_EQ(p.indicators[1].text, "resonance");
    EXPECT_TRUE(validate_project(p).empty());
}

TEST(SemEval, CooccurrenceFindsEveryPairButOrientsByTextOrder) {
    const auto eval = semeval::evaluate(sample(), baseline::Method::Cooccurrence);
    EXPECT_EQ(eval.report.true_positive, 6u);
    EXPECT_DOUBLE_EQ(eval.report.recall, 1.0);
    EXPECT_DOUBLE_EQ(eval.report.precision, 1.0);
    // Records 2, 5 and 8 are e1 -> e2.
    EXPECT_EQ(eval.directed_correct, 3u);
    EXPECT_DOUBLE_EQ(eval.directed_precision, 0.5);
    EXPECT_DOUBLE_EQ(*eval.report.direction_accuracy, 0.5);
}

TEST(SemEval, CueRulesArePreciseButMissImplicitCausation) {
    const auto eval = semeval::evaluate(sample(), baseline::Method::Cue);
    EXPECT_EQ(eval.report.true_positive, 4u);
    EXPECT_EQ(eval.report.false_negative, 2u);
    EXPECT_DOUBLE_EQ(eval.report.precision, 1.0);
    EXPECT_NEAR(eval.report.recall, 4.0 / 6.0, 1e-12);
    EXPECT_EQ(eval.directed_correct, 4u);
}

TEST(SemEval, EmptyPredictionsLeavePrecisionUndefined) {
    const auto records = sample();
    const auto eval = semeval::score(semeval::to_project(records), records);
    EXPECT_TRUE(eval.report.precision_undefined);
    EXPECT_EQ(eval.report.false_negative, 6u);
    EXPECT_DOUBLE_EQ(eval.directed_precision, 0.0);
    EXPECT_FALSE(eval.to_json().contains("ledger"));
}
