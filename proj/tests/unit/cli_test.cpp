#include <gtest/gtest.h>

#include <sstream>

#include "qualnet/cli.hpp"
#include "qualnet/store.hpp"
#include "support/fixtures.hpp"

using namespace qualnet;
namespace qt = qualnet::testing;
using nlohmann::json;

namespace {

struct Result {
    int code;
    std::string out;
    std::string err;
};

Result run(const std::vector<std::string>& args) {
    std::ostringstream out, err;
    const int code = cli::run(args, out, err);
    return {code, out.str(), err.str()};
}

std::string fx(const std::string& name) {
    return qt::fixture(name).string();
}

}  // namespace

TEST(Cli, UsageErrors) {
    EXPECT_EQ(run({}).code, cli::kUsage);
    EXPECT_EQ(run({"dance"}).code, cli::kUsage);
    EXPECT_EQ(run({"ingest", fx("corpus.txt")}).code, cli::kUsage);
    const auto r = run({"--json", "export", "p.json", "--format", "pdf"});
    EXPECT_EQ(r.code, cli::kUsage);
    EXPECT_EQ(json::parse(r.err)["error"]["kind"], "Usage");
    EXPECT_EQ(run({"--help"}).code, cli::kOk);
}

TEST(Cli, IngestRunExport) {
    qt::TempDir dir;
    const auto project = (dir / "p.json").string();
    auto r = run({"ingest", fx("corpus.txt"), "-o", project, "--overview-file", fx("overview.txt"), "--concepts",
                  fx("concepts.json"), "--project-id", "cli"});
    ASSERT_EQ(r.code, cli::kOk) << r.err;
    EXPECT_EQ(r.out, "ingested 6 units, 8 sentences\n");

    const auto transcript = (dir / "t.jsonl").string();
    r = run({"run", project, "--provider", "mock:" + fx("mock_script.json"), "--transcript", transcript});
    ASSERT_EQ(r.code, cli::kOk) << r.err;
    const auto report = json::parse(r.out);
    EXPECT_EQ(report["stages"].size(), 4u);
    const auto file = store::load_file(project);
    EXPECT_EQ(file.project.revision, 4u);
    EXPECT_EQ(file.provider_transcript_ref, transcript);
    EXPECT_FALSE(qt::read_text(transcript).empty());

    // Replaying the transcript reproduces the same project.
    const auto replayed = (dir / "r.json").string();
    r = run({"ingest", fx("corpus.txt"), "-o", replayed, "--overview-file", fx("overview.txt"), "--concepts",
             fx("concepts.json"), "--project-id", "cli"});
    ASSERT_EQ(r.code, cli::kOk);
    r = run({"run", replayed, "--provider", "replay:" + transcript});
    ASSERT_EQ(r.code, cli::kOk) << r.err;
    EXPECT_EQ(store::load(replayed), file.project);

    r = run({"export", project, "--format", "csv"});
    ASSERT_EQ(r.code, cli::kOk);
    EXPECT_EQ(r.out.rfind("indicator_id,", 0), 0u);
    r = run({"export", project, "--format", "network"});
    ASSERT_EQ(r.code, cli::kOk);
    const auto network = json::parse(r.out);
    EXPECT_EQ(network["edges"].size(), 6u);

    r = run({"eval", project, "--gold", fx("gold.json")});
    ASSERT_EQ(r.code, cli::kOk) << r.err;
    EXPECT_NE(r.out.find("75.00%"), std::string::npos);
}

TEST(Cli, ValidationAndIoExitCodes) {
    qt::TempDir dir;
    auto r = run({"export", (dir / "missing.json").string()});
    EXPECT_EQ(r.code, cli::kIo);
    EXPECT_EQ(r.err.rfind("error: ", 0), 0u);

    qt::write_text(dir / "empty.txt", "\n\n");
    r = run({"--json", "ingest", (dir / "empty.txt").string(), "-o", (dir / "p.json").string()});
    EXPECT_EQ(r.code, cli::kValidation);
    EXPECT_EQ(json::parse(r.err)["error"]["kind"], "EmptyCorpus");

    qt::write_text(dir / "one.txt", "A line.\n");
    ASSERT_EQ(run({"ingest", (dir / "one.txt").string(), "-o", (dir / "p.json").string()}).code, cli::kOk);
    // No overview, so extraction cannot start.
    EXPECT_EQ(run({"run", (dir / "p.json").string(), "--stages", "extract"}).code, cli::kValidation);
    EXPECT_EQ(run({"run", (dir / "p.json").string(), "--provider", "carrier-pigeon"}).code, cli::kValidation);
}

TEST(Cli, ProviderFailureExitCode) {
    qt::TempDir dir;
    const auto project = (dir / "p.json").string();
    ASSERT_EQ(run({"ingest", fx("corpus.txt"), "-o", project, "--overview", "o"}).code, cli::kOk);
    // An empty mock script answers nothing usable.
    EXPECT_EQ(run({"run", project, "--stages", "extract", "--provider", "mock"}).code, cli::kProvider);
}

TEST(Cli, BaselineAndSemeval) {
    auto r = run({"--json", "semeval-eval", fx("semeval_sample.txt"), "--method", "all"});
    ASSERT_EQ(r.code, cli::kOk) << r.err;
    const auto j = json::parse(r.out);
    EXPECT_EQ(j.size(), 2u);

    r = run({"semeval-eval", fx("semeval_sample.txt"), "--method", "cue"});
    ASSERT_EQ(r.code, cli::kOk);
    EXPECT_NE(r.out.find("Causal cues"), std::string::npos);

    qt::TempDir dir;
    const auto project = (dir / "p.json").string();
    ASSERT_EQ(run({"ingest", fx("corpus.txt"), "-o", project}).code, cli::kOk);
    r = run({"--json", "baseline", project, "--method", "cooccurrence"});
    ASSERT_EQ(r.code, cli::kOk) << r.err;
    EXPECT_EQ(json::parse(r.out)["edges_added"], 0);  // no indicators yet
}
