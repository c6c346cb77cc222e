#include <gtest/gtest.h>

#include <cmath>

#include "qualnet/error.hpp"
#include "qualnet/provider.hpp"
#include "support/fixtures.hpp"

using namespace qualnet;
namespace qt = qualnet::testing;
using namespace qualnet::provider;
using nlohmann::json;

namespace {

std::optional<ErrorKind> kind_of(const std::function<void()>& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.kind();
    }
    return std::nullopt;
}

HttpSettings fast_settings() {
    HttpSettings s;
    s.api_key = "test";
    s.retries = 2;
    s.backoff = std::chrono::milliseconds(1);
    return s;
}

}  // namespace

TEST(Provider, CosineBasics) {
    EmbeddingVector a{{1, 0}}, b{{0, 1}}, z{{0, 0}};
    EXPECT_DOUBLE_EQ(cosine(a, a), 1.0);
    EXPECT_DOUBLE_EQ(cosine(a, b), 0.0);
    EXPECT_DOUBLE_EQ(cosine(a, z), 0.0);
}

TEST(Provider, HashingEmbedderIsNormalizedAndCaseBlind) {
    HashingEmbedder e;
    const auto v = e.embed({"Feeling Sorry", "feeling   sorry", "stigma"});
    ASSERT_EQ(v.size(), 3u);
    EXPECT_EQ(v[0].dim(), HashingEmbedder::kDefaultDim);
    double norm = 0;
    for (double x : v[0].values) norm += x * x;
    EXPECT_NEAR(norm, 1.0, 1e-12);
    EXPECT_EQ(v[0], v[1]);
    EXPECT_LT(cosine(v[0], v[2]), 0.5);
}

TEST(Provider, HashingBucketIsFnv1a) {
    HashingEmbedder e(1u << 20);
    // FNV-1a 64 of "abc" is 0xe71fa2190541574b.
    EXPECT_EQ(e.bucket("abc"), 0xe71fa2190541574bULL % (1u << 20));
}

TEST(Provider, PreconditionsRejectEmptyInput) {
    HashingEmbedder e;
    EXPECT_EQ(kind_of([&] { e.embed({}); }), ErrorKind::Precondition);
    EXPECT_EQ(kind_of([&] { e.embed({"a", ""}); }), ErrorKind::Precondition);
    ScriptedChatProvider chat(MockScript{});
    EXPECT_EQ(kind_of([&] { chat.complete({""}); }), ErrorKind::Precondition);
    EXPECT_EQ(kind_of([&] { chat.complete({"x"}); }), ErrorKind::ProviderRejected);
}

TEST(Provider, ScriptFirstMatchingRuleWins) {
    const auto script = MockScript::from_json(json::parse(R"({
        "rules": [{"contains": ["alpha", "beta"], "response": "both"},
                  {"contains": "alpha", "response": "one"}],
        "fallback": "none"})"));
    ScriptedChatProvider chat(script);
    EXPECT_EQ(chat.complete({"alpha beta"}), "both");
    EXPECT_EQ(chat.complete({"alpha"}), "one");
    EXPECT_EQ(chat.complete({"gamma"}), "none");
}

TEST(Provider, RecordThenReplay) {
    qt::TempDir dir;
    const auto path = dir / "t.jsonl";
    {
        TranscriptLog log(path, fixed_clock());
        ScriptedChatProvider inner(MockScript{{}, std::string("answer")});
        HashingEmbedder hashing;
        RecordingChatProvider chat(inner, log);
        RecordingEmbeddingProvider embed(hashing, log);
        EXPECT_EQ(chat.complete({"question"}), "answer");
        embed.embed({"one", "two"});
    }
    const auto entries = TranscriptLog::read(path);
    ASSERT_EQ(entries.size(), 2u);
    EXPECT_EQ(entries[0].timestamp, "1970-01-01T00:00:00Z");
    EXPECT_EQ(entries[0].request.at("kind"), "chat");
    EXPECT_EQ(entries[1].request.at("kind"), "embed");

    auto replay = ReplayProvider::load(path);
    ChatProvider& chat = *replay;
    EmbeddingProvider& embed = *replay;
    EXPECT_EQ(chat.complete({"question"}), "answer");
    HashingEmbedder hashing;
    EXPECT_EQ(embed.embed({"two"})[0], hashing.embed({"two"})[0]);
    EXPECT_EQ(kind_of([&] { chat.complete({"other"}); }), ErrorKind::ProviderRejected);
    EXPECT_EQ(kind_of([&] { embed.embed({"three"}); }), ErrorKind::ProviderRejected);
}

TEST(Provider, CaptureHoldsEntriesUntilCommit) {
    qt::TempDir dir;
    TranscriptLog log(dir / "t.jsonl", fixed_clock());
    std::vector<std::pair<TranscriptLog*, TranscriptEntry>> held;
    {
        TranscriptCapture capture;
        log.append("a", "b");
        held = capture.take();
    }
    EXPECT_FALSE(std::filesystem::exists(dir / "t.jsonl"));
    ASSERT_EQ(held.size(), 1u);
    TranscriptCapture::commit(held);
    EXPECT_EQ(TranscriptLog::read(dir / "t.jsonl").size(), 1u);
}

TEST(Provider, HttpChatRetriesTransientFailures) {
    int calls = 0;
    std::string seen_path;
    HttpProvider http(fast_settings(), [&](const std::string& path, const std::string& body) {
        ++calls;
        seen_path = path;
        EXPECT_EQ(json::parse(body).at("messages").at(0).at("content"), "hi");
        if (calls == 1) return HttpReply{0, "", "connection refused"};
        if (calls == 2) return HttpReply{503, "busy", ""};
        return HttpReply{200, R"({"choices":[{"message":{"content":"hello"}}]})", ""};
    });
    ChatProvider& chat = http;
    EXPECT_EQ(chat.complete({"hi"}), "hello");
    EXPECT_EQ(calls, 3);
    EXPECT_EQ(seen_path, "/chat/completions");
}

TEST(Provider, HttpGivesUpAfterRetries) {
    int calls = 0;
    HttpProvider http(fast_settings(), [&](const std::string&, const std::string&) {
        ++calls;
        return HttpReply{429, "", ""};
    });
    ChatProvider& chat = http;
    EXPECT_EQ(kind_of([&] { chat.complete({"hi"}); }), ErrorKind::ProviderUnavailable);
    EXPECT_EQ(calls, 3);
}

TEST(Provider, HttpClientErrorIsNotRetried) {
    int calls = 0;
    HttpProvider http(fast_settings(), [&](const std::string&, const std::string&) {
        ++calls;
        return HttpReply{401, "bad key", ""};
    });
    ChatProvider& chat = http;
    EXPECT_EQ(kind_of([&] { chat.complete({"hi"}); }), ErrorKind::ProviderRejected);
    EXPECT_EQ(calls, 1);
}

TEST(Provider, HttpEmbeddingsFollowIndexAndFixDimension) {
    int call = 0;
    HttpProvider http(fast_settings(), [&](const std::string& path, const std::string&) {
        EXPECT_EQ(path, "/embeddings");
        ++call;
        if (call == 1) {
            return HttpReply{200, R"({"data":[{"index":1,"embedding":[0,1]},{"index":0,"embedding":[1,0]}]})", ""};
        }
        return HttpReply{200, R"({"data":[{"index":0,"embedding":[1,0,0]}]})", ""};
    });
    EmbeddingProvider& embed = http;
    const auto v = embed.embed({"a", "b"});
    EXPECT_EQ(v[0].values, (std::vector<double>{1, 0}));
    EXPECT_EQ(v[1].values, (std::vector<double>{0, 1}));
    EXPECT_EQ(kind_of([&] { embed.embed({"c"}); }), ErrorKind::ProviderRejected);
}

TEST(Provider, MakeProvidersSpecs) {
    EXPECT_TRUE(make_providers("mock").deterministic);
    const auto scripted = make_providers("mock:" + qt::fixture("mock_script.json").string());
    EXPECT_TRUE(scripted.chat && scripted.embed);
    EXPECT_FALSE(make_providers("http", fast_settings()).deterministic);
    EXPECT_EQ(kind_of([] { make_providers("nope"); }), ErrorKind::InvalidInput);
    EXPECT_EQ(kind_of([] { make_providers("replay:/nonexistent/x.jsonl"); }), ErrorKind::IoError);
}
