#pragma once

// Text-generation and embedding backends.
//
// Every backend implements one or both of two contracts: ChatProvider
// (prompt in, raw text out) and EmbeddingProvider (texts in, fixed-width
// vectors out). Implementations here:
//   ScriptedChatProvider  deterministic rule table, for tests and fixtures
//   HashingEmbedder       character-trigram feature hashing, L2-normalized
//   ReplayProvider        answers from a recorded transcript
//   HttpProvider          OpenAI-compatible chat/embedding endpoints
// Recording decorators append every request/response pair to a JSON-lines
// transcript, which ReplayProvider can read back.

#include <chrono>
#include <cstddef>
#include <filesystem>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

namespace qualnet::provider {

struct ChatRequest {
    std::string prompt;
    double temperature = 0.0;
    std::size_t max_output_chars = 4000;
};

struct EmbeddingVector {
    std::vector<double> values;

    std::size_t dim() const { return values.size(); }
    bool operator==(const EmbeddingVector&) const = default;
};

// Cosine similarity; 0 when either vector has zero norm.
double cosine(const EmbeddingVector& a, const EmbeddingVector& b);

class ChatProvider {
public:
    virtual ~ChatProvider() = default;

    // Throws Precondition on an empty prompt without contacting the backend.
    std::string complete(const ChatRequest& request);

protected:
    virtual std::string do_complete(const ChatRequest& request) = 0;
};

class EmbeddingProvider {
public:
    virtual ~EmbeddingProvider() = default;

    // One vector per input, same order. Throws Precondition on an empty list
    // or an empty string.
    std::vector<EmbeddingVector> embed(const std::vector<std::string>& texts);

protected:
    virtual std::vector<EmbeddingVector> do_embed(const std::vector<std::string>& texts) = 0;
};

// ---------------------------------------------------------------------------
// Deterministic backends

class HashingEmbedder final : public EmbeddingProvider {
public:
    static constexpr std::size_t kDefaultDim = 256;

    explicit HashingEmbedder(std::size_t dim = kDefaultDim);
    std::size_t dim() const { return dim_; }

    // Bucket of one trigram (FNV-1a 64 over its bytes, modulo dim).
    std::size_t bucket(std::string_view trigram) const;

protected:
    std::vector<EmbeddingVector> do_embed(const std::vector<std::string>& texts) override;

private:
    std::size_t dim_;
};

// A rule fires when every `contains` substring occurs in the prompt; the
// first firing rule's response is returned, else `fallback` if set, else
// ProviderRejected. The result is a pure function of (script, prompt).
struct MockRule {
    std::vector<std::string> contains;
    std::string response;
};

struct MockScript {
    std::vector<MockRule> rules;
    std::optional<std::string> fallback;

    static MockScript from_json(const nlohmann::json& j);
    static MockScript load(const std::filesystem::path& path);
};

class ScriptedChatProvider final : public ChatProvider {
public:
    explicit ScriptedChatProvider(MockScript script) : script_(std::move(script)) {}

protected:
    std::string do_complete(const ChatRequest& request) override;

private:
    MockScript script_;
};

// ---------------------------------------------------------------------------
// Transcript

struct TranscriptEntry {
    nlohmann::json request;
    nlohmann::json response;
    std::string timestamp;
};

using Clock = std::function<std::string()>;

// ISO-8601 UTC wall clock.
Clock system_clock();
// Always "1970-01-01T00:00:00Z"; used for mock/replay runs so transcripts are
// byte-reproducible.
Clock fixed_clock();

class TranscriptLog {
public:
    // Appends to `path` (created if missing).
    TranscriptLog(std::filesystem::path path, Clock clock);

    void append(nlohmann::json request, nlohmann::json response);
    void write(const TranscriptEntry& entry);
    const std::filesystem::path& path() const { return path_; }

    static std::vector<TranscriptEntry> read(const std::filesystem::path& path);

private:
    std::filesystem::path path_;
    Clock clock_;
    std::mutex mutex_;
};

// While alive, transcript appends made on the constructing thread are held
// in this capture instead of being written. Used to commit the entries of
// concurrently executed calls in a deterministic order.
class TranscriptCapture {
public:
    TranscriptCapture();
    ~TranscriptCapture();
    TranscriptCapture(const TranscriptCapture&) = delete;
    TranscriptCapture& operator=(const TranscriptCapture&) = delete;

    // Writes every captured entry to the log it was destined for, in order.
    static void commit(std::vector<std::pair<TranscriptLog*, TranscriptEntry>>& entries);
    std::vector<std::pair<TranscriptLog*, TranscriptEntry>> take();

private:
    friend class TranscriptLog;
    std::vector<std::pair<TranscriptLog*, TranscriptEntry>> entries_;
    TranscriptCapture* previous_;
};

class RecordingChatProvider final : public ChatProvider {
public:
    RecordingChatProvider(ChatProvider& inner, TranscriptLog& log) : inner_(inner), log_(log) {}

protected:
    std::string do_complete(const ChatRequest& request) override;

private:
    ChatProvider& inner_;
    TranscriptLog& log_;
};

class RecordingEmbeddingProvider final : public EmbeddingProvider {
public:
    RecordingEmbeddingProvider(EmbeddingProvider& inner, TranscriptLog& log)
        : inner_(inner), log_(log) {}

protected:
    std::vector<EmbeddingVector> do_embed(const std::vector<std::string>& texts) override;

private:
    EmbeddingProvider& inner_;
    TranscriptLog& log_;
};

nlohmann::json chat_request_json(const ChatRequest& request);

// Serves chat prompts and embedding texts seen in a transcript. Unknown
// prompts/texts raise ProviderRejected.
class ReplayProvider final : public ChatProvider, public EmbeddingProvider {
public:
    explicit ReplayProvider(const std::vector<TranscriptEntry>& entries);
    static std::unique_ptr<ReplayProvider> load(const std::filesystem::path& path);

protected:
    std::string do_complete(const ChatRequest& request) override;
    std::vector<EmbeddingVector> do_embed(const std::vector<std::string>& texts) override;

private:
    std::unordered_map<std::string, std::string> chat_;
    std::unordered_map<std::string, EmbeddingVector> vectors_;
};

// ---------------------------------------------------------------------------
// HTTP

struct HttpSettings {
    std::string base_url = "https://api.openai.com/v1";
    std::string model = "gpt-4.1";
    std::string embedding_model = "text-embedding-3-small";
    std::string api_key;  // falls back to $QUALNET_API_KEY when empty
    int retries = 3;
    std::chrono::milliseconds backoff{500};
    std::chrono::seconds timeout{60};
};

// Result of one HTTP round trip; status 0 means a transport failure.
struct HttpReply {
    int status = 0;
    std::string body;
    std::string transport_error;
};

using HttpTransport =
    std::function<HttpReply(const std::string& path, const std::string& body)>;

class HttpProvider final : public ChatProvider, public EmbeddingProvider {
public:
    explicit HttpProvider(HttpSettings settings);
    // Injects the transport (tests).
    HttpProvider(HttpSettings settings, HttpTransport transport);

protected:
    std::string do_complete(const ChatRequest& request) override;
    std::vector<EmbeddingVector> do_embed(const std::vector<std::string>& texts) override;

private:
    nlohmann::json post_with_retry(const std::string& path, const nlohmann::json& body);

    HttpSettings settings_;
    HttpTransport transport_;
    std::mutex dim_mutex_;
    std::optional<std::size_t> dim_;
};

// ---------------------------------------------------------------------------
// Construction from a CLI/config spec string:
//   "mock"                 scripted provider with an empty script + hashing
//   "mock:<script.json>"   scripted provider + hashing embedder
//   "replay:<log.jsonl>"   replay for both contracts
//   "http"                 HttpProvider from settings

struct ProviderBundle {
    std::shared_ptr<ChatProvider> chat;
    std::shared_ptr<EmbeddingProvider> embed;
    bool deterministic = false;
};

ProviderBundle make_providers(const std::string& spec, const HttpSettings& http = {});

}  // namespace qualnet::provider
