#include "qualnet/provider.hpp"

#include <cmath>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <sstream>
#include <thread>

#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

#include "qualnet/error.hpp"
#include "qualnet/text.hpp"

namespace qualnet::provider {

using nlohmann::json;

double cosine(const EmbeddingVector& a, const EmbeddingVector& b) {
    const std::size_t n = std::min(a.values.size(), b.values.size());
    double dot = 0.0;
    double na = 0.0;
    double nb = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        dot += a.values[i] * b.values[i];
        na += a.values[i] * a.values[i];
        nb += b.values[i] * b.values[i];
    }
    if (na == 0.0 || nb == 0.0) return 0.0;
    return dot / (std::sqrt(na) * std::sqrt(nb));
}

std::string ChatProvider::complete(const ChatRequest& request) {
    if (request.prompt.empty()) {
        throw Error(ErrorKind::Precondition, "chat request has an empty prompt");
    }
    return do_complete(request);
}

std::vector<EmbeddingVector> EmbeddingProvider::embed(const std::vector<std::string>& texts) {
    if (texts.empty()) throw Error(ErrorKind::Precondition, "embed called with no texts");
    for (const auto& t : texts) {
        if (t.empty()) throw Error(ErrorKind::Precondition, "embed called with an empty text");
    }
    auto out = do_embed(texts);
    if (out.size() != texts.size()) {
        throw Error(ErrorKind::ProviderRejected, "embedding count does not match input count");
    }
    return out;
}

// ---------------------------------------------------------------------------

HashingEmbedder::HashingEmbedder(std::size_t dim) : dim_(dim) {
    if (dim_ == 0) throw Error(ErrorKind::Precondition, "embedding dim must be positive");
}

std::size_t HashingEmbedder::bucket(std::string_view trigram) const {
    std::uint64_t h = 14695981039346656037ULL;
    for (char c : trigram) {
        h ^= static_cast<unsigned char>(c);
        h *= 1099511628211ULL;
    }
    return static_cast<std::size_t>(h % dim_);
}

std::vector<EmbeddingVector> HashingEmbedder::do_embed(const std::vector<std::string>& texts) {
    std::vector<EmbeddingVector> out;
    out.reserve(texts.size());
    for (const auto& text : texts) {
        const std::string padded = " " + collapse_whitespace(to_lower(text)) + " ";
        EmbeddingVector v;
        v.values.assign(dim_, 0.0);
        for (std::size_t i = 0; i + 3 <= padded.size(); ++i) {
            v.values[bucket(std::string_view(padded).substr(i, 3))] += 1.0;
        }
        double norm = 0.0;
        for (double x : v.values) norm += x * x;
        norm = std::sqrt(norm);
        if (norm > 0.0) {
            for (double& x : v.values) x /= norm;
        }
        out.push_back(std::move(v));
    }
    return out;
}

// ---------------------------------------------------------------------------

MockScript MockScript::from_json(const json& j) {
    MockScript script;
    for (const auto& r : j.value("rules", json::array())) {
        MockRule rule;
        const auto& c = r.at("contains");
        if (c.is_string()) rule.contains.push_back(c.get<std::string>());
        else rule.contains = c.get<std::vector<std::string>>();
        rule.response = r.at("response").get<std::string>();
        script.rules.push_back(std::move(rule));
    }
    if (j.contains("fallback") && !j.at("fallback").is_null()) {
        script.fallback = j.at("fallback").get<std::string>();
    }
    return script;
}

MockScript MockScript::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::IoError, "cannot read mock script " + path.string());
    try {
        return from_json(json::parse(in));
    } catch (const json::exception& e) {
        throw Error(ErrorKind::InvalidInput, "bad mock script " + path.string() + ": " + e.what());
    }
}

std::string ScriptedChatProvider::do_complete(const ChatRequest& request) {
    for (const auto& rule : script_.rules) {
        bool all = true;
        for (const auto& needle : rule.contains) {
            if (request.prompt.find(needle) == std::string::npos) {
                all = false;
                break;
            }
        }
        if (all) return rule.response;
    }
    if (script_.fallback) return *script_.fallback;
    throw Error(ErrorKind::ProviderRejected, "mock script has no rule for this prompt");
}

// ---------------------------------------------------------------------------

Clock system_clock() {
    return [] {
        const auto now = std::chrono::system_clock::now();
        const std::time_t t = std::chrono::system_clock::to_time_t(now);
        std::tm tm{};
        gmtime_r(&t, &tm);
        char buf[32];
        std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
        return std::string(buf);
    };
}

Clock fixed_clock() {
    return [] { return std::string("1970-01-01T00:00:00Z"); };
}

namespace {
thread_local TranscriptCapture* active_capture = nullptr;
}  // namespace

TranscriptCapture::TranscriptCapture() : previous_(active_capture) { active_capture = this; }

TranscriptCapture::~TranscriptCapture() { active_capture = previous_; }

std::vector<std::pair<TranscriptLog*, TranscriptEntry>> TranscriptCapture::take() {
    return std::exchange(entries_, {});
}

void TranscriptCapture::commit(std::vector<std::pair<TranscriptLog*, TranscriptEntry>>& entries) {
    for (auto& [log, entry] : entries) log->write(entry);
    entries.clear();
}

TranscriptLog::TranscriptLog(std::filesystem::path path, Clock clock)
    : path_(std::move(path)), clock_(std::move(clock)) {}

void TranscriptLog::append(json request, json response) {
    TranscriptEntry entry{std::move(request), std::move(response), clock_()};
    if (active_capture) {
        active_capture->entries_.emplace_back(this, std::move(entry));
        return;
    }
    write(entry);
}

void TranscriptLog::write(const TranscriptEntry& entry) {
    json line = {{"request", entry.request},
                 {"response", entry.response},
                 {"timestamp", entry.timestamp}};
    std::lock_guard lock(mutex_);
    std::ofstream out(path_, std::ios::app);
    if (!out) throw Error(ErrorKind::IoError, "cannot append to transcript " + path_.string());
    out << line.dump() << '\n';
}

std::vector<TranscriptEntry> TranscriptLog::read(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::IoError, "cannot read transcript " + path.string());
    std::vector<TranscriptEntry> out;
    std::string line;
    std::size_t n = 0;
    while (std::getline(in, line)) {
        ++n;
        if (trim(line).empty()) continue;
        try {
            auto j = json::parse(line);
            out.push_back({j.at("request"), j.at("response"), j.value("timestamp", "")});
        } catch (const json::exception& e) {
            throw Error(ErrorKind::InvalidInput,
                        "transcript line " + std::to_string(n) + ": " + e.what());
        }
    }
    return out;
}

json chat_request_json(const ChatRequest& request) {
    return {{"kind", "chat"},
            {"prompt", request.prompt},
            {"temperature", request.temperature},
            {"max_output_chars", request.max_output_chars}};
}

std::string RecordingChatProvider::do_complete(const ChatRequest& request) {
    auto response = inner_.complete(request);
    log_.append(chat_request_json(request), response);
    return response;
}

std::vector<EmbeddingVector> RecordingEmbeddingProvider::do_embed(
    const std::vector<std::string>& texts) {
    auto vectors = inner_.embed(texts);
    json arr = json::array();
    for (const auto& v : vectors) arr.push_back(v.values);
    log_.append({{"kind", "embed"}, {"texts", texts}}, std::move(arr));
    return vectors;
}

// ---------------------------------------------------------------------------

ReplayProvider::ReplayProvider(const std::vector<TranscriptEntry>& entries) {
    for (const auto& e : entries) {
        const auto kind = e.request.value("kind", "chat");
        if (kind == "chat") {
            chat_.emplace(e.request.at("prompt").get<std::string>(),
                          e.response.get<std::string>());
        } else if (kind == "embed") {
            const auto texts = e.request.at("texts").get<std::vector<std::string>>();
            for (std::size_t i = 0; i < texts.size() && i < e.response.size(); ++i) {
                vectors_.emplace(texts[i],
                                 EmbeddingVector{e.response[i].get<std::vector<double>>()});
            }
        }
    }
}

std::unique_ptr<ReplayProvider> ReplayProvider::load(const std::filesystem::path& path) {
    return std::make_unique<ReplayProvider>(TranscriptLog::read(path));
}

std::string ReplayProvider::do_complete(const ChatRequest& request) {
    auto it = chat_.find(request.prompt);
    if (it == chat_.end()) {
        throw Error(ErrorKind::ProviderRejected, "prompt not present in replay transcript");
    }
    return it->second;
}

std::vector<EmbeddingVector> ReplayProvider::do_embed(const std::vector<std::string>& texts) {
    std::vector<EmbeddingVector> out;
    for (const auto& t : texts) {
        auto it = vectors_.find(t);
        if (it == vectors_.end()) {
            throw Error(ErrorKind::ProviderRejected,
                        "text not present in replay transcript: " + t);
        }
        out.push_back(it->second);
    }
    return out;
}

// ---------------------------------------------------------------------------

namespace {

struct SplitUrl {
    std::string origin;  // scheme://host[:port]
    std::string prefix;  // path prefix, no trailing slash
};

SplitUrl split_url(const std::string& url) {
    const auto scheme_end = url.find("://");
    const auto host_start = scheme_end == std::string::npos ? 0 : scheme_end + 3;
    const auto path_start = url.find('/', host_start);
    SplitUrl out;
    if (path_start == std::string::npos) {
        out.origin = url;
    } else {
        out.origin = url.substr(0, path_start);
        out.prefix = url.substr(path_start);
    }
    while (!out.prefix.empty() && out.prefix.back() == '/') out.prefix.pop_back();
    return out;
}

HttpTransport default_transport(const HttpSettings& settings) {
    return [settings](const std::string& path, const std::string& body) {
        const auto url = split_url(settings.base_url);
        httplib::Client client(url.origin);
        client.set_connection_timeout(settings.timeout);
        client.set_read_timeout(settings.timeout);
        client.set_write_timeout(settings.timeout);
        std::string key = settings.api_key;
        if (key.empty()) {
            if (const char* env = std::getenv("QUALNET_API_KEY")) key = env;
        }
        httplib::Headers headers;
        if (!key.empty()) headers.emplace("Authorization", "Bearer " + key);
        auto res = client.Post(url.prefix + path, headers, body, "application/json");
        HttpReply reply;
        if (!res) {
            reply.transport_error = httplib::to_string(res.error());
            return reply;
        }
        reply.status = res->status;
        reply.body = res->body;
        return reply;
    };
}

bool transient(const HttpReply& r) {
    return r.status == 0 || r.status == 408 || r.status == 429 || r.status >= 500;
}

}  // namespace

HttpProvider::HttpProvider(HttpSettings settings)
    : settings_(std::move(settings)), transport_(default_transport(settings_)) {}

HttpProvider::HttpProvider(HttpSettings settings, HttpTransport transport)
    : settings_(std::move(settings)), transport_(std::move(transport)) {}

json HttpProvider::post_with_retry(const std::string& path, const json& body) {
    const std::string payload = body.dump();
    std::string last_error;
    for (int attempt = 0; attempt <= settings_.retries; ++attempt) {
        if (attempt > 0) {
            std::this_thread::sleep_for(settings_.backoff * (1LL << (attempt - 1)));
        }
        HttpReply reply = transport_(path, payload);
        if (reply.status >= 200 && reply.status < 300) {
            try {
                return json::parse(reply.body);
            } catch (const json::exception& e) {
                throw Error(ErrorKind::ProviderRejected,
                            std::string("backend returned invalid JSON: ") + e.what());
            }
        }
        if (!transient(reply)) {
            throw Error(ErrorKind::ProviderRejected,
                        "backend rejected request with HTTP " + std::to_string(reply.status) +
                            ": " + reply.body.substr(0, 500));
        }
        last_error = reply.status == 0 ? reply.transport_error
                                       : "HTTP " + std::to_string(reply.status);
    }
    throw Error(ErrorKind::ProviderUnavailable,
                "backend unavailable after " + std::to_string(settings_.retries) +
                    " retries: " + last_error);
}

std::string HttpProvider::do_complete(const ChatRequest& request) {
    json body = {{"model", settings_.model},
                 {"temperature", request.temperature},
                 {"max_tokens", std::max<std::size_t>(16, request.max_output_chars / 3)},
                 {"messages", json::array({{{"role", "user"}, {"content", request.prompt}}})}};
    auto reply = post_with_retry("/chat/completions", body);
    try {
        return reply.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const json::exception&) {
        throw Error(ErrorKind::ProviderRejected, "chat completion response lacks content");
    }
}

std::vector<EmbeddingVector> HttpProvider::do_embed(const std::vector<std::string>& texts) {
    json body = {{"model", settings_.embedding_model}, {"input", texts}};
    auto reply = post_with_retry("/embeddings", body);
    std::vector<EmbeddingVector> out(texts.size());
    try {
        for (const auto& item : reply.at("data")) {
            const auto index = item.value("index", std::size_t{0});
            if (index >= out.size()) throw Error(ErrorKind::ProviderRejected, "bad index");
            out[index].values = item.at("embedding").get<std::vector<double>>();
        }
    } catch (const json::exception&) {
        throw Error(ErrorKind::ProviderRejected, "embedding response is malformed");
    }
    std::lock_guard lock(dim_mutex_);
    for (const auto& v : out) {
        if (v.values.empty()) throw Error(ErrorKind::ProviderRejected, "missing embedding");
        if (!dim_) dim_ = v.dim();
        if (*dim_ != v.dim()) {
            throw Error(ErrorKind::ProviderRejected, "embedding dimension changed mid-session");
        }
    }
    return out;
}

// ---------------------------------------------------------------------------

ProviderBundle make_providers(const std::string& spec, const HttpSettings& http) {
    ProviderBundle bundle;
    if (spec == "mock" || spec.rfind("mock:", 0) == 0) {
        MockScript script;
        if (spec.size() > 5) script = MockScript::load(spec.substr(5));
        bundle.chat = std::make_shared<ScriptedChatProvider>(std::move(script));
        bundle.embed = std::make_shared<HashingEmbedder>();
        bundle.deterministic = true;
    } else if (spec.rfind("replay:", 0) == 0) {
        std::shared_ptr<ReplayProvider> replay = ReplayProvider::load(spec.substr(7));
        bundle.chat = replay;
        bundle.embed = replay;
        bundle.deterministic = true;
    } else if (spec == "http") {
        auto http_provider = std::make_shared<HttpProvider>(http);
        bundle.chat = http_provider;
        bundle.embed = http_provider;
    } else {
        throw Error(ErrorKind::InvalidInput, "unknown provider spec '" + spec + "'");
    }
    return bundle;
}

}  // namespace qualnet::provider
