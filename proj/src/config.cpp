#include "qualnet/config.hpp"

#include <cctype>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "qualnet/error.hpp"
#include "qualnet/text.hpp"

namespace qualnet::config {

using nlohmann::json;

namespace {

class LineParser {
public:
    LineParser(std::string_view line, std::size_t number) : s_(line), line_(number) {}

    [[noreturn]] void fail(const std::string& what) const {
        throw Error(ErrorKind::InvalidInput,
                    "config line " + std::to_string(line_) + ": " + what);
    }

    void skip_ws() {
        while (pos_ < s_.size() && (s_[pos_] == ' ' || s_[pos_] == '\t')) ++pos_;
    }

    bool at_end_or_comment() {
        skip_ws();
        return pos_ >= s_.size() || s_[pos_] == '#';
    }

    bool peek(char c) {
        skip_ws();
        return pos_ < s_.size() && s_[pos_] == c;
    }

    void expect(char c) {
        if (!peek(c)) fail(std::string("expected '") + c + "'");
        ++pos_;
    }

    std::string bare_key() {
        skip_ws();
        const auto start = pos_;
        while (pos_ < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[pos_])) ||
                                    s_[pos_] == '_' || s_[pos_] == '-')) {
            ++pos_;
        }
        if (start == pos_) fail("expected a key");
        return std::string(s_.substr(start, pos_ - start));
    }

    json value() {
        skip_ws();
        if (pos_ >= s_.size()) fail("missing value");
        const char c = s_[pos_];
        if (c == '"') return basic_string();
        if (c == '\'') return literal_string();
        if (c == '[') return array();
        if (s_.substr(pos_, 4) == "true") {
            pos_ += 4;
            return true;
        }
        if (s_.substr(pos_, 5) == "false") {
            pos_ += 5;
            return false;
        }
        return number();
    }

private:
    json basic_string() {
        ++pos_;
        std::string out;
        while (pos_ < s_.size() && s_[pos_] != '"') {
            char c = s_[pos_++];
            if (c != '\\') {
                out += c;
                continue;
            }
            if (pos_ >= s_.size()) break;
            switch (s_[pos_++]) {
                case 'n': out += '\n'; break;
                case 't': out += '\t'; break;
                case 'r': out += '\r'; break;
                case '"': out += '"'; break;
                case '\\': out += '\\'; break;
                default: fail("unsupported escape");
            }
        }
        if (pos_ >= s_.size()) fail("unterminated string");
        ++pos_;
        return out;
    }

    json literal_string() {
        ++pos_;
        const auto end = s_.find('\'', pos_);
        if (end == std::string_view::npos) fail("unterminated string");
        std::string out(s_.substr(pos_, end - pos_));
        pos_ = end + 1;
        return out;
    }

    json array() {
        ++pos_;
        json out = json::array();
        if (peek(']')) {
            ++pos_;
            return out;
        }
        while (true) {
            out.push_back(value());
            if (peek(',')) {
                ++pos_;
                if (peek(']')) break;
                continue;
            }
            break;
        }
        expect(']');
        return out;
    }

    json number() {
        const auto start = pos_;
        while (pos_ < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[pos_])) ||
                                    s_[pos_] == '.' || s_[pos_] == '+' || s_[pos_] == '-' ||
                                    s_[pos_] == '_')) {
            ++pos_;
        }
        std::string token;
        for (char c : s_.substr(start, pos_ - start)) {
            if (c != '_') token += c;
        }
        if (token.empty()) fail("expected a value");
        char* end = nullptr;
        if (token.find_first_of(".eE") == std::string::npos) {
            const long long v = std::strtoll(token.c_str(), &end, 10);
            if (*end == '\0') return v;
        } else {
            const double v = std::strtod(token.c_str(), &end);
            if (*end == '\0') return v;
        }
        fail("invalid value '" + token + "'");
    }

    std::string_view s_;
    std::size_t pos_ = 0;
    std::size_t line_;
};

}  // namespace

json parse_toml(std::string_view text) {
    json root = json::object();
    json* table = &root;
    std::size_t number = 0;
    for (const auto& raw : split_lines(std::string(text))) {
        ++number;
        LineParser p(raw, number);
        if (p.at_end_or_comment()) continue;
        if (p.peek('[')) {
            p.expect('[');
            const auto name = p.bare_key();
            p.expect(']');
            if (!p.at_end_or_comment()) p.fail("trailing characters after table header");
            if (root.contains(name)) p.fail("duplicate table [" + name + "]");
            root[name] = json::object();
            table = &root[name];
            continue;
        }
        const auto key = p.bare_key();
        p.expect('=');
        auto v = p.value();
        if (!p.at_end_or_comment()) p.fail("trailing characters after value");
        if (table->contains(key)) p.fail("duplicate key '" + key + "'");
        (*table)[key] = std::move(v);
    }
    return root;
}

std::optional<std::string> getenv_lookup(const char* name) {
    if (const char* v = std::getenv(name)) return std::string(v);
    return std::nullopt;
}

void apply_env(ServiceConfig& config, const EnvLookup& env) {
    if (auto bind = env("QUALNET_BIND"); bind && !bind->empty()) {
        // "host:port", "[v6]:port", or a bare host (including bare IPv6).
        const auto colon = bind->rfind(':');
        const auto bracket = bind->rfind(']');
        const bool has_port = colon != std::string::npos &&
                              (bracket != std::string::npos ? colon == bracket + 1
                                                            : bind->find(':') == colon);
        if (has_port) {
            const auto port = bind->substr(colon + 1);
            char* end = nullptr;
            const long v = std::strtol(port.c_str(), &end, 10);
            if (port.empty() || *end != '\0' || v <= 0 || v > 65535) {
                throw Error(ErrorKind::InvalidInput, "QUALNET_BIND has an invalid port");
            }
            config.bind = bind->substr(0, colon);
            config.port = static_cast<std::uint16_t>(v);
        } else {
            config.bind = *bind;
        }
    }
    if (auto key = env("QUALNET_API_KEY"); key && !key->empty()) config.http.api_key = *key;
}

namespace {

template <class T>
void read(const json& table, const char* key, T& out) {
    if (!table.contains(key)) return;
    try {
        out = table.at(key).get<T>();
    } catch (const json::exception&) {
        throw Error(ErrorKind::InvalidInput, std::string("config key '") + key + "' has the wrong type");
    }
}

}  // namespace

ServiceConfig from_toml(std::string_view text, const EnvLookup& env) {
    const auto doc = parse_toml(text);
    ServiceConfig c;
    static const json empty = json::object();
    const json& server = doc.contains("server") ? doc.at("server") : empty;
    const json& pipeline = doc.contains("pipeline") ? doc.at("pipeline") : empty;
    const json& http = doc.contains("http") ? doc.at("http") : empty;

    read(server, "bind", c.bind);
    std::int64_t port = c.port;
    read(server, "port", port);
    if (port <= 0 || port > 65535) throw Error(ErrorKind::InvalidInput, "port out of range");
    c.port = static_cast<std::uint16_t>(port);
    std::string data_dir = c.data_dir.string();
    read(server, "data_dir", data_dir);
    c.data_dir = data_dir;
    std::int64_t workers = static_cast<std::int64_t>(c.workers);
    read(server, "workers", workers);
    if (workers < 1) throw Error(ErrorKind::InvalidInput, "workers must be at least 1");
    c.workers = static_cast<std::size_t>(workers);

    read(pipeline, "provider", c.provider);
    std::int64_t parallelism = static_cast<std::int64_t>(c.parallelism);
    read(pipeline, "parallelism", parallelism);
    if (parallelism < 1) throw Error(ErrorKind::InvalidInput, "parallelism must be at least 1");
    c.parallelism = static_cast<std::size_t>(parallelism);
    if (pipeline.contains("prompts_dir")) {
        std::string dir;
        read(pipeline, "prompts_dir", dir);
        c.prompts_dir = dir;
    }
    if (pipeline.contains("cue_rules")) {
        std::string file;
        read(pipeline, "cue_rules", file);
        c.cue_rules = file;
    }

    read(http, "base_url", c.http.base_url);
    read(http, "model", c.http.model);
    read(http, "embedding_model", c.http.embedding_model);
    read(http, "api_key", c.http.api_key);
    read(http, "retries", c.http.retries);
    std::int64_t backoff_ms = c.http.backoff.count();
    read(http, "backoff_ms", backoff_ms);
    c.http.backoff = std::chrono::milliseconds(backoff_ms);
    std::int64_t timeout_s = c.http.timeout.count();
    read(http, "timeout_s", timeout_s);
    c.http.timeout = std::chrono::seconds(timeout_s);

    apply_env(c, env);
    return c;
}

ServiceConfig load(const std::filesystem::path& path, const EnvLookup& env) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::IoError, "cannot read config " + path.string());
    std::stringstream buffer;
    buffer << in.rdbuf();
    return from_toml(buffer.str(), env);
}

}  // namespace qualnet::config
