#include "qualnet/text.hpp"

#include <cctype>

namespace qualnet {

namespace {
bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }
char lower(char c) { return static_cast<char>(std::tolower(static_cast<unsigned char>(c))); }
}  // namespace

bool is_word_char(char c) {
    auto u = static_cast<unsigned char>(c);
    return std::isalnum(u) != 0 || c == '_' || u >= 0x80;
}

std::string trim(std::string_view s) {
    std::size_t b = 0;
    std::size_t e = s.size();
    while (b < e && is_space(s[b])) ++b;
    while (e > b && is_space(s[e - 1])) --e;
    return std::string(s.substr(b, e - b));
}

std::string to_lower(std::string_view s) {
    std::string out(s);
    for (auto& c : out) c = lower(c);
    return out;
}

std::string collapse_whitespace(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    bool pending_space = false;
    for (char c : s) {
        if (is_space(c)) {
            pending_space = !out.empty();
            continue;
        }
        if (pending_space) out.push_back(' ');
        pending_space = false;
        out.push_back(c);
    }
    return out;
}

std::string normalize_for_match(std::string_view s) {
    std::string out = collapse_whitespace(to_lower(s));
    auto is_punct = [](char c) { return std::ispunct(static_cast<unsigned char>(c)) != 0; };
    std::size_t b = 0;
    std::size_t e = out.size();
    while (b < e && (is_punct(out[b]) || is_space(out[b]))) ++b;
    while (e > b && (is_punct(out[e - 1]) || is_space(out[e - 1]))) --e;
    return out.substr(b, e - b);
}

std::optional<std::size_t> find_case_insensitive(std::string_view haystack,
                                                 std::string_view needle) {
    if (needle.empty() || needle.size() > haystack.size()) return std::nullopt;
    for (std::size_t i = 0; i + needle.size() <= haystack.size(); ++i) {
        std::size_t j = 0;
        while (j < needle.size() && lower(haystack[i + j]) == lower(needle[j])) ++j;
        if (j == needle.size()) return i;
    }
    return std::nullopt;
}

std::optional<std::size_t> find_whole_words(std::string_view haystack, std::string_view phrase) {
    const std::string needle = collapse_whitespace(phrase);
    if (needle.empty()) return std::nullopt;
    for (std::size_t start = 0; start < haystack.size(); ++start) {
        if (start > 0 && is_word_char(haystack[start - 1]) && is_word_char(needle.front())) {
            continue;
        }
        std::size_t h = start;
        std::size_t n = 0;
        bool ok = true;
        while (n < needle.size()) {
            if (needle[n] == ' ') {
                if (h >= haystack.size() || !is_space(haystack[h])) {
                    ok = false;
                    break;
                }
                while (h < haystack.size() && is_space(haystack[h])) ++h;
                ++n;
                continue;
            }
            if (h >= haystack.size() || lower(haystack[h]) != lower(needle[n])) {
                ok = false;
                break;
            }
            ++h;
            ++n;
        }
        if (!ok) continue;
        if (h < haystack.size() && is_word_char(haystack[h]) && is_word_char(needle.back())) {
            continue;
        }
        return start;
    }
    return std::nullopt;
}

std::vector<std::string> split_lines(std::string_view text) {
    std::vector<std::string> lines;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        auto nl = text.find('\n', pos);
        if (nl == std::string_view::npos) nl = text.size();
        std::string line(text.substr(pos, nl - pos));
        if (!line.empty() && line.back() == '\r') line.pop_back();
        lines.push_back(std::move(line));
        if (nl == text.size()) break;
        pos = nl + 1;
    }
    return lines;
}

std::string join(const std::vector<std::string>& parts, std::string_view sep) {
    std::string out;
    for (std::size_t i = 0; i < parts.size(); ++i) {
        if (i) out += sep;
        out += parts[i];
    }
    return out;
}

}  // namespace qualnet
