#pragma once

// Small ASCII-oriented string helpers. Non-ASCII bytes pass through
// untouched, which keeps UTF-8 input intact.

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace qualnet {

std::string trim(std::string_view s);
std::string to_lower(std::string_view s);
std::string collapse_whitespace(std::string_view s);

// Lowercase, collapse whitespace, strip leading/trailing punctuation.
std::string normalize_for_match(std::string_view s);

// Position of the first case-insensitive occurrence of `needle`.
std::optional<std::size_t> find_case_insensitive(std::string_view haystack,
                                                 std::string_view needle);

// Position of the first case-insensitive occurrence of `phrase` that is
// bounded by non-word characters (or the string edges) on both sides.
// Internal whitespace in `phrase` matches any run of whitespace.
std::optional<std::size_t> find_whole_words(std::string_view haystack, std::string_view phrase);

std::vector<std::string> split_lines(std::string_view text);
std::string join(const std::vector<std::string>& parts, std::string_view sep);

bool is_word_char(char c);

}  // namespace qualnet
