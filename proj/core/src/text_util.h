// Small ASCII-oriented string helpers shared by the rule tables. Not part of
// the installed interface.
#ifndef HIER_SRC_TEXT_UTIL_H_
#define HIER_SRC_TEXT_UTIL_H_

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace hier::text {

std::string to_lower(std::string_view s);
std::string_view trim(std::string_view s);
std::vector<std::string> split_whitespace(std::string_view s);

// Lowercases, collapses whitespace runs to one space, and drops leading and
// trailing whitespace and sentence punctuation.
std::string normalize(std::string_view s);

// Word-bounded search of `phrase` in `haystack` (both expected lowercase).
// Returns npos when absent.
std::size_t find_phrase(std::string_view haystack, std::string_view phrase,
                        std::size_t from = 0);
inline bool contains_phrase(std::string_view haystack, std::string_view phrase) {
  return find_phrase(haystack, phrase) != std::string_view::npos;
}
bool starts_with_phrase(std::string_view haystack, std::string_view phrase);

bool is_word_char(char c);

// Decodes UTF-8 leniently; invalid bytes are returned as U+FFFD.
std::vector<char32_t> decode_utf8(std::string_view s);

// Parses a small non-negative count written as digits or an English word
// ("zero".."twenty"). Returns -1 if unrecognized.
int parse_count(std::string_view token);

}  // namespace hier::text

#endif  // HIER_SRC_TEXT_UTIL_H_
