#include "text_util.h"

#include <array>
#include <cctype>
#include <charconv>

namespace hier::text {

std::string to_lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) {
    c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  }
  return out;
}

std::string_view trim(std::string_view s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

std::vector<std::string> split_whitespace(std::string_view s) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
    std::size_t j = i;
    while (j < s.size() && !std::isspace(static_cast<unsigned char>(s[j]))) ++j;
    if (j > i) out.emplace_back(s.substr(i, j - i));
    i = j;
  }
  return out;
}

std::string normalize(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  bool pending_space = false;
  for (char c : s) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out.push_back(' ');
    pending_space = false;
    out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  }
  auto is_trailing = [](char c) {
    return c == '.' || c == '!' || c == '?' || c == ';' || c == ',' ||
           c == ':' || c == ' ';
  };
  while (!out.empty() && is_trailing(out.back())) out.pop_back();
  return out;
}

bool is_word_char(char c) {
  const auto u = static_cast<unsigned char>(c);
  return std::isalnum(u) || c == '_' || c == '\'' || u >= 0x80;
}

std::size_t find_phrase(std::string_view haystack, std::string_view phrase,
                        std::size_t from) {
  if (phrase.empty()) return std::string_view::npos;
  std::size_t pos = haystack.find(phrase, from);
  while (pos != std::string_view::npos) {
    const bool left_ok = pos == 0 || !is_word_char(haystack[pos - 1]);
    const std::size_t end = pos + phrase.size();
    const bool right_ok = end >= haystack.size() || !is_word_char(haystack[end]);
    if (left_ok && right_ok) return pos;
    pos = haystack.find(phrase, pos + 1);
  }
  return std::string_view::npos;
}

bool starts_with_phrase(std::string_view haystack, std::string_view phrase) {
  if (!haystack.starts_with(phrase)) return false;
  return haystack.size() == phrase.size() ||
         !is_word_char(haystack[phrase.size()]);
}

std::vector<char32_t> decode_utf8(std::string_view s) {
  std::vector<char32_t> out;
  out.reserve(s.size());
  std::size_t i = 0;
  while (i < s.size()) {
    const auto b0 = static_cast<unsigned char>(s[i]);
    int len = 0;
    char32_t cp = 0;
    if (b0 < 0x80) {
      len = 1;
      cp = b0;
    } else if ((b0 & 0xE0) == 0xC0) {
      len = 2;
      cp = b0 & 0x1F;
    } else if ((b0 & 0xF0) == 0xE0) {
      len = 3;
      cp = b0 & 0x0F;
    } else if ((b0 & 0xF8) == 0xF0) {
      len = 4;
      cp = b0 & 0x07;
    }
    bool ok = len > 0 && i + len <= s.size();
    for (int k = 1; ok && k < len; ++k) {
      const auto b = static_cast<unsigned char>(s[i + k]);
      if ((b & 0xC0) != 0x80) ok = false;
      cp = (cp << 6) | (b & 0x3F);
    }
    if (!ok) {
      out.push_back(0xFFFD);
      ++i;
      continue;
    }
    out.push_back(cp);
    i += len;
  }
  return out;
}

int parse_count(std::string_view token) {
  static constexpr std::array<std::string_view, 21> kWords = {
      "zero",    "one",     "two",       "three",    "four",     "five",
      "six",     "seven",   "eight",     "nine",     "ten",      "eleven",
      "twelve",  "thirteen", "fourteen", "fifteen",  "sixteen",  "seventeen",
      "eighteen", "nineteen", "twenty"};
  for (std::size_t i = 0; i < kWords.size(); ++i) {
    if (token == kWords[i]) return static_cast<int>(i);
  }
  int value = 0;
  auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
  if (ec != std::errc() || ptr != token.data() + token.size() || value < 0) {
    return -1;
  }
  return value;
}

}  // namespace hier::text
