// Pattern-table contradiction detector. Each text is reduced to a set of
// "facets" (format/language requirements, count bounds, negated and positive
// verb phrases, task heads) and two texts contradict iff some pair of facets
// is mutually exclusive.

#include <algorithm>
#include <array>
#include <cctype>
#include <limits>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "hier/conflict_scan.h"
#include "text_util.h"

namespace hier {
namespace {

using Tokens = std::vector<std::string>;

constexpr int kUnbounded = std::numeric_limits<int>::max();

struct CountBound {
  std::string unit;
  int lo = 0;
  int hi = kUnbounded;
};

struct Facets {
  std::set<std::string> formats_required;
  std::set<std::string> formats_forbidden;
  std::set<std::string> languages_required;
  std::set<std::string> languages_forbidden;
  std::vector<CountBound> bounds;
  std::set<std::string> negated_phrases;
  std::set<std::string> positive_phrases;
  std::set<std::string> task_heads;
};

bool is_one_of(std::string_view w, std::initializer_list<std::string_view> set) {
  return std::find(set.begin(), set.end(), w) != set.end();
}

bool is_negator(std::string_view w) {
  return is_one_of(w, {"not", "no", "never", "without", "don't", "avoid",
                       "neither", "nor", "shouldn't", "mustn't", "cannot",
                       "can't", "won't"});
}

bool is_article(std::string_view w) { return is_one_of(w, {"a", "an", "the"}); }

// Splits lowercase text into clauses of word tokens. Clause boundaries are
// sentence punctuation, commas, semicolons, colons and the word "but".
std::vector<Tokens> clauses_of(std::string_view lower) {
  std::vector<Tokens> clauses(1);
  std::string word;
  auto end_word = [&] {
    if (word.empty()) return;
    if (word == "but") {
      if (!clauses.back().empty()) clauses.emplace_back();
    } else {
      clauses.back().push_back(word);
    }
    word.clear();
  };
  for (std::size_t i = 0; i < lower.size(); ++i) {
    const char c = lower[i];
    const auto u = static_cast<unsigned char>(c);
    const bool inner_apostrophe = c == '\'' && !word.empty() &&
                                  i + 1 < lower.size() &&
                                  std::isalpha(static_cast<unsigned char>(lower[i + 1]));
    const bool inner_hyphen = c == '-' && !word.empty() && i + 1 < lower.size() &&
                              std::isalnum(static_cast<unsigned char>(lower[i + 1]));
    if (std::isalnum(u) || u >= 0x80 || inner_apostrophe || inner_hyphen) {
      word.push_back(c);
      continue;
    }
    end_word();
    if (c == '.' || c == ',' || c == ';' || c == ':' || c == '!' || c == '?' ||
        c == '\n') {
      if (!clauses.back().empty()) clauses.emplace_back();
    }
  }
  end_word();
  if (clauses.back().empty()) clauses.pop_back();
  return clauses;
}

// Sentences (not clauses) as token lists, used for task-head detection.
std::vector<Tokens> sentences_of(std::string_view lower) {
  std::vector<Tokens> out;
  std::size_t begin = 0;
  for (std::size_t i = 0; i <= lower.size(); ++i) {
    if (i < lower.size() && !is_one_of(lower.substr(i, 1), {".", "!", "?", "\n"})) {
      continue;
    }
    Tokens merged;
    for (const Tokens& c : clauses_of(lower.substr(begin, i - begin))) {
      merged.insert(merged.end(), c.begin(), c.end());
    }
    if (!merged.empty()) out.push_back(std::move(merged));
    begin = i + 1;
  }
  return out;
}

bool clause_has_negator(const Tokens& clause) {
  return std::any_of(clause.begin(), clause.end(),
                     [](const std::string& w) { return is_negator(w); });
}

bool clause_has_directive_cue(const Tokens& clause) {
  return std::any_of(clause.begin(), clause.end(), [](const std::string& w) {
    return is_one_of(w, {"respond", "response", "responses", "answer", "answers",
                         "reply", "replies", "output", "outputs", "write",
                         "use", "put", "format", "formatted", "produce",
                         "return", "provide", "give", "only", "must", "should",
                         "always", "please", "print", "translate", "speak",
                         "communicate", "generate", "present"});
  });
}

// Canonical format name for the token at i (may consume i+1), or "".
std::string format_at(const Tokens& t, std::size_t i, std::size_t* width) {
  *width = 1;
  const std::string& w = t[i];
  if (w == "json") return "json";
  if (w == "markdown") return "markdown";
  if (w == "xml") return "xml";
  if (w == "yaml") return "yaml";
  if (w == "csv") return "csv";
  if (w == "plaintext" || w == "plain-text") return "plain_text";
  if (w == "plain" && i + 1 < t.size() && t[i + 1] == "text") {
    *width = 2;
    return "plain_text";
  }
  return "";
}

void extract_formats(const Tokens& clause, Facets& f) {
  const bool negated = clause_has_negator(clause);
  for (std::size_t i = 0; i < clause.size(); ++i) {
    std::size_t width = 1;
    const std::string fmt = format_at(clause, i, &width);
    if (fmt.empty()) continue;
    if (negated) {
      f.formats_forbidden.insert(fmt);
      continue;
    }
    // "in (a) JSON (format)", "as JSON", "JSON format", "JSON only", "only JSON"
    bool framed = false;
    std::size_t j = i;
    while (j > 0 && is_one_of(clause[j - 1], {"a", "an", "the", "valid", "strict",
                                              "proper", "pure", "only"})) {
      if (clause[j - 1] == "only") framed = true;
      --j;
    }
    if (j > 0 && is_one_of(clause[j - 1], {"in", "as", "into", "using", "use",
                                           "with", "return", "output"})) {
      framed = true;
    }
    const std::size_t after = i + width;
    if (after < clause.size() &&
        is_one_of(clause[after], {"format", "formatted", "only", "output",
                                  "response", "object", "syntax"})) {
      framed = true;
    }
    if (framed && clause_has_directive_cue(clause)) f.formats_required.insert(fmt);
    i = after - 1;
  }
}

std::string language_of(std::string_view w) {
  if (w == "english") return "english";
  if (w == "chinese" || w == "mandarin") return "chinese";
  if (w == "spanish") return "spanish";
  return "";
}

void extract_languages(const Tokens& clause, Facets& f) {
  const bool negated = clause_has_negator(clause);
  for (std::size_t i = 0; i < clause.size(); ++i) {
    const std::string lang = language_of(clause[i]);
    if (lang.empty()) continue;
    if (negated) {
      f.languages_forbidden.insert(lang);
    } else if (i > 0 && is_one_of(clause[i - 1], {"in", "into"}) &&
               clause_has_directive_cue(clause)) {
      f.languages_required.insert(lang);
    }
  }
}

std::string unit_of(std::string_view w) {
  constexpr std::array<std::pair<std::string_view, std::string_view>, 16> kUnits = {{
      {"comma", "comma"},         {"commas", "comma"},
      {"word", "word"},           {"words", "word"},
      {"sentence", "sentence"},   {"sentences", "sentence"},
      {"section", "section"},     {"sections", "section"},
      {"paragraph", "paragraph"}, {"paragraphs", "paragraph"},
      {"bullet", "bullet"},       {"bullets", "bullet"},
      {"line", "line"},           {"lines", "line"},
      {"character", "character"}, {"characters", "character"},
  }};
  for (const auto& [k, v] : kUnits) {
    if (w == k) return std::string(v);
  }
  return "";
}

// Finds a unit word within a few tokens after position `from`.
std::string unit_after(const Tokens& t, std::size_t from, std::size_t window = 3) {
  for (std::size_t k = from; k < t.size() && k < from + window; ++k) {
    std::string u = unit_of(t[k]);
    if (!u.empty()) return u;
  }
  return "";
}

void extract_bounds(const Tokens& c, Facets& f) {
  std::set<std::string> bounded_units;
  auto add = [&](const std::string& unit, int lo, int hi) {
    if (unit.empty() || lo > hi) return;
    f.bounds.push_back({unit, lo, hi});
    bounded_units.insert(unit);
  };
  for (std::size_t i = 0; i < c.size(); ++i) {
    auto number_at = [&](std::size_t k) {
      return k < c.size() ? text::parse_count(c[k]) : -1;
    };
    auto match2 = [&](std::string_view a, std::string_view b) {
      return i + 1 < c.size() && c[i] == a && c[i + 1] == b;
    };
    auto match3 = [&](std::string_view a, std::string_view b, std::string_view d) {
      return i + 2 < c.size() && c[i] == a && c[i + 1] == b && c[i + 2] == d;
    };
    int n = -1;
    if (match2("at", "least") && (n = number_at(i + 2)) >= 0) {
      add(unit_after(c, i + 3), n, kUnbounded);
    } else if (match2("at", "most") && (n = number_at(i + 2)) >= 0) {
      add(unit_after(c, i + 3), 0, n);
    } else if ((match3("no", "more", "than") || match3("not", "more", "than")) &&
               (n = number_at(i + 3)) >= 0) {
      add(unit_after(c, i + 4), 0, n);
      i += 3;
    } else if ((match2("fewer", "than") || match2("less", "than")) &&
               (n = number_at(i + 2)) >= 0) {
      add(unit_after(c, i + 3), 0, n - 1);
    } else if (match2("more", "than") && (n = number_at(i + 2)) >= 0) {
      add(unit_after(c, i + 3), n + 1, kUnbounded);
    } else if (match2("up", "to") && (n = number_at(i + 2)) >= 0) {
      add(unit_after(c, i + 3), 0, n);
    } else if (c[i] == "exactly" && (n = number_at(i + 1)) >= 0) {
      add(unit_after(c, i + 2), n, n);
    } else if (c[i] == "zero") {
      add(unit_after(c, i + 1, 2), 0, 0);
    }
  }
  // "no commas", "not contain any commas", "without commas", "avoid commas".
  for (std::size_t i = 0; i < c.size(); ++i) {
    if (!is_negator(c[i])) continue;
    for (std::size_t k = i + 1; k < c.size() && k <= i + 4; ++k) {
      if (text::parse_count(c[k]) >= 0) break;
      const std::string u = unit_of(c[k]);
      if (u.empty()) continue;
      if (!bounded_units.contains(u)) add(u, 0, 0);
      break;
    }
  }
}

std::string join_content_words(const Tokens& t, std::size_t from) {
  std::string out;
  for (std::size_t k = from; k < t.size(); ++k) {
    if (is_article(t[k])) continue;
    if (!out.empty()) out.push_back(' ');
    out += t[k];
  }
  return out;
}

void extract_polarity(const Tokens& c, Facets& f) {
  for (std::size_t i = 0; i < c.size(); ++i) {
    std::size_t vp = 0;
    if (i + 1 < c.size() && c[i] == "do" && c[i + 1] == "not") {
      vp = i + 2;
    } else if (i + 1 < c.size() && is_one_of(c[i], {"must", "should"}) &&
               c[i + 1] == "not") {
      vp = i + 2;
    } else if (is_one_of(c[i], {"don't", "never", "avoid", "mustn't", "shouldn't"})) {
      vp = i + 1;
    } else {
      continue;
    }
    if (vp < c.size() && c[vp] == "ever") ++vp;
    const std::string phrase = join_content_words(c, vp);
    if (!phrase.empty()) f.negated_phrases.insert(phrase);
    return;
  }
  std::size_t start = 0;
  while (start < c.size() &&
         is_one_of(c[start], {"please", "you", "must", "should", "always",
                              "kindly", "also", "will", "to", "need"})) {
    ++start;
  }
  const std::string phrase = join_content_words(c, start);
  if (!phrase.empty()) f.positive_phrases.insert(phrase);
}

std::string task_head_from(const Tokens& s, std::size_t verb_at) {
  if (verb_at >= s.size()) return "";
  std::string verb = s[verb_at];
  if (verb == "summarise") verb = "summarize";
  if (is_one_of(verb, {"write", "compose", "produce", "generate", "give",
                       "provide", "create"})) {
    for (std::size_t k = verb_at + 1; k < s.size() && k <= verb_at + 3; ++k) {
      if (s[k] == "summary") return "summarize";
      if (s[k] == "translation") return "translate";
    }
  }
  return verb;
}

void extract_task_heads(std::string_view lower, Facets& f) {
  for (const Tokens& s : sentences_of(lower)) {
    bool found = false;
    for (std::size_t i = 0; i + 3 < s.size(); ++i) {
      if (s[i] == "your" && s[i + 1] == "task" && s[i + 2] == "is") {
        const std::size_t v = s[i + 3] == "to" ? i + 4 : i + 3;
        const std::string head = task_head_from(s, v);
        if (!head.empty()) f.task_heads.insert(head);
        found = true;
        break;
      }
    }
    if (found || s.empty()) continue;
    std::size_t v = s[0] == "please" ? 1 : 0;
    if (v < s.size() &&
        is_one_of(s[v], {"detect", "summarize", "summarise", "translate",
                         "classify", "extract", "write", "compose", "identify"})) {
      f.task_heads.insert(task_head_from(s, v));
    }
  }
}

Facets facets_of(std::string_view raw) {
  const std::string lower = text::to_lower(raw);
  Facets f;
  for (const Tokens& clause : clauses_of(lower)) {
    extract_formats(clause, f);
    extract_languages(clause, f);
    extract_bounds(clause, f);
    extract_polarity(clause, f);
  }
  extract_task_heads(lower, f);
  return f;
}

bool intersects(const std::set<std::string>& a, const std::set<std::string>& b) {
  return std::any_of(a.begin(), a.end(),
                     [&](const std::string& x) { return b.contains(x); });
}

// Requirement sets clash if one forbids what the other requires, or both
// require something and share nothing (the alternatives are exclusive).
bool exclusive(const std::set<std::string>& req_a, const std::set<std::string>& forb_a,
               const std::set<std::string>& req_b, const std::set<std::string>& forb_b) {
  if (intersects(req_a, forb_b) || intersects(req_b, forb_a)) return true;
  return !req_a.empty() && !req_b.empty() && !intersects(req_a, req_b);
}

bool contradicts(const Facets& a, const Facets& b) {
  if (exclusive(a.formats_required, a.formats_forbidden, b.formats_required,
                b.formats_forbidden)) {
    return true;
  }
  if (exclusive(a.languages_required, a.languages_forbidden,
                b.languages_required, b.languages_forbidden)) {
    return true;
  }
  for (const CountBound& x : a.bounds) {
    for (const CountBound& y : b.bounds) {
      if (x.unit == y.unit && (x.hi < y.lo || y.hi < x.lo)) return true;
    }
  }
  if (intersects(a.negated_phrases, b.positive_phrases) ||
      intersects(b.negated_phrases, a.positive_phrases)) {
    return true;
  }
  return !a.task_heads.empty() && !b.task_heads.empty() &&
         !intersects(a.task_heads, b.task_heads);
}

}  // namespace

std::string_view relation_name(Relation r) {
  switch (r) {
    case Relation::kEntailment: return "entailment";
    case Relation::kNeutral: return "neutral";
    case Relation::kContradiction: return "contradiction";
  }
  return "neutral";
}

std::optional<Relation> parse_relation(std::string_view name) {
  const std::string lower = text::to_lower(name);
  if (lower == "entailment") return Relation::kEntailment;
  if (lower == "neutral") return Relation::kNeutral;
  if (lower == "contradiction") return Relation::kContradiction;
  return std::nullopt;
}

Relation rule_based_detect(std::string_view premise, std::string_view hypothesis) {
  const std::string a = text::normalize(premise);
  const std::string b = text::normalize(hypothesis);
  if (a == b) return Relation::kEntailment;
  if (contradicts(facets_of(premise), facets_of(hypothesis))) {
    return Relation::kContradiction;
  }
  return Relation::kNeutral;
}

}  // namespace hier
