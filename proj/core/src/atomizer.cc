#include "hier/atomizer.h"

#include <cctype>
#include <string>

#include <nlohmann/json.hpp>

#include "hier/errors.h"
#include "text_util.h"

namespace hier {
namespace {

AtomizerRules make_default_rules() {
  AtomizerRules rules;
  rules.version = "atomizer-rules/v1";
  constexpr std::string_view kLeading[] = {
      "respond",  "write",     "include",   "avoid",    "please",
      "do not",   "don't",     "never",     "always",   "answer",
      "reply",    "compose",   "describe",  "detect",   "explain",
      "list",     "provide",   "summarize", "summarise", "translate",
      "use",      "keep",      "make",      "give",     "generate",
      "output",   "return",    "ignore",    "only",     "put",
      "create",   "format",    "highlight", "tell",     "be",
      "ensure",   "focus",     "limit",     "state",    "identify",
      "classify", "extract",   "mention",   "refuse",   "add",
      "do",       "remember",  "stop",      "start",    "begin",
      "end",      "wrap",      "show",      "print",    "draft",
  };
  constexpr std::string_view kAnywhere[] = {
      "must",         "should",     "do not",          "don't",
      "never",        "always",     "please",          "your task is",
      "make sure",    "ought to",   "you are required to",
  };
  for (std::string_view p : kLeading) {
    rules.imperative_markers.push_back({std::string(p), MarkerAnchor::kSentenceStart});
  }
  for (std::string_view p : kAnywhere) {
    rules.imperative_markers.push_back({std::string(p), MarkerAnchor::kAnywhere});
  }
  return rules;
}

bool is_delimiter(char c, const AtomizerRules& rules) {
  return rules.sentence_delimiters.find(c) != std::string::npos;
}

bool is_closer(char c) {
  return c == '"' || c == '\'' || c == ')' || c == ']' || c == '}' || c == '*';
}

void flush_unit(std::string_view content, std::size_t begin, std::size_t end,
                std::vector<std::string>& out) {
  std::string_view unit = text::trim(content.substr(begin, end - begin));
  if (!unit.empty()) out.emplace_back(unit);
}

}  // namespace

const AtomizerRules& default_atomizer_rules() {
  static const AtomizerRules rules = make_default_rules();
  return rules;
}

void validate(const AtomizerRules& rules) {
  if (rules.imperative_markers.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "imperative marker list is empty");
  }
  for (const ImperativeMarker& m : rules.imperative_markers) {
    if (text::trim(m.phrase).empty()) {
      throw Error(ErrorCode::kInvalidArgument, "blank imperative marker");
    }
  }
  if (rules.sentence_delimiters.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "no sentence delimiters");
  }
}

std::vector<std::string> split_sentences(std::string_view content,
                                         const AtomizerRules& rules) {
  std::vector<std::string> units;
  std::size_t begin = 0;
  std::size_t i = 0;
  while (i < content.size()) {
    const char c = content[i];
    if (!is_delimiter(c, rules)) {
      ++i;
      continue;
    }
    if (c == '\n') {
      flush_unit(content, begin, i, units);
      begin = ++i;
      continue;
    }
    // Absorb runs like "?!" or "..." and trailing closing quotes/brackets.
    std::size_t end = i + 1;
    while (end < content.size() && is_delimiter(content[end], rules) &&
           content[end] != '\n') {
      ++end;
    }
    while (end < content.size() && is_closer(content[end])) ++end;
    const bool boundary =
        end >= content.size() ||
        std::isspace(static_cast<unsigned char>(content[end]));
    if (boundary) {
      flush_unit(content, begin, end, units);
      begin = end;
    }
    i = end;
  }
  flush_unit(content, begin, content.size(), units);
  return units;
}

InstructionKind classify_kind(std::string_view sentence,
                              const AtomizerRules& rules) {
  std::string lower = text::to_lower(text::trim(sentence));
  // Leading bullets, numbering and quotes do not count as the first word.
  std::size_t lead = 0;
  while (lead < lower.size() &&
         !std::isalpha(static_cast<unsigned char>(lower[lead]))) {
    ++lead;
  }
  std::string_view body = std::string_view(lower).substr(lead);
  for (const ImperativeMarker& m : rules.imperative_markers) {
    const bool hit = m.anchor == MarkerAnchor::kSentenceStart
                         ? text::starts_with_phrase(body, m.phrase)
                         : text::contains_phrase(body, m.phrase);
    if (hit) return InstructionKind::kImperative;
  }
  return InstructionKind::kDeclarative;
}

bool is_structured_payload(std::string_view content) {
  std::string_view t = text::trim(content);
  if (t.empty()) return false;
  if (t.front() == '{' || t.front() == '[') {
    return nlohmann::json::accept(t);
  }
  return t.front() == '<' && t.back() == '>' && t.size() >= 3 &&
         (std::isalpha(static_cast<unsigned char>(t[1])) || t[1] == '?');
}

std::vector<AtomicInstruction> atomize(const Context& context,
                                       const AtomizerRules& rules,
                                       const HierarchyConfig& config) {
  validate(rules);
  validate(config);
  std::vector<AtomicInstruction> atoms;
  int previous_turn = -1;
  for (const Message& msg : context.messages) {
    if (msg.turn_index <= previous_turn) {
      throw Error(ErrorCode::kInvalidArgument,
                  "turn indices must be strictly increasing");
    }
    previous_turn = msg.turn_index;
    if (msg.role == Role::kAssistant && rules.skip_assistant) continue;

    const AuthorityLevel level = authority_of(msg.role);
    if (level.value > config.depth) {
      throw Error(ErrorCode::kInvalidArgument,
                  "role " + std::string(role_name(msg.role)) +
                      " maps above the configured hierarchy depth");
    }
    auto emit = [&](std::string content, InstructionKind kind) {
      if (atoms.size() >= config.max_instructions) {
        throw Error(ErrorCode::kCapExceeded,
                    "atomization exceeds the cap of " +
                        std::to_string(config.max_instructions) + " instructions");
      }
      AtomicInstruction atom;
      atom.id = static_cast<int>(atoms.size());
      atom.content = std::move(content);
      atom.authority = level;
      atom.source_role = msg.role;
      atom.source_turn = msg.turn_index;
      atom.kind = kind;
      atoms.push_back(std::move(atom));
    };

    if (msg.role == Role::kTool && is_structured_payload(msg.content)) {
      emit(std::string(text::trim(msg.content)), InstructionKind::kDeclarative);
      continue;
    }

    const std::size_t first_of_message = atoms.size();
    for (std::string& unit : split_sentences(msg.content, rules)) {
      const InstructionKind kind = classify_kind(unit, rules);
      if (rules.merge_adjacent && atoms.size() > first_of_message &&
          atoms.back().kind == kind) {
        atoms.back().content += ' ';
        atoms.back().content += unit;
        continue;
      }
      emit(std::move(unit), kind);
    }
  }
  return atoms;
}

}  // namespace hier
