#ifndef HIER_VERIFIER_H_
#define HIER_VERIFIER_H_

#include <memory>
#include <optional>
#include <regex>
#include <string>
#include <string_view>
#include <vector>

#include "hier/context.h"
#include "hier/solver.h"

namespace hier {

enum class ConstraintKind {
  kNoCommas,
  kMinCommas,            // count
  kIsJson,               // output parses as JSON
  kIsJsonWithKey,        // arg = key
  kIsJsonOnlyKey,        // arg = key, no other top-level keys
  kExactWordCount,       // count
  kMinMarkdownSections,  // count
  kLanguageIs,           // arg in {english, chinese, spanish}
  kContainsPhrase,       // arg
  kNotContainsPhrase,    // arg
};

std::string_view constraint_kind_name(ConstraintKind kind);
std::optional<ConstraintKind> parse_constraint_kind(std::string_view name);

struct Constraint {
  ConstraintKind kind = ConstraintKind::kNoCommas;
  int count = 0;
  std::string arg;
  int source_instruction_id = -1;

  friend bool operator==(const Constraint&, const Constraint&) = default;
};

// Human-readable form, e.g. MinCommas(3) or IsJsonWithKey("language").
std::string describe(const Constraint& c);

// One user-supplied compilation rule. `pattern` is searched per sentence,
// case-insensitively. When it has a first capture group that matched, the
// group supplies the count (for count kinds) or the argument (for argument
// kinds); otherwise the fixed `count` / `arg` are used.
struct CompileRule {
  std::string pattern;
  ConstraintKind kind = ConstraintKind::kNoCommas;
  int count = 0;
  std::string arg;
};

// Additions to the built-in pattern table, compiled once.
class ConstraintTable {
 public:
  // Throws Error(kInvalidArgument) on a malformed pattern.
  void add(CompileRule rule);
  bool empty() const { return rules_.empty(); }
  const std::vector<CompileRule>& rules() const { return rules_; }

  // Constraints the added rules extract from one sentence.
  std::vector<Constraint> match(const std::string& sentence, int source_id) const;

 private:
  std::vector<CompileRule> rules_;
  std::vector<std::regex> compiled_;
};

// Compiles the checkable directives in an instruction. One atom may carry
// several (merged sentences); an empty result means the instruction is not
// compilable and is tracked but unverifiable. `extra` extends the built-in
// table.
std::vector<Constraint> compile_constraints(const AtomicInstruction& instruction,
                                            const ConstraintTable* extra = nullptr);

bool check(std::string_view output, const Constraint& constraint);

// Heuristic language guess: "chinese", "english", "spanish" or "" when the
// text gives no clear signal.
std::string detect_language(std::string_view text);

struct ConstraintResult {
  Constraint constraint;
  bool pass = false;
};

struct ComplianceReport {
  std::vector<ConstraintResult> per_constraint;
  bool all_pass = true;
  bool system_compliant = true;  // over constraints from level-0 sources
  bool user_compliant = true;    // over constraints from level-1 sources
  bool refusal = false;
  // Neither side fully satisfied, but at least one constraint passed on each.
  bool hybrid = false;
};

bool is_refusal(std::string_view output);

// Compiles every selected instruction and checks `output` against the lot.
// Rejected instructions never contribute constraints.
ComplianceReport evaluate(std::string_view output, const Resolution& resolution,
                          const std::vector<AtomicInstruction>& atoms,
                          const ConstraintTable* extra = nullptr);

}  // namespace hier

#endif  // HIER_VERIFIER_H_
