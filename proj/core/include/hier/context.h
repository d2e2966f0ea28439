#ifndef HIER_CONTEXT_H_
#define HIER_CONTEXT_H_

#include <compare>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace hier {

enum class Role { kSystem, kUser, kAssistant, kTool };

inline constexpr Role kAllRoles[] = {Role::kSystem, Role::kUser,
                                     Role::kAssistant, Role::kTool};

// Lowercase wire name ("system", "user", ...).
std::string_view role_name(Role role);
// Case-insensitive inverse of role_name.
std::optional<Role> parse_role(std::string_view name);

// Discrete authority rank. A lower value means higher authority:
// 0 = system, 1 = user, 2 = tool / document / history.
struct AuthorityLevel {
  int value = 0;

  friend constexpr auto operator<=>(AuthorityLevel, AuthorityLevel) = default;
};

AuthorityLevel authority_of(Role role);

// True iff `a` strictly outranks `b`.
constexpr bool dominates(AuthorityLevel a, AuthorityLevel b) {
  return a.value < b.value;
}

struct Message {
  Role role = Role::kUser;
  std::string content;
  int turn_index = 0;
};

// Messages in ingestion order. Turn indices are strictly increasing.
struct Context {
  std::vector<Message> messages;
};

enum class InstructionKind { kImperative, kDeclarative };

std::string_view kind_name(InstructionKind kind);
std::optional<InstructionKind> parse_kind(std::string_view name);

struct AtomicInstruction {
  int id = 0;
  std::string content;
  AuthorityLevel authority;
  Role source_role = Role::kUser;
  int source_turn = 0;
  InstructionKind kind = InstructionKind::kImperative;
};

enum class TieBreak { kLowestIndexFirst };

struct HierarchyConfig {
  // Hierarchy depth K: levels run 0..depth.
  int depth = 2;
  TieBreak tie_break = TieBreak::kLowestIndexFirst;
  std::size_t max_instructions = 512;
};

// Throws Error(kInvalidArgument) when the config itself is malformed.
void validate(const HierarchyConfig& config);

// Checks the structural invariants of an atom list: contiguous ids, non-blank
// content, authority levels within [0, depth].
void validate_atoms(const std::vector<AtomicInstruction>& atoms,
                    const HierarchyConfig& config);

// Human label used in rendered output, e.g. "system" for level 0.
std::string level_label(AuthorityLevel level);

}  // namespace hier

#endif  // HIER_CONTEXT_H_
