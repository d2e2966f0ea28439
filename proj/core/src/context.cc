#include "hier/context.h"

#include <algorithm>
#include <cctype>
#include <string>

#include "hier/errors.h"
#include "text_util.h"

namespace hier {

std::string_view error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kParseError: return "ParseError";
    case ErrorCode::kCapExceeded: return "CapExceeded";
    case ErrorCode::kBackendUnavailable: return "BackendUnavailable";
    case ErrorCode::kMalformedResponse: return "MalformedResponse";
    case ErrorCode::kMatrixShapeMismatch: return "MatrixShapeMismatch";
    case ErrorCode::kInvalidConflictMatrix: return "InvalidConflictMatrix";
    case ErrorCode::kTooLarge: return "TooLarge";
    case ErrorCode::kBaseTooSmall: return "BaseTooSmall";
    case ErrorCode::kInconsistentResolution: return "InconsistentResolution";
    case ErrorCode::kDegenerateReference: return "DegenerateReference";
  }
  return "Unknown";
}

std::string_view role_name(Role role) {
  switch (role) {
    case Role::kSystem: return "system";
    case Role::kUser: return "user";
    case Role::kAssistant: return "assistant";
    case Role::kTool: return "tool";
  }
  return "user";
}

std::optional<Role> parse_role(std::string_view name) {
  const std::string lower = text::to_lower(name);
  for (Role r : kAllRoles) {
    if (lower == role_name(r)) return r;
  }
  return std::nullopt;
}

AuthorityLevel authority_of(Role role) {
  switch (role) {
    case Role::kSystem: return AuthorityLevel{0};
    case Role::kUser: return AuthorityLevel{1};
    // Assistant turns are conversation history and share the lowest tier.
    case Role::kAssistant:
    case Role::kTool: return AuthorityLevel{2};
  }
  return AuthorityLevel{2};
}

std::string_view kind_name(InstructionKind kind) {
  return kind == InstructionKind::kImperative ? "imperative" : "declarative";
}

std::optional<InstructionKind> parse_kind(std::string_view name) {
  const std::string lower = text::to_lower(name);
  if (lower == "imperative") return InstructionKind::kImperative;
  if (lower == "declarative") return InstructionKind::kDeclarative;
  return std::nullopt;
}

void validate(const HierarchyConfig& config) {
  if (config.depth < 0) {
    throw Error(ErrorCode::kInvalidArgument, "hierarchy depth must be >= 0");
  }
  if (config.max_instructions == 0) {
    throw Error(ErrorCode::kInvalidArgument, "max_instructions must be >= 1");
  }
}

void validate_atoms(const std::vector<AtomicInstruction>& atoms,
                    const HierarchyConfig& config) {
  validate(config);
  if (atoms.size() > config.max_instructions) {
    throw Error(ErrorCode::kCapExceeded,
                std::to_string(atoms.size()) + " instructions exceed the cap of " +
                    std::to_string(config.max_instructions));
  }
  for (std::size_t i = 0; i < atoms.size(); ++i) {
    const AtomicInstruction& a = atoms[i];
    if (a.id != static_cast<int>(i)) {
      throw Error(ErrorCode::kInvalidArgument,
                  "instruction ids must be contiguous from 0; found id " +
                      std::to_string(a.id) + " at position " + std::to_string(i));
    }
    if (text::trim(a.content).empty()) {
      throw Error(ErrorCode::kInvalidArgument,
                  "instruction " + std::to_string(i) + " has blank content");
    }
    if (a.authority.value < 0 || a.authority.value > config.depth) {
      throw Error(ErrorCode::kInvalidArgument,
                  "instruction " + std::to_string(i) + " has authority level " +
                      std::to_string(a.authority.value) + " outside [0, " +
                      std::to_string(config.depth) + "]");
    }
  }
}

std::string level_label(AuthorityLevel level) {
  switch (level.value) {
    case 0: return "system";
    case 1: return "user";
    case 2: return "tool/history";
    default: return "level " + std::to_string(level.value);
  }
}

}  // namespace hier
