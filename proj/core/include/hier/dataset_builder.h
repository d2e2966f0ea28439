#ifndef HIER_DATASET_BUILDER_H_
#define HIER_DATASET_BUILDER_H_

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "hier/conflict_scan.h"

namespace hier {

enum class ConflictType { kSystemOverUser, kSystemOverTool, kUserOverTool };

std::string_view conflict_type_name(ConflictType t);
std::optional<ConflictType> parse_conflict_type(std::string_view name);

struct ConflictVariant {
  std::string text;
  ConflictType type = ConflictType::kSystemOverUser;
};

struct SeedCase {
  std::string id;  // defaults to the 0-based input position
  std::string seed_instruction;
  std::vector<std::string> aligned_variants;
  std::vector<ConflictVariant> conflict_variants;
  std::string accepted_response;
  std::string rejected_response;
  // Retrieved content placed at tool level alongside any tool-level variant.
  std::optional<std::string> tool_context;
};

void validate(const SeedCase& c);

struct DroppedVariant {
  bool conflict = false;  // which list the index refers to
  std::size_t index = 0;
  std::string reason;
};

struct CaseValidation {
  std::vector<std::size_t> aligned_ok;   // indices into aligned_variants
  std::vector<std::size_t> conflict_ok;  // indices into conflict_variants
  std::vector<DroppedVariant> dropped;
};

// Aligned variants survive when nothing retained so far (seed included)
// contradicts them in either direction; conflict variants need at least one
// contradiction against the seed.
CaseValidation validate_case(const SeedCase& c, const RelationDetector& detector);

struct RecordMessage {
  std::string role;  // system, user, tool, assistant
  std::string content;
};

using RoleMatrix = std::array<std::array<int, 3>, 3>;
inline constexpr RoleMatrix kAuthorityOrderMatrix{{{0, 1, 1}, {0, 0, 1}, {0, 0, 0}}};

struct TrainingMetadata {
  double hierarchy_weight = 1.0;
  bool is_conflict = false;
  bool has_tool = false;
  std::optional<ConflictType> conflict_type;
  RoleMatrix conflict_matrix = kAuthorityOrderMatrix;
};

struct TrainingRecord {
  std::string id;
  std::vector<RecordMessage> messages;
  TrainingMetadata training_metadata;
  std::optional<std::string> rejected_response;
};

// Throws kInvalidArgument naming the first broken invariant.
void check_record(const TrainingRecord& r);

std::string wrap_tool_content(std::string_view content);

struct HeldOutEntry {
  std::string instruction;
  std::string response;
};

// Deterministic in (case, validation, assignment_seed, pool). The seed is the
// authoritative instruction: a conflict record puts it at the dominant level
// of the chosen variant's type and the variant at the dominated level. An
// aligned record puts the seed at system level and one aligned variant at
// user level. Remaining aligned variants land on random levels (tool only
// when tool content is present). Requires at least one retained variant.
TrainingRecord assemble_record(const SeedCase& c, const CaseValidation& v,
                               std::uint64_t assignment_seed,
                               const std::vector<HeldOutEntry>& held_out_pool = {});

// Per-case seed derived from the corpus seed and the case id.
std::uint64_t case_seed(std::uint64_t corpus_seed, std::string_view case_id);

struct CorpusSummary {
  std::size_t n_conflict = 0;
  std::size_t n_aligned = 0;
  std::size_t n_dropped = 0;  // cases with nothing left after validation
  std::size_t n_skipped = 0;  // already listed in the resume set
};

struct CorpusCallbacks {
  // Called in input order for every emitted record.
  std::function<void(const TrainingRecord&)> on_record;
  // Called after each case is fully handled (emitted or dropped).
  std::function<void(const SeedCase&)> on_case_done;
  std::function<void(const SeedCase&, const DroppedVariant&)> on_drop;
};

CorpusSummary build_corpus(const std::vector<SeedCase>& cases,
                           const RelationDetector& detector, std::uint64_t seed,
                           const std::vector<HeldOutEntry>& held_out_pool,
                           const CorpusCallbacks& callbacks,
                           const std::set<std::string>& already_done = {});

// 4-space indented layout with inline matrix rows; ends without a newline.
std::string to_pretty_json(const TrainingRecord& r);
// Single-line form for JSONL.
std::string to_compact_json(const TrainingRecord& r);
TrainingRecord parse_training_record(std::string_view json_text);

SeedCase parse_seed_case(std::string_view json_line, std::size_t position);
std::vector<SeedCase> parse_seed_cases_jsonl(std::string_view text);
std::vector<HeldOutEntry> parse_held_out_pool(std::string_view json_text);

}  // namespace hier

#endif  // HIER_DATASET_BUILDER_H_
