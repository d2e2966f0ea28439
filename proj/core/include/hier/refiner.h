#ifndef HIER_REFINER_H_
#define HIER_REFINER_H_

#include <string>
#include <string_view>
#include <vector>

#include "hier/conflict_scan.h"
#include "hier/context.h"
#include "hier/solver.h"

namespace hier {

inline constexpr std::string_view kRefinedLayoutVersion = "refined-context/v1";

enum class RejectionReason {
  kHigherAuthority,  // overruled by a strictly higher-authority instruction
  kTieBreak,         // lost to a same-level instruction
};

std::string_view reason_name(RejectionReason r);

struct ActiveBlock {
  int id = 0;
  AuthorityLevel level;
  InstructionKind kind = InstructionKind::kImperative;
  std::string text;
};

struct RejectionNotice {
  int id = 0;
  std::string text;
  int overruled_by_id = 0;
  std::string overruled_by;
  RejectionReason reason = RejectionReason::kHigherAuthority;
};

struct RefinedContext {
  // Every selected instruction, by ascending level then document order.
  std::vector<ActiveBlock> active_blocks;
  std::vector<RejectionNotice> rejection_notices;
  std::string rendered;
};

// Renders the selected set as
//   ## Active Instructions   selected imperatives, "### Level k (label)" groups
//   ## Overruled             one bullet per rejection naming its winner (omitted if none)
//   ## Context Data          selected declaratives, verbatim, grouped by level
// Each rejected instruction names its highest-authority selected conflict
// partner (lowest id on ties). Throws Error(kInconsistentResolution) if the
// resolution does not partition the ids, selects a conflicting pair, or
// rejects an instruction that has no selected conflict partner.
RefinedContext refine(const std::vector<AtomicInstruction>& atoms,
                      const Resolution& resolution, const ConflictMatrix& matrix);

struct RenderedSections {
  std::vector<std::string> active;  // bullet texts under Active Instructions
  std::vector<std::string> overruled;
  std::vector<std::string> context_data;
};

// Inverse of the rendering, used for round-trip checks.
RenderedSections parse_rendered(std::string_view rendered);

}  // namespace hier

#endif  // HIER_REFINER_H_
