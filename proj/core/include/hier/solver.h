#ifndef HIER_SOLVER_H_
#define HIER_SOLVER_H_

#include <compare>
#include <cstdint>
#include <vector>

#include "hier/conflict_scan.h"
#include "hier/context.h"

namespace hier {

// Selected-instruction counts per authority level, compared lexicographically
// from level 0 upward. For any base B > N this order coincides with comparing
// sum_k B^(K-k) * counts[k], i.e. the weighted objective sum_i w_i z_i with
// w_i = B^(K - level_i), without materializing the weights.
struct ObjectiveVector {
  std::vector<int> counts;

  friend auto operator<=>(const ObjectiveVector&, const ObjectiveVector&) = default;
};

struct Resolution {
  std::vector<int> selected;  // ascending ids
  std::vector<int> rejected;  // ascending ids
  ObjectiveVector objective;
  bool optimal = true;
  std::uint64_t nodes_explored = 0;
  // Set when more than one selection attains the optimal objective and the
  // tie-break rule decided between them.
  bool tie_broken = false;
};

// Exact lexicographic optimum of: maximize sum_i B^(K - level_i) z_i subject to
// !z_i || !z_j for every conflict pair. Among co-optimal selections the one
// whose indicator vector (z_0, z_1, ...) is lexicographically greatest wins,
// i.e. earlier instructions are kept first. The empty selection is always
// feasible, so there is no infeasible outcome.
//
// Recursive branch and bound that re-splits the remaining conflict graph into
// components at every node, with memoized subproblems; instructions without
// conflicts are selected outright. Throws Error(kMatrixShapeMismatch) when
// matrix.size() != atoms.size().
Resolution solve(const std::vector<AtomicInstruction>& atoms,
                 const ConflictMatrix& matrix, const HierarchyConfig& config);

inline constexpr std::size_t kBruteForceMaxAtoms = 20;

// Exhaustive 2^N reference with the same tie-break. Throws Error(kTooLarge)
// above kBruteForceMaxAtoms.
Resolution brute_force_solve(const std::vector<AtomicInstruction>& atoms,
                             const ConflictMatrix& matrix,
                             const HierarchyConfig& config);

// Objective vector of an arbitrary selection (no feasibility check).
ObjectiveVector objective_of(const std::vector<AtomicInstruction>& atoms,
                             const std::vector<int>& selected,
                             const HierarchyConfig& config);

// True if no conflict pair has both members in `selected`.
bool is_conflict_free(const ConflictMatrix& matrix, const std::vector<int>& selected);

}  // namespace hier

#endif  // HIER_SOLVER_H_
