#ifndef HIER_WCNF_H_
#define HIER_WCNF_H_

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "hier/conflict_scan.h"
#include "hier/context.h"

namespace hier {

struct WeightedClause {
  bool hard = false;
  std::uint64_t weight = 0;  // meaningful for soft clauses
  std::vector<int> literals;  // DIMACS literals, never 0
};

struct WeightedCnf {
  int num_vars = 0;
  std::uint64_t top = 0;  // 0 when the input used the "h" hard-clause syntax
  std::vector<WeightedClause> clauses;
};

// base^(depth - level), throwing Error(kInvalidArgument) on 64-bit overflow.
std::uint64_t instruction_weight(AuthorityLevel level, int depth, std::uint64_t base);

// Classic DIMACS WCNF ("p wcnf <vars> <clauses> <top>"): one soft unit clause
// per instruction (variable id+1) with weight base^(K - level), then one hard
// clause "-i -j" per conflict pair. Requires base > N, otherwise throws
// Error(kBaseTooSmall).
std::string to_weighted_cnf(const std::vector<AtomicInstruction>& atoms,
                            const ConflictMatrix& matrix,
                            const HierarchyConfig& config, std::uint64_t base);

// Accepts the classic format (hard iff weight >= top) and the newer
// "h <lits> 0" form. Throws Error(kParseError) with a line number.
WeightedCnf parse_weighted_cnf(std::string_view text);

}  // namespace hier

#endif  // HIER_WCNF_H_
