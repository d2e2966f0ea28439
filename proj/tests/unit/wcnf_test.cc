#include <gtest/gtest.h>

#include <random>

#include "hier/errors.h"
#include "hier/solver.h"
#include "hier/wcnf.h"
#include "test_support.h"

namespace hier {
namespace {

using testing::atoms_at_levels;
using testing::matrix_with;

TEST(InstructionWeight, Formula) {
  EXPECT_EQ(instruction_weight({1}, 2, 4), 4u);
  EXPECT_EQ(instruction_weight({0}, 2, 4), 16u);
  EXPECT_EQ(instruction_weight({2}, 2, 4), 1u);
  EXPECT_THROW(instruction_weight({0}, 64, 4), Error);
}

TEST(ToWeightedCnf, BabyStoreAtBaseSix) {
  const std::string text =
      to_weighted_cnf(atoms_at_levels({0, 0, 1, 1, 2}), matrix_with(5, {{1, 3}}), {}, 6);
  const WeightedCnf cnf = parse_weighted_cnf(text);
  EXPECT_EQ(cnf.num_vars, 5);
  EXPECT_EQ(cnf.top, 36u + 36 + 6 + 6 + 1 + 1);
  std::vector<std::uint64_t> soft;
  int hard = 0;
  for (const WeightedClause& c : cnf.clauses) {
    if (c.hard) {
      ++hard;
      EXPECT_EQ(c.literals, (std::vector<int>{-2, -4}));
    } else {
      ASSERT_EQ(c.literals.size(), 1u);
      soft.push_back(c.weight);
    }
  }
  EXPECT_EQ(soft, (std::vector<std::uint64_t>{36, 36, 6, 6, 1}));
  EXPECT_EQ(hard, 1);
}

TEST(ToWeightedCnf, BaseMustExceedInstructionCount) {
  try {
    to_weighted_cnf(atoms_at_levels({0, 1, 2}), ConflictMatrix(3), {}, 3);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kBaseTooSmall);
  }
}

TEST(ParseWeightedCnf, AcceptsHardMarkerForm) {
  const WeightedCnf cnf = parse_weighted_cnf("c new style\n3 1 0\nh -1 -2 0\n1 2 0\n");
  ASSERT_EQ(cnf.clauses.size(), 3u);
  EXPECT_TRUE(cnf.clauses[1].hard);
  EXPECT_FALSE(cnf.clauses[0].hard);
}

TEST(ParseWeightedCnf, ReportsLineNumbers) {
  try {
    parse_weighted_cnf("p wcnf 2 1 10\n5 1 x 0\n");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kParseError);
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos);
  }
  EXPECT_THROW(parse_weighted_cnf("p wcnf 2 1 10\n5 1 2\n"), Error);
  EXPECT_THROW(parse_weighted_cnf("p wcnf 2 2 10\n5 1 0\n"), Error);
  EXPECT_THROW(parse_weighted_cnf("p wcnf 2 1 10\n5 3 0\n"), Error);
}

// Exhaustive MaxSAT over the parsed encoding; ties resolved like solve().
std::vector<int> brute_force_wcnf(const WeightedCnf& cnf) {
  std::uint64_t best_cost = 0;
  std::uint32_t best = 0;
  bool found = false;
  for (std::uint32_t mask = 0; mask < (1u << cnf.num_vars); ++mask) {
    auto value = [&](int lit) {
      const bool v = mask >> (std::abs(lit) - 1) & 1;
      return lit > 0 ? v : !v;
    };
    bool feasible = true;
    std::uint64_t gained = 0;
    for (const WeightedClause& c : cnf.clauses) {
      bool sat = false;
      for (int lit : c.literals) sat = sat || value(lit);
      if (c.hard && !sat) feasible = false;
      if (!c.hard && sat) gained += c.weight;
    }
    if (!feasible) continue;
    // Lexicographically greatest indicator (z_1 first) wins ties.
    auto rev = [&](std::uint32_t m) {
      std::uint32_t r = 0;
      for (int v = 0; v < cnf.num_vars; ++v) r |= (m >> v & 1u) << (cnf.num_vars - 1 - v);
      return r;
    };
    if (!found || gained > best_cost || (gained == best_cost && rev(mask) > rev(best))) {
      best_cost = gained;
      best = mask;
      found = true;
    }
  }
  std::vector<int> sel;
  for (int v = 0; v < cnf.num_vars; ++v) {
    if (best >> v & 1) sel.push_back(v);
  }
  return sel;
}

TEST(ToWeightedCnf, OptimumOfEncodingMatchesSolver) {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 1 + static_cast<int>(rng() % 10);
    const auto inst = testing::random_instance(rng, n, 0.35);
    const WeightedCnf cnf =
        parse_weighted_cnf(to_weighted_cnf(inst.atoms, inst.matrix, {}, n + 1));
    EXPECT_EQ(brute_force_wcnf(cnf), solve(inst.atoms, inst.matrix, {}).selected)
        << "trial " << trial;
  }
}

}  // namespace
}  // namespace hier
