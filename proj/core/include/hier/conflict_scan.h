#ifndef HIER_CONFLICT_SCAN_H_
#define HIER_CONFLICT_SCAN_H_

#include <cstddef>
#include <optional>
#include <string_view>
#include <utility>
#include <vector>

#include "hier/context.h"

namespace hier {

enum class Relation { kEntailment, kNeutral, kContradiction };

std::string_view relation_name(Relation r);
std::optional<Relation> parse_relation(std::string_view name);

// Pairwise semantic relation oracle. Implementations must be safe to call
// concurrently from several threads.
class RelationDetector {
 public:
  virtual ~RelationDetector() = default;
  virtual Relation detect(const AtomicInstruction& premise,
                          const AtomicInstruction& hypothesis) const = 0;
};

// Deterministic pattern-table detector. Contradiction patterns: exclusive
// output formats, exclusive response languages, "do not X" vs "X", disjoint
// count bounds on the same unit, and competing task directives. Normalized
// duplicates are entailment; everything else is neutral.
Relation rule_based_detect(std::string_view premise, std::string_view hypothesis);

class RuleBasedDetector final : public RelationDetector {
 public:
  Relation detect(const AtomicInstruction& premise,
                  const AtomicInstruction& hypothesis) const override {
    return rule_based_detect(premise.content, hypothesis.content);
  }
};

enum class DetectorBackend { kRuleBased, kExternal };
enum class ScanScope { kAllPairs, kCrossLevelOnly };

inline constexpr int kMaxScanParallelism = 64;

struct DetectorSpec {
  DetectorBackend backend = DetectorBackend::kRuleBased;
  int parallelism = 1;
  ScanScope scan_scope = ScanScope::kAllPairs;
};

void validate(const DetectorSpec& spec);

// Symmetric Boolean conflict relation with the per-ordered-pair audit trail.
class ConflictMatrix {
 public:
  ConflictMatrix() = default;
  explicit ConflictMatrix(std::size_t n);

  std::size_t size() const { return n_; }
  bool conflict(std::size_t i, std::size_t j) const { return entries_[i * n_ + j]; }
  // Relation recorded for the ordered query (i, j); nullopt if never queried.
  std::optional<Relation> relation(std::size_t i, std::size_t j) const {
    return relations_[i * n_ + j];
  }

  // Registers the unordered conflict {i, j}. i != j.
  void add_conflict(std::size_t i, std::size_t j);
  void set_relation(std::size_t i, std::size_t j, Relation r) {
    relations_[i * n_ + j] = r;
  }

  // Unordered conflict pairs (i < j) in row-major order.
  std::vector<std::pair<std::size_t, std::size_t>> conflict_pairs() const;
  // Number of conflict partners of i.
  std::size_t degree(std::size_t i) const;

  // Throws Error(kInvalidConflictMatrix) on a true diagonal entry or asymmetry.
  void check_well_formed() const;

 private:
  std::size_t n_ = 0;
  std::vector<char> entries_;
  std::vector<std::optional<Relation>> relations_;
};

// Queries every ordered pair in scope and registers a conflict iff either
// direction is a Contradiction. Queries run on up to spec.parallelism
// threads; the result does not depend on completion order. Detector
// exceptions abort the scan and propagate (first failing pair by index).
ConflictMatrix build_conflict_matrix(const RelationDetector& detector,
                                     const std::vector<AtomicInstruction>& atoms,
                                     const DetectorSpec& spec = {});

}  // namespace hier

#endif  // HIER_CONFLICT_SCAN_H_
