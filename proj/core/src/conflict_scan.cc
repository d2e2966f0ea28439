#include "hier/conflict_scan.h"

#include <algorithm>
#include <atomic>
#include <exception>
#include <thread>

#include "hier/errors.h"

namespace hier {

ConflictMatrix::ConflictMatrix(std::size_t n)
    : n_(n), entries_(n * n, 0), relations_(n * n) {}

void ConflictMatrix::add_conflict(std::size_t i, std::size_t j) {
  if (i >= n_ || j >= n_ || i == j) {
    throw Error(ErrorCode::kInvalidConflictMatrix,
                "conflict pair (" + std::to_string(i) + ", " + std::to_string(j) +
                    ") is out of range or on the diagonal");
  }
  entries_[i * n_ + j] = 1;
  entries_[j * n_ + i] = 1;
}

std::vector<std::pair<std::size_t, std::size_t>> ConflictMatrix::conflict_pairs() const {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  for (std::size_t i = 0; i < n_; ++i) {
    for (std::size_t j = i + 1; j < n_; ++j) {
      if (conflict(i, j)) out.emplace_back(i, j);
    }
  }
  return out;
}

std::size_t ConflictMatrix::degree(std::size_t i) const {
  std::size_t d = 0;
  for (std::size_t j = 0; j < n_; ++j) d += entries_[i * n_ + j] ? 1 : 0;
  return d;
}

void ConflictMatrix::check_well_formed() const {
  for (std::size_t i = 0; i < n_; ++i) {
    if (conflict(i, i)) {
      throw Error(ErrorCode::kInvalidConflictMatrix,
                  "diagonal entry " + std::to_string(i) + " is set");
    }
    for (std::size_t j = i + 1; j < n_; ++j) {
      if (conflict(i, j) != conflict(j, i)) {
        throw Error(ErrorCode::kInvalidConflictMatrix,
                    "matrix is not symmetric at (" + std::to_string(i) + ", " +
                        std::to_string(j) + ")");
      }
    }
  }
}

void validate(const DetectorSpec& spec) {
  if (spec.parallelism < 1 || spec.parallelism > kMaxScanParallelism) {
    throw Error(ErrorCode::kInvalidArgument,
                "parallelism must be in [1, " + std::to_string(kMaxScanParallelism) +
                    "]");
  }
}

ConflictMatrix build_conflict_matrix(const RelationDetector& detector,
                                     const std::vector<AtomicInstruction>& atoms,
                                     const DetectorSpec& spec) {
  validate(spec);
  const std::size_t n = atoms.size();
  ConflictMatrix matrix(n);

  std::vector<std::pair<std::size_t, std::size_t>> queries;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      if (spec.scan_scope == ScanScope::kCrossLevelOnly &&
          atoms[i].authority == atoms[j].authority) {
        continue;
      }
      queries.emplace_back(i, j);
    }
  }

  std::vector<Relation> results(queries.size(), Relation::kNeutral);
  std::vector<std::exception_ptr> failures(queries.size());
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  auto worker = [&] {
    for (;;) {
      const std::size_t q = next.fetch_add(1);
      if (q >= queries.size() || failed.load()) return;
      try {
        results[q] = detector.detect(atoms[queries[q].first], atoms[queries[q].second]);
      } catch (...) {
        failures[q] = std::current_exception();
        failed.store(true);
      }
    }
  };

  const auto threads = std::min<std::size_t>(
      static_cast<std::size_t>(spec.parallelism), std::max<std::size_t>(queries.size(), 1));
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(threads);
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
  }

  for (const std::exception_ptr& e : failures) {
    if (e) std::rethrow_exception(e);
  }
  for (std::size_t q = 0; q < queries.size(); ++q) {
    const auto [i, j] = queries[q];
    matrix.set_relation(i, j, results[q]);
    if (results[q] == Relation::kContradiction) matrix.add_conflict(i, j);
  }
  return matrix;
}

}  // namespace hier
