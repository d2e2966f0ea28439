#include "hier/solver.h"

#include <algorithm>
#include <bit>
#include <cassert>
#include <cstdint>
#include <string>
#include <unordered_map>

#include "hier/errors.h"

namespace hier {
namespace {

using Words = std::vector<std::uint64_t>;

struct WordsHash {
  std::size_t operator()(const Words& w) const noexcept {
    std::uint64_t h = 1469598103934665603ull;
    for (std::uint64_t x : w) h = (h ^ x) * 1099511628211ull;
    return static_cast<std::size_t>(h);
  }
};

// Optimum over one vertex subset: per-level counts, the chosen vertices and
// whether some other selection reaches the same counts.
struct Key {
  std::vector<int> counts;
  Words chosen;
  bool multiple = false;
};

// Greater-is-better. Counts first; then the indicator, where the lowest id in
// which the two selections differ goes to whoever contains it.
int compare(const Key& a, const Key& b) {
  if (a.counts != b.counts) return a.counts < b.counts ? -1 : 1;
  for (std::size_t w = 0; w < a.chosen.size(); ++w) {
    const std::uint64_t diff = a.chosen[w] ^ b.chosen[w];
    if (diff != 0) return (a.chosen[w] & (diff & -diff)) ? 1 : -1;
  }
  return 0;
}

// Exact search over vertex subsets. Each call reduces (isolated vertices and
// pendants that outrank their only neighbour are forced in), splits what is
// left into connected components and branches on a single component. Counts
// and indicators both combine independently across components, so per-part
// optima compose into the global one. Subproblems are memoized by vertex set.
class Search {
 public:
  Search(const std::vector<AtomicInstruction>& atoms, const ConflictMatrix& matrix,
         int depth)
      : n_(atoms.size()), words_((n_ + 63) / 64), levels_(depth + 1), adj_(n_),
        adj_bits_(n_, Words(words_, 0)) {
    for (const auto& a : atoms) level_.push_back(a.authority.value);
    for (const auto& [i, j] : matrix.conflict_pairs()) {
      adj_[i].push_back(static_cast<int>(j));
      adj_[j].push_back(static_cast<int>(i));
      set(adj_bits_[i], j);
      set(adj_bits_[j], i);
    }
  }

  Key run() {
    Words all(words_, 0);
    for (std::size_t v = 0; v < n_; ++v) set(all, v);
    return solve(all);
  }

  std::uint64_t nodes() const { return nodes_; }

 private:
  static void set(Words& w, std::size_t i) { w[i / 64] |= std::uint64_t{1} << (i % 64); }
  static void clear(Words& w, std::size_t i) { w[i / 64] &= ~(std::uint64_t{1} << (i % 64)); }
  static bool test(const Words& w, std::size_t i) { return (w[i / 64] >> (i % 64)) & 1; }
  static bool empty(const Words& w) {
    return std::all_of(w.begin(), w.end(), [](std::uint64_t x) { return x == 0; });
  }

  template <typename F>
  static void for_each(const Words& w, F&& f) {
    for (std::size_t k = 0; k < w.size(); ++k) {
      for (std::uint64_t x = w[k]; x != 0; x &= x - 1) {
        f(k * 64 + static_cast<std::size_t>(std::countr_zero(x)));
      }
    }
  }

  Key zero() const { return Key{std::vector<int>(levels_, 0), Words(words_, 0), false}; }

  void add(Key& into, const Key& part) const {
    for (int l = 0; l < levels_; ++l) into.counts[l] += part.counts[l];
    for (std::size_t k = 0; k < words_; ++k) into.chosen[k] |= part.chosen[k];
    into.multiple = into.multiple || part.multiple;
  }

  int degree_in(std::size_t v, const Words& s) const {
    int d = 0;
    for (int u : adj_[v]) d += test(s, u);
    return d;
  }

  std::vector<Words> components(const Words& s) const {
    std::vector<Words> out;
    Words left = s;
    while (!empty(left)) {
      Words comp(words_, 0);
      std::vector<std::size_t> stack;
      for (std::size_t k = 0; k < words_ && stack.empty(); ++k) {
        if (left[k] != 0) stack.push_back(k * 64 + std::countr_zero(left[k]));
      }
      clear(left, stack[0]);
      while (!stack.empty()) {
        const std::size_t v = stack.back();
        stack.pop_back();
        set(comp, v);
        for (int u : adj_[v]) {
          if (test(left, u)) {
            clear(left, u);
            stack.push_back(u);
          }
        }
      }
      out.push_back(std::move(comp));
    }
    return out;
  }

  // Per-level upper bound on what `s` can still contribute: a greedy clique
  // cover of each level's vertices, at most one pick per clique.
  std::vector<int> count_bound(const Words& s) const {
    std::vector<int> bound(levels_, 0);
    std::vector<std::vector<std::vector<std::size_t>>> cliques(levels_);
    for_each(s, [&](std::size_t v) {
      auto& mine = cliques[level_[v]];
      for (auto& clique : mine) {
        if (std::all_of(clique.begin(), clique.end(),
                        [&](std::size_t u) { return test(adj_bits_[v], u); })) {
          clique.push_back(v);
          return;
        }
      }
      mine.push_back({v});
      ++bound[level_[v]];
    });
    return bound;
  }

  Key solve(const Words& s) {
    ++nodes_;
    if (empty(s)) return zero();
    if (auto it = memo_.find(s); it != memo_.end()) return it->second;

    Key result = zero();
    Words rest = s;
    for (bool changed = true; changed;) {
      changed = false;
      for_each(Words(rest), [&](std::size_t v) {
        if (!test(rest, v)) return;
        const int d = degree_in(v, rest);
        if (d == 0) {
          set(result.chosen, v);
          ++result.counts[level_[v]];
          clear(rest, v);
          changed = true;
        } else if (d == 1) {
          std::size_t w = 0;
          for (int u : adj_[v]) {
            if (test(rest, u)) w = u;
          }
          if (level_[v] < level_[w]) {
            set(result.chosen, v);
            ++result.counts[level_[v]];
            clear(rest, v);
            clear(rest, w);
            changed = true;
          }
        }
      });
    }

    for (const Words& comp : components(rest)) {
      add(result, comp == s ? branch(comp) : solve(comp));
    }
    memo_.emplace(s, result);
    return result;
  }

  // `c` is connected and irreducible. Branch on a vertex of highest degree
  // (higher authority on ties), include first, then exclude unless the bound
  // rules it out.
  Key branch(const Words& c) {
    std::size_t v = n_;
    int best_deg = -1;
    for_each(c, [&](std::size_t u) {
      const int d = degree_in(u, c);
      if (v == n_ || d > best_deg || (d == best_deg && level_[u] < level_[v])) {
        v = u;
        best_deg = d;
      }
    });

    Words without = c;
    clear(without, v);
    Words closed = without;
    for (int u : adj_[v]) clear(closed, u);
    Key in = solve(closed);
    set(in.chosen, v);
    ++in.counts[level_[v]];

    if (count_bound(without) < in.counts) return in;
    Key out = solve(without);
    const int cmp = compare(in, out);
    Key& best = cmp >= 0 ? in : out;
    if (in.counts == out.counts) best.multiple = true;
    return best;
  }

  std::size_t n_;
  std::size_t words_;
  int levels_;
  std::vector<int> level_;
  std::vector<std::vector<int>> adj_;
  std::vector<Words> adj_bits_;
  std::unordered_map<Words, Key, WordsHash> memo_;
  std::uint64_t nodes_ = 0;
};

void check_inputs(const std::vector<AtomicInstruction>& atoms,
                  const ConflictMatrix& matrix, const HierarchyConfig& config) {
  if (matrix.size() != atoms.size()) {
    throw Error(ErrorCode::kMatrixShapeMismatch,
                "conflict matrix is " + std::to_string(matrix.size()) + "x" +
                    std::to_string(matrix.size()) + " but there are " +
                    std::to_string(atoms.size()) + " instructions");
  }
  matrix.check_well_formed();
  validate_atoms(atoms, config);
}

Resolution finish(const std::vector<AtomicInstruction>& atoms,
                  std::vector<char> chosen, const HierarchyConfig& config) {
  Resolution r;
  r.objective.counts.assign(config.depth + 1, 0);
  for (std::size_t i = 0; i < atoms.size(); ++i) {
    if (chosen[i]) {
      r.selected.push_back(static_cast<int>(i));
      ++r.objective.counts[atoms[i].authority.value];
    } else {
      r.rejected.push_back(static_cast<int>(i));
    }
  }
  return r;
}

}  // namespace

ObjectiveVector objective_of(const std::vector<AtomicInstruction>& atoms,
                             const std::vector<int>& selected,
                             const HierarchyConfig& config) {
  ObjectiveVector v;
  v.counts.assign(config.depth + 1, 0);
  for (int id : selected) ++v.counts[atoms.at(id).authority.value];
  return v;
}

bool is_conflict_free(const ConflictMatrix& matrix, const std::vector<int>& selected) {
  for (std::size_t a = 0; a < selected.size(); ++a) {
    for (std::size_t b = a + 1; b < selected.size(); ++b) {
      if (matrix.conflict(selected[a], selected[b])) return false;
    }
  }
  return true;
}

Resolution solve(const std::vector<AtomicInstruction>& atoms,
                 const ConflictMatrix& matrix, const HierarchyConfig& config) {
  check_inputs(atoms, matrix, config);
  Search search(atoms, matrix, config.depth);
  const Key best = search.run();
  std::vector<char> chosen(atoms.size(), 0);
  for (std::size_t i = 0; i < atoms.size(); ++i) {
    chosen[i] = (best.chosen[i / 64] >> (i % 64)) & 1;
  }
  Resolution r = finish(atoms, std::move(chosen), config);
  r.nodes_explored = search.nodes();
  r.tie_broken = best.multiple;
  assert(is_conflict_free(matrix, r.selected));
  return r;
}

Resolution brute_force_solve(const std::vector<AtomicInstruction>& atoms,
                             const ConflictMatrix& matrix,
                             const HierarchyConfig& config) {
  check_inputs(atoms, matrix, config);
  const std::size_t n = atoms.size();
  if (n > kBruteForceMaxAtoms) {
    throw Error(ErrorCode::kTooLarge,
                std::to_string(n) + " instructions exceed the brute-force limit of " +
                    std::to_string(kBruteForceMaxAtoms));
  }
  const auto pairs = matrix.conflict_pairs();

  std::vector<int> best_counts;
  std::vector<char> best_ind;
  std::uint64_t optimal_count = 0;
  std::uint64_t evaluated = 0;
  for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << n); ++mask) {
    ++evaluated;
    auto bit = [&](std::size_t i) { return (mask >> i) & 1; };
    const bool feasible = std::none_of(pairs.begin(), pairs.end(), [&](const auto& p) {
      return bit(p.first) && bit(p.second);
    });
    if (!feasible) continue;
    std::vector<int> counts(config.depth + 1, 0);
    std::vector<char> ind(n, 0);
    for (std::size_t i = 0; i < n; ++i) {
      if (bit(i)) {
        ind[i] = 1;
        ++counts[atoms[i].authority.value];
      }
    }
    if (best_ind.empty() && best_counts.empty()) {
      best_counts = counts;
      best_ind = ind;
      optimal_count = 1;
      continue;
    }
    if (counts == best_counts) {
      ++optimal_count;
      if (ind > best_ind) best_ind = ind;
    } else if (counts > best_counts) {
      best_counts = counts;
      best_ind = ind;
      optimal_count = 1;
    }
  }

  Resolution r = finish(atoms, best_ind.empty() ? std::vector<char>(n, 0) : best_ind,
                        config);
  r.nodes_explored = evaluated;
  r.tie_broken = optimal_count > 1;
  return r;
}

}  // namespace hier
