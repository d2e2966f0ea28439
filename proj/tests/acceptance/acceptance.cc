// Acceptance suite. One PASS/FAIL line per criterion; exit status is the
// number of failures. argv[1] is the hier_resolve binary for the
// determinism check.

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "hier/atomizer.h"
#include "hier/conflict_scan.h"
#include "hier/dataset_builder.h"
#include "hier/hcal_loss.h"
#include "hier/json_io.h"
#include "hier/refiner.h"
#include "hier/solver.h"
#include "hier/verifier.h"
#include "hier/wcnf.h"
#include "test_support.h"

namespace {

using namespace hier;
using hier::testing::fixture_path;
using hier::testing::random_instance;
using hier::testing::read_fixture;
using boost::multiprecision::cpp_int;

int g_failures = 0;

void report(int id, const std::string& name, bool ok, const std::string& detail) {
  std::cout << (ok ? "PASS" : "FAIL") << "  " << id << "  " << name << "  (" << detail
            << ")" << std::endl;
  if (!ok) ++g_failures;
}

// Runs one criterion, turning an escaped exception into a failure line.
void criterion(int id, const std::string& name,
               const std::function<bool(std::string&)>& body) {
  std::string detail;
  bool ok = false;
  try {
    ok = body(detail);
  } catch (const std::exception& e) {
    detail = std::string("exception: ") + e.what();
  }
  report(id, name, ok, detail);
}

struct Pipeline {
  std::vector<AtomicInstruction> atoms;
  ConflictMatrix matrix;
  Resolution resolution;
};

Pipeline run_pipeline(const std::string& fixture) {
  const Context ctx = context_from_json(parse_json_text(read_fixture(fixture), fixture));
  const HierarchyConfig config;
  Pipeline p;
  p.atoms = atomize(ctx, default_atomizer_rules(), config);
  p.matrix = build_conflict_matrix(RuleBasedDetector{}, p.atoms);
  p.resolution = solve(p.atoms, p.matrix, config);
  return p;
}

// Shared by criteria 1 and 4: the randomized solver suite.
struct SuiteStats {
  int instances = 0;
  int mismatches = 0;
  int preempted = 0;
  double seconds = 0.0;
};

SuiteStats run_solver_suite() {
  SuiteStats s;
  std::mt19937_64 rng(20240601);
  const HierarchyConfig config;
  const auto start = std::chrono::steady_clock::now();
  for (int n = 2; n <= 12; ++n) {
    for (int k = 0; k < 500; ++k) {
      const double density = std::array{0.1, 0.3, 0.6}[k % 3];
      const auto inst = random_instance(rng, n, density);
      const Resolution fast = solve(inst.atoms, inst.matrix, config);
      const Resolution ref = brute_force_solve(inst.atoms, inst.matrix, config);
      ++s.instances;
      if (fast.selected != ref.selected) ++s.mismatches;
      for (int i = 0; i < n; ++i) {
        if (inst.matrix.degree(i) == 0 &&
            !std::binary_search(fast.selected.begin(), fast.selected.end(), i)) {
          ++s.preempted;
        }
      }
    }
  }
  s.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return s;
}

cpp_int weighted_sum(const std::vector<AtomicInstruction>& atoms,
                     const std::vector<int>& selected, int depth, int base) {
  cpp_int total = 0;
  for (int i : selected) {
    cpp_int w = 1;
    for (int e = 0; e < depth - atoms[i].authority.value; ++e) w *= base;
    total += w;
  }
  return total;
}

std::string run_command(const std::string& cmd) {
  std::string out;
  FILE* pipe = popen(cmd.c_str(), "r");
  if (pipe == nullptr) return "<popen failed>";
  std::array<char, 4096> buf;
  std::size_t got;
  while ((got = fread(buf.data(), 1, buf.size(), pipe)) > 0) out.append(buf.data(), got);
  const int status = pclose(pipe);
  if (status != 0) out += "<exit " + std::to_string(status) + ">";
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  const SuiteStats suite = run_solver_suite();

  criterion(1, "solver matches brute force", [&](std::string& d) {
    d = std::to_string(suite.instances) + " instances, " + std::to_string(suite.mismatches) +
        " mismatches, " + std::to_string(suite.seconds) + " s";
    return suite.mismatches == 0 && suite.seconds < 60.0;
  });

  criterion(2, "baby store context end to end", [](std::string& d) {
    const Pipeline p = run_pipeline("baby_store_context.json");
    const RefinedContext refined = refine(p.atoms, p.resolution, p.matrix);
    std::map<int, std::string> names{{0, "S1"}, {1, "S2"}, {2, "U1"}, {3, "U2"}, {4, "T1"}};
    const bool sets = p.atoms.size() == 5 && p.resolution.selected == std::vector{0, 1, 2, 4} &&
                      p.resolution.rejected == std::vector{3};
    const RenderedSections sections = parse_rendered(refined.rendered);
    const bool notice = sections.overruled.size() == 1 &&
                        sections.overruled[0] == p.atoms[3].content +
                            " \xE2\x80\x94 overruled by: " + p.atoms[1].content;
    d = "selected";
    for (int i : p.resolution.selected) d += " " + names[i];
    d += "; overruled lines " + std::to_string(sections.overruled.size());
    return sets && notice;
  });

  criterion(3, "objective order equals big-int weighted order", [](std::string& d) {
    std::mt19937_64 rng(7);
    int compared = 0, disagree = 0;
    for (int k = 0; k < 200; ++k) {
      const int n = 2 + static_cast<int>(rng() % 39);
      const int depth = 1 + static_cast<int>(rng() % 4);
      const auto inst = random_instance(rng, n, 0.3, depth);
      HierarchyConfig config;
      config.depth = depth;
      std::vector<std::vector<int>> picks{solve(inst.atoms, inst.matrix, config).selected};
      for (int t = 0; t < 20; ++t) {
        std::vector<int> sel;
        for (int i = 0; i < n; ++i) {
          if (rng() & 1) sel.push_back(i);
        }
        picks.push_back(sel);
      }
      for (std::size_t a = 0; a < picks.size(); ++a) {
        for (std::size_t b = 0; b < picks.size(); ++b) {
          const auto lex = objective_of(inst.atoms, picks[a], config) <=>
                           objective_of(inst.atoms, picks[b], config);
          const cpp_int wa = weighted_sum(inst.atoms, picks[a], depth, n + 1);
          const cpp_int wb = weighted_sum(inst.atoms, picks[b], depth, n + 1);
          const auto big = wa < wb   ? std::strong_ordering::less
                           : wa > wb ? std::strong_ordering::greater
                                     : std::strong_ordering::equal;
          ++compared;
          if (lex != big) ++disagree;
        }
      }
    }
    d = std::to_string(compared) + " comparisons over 200 instances, " +
        std::to_string(disagree) + " disagreements";
    return disagree == 0;
  });

  criterion(4, "conflict-free instructions always selected", [&](std::string& d) {
    d = std::to_string(suite.preempted) + " preempted over " + std::to_string(suite.instances) +
        " instances";
    return suite.preempted == 0;
  });

  criterion(5, "loss gradient check and symmetric point", [](std::string& d) {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    double worst = 0.0;
    for (int k = 0; k < 100; ++k) {
      LossParams params;
      params.tau = 0.05 + 0.95 * u(rng);
      params.gamma = 2.0 * u(rng);
      params.beta = (k % 2 == 0) ? 0.0 : 0.5 * u(rng);
      PreferenceScores s;
      s.s_l = -5.0 * u(rng);
      s.s_w = s.s_l + (60.0 * u(rng) - 30.0) * params.tau;
      if (params.beta > 0.0) {
        s.s_l_ref = -5.0 * u(rng);
        s.s_w_ref = *s.s_l_ref + 4.0 * u(rng) - 2.0;
      }
      worst = std::max(worst, grad_check(s, params, 1e-6));
    }
    double sym_err = 0.0;
    for (double gamma : {0.0, 0.5, 1.0, 2.0}) {
      for (double tau : {0.05, 0.1, 1.0}) {
        for (double x : {-3.0, -0.25, 0.0}) {
          const LossParams params{tau, gamma, 0.0};
          const double total = hcal({x, x, std::nullopt, std::nullopt}, params).total;
          sym_err = std::max(sym_err, std::abs(total - (1.0 + gamma) * std::log(2.0)));
        }
      }
    }
    std::ostringstream os;
    os << "max rel err " << worst << ", symmetric err " << sym_err;
    d = os.str();
    return worst < 1e-6 && sym_err <= 1e-12;
  });

  criterion(6, "loss worked value", [](std::string& d) {
    // softplus(-5) + softplus(-0.5), evaluated to 30 digits offline.
    constexpr double kOracle = 0.4807923326692247494894;
    const LossBreakdown b = hcal({-1.0, -1.5, std::nullopt, std::nullopt}, {0.1, 1.0, 0.0});
    std::ostringstream os;
    os.precision(17);
    os << "total " << b.total << ", err " << std::abs(b.total - kOracle);
    d = os.str();
    return std::abs(b.total - kOracle) <= 1e-9;
  });

  criterion(7, "dataset schema conformance", [](std::string& d) {
    const std::string reference = read_fixture("processed_record.json");
    const bool round_trip = to_pretty_json(parse_training_record(reference)) == reference;
    const auto cases = parse_seed_cases_jsonl(read_fixture("seed_cases.jsonl"));
    const auto pool = parse_held_out_pool(read_fixture("held_out_pool.json"));
    int records = 0, bad = 0;
    CorpusCallbacks cb;
    cb.on_record = [&](const TrainingRecord& r) {
      ++records;
      const auto& m = r.training_metadata;
      const double want = m.is_conflict ? 2.0 : 1.0;
      const bool ok = m.hierarchy_weight == want && m.conflict_matrix == kAuthorityOrderMatrix &&
                      m.conflict_type.has_value() == m.is_conflict &&
                      to_compact_json(parse_training_record(to_compact_json(r))) ==
                          to_compact_json(r) &&
                      to_pretty_json(parse_training_record(to_pretty_json(r))) ==
                          to_pretty_json(r);
      if (!ok) ++bad;
    };
    const CorpusSummary s = build_corpus(cases, RuleBasedDetector{}, 1, pool, cb);
    d = std::string("reference record round trip ") + (round_trip ? "ok" : "differs") + ", " +
        std::to_string(records) + " records from " + std::to_string(cases.size()) +
        " cases, " + std::to_string(bad) + " nonconforming";
    return round_trip && cases.size() == 20 && bad == 0 &&
           records == static_cast<int>(s.n_conflict + s.n_aligned) && records > 0;
  });

  criterion(8, "weighted CNF export", [](std::string& d) {
    const Pipeline p = run_pipeline("baby_store_context.json");
    const WeightedCnf cnf =
        parse_weighted_cnf(to_weighted_cnf(p.atoms, p.matrix, HierarchyConfig{}, 6));
    std::vector<std::uint64_t> soft(cnf.num_vars, 0);
    std::vector<std::vector<int>> hard;
    for (const auto& c : cnf.clauses) {
      if (c.hard) {
        hard.push_back(c.literals);
      } else if (c.literals.size() == 1 && c.literals[0] > 0) {
        soft[c.literals[0] - 1] += c.weight;
      }
    }
    const bool weights = soft == std::vector<std::uint64_t>{36, 36, 6, 6, 1} && hard.size() == 1;
    // Exhaustive MaxSAT over the encoded variables.
    std::uint64_t best = 0;
    std::vector<unsigned> best_masks;
    for (unsigned mask = 0; mask < (1u << cnf.num_vars); ++mask) {
      const auto val = [&](int lit) {
        const bool v = (mask >> (std::abs(lit) - 1)) & 1u;
        return lit > 0 ? v : !v;
      };
      const bool feasible = std::all_of(hard.begin(), hard.end(), [&](const auto& cl) {
        return std::any_of(cl.begin(), cl.end(), val);
      });
      if (!feasible) continue;
      std::uint64_t w = 0;
      for (int v = 0; v < cnf.num_vars; ++v) {
        if ((mask >> v) & 1u) w += soft[v];
      }
      if (w > best) best_masks.clear();
      if (w >= best) {
        best = w;
        best_masks.push_back(mask);
      }
    }
    std::vector<int> maxsat;
    if (best_masks.size() == 1) {
      for (int v = 0; v < cnf.num_vars; ++v) {
        if ((best_masks[0] >> v) & 1u) maxsat.push_back(v);
      }
    }
    d = std::to_string(soft.size()) + " soft, " + std::to_string(hard.size()) + " hard, " +
        std::to_string(best_masks.size()) + " optimal assignment(s), best weight " +
        std::to_string(best);
    return weights && maxsat == p.resolution.selected;
  });

  criterion(9, "verifier fixtures", [](std::string& d) {
    const Json cases = parse_json_text(read_fixture("verifier_cases.json"), "verifier fixture");
    int checked = 0, wrong = 0;
    for (const auto& c : cases) {
      AtomicInstruction atom;
      atom.content = c.at("instruction").get<std::string>();
      const auto compiled = compile_constraints(atom);
      const auto& want = c.at("constraint");
      const auto it = std::find_if(compiled.begin(), compiled.end(), [&](const Constraint& k) {
        return constraint_kind_name(k.kind) == want.at("kind").get<std::string>() &&
               k.count == want.at("count").get<int>() &&
               k.arg == want.at("arg").get<std::string>();
      });
      if (it == compiled.end()) {
        ++wrong;
        continue;
      }
      for (const auto& o : c.at("outputs")) {
        ++checked;
        if (check(o.at("text").get<std::string>(), *it) != o.at("pass").get<bool>()) ++wrong;
      }
    }
    d = std::to_string(checked) + " labeled outputs over " + std::to_string(cases.size()) +
        " constraints, " + std::to_string(wrong) + " wrong";
    return wrong == 0 && checked > 0;
  });

  criterion(10, "resolve output is byte-identical across runs", [&](std::string& d) {
    if (argc < 2) {
      d = "hier_resolve path not given";
      return false;
    }
    const std::string bin = argv[1];
    int differing = 0, runs = 0;
    for (const char* f : {"baby_store_context.json", "commas_conflict_1turn.json",
                          "language_vs_summary_strict.json", "language_vs_summary_loose.json"}) {
      for (const char* format : {"json", "text"}) {
        const std::string cmd = "'" + bin + "' --detector rule resolve --format " + format +
                                " --in '" + fixture_path(f) + "' 2>&1";
        const std::string first = run_command(cmd);
        for (int k = 1; k < 10; ++k) {
          ++runs;
          if (run_command(cmd) != first) ++differing;
        }
        if (first.find("<exit") != std::string::npos) ++differing;
      }
    }
    d = std::to_string(runs + 8) + " runs over 4 fixtures, " + std::to_string(differing) +
        " differing";
    return differing == 0;
  });

  std::cout << (g_failures == 0 ? "ALL PASS" : std::to_string(g_failures) + " FAILED")
            << std::endl;
  return g_failures;
}
