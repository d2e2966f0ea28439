#include "cli.h"

#include <fstream>
#include <iostream>
#include <memory>
#include <set>
#include <sstream>

#include <CLI11.hpp>

#include "app_config.h"
#include "hier/atomizer.h"
#include "hier/conflict_scan.h"
#include "hier/dataset_builder.h"
#include "hier/errors.h"
#include "hier/hcal_loss.h"
#include "hier/json_io.h"
#include "hier/nli_client.h"
#include "hier/refiner.h"
#include "hier/solver.h"
#include "hier/verifier.h"
#include "hier/wcnf.h"
#include "io_util.h"

namespace hier::cli {
namespace {

struct GlobalOptions {
  std::string config_path;
  std::string detector;
  std::string mock_path;
  std::string out_path;
};

struct Options {
  GlobalOptions global;
  std::string in;
  bool skip_assistant = false;
  int parallelism = 0;  // 0: keep the configured value
  bool emit_wcnf = false;
  std::uint64_t base = 0;  // 0: N + 1
  bool brute_force = false;
  std::string format = "json";
  std::string output_path;
  std::optional<double> tau, gamma, beta, grad_eps;
  std::uint64_t seed = 0;
  std::string held_out_pool;
  std::string manifest;
  bool resume = false;
  bool pretty = false;
};

// Opens --out (or forwards to `out`) for the lifetime of one command.
class Sink {
 public:
  Sink(const std::string& path, std::ostream& fallback, bool append = false) {
    if (path.empty()) {
      stream_ = &fallback;
      return;
    }
    file_.open(path, std::ios::binary | (append ? std::ios::app : std::ios::trunc));
    if (!file_) throw Error(ErrorCode::kInvalidArgument, "cannot write " + path);
    stream_ = &file_;
  }
  std::ostream& operator*() { return *stream_; }
  void finish() {
    stream_->flush();
    if (!*stream_) throw Error(ErrorCode::kInvalidArgument, "write failed");
  }

 private:
  std::ofstream file_;
  std::ostream* stream_ = nullptr;
};

AppConfig effective_config(const Options& o) {
  AppConfig c = o.global.config_path.empty() ? AppConfig{} : load_app_config(o.global.config_path);
  if (o.global.detector == "rule") c.detector.backend = DetectorBackend::kRuleBased;
  if (o.global.detector == "external") c.detector.backend = DetectorBackend::kExternal;
  // Replaying recorded replies only makes sense against the external backend.
  if (o.global.detector.empty() && !o.global.mock_path.empty()) {
    c.detector.backend = DetectorBackend::kExternal;
  }
  if (o.parallelism > 0) c.detector.parallelism = o.parallelism;
  if (o.skip_assistant) c.atomizer_rules.skip_assistant = true;
  if (c.detector.backend == DetectorBackend::kExternal && !c.endpoint &&
      !o.global.mock_path.empty()) {
    // Replay needs no real endpoint; give the client a placeholder.
    EndpointConfig placeholder;
    placeholder.base_url = "mock://replay";
    placeholder.model_name = "replay";
    c.endpoint = placeholder;
  }
  validate(c);
  return c;
}

std::unique_ptr<RelationDetector> make_detector(const AppConfig& c, const Options& o) {
  if (c.detector.backend == DetectorBackend::kRuleBased) {
    return std::make_unique<RuleBasedDetector>();
  }
  std::shared_ptr<const ChatTransport> transport;
  if (!o.global.mock_path.empty()) {
    transport = MockTransport::from_file(o.global.mock_path);
  } else {
    transport = std::make_shared<HttpTransport>();
  }
  return std::make_unique<ExternalDetector>(*c.endpoint, std::move(transport));
}

Json read_doc(const std::string& path) { return parse_json_text(read_file(path), path); }

void emit(Sink& sink, const Json& doc) {
  *sink << doc.dump(2) << "\n";
  sink.finish();
}

std::vector<AtomicInstruction> atoms_or_atomize(const Json& doc, const AppConfig& c) {
  if (doc.is_object() && doc.contains("messages")) {
    return atomize(context_from_json(doc), c.atomizer_rules, c.hierarchy);
  }
  std::vector<AtomicInstruction> atoms = atoms_from_json(doc);
  validate_atoms(atoms, c.hierarchy);
  return atoms;
}

int cmd_atomize(const Options& o, std::ostream& out) {
  const AppConfig c = effective_config(o);
  const auto atoms = atomize(context_from_json(read_doc(o.in)), c.atomizer_rules, c.hierarchy);
  Sink sink(o.global.out_path, out);
  emit(sink, {{"atomizer_rules", c.atomizer_rules.version}, {"atoms", to_json(atoms)}});
  return kExitOk;
}

int cmd_scan(const Options& o, std::ostream& out) {
  const AppConfig c = effective_config(o);
  const auto atoms = atoms_or_atomize(read_doc(o.in), c);
  const auto detector = make_detector(c, o);
  const ConflictMatrix m = build_conflict_matrix(*detector, atoms, c.detector);
  Sink sink(o.global.out_path, out);
  emit(sink, {{"atoms", to_json(atoms)}, {"matrix", to_json(m)}});
  return kExitOk;
}

int cmd_solve(const Options& o, std::ostream& out) {
  const AppConfig c = effective_config(o);
  const Json doc = read_doc(o.in);
  const auto atoms = atoms_from_json(doc.is_object() && doc.contains("atoms") ? doc["atoms"] : doc);
  if (!doc.is_object() || !doc.contains("matrix")) {
    throw Error(ErrorCode::kParseError, o.in + ": expected {\"atoms\": [...], \"matrix\": {...}}");
  }
  const ConflictMatrix m = matrix_from_json(doc["matrix"]);
  Sink sink(o.global.out_path, out);
  if (o.emit_wcnf) {
    *sink << to_weighted_cnf(atoms, m, c.hierarchy, o.base ? o.base : atoms.size() + 1);
    sink.finish();
    return kExitOk;
  }
  const Resolution r = o.brute_force ? brute_force_solve(atoms, m, c.hierarchy)
                                     : solve(atoms, m, c.hierarchy);
  emit(sink, {{"resolution", to_json(r)}});
  return kExitOk;
}

int cmd_resolve(const Options& o, std::ostream& out) {
  const AppConfig c = effective_config(o);
  const auto atoms =
      atomize(context_from_json(read_doc(o.in)), c.atomizer_rules, c.hierarchy);
  const auto detector = make_detector(c, o);
  const ConflictMatrix m = build_conflict_matrix(*detector, atoms, c.detector);
  const Resolution r = solve(atoms, m, c.hierarchy);
  const RefinedContext refined = refine(atoms, r, m);
  Sink sink(o.global.out_path, out);
  if (o.format == "text") {
    *sink << refined.rendered;
    sink.finish();
    return kExitOk;
  }
  emit(sink, {{"atoms", to_json(atoms)},
              {"matrix", to_json(m)},
              {"resolution", to_json(r)},
              {"refined", to_json(refined)}});
  return kExitOk;
}

int cmd_verify(const Options& o, std::ostream& out) {
  const AppConfig c = effective_config(o);
  const Json doc = read_doc(o.in);
  if (!doc.is_object() || !doc.contains("atoms") || !doc.contains("resolution")) {
    throw Error(ErrorCode::kParseError,
                o.in + ": expected {\"atoms\": [...], \"resolution\": {...}}");
  }
  const auto atoms = atoms_from_json(doc["atoms"]);
  validate_atoms(atoms, c.hierarchy);
  const Resolution r = resolution_from_json(doc["resolution"]);
  for (int id : r.selected) {
    if (id < 0 || static_cast<std::size_t>(id) >= atoms.size()) {
      throw Error(ErrorCode::kInconsistentResolution,
                  "selected id " + std::to_string(id) + " is out of range");
    }
  }
  std::string text = read_file(o.output_path);
  while (!text.empty() && (text.back() == '\n' || text.back() == '\r')) text.pop_back();
  const ComplianceReport report =
      evaluate(text, r, atoms, c.verifier_rules.empty() ? nullptr : &c.verifier_rules);
  Sink sink(o.global.out_path, out);
  emit(sink, to_json(report));
  // Non-compliance is reported like a domain failure so pipelines can gate on it.
  return report.all_pass ? kExitOk : kExitDomainError;
}

int cmd_loss(const Options& o, std::ostream& out) {
  LossParams p;
  if (o.tau) p.tau = *o.tau;
  if (o.gamma) p.gamma = *o.gamma;
  if (o.beta) p.beta = *o.beta;
  validate(p);
  std::istringstream in(read_file(o.in));
  Sink sink(o.global.out_path, out);
  std::string line;
  for (std::size_t line_no = 1; std::getline(in, line); ++line_no) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const PreferenceScores s =
        scores_from_json(parse_json_text(line, o.in + " line " + std::to_string(line_no)));
    Json row = to_json(hcal(s, p));
    if (o.grad_eps) row["max_relative_error"] = grad_check(s, p, *o.grad_eps);
    *sink << row.dump() << "\n";
  }
  sink.finish();
  return kExitOk;
}

int cmd_build_dataset(const Options& o, std::ostream& out, std::ostream& err) {
  if (o.resume && (o.manifest.empty() || o.global.out_path.empty())) {
    throw Error(ErrorCode::kInvalidArgument, "--resume needs both --manifest and --out");
  }
  const AppConfig c = effective_config(o);
  const auto cases = parse_seed_cases_jsonl(read_file(o.in));
  const auto pool = o.held_out_pool.empty() ? std::vector<HeldOutEntry>{}
                                            : parse_held_out_pool(read_file(o.held_out_pool));
  std::set<std::string> done;
  if (o.resume) {
    std::ifstream in(o.manifest);
    for (std::string id; std::getline(in, id);) {
      if (!id.empty()) done.insert(id);
    }
  }
  const auto detector = make_detector(c, o);
  Sink sink(o.global.out_path, out, o.resume);
  std::ofstream manifest;
  if (!o.manifest.empty()) {
    manifest.open(o.manifest, std::ios::binary | (o.resume ? std::ios::app : std::ios::trunc));
    if (!manifest) throw Error(ErrorCode::kInvalidArgument, "cannot write " + o.manifest);
  }

  CorpusCallbacks cb;
  cb.on_record = [&](const TrainingRecord& r) {
    *sink << (o.pretty ? to_pretty_json(r) : to_compact_json(r)) << "\n";
  };
  cb.on_case_done = [&](const SeedCase& sc) {
    sink.finish();
    if (manifest.is_open()) manifest << sc.id << "\n" << std::flush;
  };
  cb.on_drop = [&](const SeedCase& sc, const DroppedVariant& d) {
    err << "hier_resolve: case " << sc.id << ": dropped "
        << (d.conflict ? "conflict" : "aligned") << " variant " << d.index << " ("
        << d.reason << ")\n";
  };
  const CorpusSummary s = build_corpus(cases, *detector, o.seed, pool, cb, done);
  sink.finish();
  err << "hier_resolve: "
      << Json{{"n_conflict", s.n_conflict},
              {"n_aligned", s.n_aligned},
              {"n_dropped", s.n_dropped},
              {"n_skipped", s.n_skipped}}
             .dump()
      << "\n";
  return kExitOk;
}

int cmd_bench_detector(const Options& o, std::ostream& out) {
  const AppConfig c = effective_config(o);
  const std::string text = read_file(o.in);
  std::vector<Json> items;
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first != std::string::npos && text[first] == '[') {
    for (const Json& e : parse_json_text(text, o.in)) items.push_back(e);
  } else {
    std::istringstream in(text);
    std::string line;
    for (std::size_t n = 1; std::getline(in, line); ++n) {
      if (line.find_first_not_of(" \t\r") != std::string::npos) {
        items.push_back(parse_json_text(line, o.in + " line " + std::to_string(n)));
      }
    }
  }
  std::vector<LabeledPair> pairs;
  for (const Json& e : items) {
    try {
      pairs.push_back({e.at("premise").get<std::string>(), e.at("hypothesis").get<std::string>(),
                       e.at("gold_conflict").get<bool>()});
    } catch (const nlohmann::json::exception&) {
      throw Error(ErrorCode::kParseError,
                  "labeled pair needs premise, hypothesis and gold_conflict: " + e.dump());
    }
  }
  const auto detector = make_detector(c, o);
  Sink sink(o.global.out_path, out);
  emit(sink, to_json(benchmark_detector(*detector, pairs)));
  return kExitOk;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  Options o;
  CLI::App app{"Hierarchical instruction conflict resolution", "hier_resolve"};
  app.require_subcommand(1);
  app.fallthrough();
  app.add_option("--config", o.global.config_path, "Configuration document (JSON)");
  app.add_option("--detector", o.global.detector, "Relation detector backend")
      ->check(CLI::IsMember({"rule", "external"}));
  app.add_option("--mock", o.global.mock_path,
                 "Replay recorded endpoint replies (external detector only)");
  app.add_option("--out", o.global.out_path, "Write results here instead of stdout");

  auto in_opt = [&](CLI::App* sub, const char* what) {
    sub->add_option("--in", o.in, what)->required();
  };

  CLI::App* atomize_cmd = app.add_subcommand("atomize", "Split a context into atomic instructions");
  in_opt(atomize_cmd, "Context JSON");
  atomize_cmd->add_flag("--skip-assistant", o.skip_assistant, "Ignore assistant turns");

  CLI::App* scan_cmd = app.add_subcommand("scan", "Build the pairwise conflict matrix");
  in_opt(scan_cmd, "Atoms JSON or a context to atomize first");
  scan_cmd->add_flag("--skip-assistant", o.skip_assistant, "Ignore assistant turns");
  scan_cmd->add_option("--parallelism", o.parallelism, "Concurrent detector queries")
      ->check(CLI::Range(1, kMaxScanParallelism));

  CLI::App* solve_cmd = app.add_subcommand("solve", "Select the hierarchy-optimal instruction set");
  in_opt(solve_cmd, "Document with atoms and matrix (scan output)");
  solve_cmd->add_flag("--emit-wcnf", o.emit_wcnf, "Print the weighted CNF encoding instead");
  solve_cmd->add_option("--base", o.base, "Weight base for --emit-wcnf (default N+1)");
  solve_cmd->add_flag("--brute-force", o.brute_force, "Use exhaustive search (N <= 20)");

  CLI::App* resolve_cmd = app.add_subcommand("resolve", "Atomize, scan, solve and refine a context");
  in_opt(resolve_cmd, "Context JSON");
  resolve_cmd->add_option("--format", o.format, "Output format")
      ->check(CLI::IsMember({"json", "text"}));
  resolve_cmd->add_flag("--skip-assistant", o.skip_assistant, "Ignore assistant turns");
  resolve_cmd->add_option("--parallelism", o.parallelism, "Concurrent detector queries")
      ->check(CLI::Range(1, kMaxScanParallelism));

  CLI::App* verify_cmd = app.add_subcommand("verify", "Check a model output against the selection");
  in_opt(verify_cmd, "Document with atoms and resolution (resolve output)");
  verify_cmd->add_option("--output", o.output_path, "File holding the model output")->required();

  CLI::App* loss_cmd = app.add_subcommand("loss", "Evaluate the alignment loss per JSONL line");
  in_opt(loss_cmd, "Scores JSONL");
  loss_cmd->add_option("--tau", o.tau, "Preference temperature");
  loss_cmd->add_option("--gamma", o.gamma, "Semantic loss weight");
  loss_cmd->add_option("--beta", o.beta, "Reference divergence weight");
  loss_cmd->add_option("--grad-check", o.grad_eps, "Also report finite-difference error at this step");

  CLI::App* build_cmd = app.add_subcommand("build-dataset", "Build preference-training records");
  in_opt(build_cmd, "Seed case JSONL");
  build_cmd->add_option("--seed", o.seed, "Level assignment seed");
  build_cmd->add_option("--held-out-pool", o.held_out_pool,
                        "Conflicting instruction/response pool for aligned cases");
  build_cmd->add_option("--manifest", o.manifest, "Append processed case ids here");
  build_cmd->add_flag("--resume", o.resume, "Skip cases already in the manifest");
  build_cmd->add_flag("--pretty", o.pretty, "Indented records instead of JSONL");

  CLI::App* bench_cmd = app.add_subcommand("bench-detector", "Score the detector on labeled pairs");
  in_opt(bench_cmd, "Labeled pairs (JSONL or array)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      out << (app.get_subcommands().empty() ? app.help() : app.get_subcommands().front()->help());
      return kExitOk;
    }
    err << "hier_resolve: " << e.what() << "\n";
    err << (app.get_subcommands().empty() ? app.help() : app.get_subcommands().front()->help());
    return kExitUsage;
  }
  if (!o.global.mock_path.empty() && o.global.detector == "rule") {
    err << "hier_resolve: --mock only applies to --detector external\n" << app.help();
    return kExitUsage;
  }

  try {
    if (atomize_cmd->parsed()) return cmd_atomize(o, out);
    if (scan_cmd->parsed()) return cmd_scan(o, out);
    if (solve_cmd->parsed()) return cmd_solve(o, out);
    if (resolve_cmd->parsed()) return cmd_resolve(o, out);
    if (verify_cmd->parsed()) return cmd_verify(o, out);
    if (loss_cmd->parsed()) return cmd_loss(o, out);
    if (build_cmd->parsed()) return cmd_build_dataset(o, out, err);
    if (bench_cmd->parsed()) return cmd_bench_detector(o, out);
  } catch (const Error& e) {
    err << "hier_resolve: " << e.what() << "\n";
    return kExitDomainError;
  } catch (const std::exception& e) {
    err << "hier_resolve: " << e.what() << "\n";
    return kExitDomainError;
  }
  return kExitUsage;
}

}  // namespace hier::cli
