#include "cli.h"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "test_support.h"

namespace hier {
namespace {

using testing::fixture_path;

struct RunResult {
  int code;
  std::string out;
  std::string err;
};

RunResult run_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "hier_resolve");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string temp_file(const std::string& name, const std::string& content) {
  const auto path = std::filesystem::temp_directory_path() / ("hier_cli_test_" + name);
  std::ofstream(path, std::ios::binary) << content;
  return path.string();
}

TEST(Cli, UnknownSubcommandIsUsageError) {
  EXPECT_EQ(run_cli({"frobnicate"}).code, cli::kExitUsage);
  EXPECT_EQ(run_cli({}).code, cli::kExitUsage);
}

TEST(Cli, MockWithRuleDetectorIsUsageError) {
  const auto r = run_cli({"--detector", "rule", "--mock", fixture_path("nli_mock_baby_store.json"),
                          "resolve", "--in", fixture_path("baby_store_context.json")});
  EXPECT_EQ(r.code, cli::kExitUsage);
}

TEST(Cli, MockReplayImpliesExternalDetector) {
  const auto r = run_cli({"--mock", fixture_path("nli_mock_baby_store.json"), "resolve", "--in",
                          fixture_path("baby_store_context.json")});
  ASSERT_EQ(r.code, cli::kExitOk) << r.err;
  const auto j = nlohmann::json::parse(r.out);
  EXPECT_EQ(j.at("resolution").at("rejected"), nlohmann::json::parse("[3]"));
  EXPECT_EQ(j.at("matrix").at("relations").at("1,3"), "contradiction");
}

TEST(Cli, ResolveBabyStore) {
  const auto r = run_cli({"resolve", "--in", fixture_path("baby_store_context.json")});
  ASSERT_EQ(r.code, cli::kExitOk) << r.err;
  const auto j = nlohmann::json::parse(r.out);
  EXPECT_EQ(j.at("resolution").at("selected"), nlohmann::json::parse("[0,1,2,4]"));
  EXPECT_EQ(j.at("resolution").at("rejected"), nlohmann::json::parse("[3]"));
}

TEST(Cli, VerifyExitCodeTracksCompliance) {
  const auto resolved = run_cli({"resolve", "--in", fixture_path("baby_store_context.json")});
  ASSERT_EQ(resolved.code, cli::kExitOk) << resolved.err;
  const auto doc = temp_file("resolved.json", resolved.out);

  const auto json_ad = temp_file("ad.json", "{\"ad\": \"EcoSoft diapers are soft.\"}\n");
  const auto ok = run_cli({"verify", "--in", doc, "--output", json_ad});
  EXPECT_EQ(ok.code, cli::kExitOk) << ok.out;
  EXPECT_TRUE(nlohmann::json::parse(ok.out).at("system_compliant").get<bool>());

  const auto plain_ad = temp_file("ad.txt", "EcoSoft diapers are soft.");
  const auto bad = run_cli({"verify", "--in", doc, "--output", plain_ad});
  EXPECT_EQ(bad.code, cli::kExitDomainError);
  EXPECT_FALSE(nlohmann::json::parse(bad.out).at("system_compliant").get<bool>());
}

TEST(Cli, ConfigSuppliesVerifierRules) {
  const std::string doc = R"({"atoms": [
    {"id": 0, "content": "Answer in a single word.", "authority": 0, "source_role": "system", "source_turn": 0, "kind": "imperative"}],
    "resolution": {"selected": [0], "rejected": []}})";
  const auto in = temp_file("single_word.json", doc);
  const auto out = temp_file("two_words.txt", "Two words");
  const auto config = temp_file("config.json", "{\"verifier_rules\": \"" +
                                                   fixture_path("verifier_rules.json") + "\"}");
  const auto builtin = run_cli({"verify", "--in", in, "--output", out});
  EXPECT_EQ(builtin.code, cli::kExitOk) << builtin.err;
  const auto extended = run_cli({"--config", config, "verify", "--in", in, "--output", out});
  EXPECT_EQ(extended.code, cli::kExitDomainError) << extended.err;
}

TEST(Cli, MismatchedMatrixIsDomainError) {
  const std::string doc = R"({"atoms": [
    {"id": 0, "content": "a", "authority": 0, "source_role": "system", "source_turn": 0, "kind": "imperative"},
    {"id": 1, "content": "b", "authority": 1, "source_role": "user", "source_turn": 1, "kind": "imperative"}],
    "matrix": {"n": 3, "conflicts": [[0, 1]]}})";
  const auto r = run_cli({"solve", "--in", temp_file("mismatch.json", doc)});
  EXPECT_EQ(r.code, cli::kExitDomainError);
  EXPECT_NE(r.err.find("MatrixShapeMismatch"), std::string::npos) << r.err;
}

TEST(Cli, MissingInputFileIsDomainError) {
  EXPECT_EQ(run_cli({"atomize", "--in", "/nonexistent/ctx.json"}).code, cli::kExitDomainError);
}

TEST(Cli, LossEmitsOneLinePerInput) {
  const auto in = temp_file("loss.jsonl",
                            "{\"s_w\": 0.5, \"s_l\": 0.0}\n{\"s_w\": 0.0, \"s_l\": 0.0}\n");
  const auto r = run_cli({"loss", "--in", in});
  ASSERT_EQ(r.code, cli::kExitOk) << r.err;
  std::istringstream lines(r.out);
  std::string line;
  int n = 0;
  while (std::getline(lines, line)) {
    if (!line.empty()) {
      EXPECT_TRUE(nlohmann::json::accept(line));
      ++n;
    }
  }
  EXPECT_EQ(n, 2);
}

TEST(Cli, BuildDatasetIsDeterministic) {
  const std::vector<std::string> args{"build-dataset", "--in", fixture_path("seed_cases.jsonl"),
                                      "--seed", "11"};
  const auto a = run_cli(args);
  const auto b = run_cli(args);
  ASSERT_EQ(a.code, cli::kExitOk) << a.err;
  EXPECT_EQ(a.out, b.out);
  EXPECT_FALSE(a.out.empty());
}

}  // namespace
}  // namespace hier
