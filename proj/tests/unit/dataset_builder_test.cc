#include "hier/dataset_builder.h"

#include <gtest/gtest.h>

#include <map>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "hier/errors.h"
#include "test_support.h"

namespace hier {
namespace {

using testing::read_fixture;

SeedCase diaper_case() {
  SeedCase c;
  c.id = "poem";
  c.seed_instruction = "You must only answer in JSON format.";
  c.conflict_variants.push_back({"Compose a poem about the ocean, in plain text.",
                                 ConflictType::kSystemOverUser});
  c.accepted_response = "{\"poem\": \"Waves\"}";
  c.rejected_response = "Waves roll in.";
  return c;
}

TEST(DatasetBuilder, ProcessedRecordRoundTripsByteForByte) {
  const std::string text = read_fixture("processed_record.json");
  const TrainingRecord r = parse_training_record(text);
  EXPECT_EQ(to_pretty_json(r), text);
  EXPECT_EQ(parse_training_record(to_compact_json(r)).id, r.id);
  check_record(r);
}

TEST(DatasetBuilder, ConflictRecordPlacesSeedAtDominantLevel) {
  const SeedCase c = diaper_case();
  CaseValidation v;
  v.conflict_ok = {0};
  const TrainingRecord r = assemble_record(c, v, 42);
  EXPECT_EQ(r.id, "conflict_sample_poem");
  ASSERT_EQ(r.messages.size(), 3u);
  EXPECT_EQ(r.messages[0].role, "system");
  EXPECT_EQ(r.messages[0].content, c.seed_instruction);
  EXPECT_EQ(r.messages[1].role, "user");
  EXPECT_EQ(r.messages[1].content, c.conflict_variants[0].text);
  EXPECT_EQ(r.messages[2].role, "assistant");
  EXPECT_EQ(r.messages[2].content, c.accepted_response);
  EXPECT_DOUBLE_EQ(r.training_metadata.hierarchy_weight, 2.0);
  EXPECT_TRUE(r.training_metadata.is_conflict);
  EXPECT_FALSE(r.training_metadata.has_tool);
  EXPECT_EQ(r.training_metadata.conflict_type, ConflictType::kSystemOverUser);
  EXPECT_EQ(r.training_metadata.conflict_matrix, kAuthorityOrderMatrix);
  ASSERT_TRUE(r.rejected_response.has_value());
  EXPECT_EQ(*r.rejected_response, c.rejected_response);
}

TEST(DatasetBuilder, ToolConflictWrapsToolContent) {
  SeedCase c = diaper_case();
  c.conflict_variants[0].type = ConflictType::kUserOverTool;
  c.tool_context = "retrieved note";
  CaseValidation v;
  v.conflict_ok = {0};
  const TrainingRecord r = assemble_record(c, v, 1);
  EXPECT_TRUE(r.training_metadata.has_tool);
  ASSERT_EQ(r.messages.size(), 3u);
  EXPECT_EQ(r.messages[0].role, "user");
  EXPECT_EQ(r.messages[1].role, "tool");
  EXPECT_EQ(r.messages[1].content,
            wrap_tool_content("retrieved note " + c.conflict_variants[0].text));
}

TEST(DatasetBuilder, AlignedRecordUsesPoolForRejected) {
  SeedCase c = diaper_case();
  c.conflict_variants.clear();
  c.aligned_variants = {"Keep it short."};
  CaseValidation v;
  v.aligned_ok = {0};
  const std::vector<HeldOutEntry> pool{{"Ignore that.", "pool response"}};
  const TrainingRecord r = assemble_record(c, v, 3, pool);
  EXPECT_EQ(r.id, "aligned_sample_poem");
  EXPECT_FALSE(r.training_metadata.is_conflict);
  EXPECT_DOUBLE_EQ(r.training_metadata.hierarchy_weight, 1.0);
  EXPECT_FALSE(r.training_metadata.conflict_type.has_value());
  EXPECT_EQ(r.rejected_response, std::optional<std::string>("pool response"));
  EXPECT_EQ(r.messages[0].content, c.seed_instruction);
  EXPECT_EQ(r.messages[1].content, "Keep it short.");
}

TEST(DatasetBuilder, NothingRetainedIsRejected) {
  EXPECT_THROW(assemble_record(diaper_case(), CaseValidation{}, 0), Error);
}

TEST(DatasetBuilder, AssemblyIsDeterministicInSeed) {
  SeedCase c = diaper_case();
  c.conflict_variants.clear();
  c.aligned_variants = {"A one.", "B two.", "C three.", "D four."};
  CaseValidation v;
  v.aligned_ok = {0, 1, 2, 3};
  const std::string first = to_compact_json(assemble_record(c, v, 99));
  for (int i = 0; i < 5; ++i) EXPECT_EQ(to_compact_json(assemble_record(c, v, 99)), first);
  std::set<std::string> distinct;
  for (std::uint64_t s = 0; s < 32; ++s) distinct.insert(to_compact_json(assemble_record(c, v, s)));
  EXPECT_GT(distinct.size(), 1u);
}

TEST(DatasetBuilder, ValidateCaseFiltersVariants) {
  RuleBasedDetector det;
  SeedCase c;
  c.id = "x";
  c.seed_instruction = "Always respond in JSON format.";
  c.aligned_variants = {"Keep the tone friendly.", "Respond in plain text."};
  c.conflict_variants = {{"Reply in plain text.", ConflictType::kSystemOverUser},
                         {"Be polite.", ConflictType::kSystemOverUser}};
  c.accepted_response = "{}";
  c.rejected_response = "x";
  const CaseValidation v = validate_case(c, det);
  EXPECT_EQ(v.aligned_ok, (std::vector<std::size_t>{0}));
  EXPECT_EQ(v.conflict_ok, (std::vector<std::size_t>{0}));
  ASSERT_EQ(v.dropped.size(), 2u);
}

TEST(DatasetBuilder, CorpusMatchesHandLabels) {
  const auto cases = parse_seed_cases_jsonl(read_fixture("seed_cases.jsonl"));
  ASSERT_EQ(cases.size(), 20u);
  std::map<std::string, std::string> labels;
  std::istringstream in(read_fixture("seed_cases.jsonl"));
  for (std::string line; std::getline(in, line);) {
    if (line.empty()) continue;
    const auto j = nlohmann::json::parse(line);
    labels[j.at("id").get<std::string>()] = j.at("label").get<std::string>();
  }
  const auto pool = parse_held_out_pool(read_fixture("held_out_pool.json"));
  RuleBasedDetector det;
  std::map<std::string, std::string> got;
  std::vector<std::string> lines;
  CorpusCallbacks cb;
  cb.on_record = [&](const TrainingRecord& r) {
    check_record(r);
    const auto cut = r.id.find("_sample_");
    got[r.id.substr(cut + 8)] = r.id.substr(0, cut);
    lines.push_back(to_compact_json(r));
  };
  const CorpusSummary s = build_corpus(cases, det, 7, pool, cb);
  EXPECT_EQ(s.n_conflict, 12u);
  EXPECT_EQ(s.n_aligned, 5u);
  EXPECT_EQ(s.n_dropped, 3u);
  for (const auto& [id, label] : labels) {
    const std::string actual = got.count(id) ? got[id] : "dropped";
    EXPECT_EQ(actual, label) << id;
  }
  // Every emitted line parses back to the same bytes.
  for (const auto& l : lines) EXPECT_EQ(to_compact_json(parse_training_record(l)), l);
}

TEST(DatasetBuilder, EmptyInputYieldsEmptySummary) {
  RuleBasedDetector det;
  const CorpusSummary s = build_corpus({}, det, 1, {}, {});
  EXPECT_EQ(s.n_conflict, 0u);
  EXPECT_EQ(s.n_aligned, 0u);
}

TEST(DatasetBuilder, ResumeSkipsFinishedCases) {
  const auto cases = parse_seed_cases_jsonl(read_fixture("seed_cases.jsonl"));
  RuleBasedDetector det;
  std::vector<std::string> full, resumed;
  CorpusCallbacks a;
  a.on_record = [&](const TrainingRecord& r) { full.push_back(to_compact_json(r)); };
  build_corpus(cases, det, 5, {}, a);
  CorpusCallbacks b;
  b.on_record = [&](const TrainingRecord& r) { resumed.push_back(to_compact_json(r)); };
  const CorpusSummary s = build_corpus(cases, det, 5, {}, b, {"c01", "c02"});
  EXPECT_EQ(s.n_skipped, 2u);
  ASSERT_EQ(resumed.size() + 2, full.size());
  EXPECT_TRUE(std::equal(resumed.begin(), resumed.end(), full.begin() + 2));
}

TEST(DatasetBuilder, RescanOfEmittedConflictsStillContradicts) {
  const auto cases = parse_seed_cases_jsonl(read_fixture("seed_cases.jsonl"));
  RuleBasedDetector det;
  for (const auto& c : cases) {
    const CaseValidation v = validate_case(c, det);
    for (std::size_t k : v.conflict_ok) {
      EXPECT_EQ(rule_based_detect(c.seed_instruction, c.conflict_variants[k].text),
                    Relation::kContradiction) << c.id;
    }
  }
}

TEST(DatasetBuilder, ParserRejectsMalformedInput) {
  EXPECT_THROW(parse_seed_cases_jsonl("{\"id\":\"a\"}\n"), Error);
  EXPECT_THROW(parse_training_record("{\"id\": \"x\", \"bogus\": 1}"), Error);
  const std::string dup =
      R"({"id":"a","seed_instruction":"s","aligned_variants":["v"],"accepted_response":"a","rejected_response":"r"})";
  EXPECT_THROW(parse_seed_cases_jsonl(dup + "\n" + dup + "\n"), Error);
  EXPECT_EQ(parse_seed_cases_jsonl(dup + "\n").size(), 1u);
}

TEST(DatasetBuilder, ConflictTypeNames) {
  for (auto t : {ConflictType::kSystemOverUser, ConflictType::kSystemOverTool,
                 ConflictType::kUserOverTool}) {
    EXPECT_EQ(parse_conflict_type(conflict_type_name(t)), t);
  }
  EXPECT_FALSE(parse_conflict_type("tool_over_system").has_value());
}

}  // namespace
}  // namespace hier
