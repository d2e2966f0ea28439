#include <gtest/gtest.h>

#include <random>

#include "hier/errors.h"
#include "hier/json_io.h"
#include "hier/verifier.h"
#include "test_support.h"

namespace hier {
namespace {

AtomicInstruction instruction(std::string text, int level = 0, int id = 0) {
  AtomicInstruction a;
  a.id = id;
  a.content = std::move(text);
  a.authority.value = level;
  return a;
}

std::vector<Constraint> compiled(const std::string& text) {
  return compile_constraints(instruction(text));
}

Constraint cons(ConstraintKind kind, int count = 0, std::string arg = {}) {
  Constraint c;
  c.kind = kind;
  c.count = count;
  c.arg = std::move(arg);
  return c;
}

TEST(Compile, NoCommas) {
  const auto cs = compiled("Your response should not contain any commas.");
  ASSERT_EQ(cs.size(), 1u);
  EXPECT_EQ(cs[0].kind, ConstraintKind::kNoCommas);
}

TEST(Compile, MinCommas) {
  const auto cs = compiled("Your response should contain at least 3 commas.");
  ASSERT_EQ(cs.size(), 1u);
  EXPECT_EQ(cs[0].kind, ConstraintKind::kMinCommas);
  EXPECT_EQ(cs[0].count, 3);
  EXPECT_EQ(describe(cs[0]), "MinCommas(3)");
}

TEST(Compile, JsonWithKey) {
  const auto cs =
      compiled("Please put your answer in a JSON format, with the key named \"language\"");
  ASSERT_EQ(cs.size(), 1u);
  EXPECT_EQ(cs[0].kind, ConstraintKind::kIsJsonWithKey);
  EXPECT_EQ(cs[0].arg, "language");
  EXPECT_EQ(describe(cs[0]), "IsJsonWithKey(\"language\")");
}

TEST(Compile, JsonOnlyKeyWhenExclusive) {
  const auto cs = compiled(
      "Please write the summary in JSON format, with the key name \"summary\". The output JSON "
      "should only contain the summary, without any other content.");
  ASSERT_EQ(cs.size(), 1u);
  EXPECT_EQ(cs[0].kind, ConstraintKind::kIsJsonOnlyKey);
  EXPECT_EQ(cs[0].arg, "summary");
}

TEST(Compile, PlainJsonAndNegatedJson) {
  auto cs = compiled("Always respond in JSON format.");
  ASSERT_EQ(cs.size(), 1u);
  EXPECT_EQ(cs[0].kind, ConstraintKind::kIsJson);
  EXPECT_TRUE(compiled("Respond in plain text, do not use JSON.").empty());
}

TEST(Compile, SeveralDirectivesInOneAtom) {
  const auto cs = compiled(
      "Your response should not contain any commas. Your response should highlight at least 3 "
      "sections that have titles in markdown format.");
  ASSERT_EQ(cs.size(), 2u);
  EXPECT_EQ(cs[0].kind, ConstraintKind::kNoCommas);
  EXPECT_EQ(cs[1].kind, ConstraintKind::kMinMarkdownSections);
  EXPECT_EQ(cs[1].count, 3);
}

TEST(Compile, OtherKinds) {
  auto cs = compiled("Answer with exactly five words.");
  ASSERT_EQ(cs.size(), 1u);
  EXPECT_EQ(cs[0].kind, ConstraintKind::kExactWordCount);
  EXPECT_EQ(cs[0].count, 5);

  cs = compiled("You should respond in Spanish.");
  ASSERT_EQ(cs.size(), 1u);
  EXPECT_EQ(cs[0].kind, ConstraintKind::kLanguageIs);
  EXPECT_EQ(cs[0].arg, "spanish");

  cs = compiled("Include the keyword \"eco\" in your answer.");
  ASSERT_EQ(cs.size(), 1u);
  EXPECT_EQ(cs[0].kind, ConstraintKind::kContainsPhrase);
  EXPECT_EQ(cs[0].arg, "eco");

  cs = compiled("Do not mention the word \"cheap\".");
  ASSERT_EQ(cs.size(), 1u);
  EXPECT_EQ(cs[0].kind, ConstraintKind::kNotContainsPhrase);
}

TEST(Compile, OpenEndedTaskIsNotCompilable) {
  EXPECT_TRUE(compiled("Compose a poem about the sea.").empty());
  EXPECT_TRUE(compiled("Write an ad for a diaper.").empty());
}

TEST(Check, Basics) {
  EXPECT_TRUE(check("Hello world", cons(ConstraintKind::kNoCommas)));
  EXPECT_FALSE(check("Hello, world", cons(ConstraintKind::kMinCommas, 3)));
  EXPECT_TRUE(check("a, b, c, d", cons(ConstraintKind::kMinCommas, 3)));
  EXPECT_TRUE(check("{\"language\": \"English\"}", cons(ConstraintKind::kIsJsonWithKey, 0, "language")));
  EXPECT_FALSE(check("{\"lang\": \"English\"}", cons(ConstraintKind::kIsJsonWithKey, 0, "language")));
  EXPECT_FALSE(check("{\"summary\": \"x\", \"extra\": 1}",
                     cons(ConstraintKind::kIsJsonOnlyKey, 0, "summary")));
  EXPECT_TRUE(check("{\"summary\": \"x\"}", cons(ConstraintKind::kIsJsonOnlyKey, 0, "summary")));
  EXPECT_TRUE(check("one two  three\nfour", cons(ConstraintKind::kExactWordCount, 4)));
  EXPECT_TRUE(check("# A\ntext\n## B\n### C", cons(ConstraintKind::kMinMarkdownSections, 3)));
  EXPECT_FALSE(check("#A\n####### B", cons(ConstraintKind::kMinMarkdownSections, 1)));
  EXPECT_TRUE(check("Buy ECO diapers", cons(ConstraintKind::kContainsPhrase, 0, "eco")));
  EXPECT_FALSE(check("Buy ECO diapers", cons(ConstraintKind::kNotContainsPhrase, 0, "eco")));
}

TEST(Check, JsonKeyNeedsStrictJson) {
  for (const char* bad : {"{language: \"English\"}", "{\"language\": \"English\",}",
                          "```json\n{\"language\": \"English\"}\n```", "[\"language\"]"}) {
    EXPECT_FALSE(check(bad, cons(ConstraintKind::kIsJsonWithKey, 0, "language"))) << bad;
    EXPECT_FALSE(check(bad, cons(ConstraintKind::kIsJsonOnlyKey, 0, "language"))) << bad;
  }
}

TEST(CheckProperty, CommaCountsAreExact) {
  std::mt19937_64 rng(1);
  const std::string alphabet = "ab ,.\n";
  for (int trial = 0; trial < 500; ++trial) {
    std::string s;
    const int len = static_cast<int>(rng() % 30);
    for (int i = 0; i < len; ++i) s.push_back(alphabet[rng() % alphabet.size()]);
    const auto commas = static_cast<int>(std::count(s.begin(), s.end(), ','));
    ASSERT_EQ(check(s, cons(ConstraintKind::kNoCommas)), commas == 0);
    for (int k = 0; k < 6; ++k) ASSERT_EQ(check(s, cons(ConstraintKind::kMinCommas, k)), commas >= k);
  }
}

TEST(DetectLanguage, Samples) {
  EXPECT_EQ(detect_language("The weather is nice and the sun is out."), "english");
  EXPECT_EQ(detect_language("El clima es agradable y el sol está afuera."), "spanish");
  EXPECT_EQ(detect_language("今天天气很好，阳光明媚。"), "chinese");
  EXPECT_EQ(detect_language("12345"), "");
}

TEST(Refusal, PhraseTable) {
  EXPECT_TRUE(is_refusal("I'm sorry, but I can't help with that."));
  EXPECT_TRUE(is_refusal("I\xE2\x80\x99m unable to do this."));
  EXPECT_FALSE(is_refusal("{\"language\": \"English\"}"));
}

std::vector<AtomicInstruction> baby_store_atoms() { return testing::baby_store_atoms(); }

Resolution baby_store_resolution() {
  Resolution r;
  r.selected = {0, 1, 2, 4};
  r.rejected = {3};
  return r;
}

TEST(Evaluate, BabyStoreJsonOutputIsSystemCompliant) {
  const auto report =
      evaluate("{\"ad\": \"EcoSoft diapers keep babies dry.\"}", baby_store_resolution(), baby_store_atoms());
  EXPECT_TRUE(report.system_compliant);
  EXPECT_TRUE(report.all_pass);
  ASSERT_EQ(report.per_constraint.size(), 1u);
  EXPECT_EQ(report.per_constraint[0].constraint.source_instruction_id, 1);
}

TEST(Evaluate, BabyStorePlainTextFailsSystemAndIgnoresRejected) {
  const auto report =
      evaluate("EcoSoft diapers keep babies dry.", baby_store_resolution(), baby_store_atoms());
  EXPECT_FALSE(report.system_compliant);
  EXPECT_TRUE(report.user_compliant);  // U2 was rejected, U1 compiles to nothing
  EXPECT_FALSE(report.all_pass);
  EXPECT_FALSE(report.hybrid);
}

TEST(Evaluate, EmptyOutputWithNoCommasPasses) {
  std::vector<AtomicInstruction> atoms{instruction("Your response should not contain any commas.")};
  Resolution r;
  r.selected = {0};
  EXPECT_TRUE(evaluate("", r, atoms).all_pass);
}

TEST(Evaluate, HybridNeedsPartialPassOnBothSides) {
  std::vector<AtomicInstruction> atoms{
      instruction("Your response should not contain any commas. Include the word \"sea\".", 0, 0),
      instruction("Answer in exactly three words. Include the word \"boat\".", 1, 1)};
  Resolution r;
  r.selected = {0, 1};
  // System: no commas ok, "sea" missing. User: three words ok, "boat" missing.
  const auto report = evaluate("waves crash loudly", r, atoms);
  EXPECT_FALSE(report.system_compliant);
  EXPECT_FALSE(report.user_compliant);
  EXPECT_TRUE(report.hybrid);
  EXPECT_FALSE(report.all_pass);
}

}  // namespace
}  // namespace hier

namespace hier {
namespace {

TEST(ConstraintTable, ExtendsBuiltinPatterns) {
  const ConstraintTable table = constraint_table_from_json(
      parse_json_text(testing::read_fixture("verifier_rules.json"), "rules"));
  AtomicInstruction atom;
  atom.id = 4;
  atom.content = "Answer in a single word. End your response with \"Over and out\".";
  EXPECT_TRUE(compile_constraints(atom).empty());
  const auto compiled = compile_constraints(atom, &table);
  ASSERT_EQ(compiled.size(), 2u);
  EXPECT_EQ(compiled[0].kind, ConstraintKind::kExactWordCount);
  EXPECT_EQ(compiled[0].count, 1);
  EXPECT_EQ(compiled[1].kind, ConstraintKind::kContainsPhrase);
  EXPECT_EQ(compiled[1].arg, "Over and out");
  EXPECT_EQ(compiled[1].source_instruction_id, 4);
}

TEST(ConstraintTable, RejectsBadRules) {
  ConstraintTable table;
  EXPECT_THROW(table.add({"(unclosed", ConstraintKind::kNoCommas, 0, ""}), Error);
  EXPECT_THROW(constraint_table_from_json(Json::parse(R"([{"pattern": "x", "kind": "Nope"}])")),
               Error);
  EXPECT_THROW(
      constraint_table_from_json(Json::parse(R"([{"pattern": "x", "kind": "NoCommas", "z": 1}])")),
      Error);
}

}  // namespace
}  // namespace hier
