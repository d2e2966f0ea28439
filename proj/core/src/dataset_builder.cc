#include "hier/dataset_builder.h"

#include <random>
#include <sstream>

#include <nlohmann/json.hpp>

#include "hier/errors.h"
#include "text_util.h"

namespace hier {
namespace {

using nlohmann::json;
using nlohmann::ordered_json;

constexpr std::string_view kLevelRoles[3] = {"system", "user", "tool"};

std::pair<int, int> levels_of(ConflictType t) {
  switch (t) {
    case ConflictType::kSystemOverUser: return {0, 1};
    case ConflictType::kSystemOverTool: return {0, 2};
    case ConflictType::kUserOverTool: return {1, 2};
  }
  return {0, 1};
}

AtomicInstruction as_atom(std::string_view text, int id) {
  AtomicInstruction a;
  a.id = id;
  a.content = std::string(text);
  return a;
}

bool contradicts(const RelationDetector& d, std::string_view a, std::string_view b) {
  const AtomicInstruction x = as_atom(a, 0), y = as_atom(b, 1);
  return d.detect(x, y) == Relation::kContradiction ||
         d.detect(y, x) == Relation::kContradiction;
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

std::string json_string(std::string_view s) { return json(std::string(s)).dump(); }

[[noreturn]] void parse_fail(const std::string& what) {
  throw Error(ErrorCode::kParseError, what);
}

template <typename T>
T field(const json& obj, const char* key) {
  if (!obj.is_object() || !obj.contains(key)) {
    parse_fail(std::string("missing field \"") + key + "\"");
  }
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception&) {
    parse_fail(std::string("field \"") + key + "\" has the wrong type");
  }
}

void reject_unknown(const json& obj, std::initializer_list<std::string_view> known,
                    std::string_view where) {
  for (const auto& [key, _] : obj.items()) {
    bool ok = false;
    for (std::string_view k : known) ok = ok || key == k;
    if (!ok) parse_fail("unexpected field \"" + key + "\" in " + std::string(where));
  }
}

json parse_json(std::string_view text, std::string_view what) {
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    parse_fail(std::string(what) + ": " + e.what());
  }
}

}  // namespace

std::string_view conflict_type_name(ConflictType t) {
  switch (t) {
    case ConflictType::kSystemOverUser: return "system_over_user";
    case ConflictType::kSystemOverTool: return "system_over_tool";
    case ConflictType::kUserOverTool: return "user_over_tool";
  }
  return "system_over_user";
}

std::optional<ConflictType> parse_conflict_type(std::string_view name) {
  for (ConflictType t : {ConflictType::kSystemOverUser, ConflictType::kSystemOverTool,
                         ConflictType::kUserOverTool}) {
    if (conflict_type_name(t) == name) return t;
  }
  return std::nullopt;
}

void validate(const SeedCase& c) {
  auto bad = [&](const std::string& what) {
    throw Error(ErrorCode::kInvalidArgument, "seed case " + c.id + ": " + what);
  };
  if (text::trim(c.seed_instruction).empty()) bad("seed_instruction is empty");
  if (c.aligned_variants.empty() && c.conflict_variants.empty()) {
    bad("needs at least one aligned or conflict variant");
  }
  if (c.accepted_response.empty()) bad("accepted_response is empty");
  if (c.rejected_response.empty()) bad("rejected_response is empty");
}

CaseValidation validate_case(const SeedCase& c, const RelationDetector& detector) {
  validate(c);
  CaseValidation v;
  std::vector<std::string_view> retained{c.seed_instruction};
  for (std::size_t i = 0; i < c.aligned_variants.size(); ++i) {
    const std::string& text = c.aligned_variants[i];
    std::optional<std::string_view> clash;
    for (std::string_view r : retained) {
      if (contradicts(detector, r, text)) {
        clash = r;
        break;
      }
    }
    if (clash) {
      v.dropped.push_back({false, i, "contradicts \"" + std::string(*clash) + "\""});
    } else {
      v.aligned_ok.push_back(i);
      retained.push_back(text);
    }
  }
  for (std::size_t i = 0; i < c.conflict_variants.size(); ++i) {
    if (contradicts(detector, c.seed_instruction, c.conflict_variants[i].text)) {
      v.conflict_ok.push_back(i);
    } else {
      v.dropped.push_back({true, i, "no contradiction with the seed"});
    }
  }
  return v;
}

std::string wrap_tool_content(std::string_view content) {
  return "<tool_output>" + std::string(content) + "</tool_output>";
}

void check_record(const TrainingRecord& r) {
  auto bad = [&](const std::string& what) {
    throw Error(ErrorCode::kInvalidArgument, "record " + r.id + ": " + what);
  };
  const TrainingMetadata& m = r.training_metadata;
  for (int a = 0; a < 3; ++a) {
    for (int b = 0; b < 3; ++b) {
      const int e = m.conflict_matrix[a][b];
      if (e != 0 && e != 1) bad("conflict_matrix entries must be 0 or 1");
      if (e == 1 && a >= b) bad("conflict_matrix must be strictly upper-triangular");
    }
  }
  if (m.hierarchy_weight != (m.is_conflict ? 2.0 : 1.0)) {
    bad("hierarchy_weight does not match is_conflict");
  }
  if (m.is_conflict != m.conflict_type.has_value()) {
    bad("conflict_type must be set exactly when is_conflict");
  }
  bool tool = false;
  for (const RecordMessage& msg : r.messages) tool = tool || msg.role == "tool";
  if (tool != m.has_tool) bad("has_tool does not match the messages");
}

TrainingRecord assemble_record(const SeedCase& c, const CaseValidation& v,
                               std::uint64_t assignment_seed,
                               const std::vector<HeldOutEntry>& held_out_pool) {
  if (v.aligned_ok.empty() && v.conflict_ok.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "seed case " + c.id + " has no retained variant");
  }
  std::mt19937_64 rng(assignment_seed);
  auto pick = [&](std::size_t n) { return static_cast<std::size_t>(rng() % n); };

  std::vector<std::string> buckets[3];
  if (c.tool_context) buckets[2].push_back(*c.tool_context);

  TrainingRecord r;
  TrainingMetadata& m = r.training_metadata;
  std::vector<std::size_t> aligned = v.aligned_ok;
  for (std::size_t i = aligned.size(); i > 1; --i) std::swap(aligned[i - 1], aligned[pick(i)]);

  if (!v.conflict_ok.empty()) {
    const ConflictVariant& cv = c.conflict_variants[v.conflict_ok[pick(v.conflict_ok.size())]];
    const auto [dominant, dominated] = levels_of(cv.type);
    buckets[dominant].push_back(c.seed_instruction);
    buckets[dominated].push_back(cv.text);
    m.is_conflict = true;
    m.conflict_type = cv.type;
    m.hierarchy_weight = 2.0;
    r.id = "conflict_sample_" + c.id;
    r.rejected_response = c.rejected_response;
  } else {
    buckets[0].push_back(c.seed_instruction);
    // Some aligned instruction always speaks for the user.
    buckets[1].push_back(c.aligned_variants[aligned.front()]);
    aligned.erase(aligned.begin());
    r.id = "aligned_sample_" + c.id;
    r.rejected_response = held_out_pool.empty()
                              ? c.rejected_response
                              : held_out_pool[pick(held_out_pool.size())].response;
  }

  const int levels_in_use = buckets[2].empty() ? 2 : 3;
  for (std::size_t i : aligned) {
    buckets[pick(static_cast<std::size_t>(levels_in_use))].push_back(c.aligned_variants[i]);
  }

  for (int level = 0; level < 3; ++level) {
    if (buckets[level].empty()) continue;
    std::string content;
    for (const std::string& piece : buckets[level]) {
      if (!content.empty()) content.push_back(' ');
      content += piece;
    }
    if (level == 2) {
      content = wrap_tool_content(content);
      m.has_tool = true;
    }
    r.messages.push_back({std::string(kLevelRoles[level]), std::move(content)});
  }
  r.messages.push_back({"assistant", c.accepted_response});
  check_record(r);
  return r;
}

std::uint64_t case_seed(std::uint64_t corpus_seed, std::string_view case_id) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (unsigned char ch : case_id) {
    h ^= ch;
    h *= 0x100000001B3ULL;
  }
  return splitmix64(corpus_seed ^ h);
}

CorpusSummary build_corpus(const std::vector<SeedCase>& cases,
                           const RelationDetector& detector, std::uint64_t seed,
                           const std::vector<HeldOutEntry>& held_out_pool,
                           const CorpusCallbacks& callbacks,
                           const std::set<std::string>& already_done) {
  CorpusSummary summary;
  for (const SeedCase& c : cases) {
    if (already_done.count(c.id)) {
      ++summary.n_skipped;
      continue;
    }
    const CaseValidation v = validate_case(c, detector);
    if (callbacks.on_drop) {
      for (const DroppedVariant& d : v.dropped) callbacks.on_drop(c, d);
    }
    if (v.aligned_ok.empty() && v.conflict_ok.empty()) {
      ++summary.n_dropped;
    } else {
      const TrainingRecord r = assemble_record(c, v, case_seed(seed, c.id), held_out_pool);
      ++(r.training_metadata.is_conflict ? summary.n_conflict : summary.n_aligned);
      if (callbacks.on_record) callbacks.on_record(r);
    }
    if (callbacks.on_case_done) callbacks.on_case_done(c);
  }
  return summary;
}

std::string to_pretty_json(const TrainingRecord& r) {
  const TrainingMetadata& m = r.training_metadata;
  std::ostringstream out;
  out << "{\n";
  out << "    \"id\": " << json_string(r.id) << ",\n";
  out << "    \"messages\": [";
  for (std::size_t i = 0; i < r.messages.size(); ++i) {
    out << (i ? "," : "") << "\n        {\n";
    out << "            \"role\": " << json_string(r.messages[i].role) << ",\n";
    out << "            \"content\": " << json_string(r.messages[i].content) << "\n";
    out << "        }";
  }
  out << (r.messages.empty() ? "]" : "\n    ]") << ",\n";
  out << "    \"training_metadata\": {\n";
  out << "        \"hierarchy_weight\": " << json(m.hierarchy_weight).dump() << ",\n";
  out << "        \"is_conflict\": " << (m.is_conflict ? "true" : "false") << ",\n";
  out << "        \"has_tool\": " << (m.has_tool ? "true" : "false") << ",\n";
  out << "        \"conflict_type\": "
      << (m.conflict_type ? json_string(conflict_type_name(*m.conflict_type)) : "null") << ",\n";
  out << "        \"conflict_matrix\": [\n";
  for (int a = 0; a < 3; ++a) {
    const auto& row = m.conflict_matrix[a];
    out << "            [" << row[0] << ", " << row[1] << ", " << row[2] << "]"
        << (a < 2 ? ",\n" : "\n");
  }
  out << "        ]\n";
  out << "    }";
  if (r.rejected_response) {
    out << ",\n    \"rejected_response\": " << json_string(*r.rejected_response);
  }
  out << "\n}";
  return out.str();
}

std::string to_compact_json(const TrainingRecord& r) {
  const TrainingMetadata& m = r.training_metadata;
  ordered_json doc;
  doc["id"] = r.id;
  doc["messages"] = ordered_json::array();
  for (const RecordMessage& msg : r.messages) {
    doc["messages"].push_back({{"role", msg.role}, {"content", msg.content}});
  }
  ordered_json meta;
  meta["hierarchy_weight"] = m.hierarchy_weight;
  meta["is_conflict"] = m.is_conflict;
  meta["has_tool"] = m.has_tool;
  meta["conflict_type"] =
      m.conflict_type ? ordered_json(conflict_type_name(*m.conflict_type)) : ordered_json();
  meta["conflict_matrix"] = m.conflict_matrix;
  doc["training_metadata"] = std::move(meta);
  if (r.rejected_response) doc["rejected_response"] = *r.rejected_response;
  return doc.dump();
}

TrainingRecord parse_training_record(std::string_view json_text) {
  const json doc = parse_json(json_text, "training record");
  if (!doc.is_object()) parse_fail("training record must be an object");
  reject_unknown(doc, {"id", "messages", "training_metadata", "rejected_response"},
                 "training record");
  TrainingRecord r;
  r.id = field<std::string>(doc, "id");
  const json& msgs = doc.at("messages");
  if (!msgs.is_array()) parse_fail("messages must be an array");
  for (const json& msg : msgs) {
    reject_unknown(msg, {"role", "content"}, "message");
    r.messages.push_back({field<std::string>(msg, "role"), field<std::string>(msg, "content")});
  }
  if (!doc.contains("training_metadata")) parse_fail("missing field \"training_metadata\"");
  const json& meta = doc["training_metadata"];
  reject_unknown(meta,
                 {"hierarchy_weight", "is_conflict", "has_tool", "conflict_type",
                  "conflict_matrix"},
                 "training_metadata");
  TrainingMetadata& m = r.training_metadata;
  m.hierarchy_weight = field<double>(meta, "hierarchy_weight");
  m.is_conflict = field<bool>(meta, "is_conflict");
  m.has_tool = field<bool>(meta, "has_tool");
  if (!meta.contains("conflict_type")) parse_fail("missing field \"conflict_type\"");
  if (!meta["conflict_type"].is_null()) {
    const auto t = parse_conflict_type(field<std::string>(meta, "conflict_type"));
    if (!t) parse_fail("unknown conflict_type " + meta["conflict_type"].dump());
    m.conflict_type = *t;
  }
  m.conflict_matrix = field<RoleMatrix>(meta, "conflict_matrix");
  if (doc.contains("rejected_response")) {
    r.rejected_response = field<std::string>(doc, "rejected_response");
  }
  return r;
}

SeedCase parse_seed_case(std::string_view json_line, std::size_t position) {
  const json doc = parse_json(json_line, "seed case " + std::to_string(position));
  if (!doc.is_object()) parse_fail("seed case must be an object");
  reject_unknown(doc,
                 {"id", "seed_instruction", "aligned_variants", "conflict_variants",
                  "accepted_response", "rejected_response", "tool_context", "label"},
                 "seed case");
  SeedCase c;
  if (!doc.contains("id")) {
    c.id = std::to_string(position);
  } else if (doc["id"].is_string()) {
    c.id = doc["id"].get<std::string>();
  } else if (doc["id"].is_number_integer()) {
    c.id = std::to_string(doc["id"].get<long long>());
  } else {
    parse_fail("seed case id must be a string or integer");
  }
  c.seed_instruction = field<std::string>(doc, "seed_instruction");
  if (doc.contains("aligned_variants")) {
    c.aligned_variants = field<std::vector<std::string>>(doc, "aligned_variants");
  }
  if (doc.contains("conflict_variants")) {
    for (const json& cv : doc["conflict_variants"]) {
      reject_unknown(cv, {"text", "conflict_type"}, "conflict variant");
      const auto t = parse_conflict_type(field<std::string>(cv, "conflict_type"));
      if (!t) parse_fail("unknown conflict_type " + cv["conflict_type"].dump());
      c.conflict_variants.push_back({field<std::string>(cv, "text"), *t});
    }
  }
  c.accepted_response = field<std::string>(doc, "accepted_response");
  c.rejected_response = field<std::string>(doc, "rejected_response");
  if (doc.contains("tool_context")) c.tool_context = field<std::string>(doc, "tool_context");
  validate(c);
  return c;
}

std::vector<SeedCase> parse_seed_cases_jsonl(std::string_view text) {
  std::vector<SeedCase> out;
  std::istringstream in{std::string(text)};
  std::string line;
  std::set<std::string> ids;
  while (std::getline(in, line)) {
    if (text::trim(line).empty()) continue;
    out.push_back(parse_seed_case(line, out.size()));
    if (!ids.insert(out.back().id).second) parse_fail("duplicate seed case id " + out.back().id);
  }
  return out;
}

std::vector<HeldOutEntry> parse_held_out_pool(std::string_view json_text) {
  std::vector<json> items;
  const std::string_view trimmed = text::trim(json_text);
  if (!trimmed.empty() && trimmed.front() == '[') {
    for (const json& e : parse_json(trimmed, "held-out pool")) items.push_back(e);
  } else {
    std::istringstream in{std::string(json_text)};
    std::string line;
    while (std::getline(in, line)) {
      if (!text::trim(line).empty()) items.push_back(parse_json(line, "held-out pool"));
    }
  }
  std::vector<HeldOutEntry> pool;
  for (const json& e : items) {
    reject_unknown(e, {"instruction", "response"}, "held-out entry");
    pool.push_back({field<std::string>(e, "instruction"), field<std::string>(e, "response")});
  }
  return pool;
}

}  // namespace hier
