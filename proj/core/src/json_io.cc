#include "hier/json_io.h"

#include <string>

#include "hier/errors.h"

namespace hier {
namespace {

[[noreturn]] void parse_fail(const std::string& what) {
  throw Error(ErrorCode::kParseError, what);
}

const Json& at(const Json& j, const char* key) {
  if (!j.is_object()) parse_fail(std::string("expected an object holding \"") + key + "\"");
  const auto it = j.find(key);
  if (it == j.end()) parse_fail(std::string("missing field \"") + key + "\"");
  return *it;
}

template <typename T>
T get(const Json& j, const char* key) {
  try {
    return at(j, key).get<T>();
  } catch (const nlohmann::json::exception&) {
    parse_fail(std::string("field \"") + key + "\" has the wrong type");
  }
}

template <typename T>
T get_or(const Json& j, const char* key, T fallback) {
  if (!j.is_object() || !j.contains(key)) return fallback;
  return get<T>(j, key);
}

void only_keys(const Json& j, std::initializer_list<std::string_view> known,
               std::string_view where) {
  if (!j.is_object()) parse_fail(std::string(where) + " must be an object");
  for (const auto& [key, _] : j.items()) {
    bool ok = false;
    for (std::string_view k : known) ok = ok || key == k;
    if (!ok) parse_fail("unexpected field \"" + key + "\" in " + std::string(where));
  }
}

Role role_field(const Json& j, const char* key) {
  const auto r = parse_role(get<std::string>(j, key));
  if (!r) parse_fail("unknown role " + at(j, key).dump());
  return *r;
}

std::string_view anchor_name(MarkerAnchor a) {
  return a == MarkerAnchor::kSentenceStart ? "sentence_start" : "anywhere";
}

std::string_view scope_name(ScanScope s) {
  return s == ScanScope::kAllPairs ? "all_pairs" : "cross_level_only";
}

std::string pair_key(std::size_t i, std::size_t j) {
  return std::to_string(i) + "," + std::to_string(j);
}

Json optional_number(const std::optional<double>& v) {
  return v ? Json(*v) : Json(nullptr);
}

std::optional<double> normalized_or_scalar(const Json& j, const char* scalar,
                                           const char* tokens) {
  if (j.contains(scalar) && !j[scalar].is_null()) return get<double>(j, scalar);
  if (j.contains(tokens) && !j[tokens].is_null()) {
    return length_normalized(get<std::vector<double>>(j, tokens));
  }
  return std::nullopt;
}

}  // namespace

Json parse_json_text(std::string_view text, std::string_view what) {
  try {
    return Json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    parse_fail(std::string(what) + ": " + e.what());
  }
}

Context context_from_json(const Json& j) {
  const Json& msgs = j.is_array() ? j : at(j, "messages");
  if (!msgs.is_array()) parse_fail("messages must be an array");
  Context c;
  for (std::size_t i = 0; i < msgs.size(); ++i) {
    const Json& m = msgs[i];
    only_keys(m, {"role", "content", "turn_index"}, "message");
    c.messages.push_back({role_field(m, "role"), get<std::string>(m, "content"),
                          get_or<int>(m, "turn_index", static_cast<int>(i))});
  }
  return c;
}

Json to_json(const Context& c) {
  Json msgs = Json::array();
  for (const Message& m : c.messages) {
    msgs.push_back(
        {{"role", role_name(m.role)}, {"content", m.content}, {"turn_index", m.turn_index}});
  }
  return {{"messages", std::move(msgs)}};
}

Json to_json(const AtomicInstruction& a) {
  return {{"id", a.id},
          {"content", a.content},
          {"authority", a.authority.value},
          {"source_role", role_name(a.source_role)},
          {"source_turn", a.source_turn},
          {"kind", kind_name(a.kind)}};
}

Json to_json(const std::vector<AtomicInstruction>& atoms) {
  Json out = Json::array();
  for (const AtomicInstruction& a : atoms) out.push_back(to_json(a));
  return out;
}

std::vector<AtomicInstruction> atoms_from_json(const Json& j) {
  const Json& list = j.is_array() ? j : at(j, "atoms");
  if (!list.is_array()) parse_fail("atoms must be an array");
  std::vector<AtomicInstruction> atoms;
  for (const Json& e : list) {
    only_keys(e, {"id", "content", "authority", "source_role", "source_turn", "kind"},
              "atom");
    AtomicInstruction a;
    a.id = get<int>(e, "id");
    a.content = get<std::string>(e, "content");
    a.authority.value = get<int>(e, "authority");
    a.source_role = e.contains("source_role") ? role_field(e, "source_role") : Role::kUser;
    a.source_turn = get_or<int>(e, "source_turn", 0);
    const auto kind = parse_kind(get_or<std::string>(e, "kind", "imperative"));
    if (!kind) parse_fail("unknown kind " + e["kind"].dump());
    a.kind = *kind;
    atoms.push_back(std::move(a));
  }
  return atoms;
}

Json to_json(const ConflictMatrix& m) {
  Json conflicts = Json::array();
  for (const auto& [i, j] : m.conflict_pairs()) conflicts.push_back({i, j});
  Json relations = Json::object();
  for (std::size_t i = 0; i < m.size(); ++i) {
    for (std::size_t j = 0; j < m.size(); ++j) {
      if (auto r = m.relation(i, j)) relations[pair_key(i, j)] = relation_name(*r);
    }
  }
  return {{"n", m.size()}, {"conflicts", std::move(conflicts)},
          {"relations", std::move(relations)}};
}

ConflictMatrix matrix_from_json(const Json& j) {
  only_keys(j, {"n", "conflicts", "relations"}, "conflict matrix");
  const long long n = get<long long>(j, "n");
  if (n < 0) parse_fail("matrix size must be non-negative");
  ConflictMatrix m(static_cast<std::size_t>(n));
  for (const Json& pair : get_or<Json>(j, "conflicts", Json::array())) {
    if (!pair.is_array() || pair.size() != 2 || !pair[0].is_number_integer() ||
        !pair[1].is_number_integer()) {
      parse_fail("conflict entries must be [i, j] integer pairs");
    }
    const long long a = pair[0].get<long long>(), b = pair[1].get<long long>();
    if (a < 0 || b < 0 || a >= n || b >= n) {
      throw Error(ErrorCode::kMatrixShapeMismatch,
                  "conflict pair " + pair.dump() + " outside a matrix of size " +
                      std::to_string(n));
    }
    if (a == b) {
      throw Error(ErrorCode::kInvalidConflictMatrix,
                  "instruction " + std::to_string(a) + " conflicts with itself");
    }
    m.add_conflict(static_cast<std::size_t>(a), static_cast<std::size_t>(b));
  }
  const Json relations = get_or<Json>(j, "relations", Json::object());
  for (const auto& [key, value] : relations.items()) {
    const std::size_t comma = key.find(',');
    std::size_t a = 0, b = 0;
    try {
      if (comma == std::string::npos) throw std::invalid_argument(key);
      a = std::stoul(key.substr(0, comma));
      b = std::stoul(key.substr(comma + 1));
    } catch (const std::exception&) {
      parse_fail("relation key \"" + key + "\" is not \"i,j\"");
    }
    if (a >= m.size() || b >= m.size()) parse_fail("relation key \"" + key + "\" out of range");
    const auto r = value.is_string() ? parse_relation(value.get<std::string>()) : std::nullopt;
    if (!r) parse_fail("unknown relation " + value.dump());
    m.set_relation(a, b, *r);
  }
  return m;
}

Json to_json(const Resolution& r) {
  return {{"selected", r.selected},
          {"rejected", r.rejected},
          {"objective", r.objective.counts},
          {"optimal", r.optimal},
          {"nodes_explored", r.nodes_explored},
          {"tie_broken", r.tie_broken}};
}

Resolution resolution_from_json(const Json& j) {
  Resolution r;
  r.selected = get<std::vector<int>>(j, "selected");
  r.rejected = get<std::vector<int>>(j, "rejected");
  r.objective.counts = get_or<std::vector<int>>(j, "objective", {});
  r.optimal = get_or<bool>(j, "optimal", true);
  r.nodes_explored = get_or<std::uint64_t>(j, "nodes_explored", 0);
  r.tie_broken = get_or<bool>(j, "tie_broken", false);
  return r;
}

Json to_json(const RefinedContext& r) {
  Json active = Json::array();
  for (const ActiveBlock& b : r.active_blocks) {
    active.push_back({{"id", b.id},
                      {"level", b.level.value},
                      {"kind", kind_name(b.kind)},
                      {"text", b.text}});
  }
  Json overruled = Json::array();
  for (const RejectionNotice& n : r.rejection_notices) {
    overruled.push_back({{"id", n.id},
                         {"text", n.text},
                         {"overruled_by_id", n.overruled_by_id},
                         {"overruled_by", n.overruled_by},
                         {"reason", reason_name(n.reason)}});
  }
  return {{"layout_version", kRefinedLayoutVersion},
          {"active", std::move(active)},
          {"overruled", std::move(overruled)},
          {"rendered", r.rendered}};
}

Json to_json(const HierarchyConfig& c) {
  return {{"depth", c.depth},
          {"tie_break", "lowest_index_first"},
          {"max_instructions", c.max_instructions}};
}

HierarchyConfig hierarchy_config_from_json(const Json& j) {
  only_keys(j, {"depth", "tie_break", "max_instructions"}, "hierarchy config");
  HierarchyConfig c;
  c.depth = get_or<int>(j, "depth", c.depth);
  const std::string tb = get_or<std::string>(j, "tie_break", "lowest_index_first");
  if (tb != "lowest_index_first") parse_fail("unknown tie_break \"" + tb + "\"");
  const long long cap = get_or<long long>(j, "max_instructions",
                                          static_cast<long long>(c.max_instructions));
  if (cap < 1) parse_fail("max_instructions must be positive");
  c.max_instructions = static_cast<std::size_t>(cap);
  validate(c);
  return c;
}

Json to_json(const AtomizerRules& r) {
  Json markers = Json::array();
  for (const ImperativeMarker& m : r.imperative_markers) {
    markers.push_back({{"phrase", m.phrase}, {"anchor", anchor_name(m.anchor)}});
  }
  return {{"version", r.version},
          {"imperative_markers", std::move(markers)},
          {"sentence_delimiters", r.sentence_delimiters},
          {"merge_adjacent", r.merge_adjacent},
          {"skip_assistant", r.skip_assistant}};
}

AtomizerRules atomizer_rules_from_json(const Json& j) {
  only_keys(j,
            {"version", "imperative_markers", "sentence_delimiters", "merge_adjacent",
             "skip_assistant"},
            "atomizer rules");
  AtomizerRules r;
  r.version = get<std::string>(j, "version");
  for (const Json& m : at(j, "imperative_markers")) {
    only_keys(m, {"phrase", "anchor"}, "imperative marker");
    const std::string anchor = get_or<std::string>(m, "anchor", "sentence_start");
    if (anchor != "sentence_start" && anchor != "anywhere") {
      parse_fail("unknown marker anchor \"" + anchor + "\"");
    }
    r.imperative_markers.push_back(
        {get<std::string>(m, "phrase"),
         anchor == "anywhere" ? MarkerAnchor::kAnywhere : MarkerAnchor::kSentenceStart});
  }
  r.sentence_delimiters = get_or<std::string>(j, "sentence_delimiters", r.sentence_delimiters);
  r.merge_adjacent = get_or<bool>(j, "merge_adjacent", r.merge_adjacent);
  r.skip_assistant = get_or<bool>(j, "skip_assistant", r.skip_assistant);
  validate(r);
  return r;
}

Json to_json(const DetectorSpec& s) {
  return {{"backend", s.backend == DetectorBackend::kRuleBased ? "rule" : "external"},
          {"parallelism", s.parallelism},
          {"scan_scope", scope_name(s.scan_scope)}};
}

DetectorSpec detector_spec_from_json(const Json& j) {
  only_keys(j, {"backend", "parallelism", "scan_scope"}, "detector spec");
  DetectorSpec s;
  const std::string backend = get_or<std::string>(j, "backend", "rule");
  if (backend == "rule") {
    s.backend = DetectorBackend::kRuleBased;
  } else if (backend == "external") {
    s.backend = DetectorBackend::kExternal;
  } else {
    parse_fail("unknown detector backend \"" + backend + "\"");
  }
  s.parallelism = get_or<int>(j, "parallelism", s.parallelism);
  const std::string scope = get_or<std::string>(j, "scan_scope", "all_pairs");
  if (scope == "all_pairs") {
    s.scan_scope = ScanScope::kAllPairs;
  } else if (scope == "cross_level_only") {
    s.scan_scope = ScanScope::kCrossLevelOnly;
  } else {
    parse_fail("unknown scan_scope \"" + scope + "\"");
  }
  validate(s);
  return s;
}

EndpointConfig endpoint_config_from_json(const Json& j) {
  only_keys(j,
            {"base_url", "model_name", "timeout_ms", "max_retries", "backoff_initial_ms",
             "backoff_multiplier", "backoff_max_ms"},
            "endpoint config");
  EndpointConfig c;
  c.base_url = get<std::string>(j, "base_url");
  c.model_name = get<std::string>(j, "model_name");
  c.timeout = std::chrono::milliseconds(get_or<long long>(j, "timeout_ms", c.timeout.count()));
  c.max_retries = get_or<int>(j, "max_retries", c.max_retries);
  c.backoff_initial = std::chrono::milliseconds(
      get_or<long long>(j, "backoff_initial_ms", c.backoff_initial.count()));
  c.backoff_multiplier = get_or<double>(j, "backoff_multiplier", c.backoff_multiplier);
  c.backoff_max =
      std::chrono::milliseconds(get_or<long long>(j, "backoff_max_ms", c.backoff_max.count()));
  c.api_key = api_key_from_env();
  validate(c);
  return c;
}

Json to_json(const EndpointConfig& c) {
  return {{"base_url", c.base_url},
          {"model_name", c.model_name},
          {"timeout_ms", c.timeout.count()},
          {"max_retries", c.max_retries},
          {"backoff_initial_ms", c.backoff_initial.count()},
          {"backoff_multiplier", c.backoff_multiplier},
          {"backoff_max_ms", c.backoff_max.count()}};
}

PreferenceScores scores_from_json(const Json& j) {
  only_keys(j,
            {"s_w", "s_l", "s_w_ref", "s_l_ref", "logp_w", "logp_l", "logp_w_ref",
             "logp_l_ref"},
            "preference scores");
  PreferenceScores s;
  const auto w = normalized_or_scalar(j, "s_w", "logp_w");
  const auto l = normalized_or_scalar(j, "s_l", "logp_l");
  if (!w || !l) parse_fail("scores need s_w/s_l or logp_w/logp_l");
  s.s_w = *w;
  s.s_l = *l;
  s.s_w_ref = normalized_or_scalar(j, "s_w_ref", "logp_w_ref");
  s.s_l_ref = normalized_or_scalar(j, "s_l_ref", "logp_l_ref");
  if (s.s_w_ref.has_value() != s.s_l_ref.has_value()) {
    parse_fail("reference scores must be given in pairs");
  }
  return s;
}

LossParams loss_params_from_json(const Json& j) {
  only_keys(j, {"tau", "gamma", "beta"}, "loss params");
  LossParams p;
  p.tau = get_or<double>(j, "tau", p.tau);
  p.gamma = get_or<double>(j, "gamma", p.gamma);
  p.beta = get_or<double>(j, "beta", p.beta);
  validate(p);
  return p;
}

Json to_json(const LossBreakdown& b) {
  return {{"l_pref", b.l_pref},     {"l_sl", b.l_sl},         {"l_kl", b.l_kl},
          {"total", b.total},       {"grad_s_w", b.grad_s_w}, {"grad_s_l", b.grad_s_l}};
}

ConstraintTable constraint_table_from_json(const Json& j) {
  const Json& list = j.is_object() && j.contains("rules") ? j.at("rules") : j;
  if (j.is_object()) only_keys(j, {"rules"}, "verifier rules");
  if (!list.is_array()) parse_fail("verifier rules must be an array");
  ConstraintTable table;
  for (const Json& e : list) {
    only_keys(e, {"pattern", "kind", "count", "arg"}, "verifier rule");
    CompileRule rule;
    rule.pattern = get<std::string>(e, "pattern");
    const std::string kind = get<std::string>(e, "kind");
    const auto k = parse_constraint_kind(kind);
    if (!k) parse_fail("unknown constraint kind \"" + kind + "\"");
    rule.kind = *k;
    rule.count = get_or<int>(e, "count", 0);
    rule.arg = get_or<std::string>(e, "arg", "");
    table.add(std::move(rule));
  }
  return table;
}

Json to_json(const Constraint& c) {
  Json out = {{"kind", constraint_kind_name(c.kind)}, {"describe", describe(c)}};
  out["source_instruction_id"] = c.source_instruction_id;
  return out;
}

Json to_json(const ComplianceReport& r) {
  Json per = Json::array();
  for (const ConstraintResult& cr : r.per_constraint) {
    Json e = to_json(cr.constraint);
    e["pass"] = cr.pass;
    per.push_back(std::move(e));
  }
  return {{"per_constraint", std::move(per)},
          {"all_pass", r.all_pass},
          {"system_compliant", r.system_compliant},
          {"user_compliant", r.user_compliant},
          {"refusal", r.refusal},
          {"hybrid", r.hybrid}};
}

Json to_json(const DetectorMetrics& m) {
  return {{"tp", m.tp},
          {"fp", m.fp},
          {"tn", m.tn},
          {"fn", m.fn},
          {"precision", optional_number(m.precision)},
          {"recall", optional_number(m.recall)},
          {"accuracy", m.accuracy},
          {"f1", optional_number(m.f1)}};
}

}  // namespace hier
