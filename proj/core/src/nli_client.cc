#include "hier/nli_client.h"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <random>
#include <sstream>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "hier/errors.h"
#include "text_util.h"

namespace hier {
namespace detail {
extern const char kNliPromptV1[];
}  // namespace detail

namespace {

using nlohmann::json;

void replace_all(std::string& s, std::string_view from, std::string_view to) {
  for (std::size_t at = s.find(from); at != std::string::npos;
       at = s.find(from, at + to.size())) {
    s.replace(at, from.size(), to);
  }
}

std::chrono::milliseconds backoff_delay(const EndpointConfig& c, int attempt) {
  double base = static_cast<double>(c.backoff_initial.count());
  for (int i = 0; i < attempt; ++i) base *= c.backoff_multiplier;
  base = std::min(base, static_cast<double>(c.backoff_max.count()));
  // Equal jitter: half fixed, half uniform.
  thread_local std::mt19937_64 rng{std::random_device{}()};
  std::uniform_real_distribution<double> half(0.0, base / 2);
  return std::chrono::milliseconds(static_cast<long long>(base / 2 + half(rng)));
}

std::optional<std::string> reply_content(const std::string& body) {
  const json doc = json::parse(body, nullptr, false);
  if (doc.is_discarded() || !doc.is_object()) return std::nullopt;
  const auto choices = doc.find("choices");
  if (choices == doc.end() || !choices->is_array() || choices->empty()) return std::nullopt;
  const json& first = choices->front();
  if (first.contains("message") && first["message"].contains("content") &&
      first["message"]["content"].is_string()) {
    return first["message"]["content"].get<std::string>();
  }
  if (first.contains("text") && first["text"].is_string()) {
    return first["text"].get<std::string>();
  }
  return std::nullopt;
}

HttpResponse mock_reply(const json& entry) {
  HttpResponse r;
  r.status = entry.value("status", 200);
  if (entry.contains("body")) {
    r.body = entry["body"].get<std::string>();
  } else if (entry.contains("content")) {
    r.body = json{{"choices", json::array({{{"message",
                                             {{"role", "assistant"},
                                              {"content", entry["content"]}}}}})}}
                 .dump();
  }
  return r;
}

}  // namespace

void validate(const EndpointConfig& c) {
  if (c.base_url.empty()) throw Error(ErrorCode::kInvalidArgument, "base_url is empty");
  if (c.model_name.empty()) throw Error(ErrorCode::kInvalidArgument, "model_name is empty");
  if (c.max_retries < 0) throw Error(ErrorCode::kInvalidArgument, "max_retries < 0");
  if (c.timeout.count() <= 0) throw Error(ErrorCode::kInvalidArgument, "timeout must be positive");
  if (c.backoff_initial.count() < 0 || c.backoff_max < c.backoff_initial ||
      c.backoff_multiplier < 1.0) {
    throw Error(ErrorCode::kInvalidArgument, "bad backoff settings");
  }
}

std::string api_key_from_env() {
  const char* v = std::getenv(std::string(kApiKeyEnvVar).c_str());
  return v ? v : "";
}

std::string_view prompt_template() { return detail::kNliPromptV1; }

std::string render_prompt(std::string_view premise, std::string_view hypothesis) {
  std::string out(prompt_template());
  // The premise slot precedes the hypothesis, so substituted text is never rescanned.
  replace_all(out, "{hypothesis}", hypothesis);
  const std::size_t at = out.find("{premise}");
  if (at != std::string::npos) out.replace(at, 9, premise);
  return out;
}

std::string build_request_body(const EndpointConfig& config, std::string_view premise,
                               std::string_view hypothesis) {
  json body = {
      {"model", config.model_name},
      {"temperature", 0},
      {"messages", json::array({{{"role", "user"},
                                 {"content", render_prompt(premise, hypothesis)}}})},
  };
  return body.dump();
}

std::optional<Relation> parse_label(std::string_view text) {
  std::string word;
  auto flush = [&]() -> std::optional<Relation> {
    if (word.empty()) return std::nullopt;
    std::optional<Relation> r;
    if (word == "entailment") r = Relation::kEntailment;
    if (word == "neutral") r = Relation::kNeutral;
    if (word == "contradiction") r = Relation::kContradiction;
    word.clear();
    return r;
  };
  for (char c : text) {
    if (std::isalpha(static_cast<unsigned char>(c))) {
      word.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    } else if (auto r = flush()) {
      return r;
    }
  }
  return flush();
}

HttpResponse HttpTransport::post(const EndpointConfig& config,
                                 const ChatRequest& request) const {
  const std::size_t scheme_end = config.base_url.find("://");
  const std::size_t path_start = config.base_url.find(
      '/', scheme_end == std::string::npos ? 0 : scheme_end + 3);
  const std::string origin = config.base_url.substr(0, path_start);
  std::string path =
      path_start == std::string::npos ? "" : config.base_url.substr(path_start);
  while (!path.empty() && path.back() == '/') path.pop_back();
  path += "/chat/completions";

  httplib::Client client(origin);
  const auto secs = std::chrono::duration_cast<std::chrono::seconds>(config.timeout);
  const auto usecs =
      std::chrono::duration_cast<std::chrono::microseconds>(config.timeout - secs);
  client.set_connection_timeout(secs.count(), usecs.count());
  client.set_read_timeout(secs.count(), usecs.count());
  client.set_write_timeout(secs.count(), usecs.count());
  httplib::Headers headers;
  if (!config.api_key.empty()) {
    headers.emplace("Authorization", "Bearer " + config.api_key);
  }
  auto res = client.Post(path, headers, request.body, "application/json");
  if (!res) return {0, httplib::to_string(res.error())};
  return {res->status, res->body};
}

std::shared_ptr<MockTransport> MockTransport::from_json(std::string_view fixture) {
  json doc;
  try {
    doc = json::parse(fixture);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kParseError, std::string("mock fixture: ") + e.what());
  }
  std::shared_ptr<MockTransport> m(new MockTransport());
  try {
    if (doc.contains("default")) m->default_ = mock_reply(doc["default"]);
    for (const json& entry : doc.value("responses", json::array())) {
      Key key{entry.at("premise").get<std::string>(),
              entry.at("hypothesis").get<std::string>()};
      std::vector<HttpResponse>& seq = m->replies_[key];
      if (entry.contains("sequence")) {
        for (const json& step : entry["sequence"]) seq.push_back(mock_reply(step));
      } else {
        seq.push_back(mock_reply(entry));
      }
      if (seq.empty()) throw Error(ErrorCode::kParseError, "mock fixture: empty sequence");
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kParseError, std::string("mock fixture: ") + e.what());
  }
  return m;
}

std::shared_ptr<MockTransport> MockTransport::from_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kInvalidArgument, "cannot open mock fixture " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return from_json(ss.str());
}

HttpResponse MockTransport::post(const EndpointConfig&, const ChatRequest& request) const {
  std::lock_guard lock(mu_);
  ++calls_;
  const Key key{request.premise, request.hypothesis};
  const auto it = replies_.find(key);
  if (it == replies_.end()) {
    return default_ ? *default_ : HttpResponse{0, "no recorded reply"};
  }
  std::size_t& cur = cursor_[key];
  const HttpResponse& r = it->second[std::min(cur, it->second.size() - 1)];
  ++cur;
  return r;
}

int MockTransport::calls() const {
  std::lock_guard lock(mu_);
  return calls_;
}

Sleeper real_sleeper() {
  return [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); };
}

Relation query_relation(const EndpointConfig& config, const ChatTransport& transport,
                        std::string_view premise, std::string_view hypothesis,
                        const Sleeper& sleep) {
  validate(config);
  const ChatRequest request{std::string(premise), std::string(hypothesis),
                            build_request_body(config, premise, hypothesis)};
  std::string last_failure = "no attempt made";
  bool malformed_seen = false;
  for (int attempt = 0; attempt <= config.max_retries; ++attempt) {
    if (attempt > 0) sleep(backoff_delay(config, attempt - 1));
    const HttpResponse res = transport.post(config, request);
    if (res.status == 0 || res.status == 429 || res.status >= 500) {
      last_failure = res.status == 0 ? "transport error: " + res.body
                                     : "HTTP " + std::to_string(res.status);
      continue;
    }
    if (res.status < 200 || res.status >= 300) {
      throw Error(ErrorCode::kBackendUnavailable,
                  "endpoint rejected request with HTTP " + std::to_string(res.status));
    }
    const std::optional<std::string> content = reply_content(res.body);
    if (content) {
      if (std::optional<Relation> r = parse_label(*content)) return *r;
    }
    if (malformed_seen) {
      throw Error(ErrorCode::kMalformedResponse,
                  content ? "no relation label in reply: " + *content
                          : "reply is not a chat completion");
    }
    malformed_seen = true;
    last_failure = "malformed reply";
  }
  throw Error(ErrorCode::kBackendUnavailable,
              "gave up after " + std::to_string(config.max_retries + 1) +
                  " attempts (" + last_failure + ")");
}

ExternalDetector::ExternalDetector(EndpointConfig config,
                                   std::shared_ptr<const ChatTransport> transport,
                                   Sleeper sleep)
    : config_(std::move(config)), transport_(std::move(transport)), sleep_(std::move(sleep)) {
  validate(config_);
  if (!transport_) throw Error(ErrorCode::kInvalidArgument, "no transport");
}

Relation ExternalDetector::detect(const AtomicInstruction& premise,
                                  const AtomicInstruction& hypothesis) const {
  return query_relation(config_, *transport_, premise.content, hypothesis.content, sleep_);
}

DetectorMetrics benchmark_detector(const RelationDetector& detector,
                                   const std::vector<LabeledPair>& pairs) {
  if (pairs.empty()) throw Error(ErrorCode::kInvalidArgument, "no labeled pairs");
  DetectorMetrics m;
  for (const LabeledPair& p : pairs) {
    AtomicInstruction a, b;
    a.content = p.premise;
    b.id = 1;
    b.content = p.hypothesis;
    const bool predicted = detector.detect(a, b) == Relation::kContradiction;
    if (predicted && p.gold_conflict) ++m.tp;
    if (predicted && !p.gold_conflict) ++m.fp;
    if (!predicted && !p.gold_conflict) ++m.tn;
    if (!predicted && p.gold_conflict) ++m.fn;
  }
  if (m.tp + m.fp > 0) m.precision = static_cast<double>(m.tp) / (m.tp + m.fp);
  if (m.tp + m.fn > 0) m.recall = static_cast<double>(m.tp) / (m.tp + m.fn);
  m.accuracy = static_cast<double>(m.tp + m.tn) / pairs.size();
  if (m.precision && m.recall && *m.precision + *m.recall > 0) {
    m.f1 = 2 * *m.precision * *m.recall / (*m.precision + *m.recall);
  }
  return m;
}

}  // namespace hier
