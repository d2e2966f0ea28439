#ifndef HIER_NLI_CLIENT_H_
#define HIER_NLI_CLIENT_H_

#include <chrono>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "hier/conflict_scan.h"

namespace hier {

inline constexpr std::string_view kApiKeyEnvVar = "HIER_RESOLVE_API_KEY";
inline constexpr std::string_view kPromptTemplateVersion = "nli-prompt/v1";

struct EndpointConfig {
  std::string base_url;
  std::string model_name;
  std::string api_key;
  std::chrono::milliseconds timeout{30000};
  int max_retries = 3;  // retries after the first attempt
  std::chrono::milliseconds backoff_initial{500};
  double backoff_multiplier = 2.0;
  std::chrono::milliseconds backoff_max{8000};
};

void validate(const EndpointConfig& config);

// Value of HIER_RESOLVE_API_KEY, empty if unset.
std::string api_key_from_env();

// The shipped prompt template with {premise} and {hypothesis} placeholders.
std::string_view prompt_template();
std::string render_prompt(std::string_view premise, std::string_view hypothesis);

// Chat-completions request body (model, temperature 0, one user message).
std::string build_request_body(const EndpointConfig& config, std::string_view premise,
                               std::string_view hypothesis);

// First whole-word label token in the text, case-insensitive.
std::optional<Relation> parse_label(std::string_view text);

struct ChatRequest {
  std::string premise;
  std::string hypothesis;
  std::string body;  // JSON
};

// status 0 means the request never completed (connect/read failure).
struct HttpResponse {
  int status = 0;
  std::string body;
};

class ChatTransport {
 public:
  virtual ~ChatTransport() = default;
  virtual HttpResponse post(const EndpointConfig& config,
                            const ChatRequest& request) const = 0;
};

// POST <base_url>/chat/completions with a bearer token.
class HttpTransport final : public ChatTransport {
 public:
  HttpResponse post(const EndpointConfig& config,
                    const ChatRequest& request) const override;
};

// Replays recorded replies, keyed by (premise, hypothesis):
//   {"default": {"content": "NEUTRAL"},
//    "responses": [{"premise": …, "hypothesis": …, "content": "CONTRADICTION"},
//                  {"premise": …, "hypothesis": …,
//                   "sequence": [{"status": 500}, {"content": "NEUTRAL"}]}]}
// A sequence is consumed one reply per call and its last reply repeats.
// Unmatched queries get the default, or status 0 when there is none.
class MockTransport final : public ChatTransport {
 public:
  static std::shared_ptr<MockTransport> from_json(std::string_view fixture);
  static std::shared_ptr<MockTransport> from_file(const std::string& path);

  HttpResponse post(const EndpointConfig& config,
                    const ChatRequest& request) const override;

  int calls() const;

 private:
  MockTransport() = default;
  using Key = std::pair<std::string, std::string>;
  std::map<Key, std::vector<HttpResponse>> replies_;
  std::optional<HttpResponse> default_;
  mutable std::map<Key, std::size_t> cursor_;
  mutable int calls_ = 0;
  mutable std::mutex mu_;
};

using Sleeper = std::function<void(std::chrono::milliseconds)>;
Sleeper real_sleeper();

// Retries transport failures, 429 and 5xx with exponential backoff plus
// jitter. A reply without a label token is retried once, then raises
// kMalformedResponse. Exhausted retries or another 4xx raise
// kBackendUnavailable.
Relation query_relation(const EndpointConfig& config, const ChatTransport& transport,
                        std::string_view premise, std::string_view hypothesis,
                        const Sleeper& sleep = real_sleeper());

class ExternalDetector final : public RelationDetector {
 public:
  ExternalDetector(EndpointConfig config, std::shared_ptr<const ChatTransport> transport,
                   Sleeper sleep = real_sleeper());

  Relation detect(const AtomicInstruction& premise,
                  const AtomicInstruction& hypothesis) const override;

 private:
  EndpointConfig config_;
  std::shared_ptr<const ChatTransport> transport_;
  Sleeper sleep_;
};

struct LabeledPair {
  std::string premise;
  std::string hypothesis;
  bool gold_conflict = false;
};

// Metrics with Contradiction as the positive class. Precision is absent when
// nothing was predicted positive, recall when no gold positives exist, f1
// when either is absent or both are zero.
struct DetectorMetrics {
  std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
  std::optional<double> precision;
  std::optional<double> recall;
  double accuracy = 0.0;
  std::optional<double> f1;
};

DetectorMetrics benchmark_detector(const RelationDetector& detector,
                                   const std::vector<LabeledPair>& pairs);

}  // namespace hier

#endif  // HIER_NLI_CLIENT_H_
