#pragma once

#include <chrono>
#include <filesystem>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <semaphore>
#include <string>
#include <string_view>
#include <type_traits>
#include <vector>

#include "descry/error.hpp"
#include "json.hpp"

namespace descry {

inline constexpr std::string_view kDefaultJudgeModel = "gpt-3.5-turbo-0125";
inline constexpr std::string_view kApiKeyEnvVar = "DESCRY_API_KEY";

struct Sampling {
  double temperature = 0.0;
  int max_tokens = 1024;
};

struct JudgeRequest {
  std::string backend_id;
  std::string model_name{kDefaultJudgeModel};
  std::string prompt_text;
  Sampling sampling;

  /// SHA-256 over a length-prefixed encoding of every field.
  std::string cache_key() const;
  nlohmann::json to_json() const;
};

struct JudgeResponse {
  std::string raw_text;
  std::optional<nlohmann::json> parsed;
  int attempt_count = 0;  // network attempts; 0 when served from cache
  bool from_cache = false;
};

/// Result of one backend round trip. status 0 means no HTTP response.
struct BackendReply {
  int status = 0;
  std::string text;
  std::string error;

  bool ok() const { return status == 200 && error.empty(); }
};

class JudgeBackend {
 public:
  virtual ~JudgeBackend() = default;
  virtual std::string id() const = 0;
  virtual BackendReply send(const JudgeRequest& request) = 0;
};

/// Chat-completion client: POST {base_url}/chat/completions with a bearer token.
class HttpChatBackend : public JudgeBackend {
 public:
  HttpChatBackend(std::string base_url, std::string api_key,
                  std::chrono::seconds timeout = std::chrono::seconds(120));
  /// Reads the token from DESCRY_API_KEY; throws ConfigError when unset.
  static std::unique_ptr<HttpChatBackend> from_env(std::string base_url);

  std::string id() const override;
  BackendReply send(const JudgeRequest& request) override;

 private:
  std::string scheme_host_port_;
  std::string path_prefix_;
  std::string base_url_;
  std::string api_key_;
  std::chrono::seconds timeout_;
};

/// Offline deterministic judge.
///  - extraction: the embedded description split on '.', trimmed, empties
///    dropped, capped at 10.
///  - entailment: "entailment" iff normalize(event) is a substring of
///    normalize(description), otherwise "neutral".
///  - vqa: match iff normalize(prediction) == normalize(answer); score 5 or 1.
/// normalize() lowercases, removes ASCII punctuation and collapses whitespace.
/// Throws InputError for prompts not rendered from a known template.
class StubJudgeBackend : public JudgeBackend {
 public:
  explicit StubJudgeBackend(std::string vqa_template = {});
  std::string id() const override { return "stub"; }
  BackendReply send(const JudgeRequest& request) override;

 private:
  std::string vqa_template_;
};

std::string stub_normalize(std::string_view text);
JudgeResponse stub_judge(const JudgeRequest& request, std::string_view vqa_template = {});

/// One file per cache key: <dir>/<key>.json holding the request and raw response.
class JudgeCache {
 public:
  explicit JudgeCache(std::filesystem::path dir);
  std::optional<std::string> load(const JudgeRequest& request) const;
  void store(const JudgeRequest& request, const std::string& raw_text) const;
  const std::filesystem::path& dir() const { return dir_; }

 private:
  std::filesystem::path dir_;
};

struct RetryPolicy {
  int max_attempts = 5;
  std::chrono::milliseconds initial_backoff{1000};
  std::chrono::milliseconds max_backoff{30000};

  std::chrono::milliseconds backoff_before(int attempt) const;  // attempt >= 2
};

struct GatewayConfig {
  std::string model_name{kDefaultJudgeModel};
  Sampling sampling;
  RetryPolicy retry;
  std::size_t max_in_flight = 8;
  std::optional<std::filesystem::path> cache_dir;
};

struct GatewayCounters {
  std::size_t network_attempts = 0;
  std::size_t cache_hits = 0;
  std::size_t reasks = 0;
};

template <class T>
struct ParsedCompletion {
  T value;
  JudgeResponse response;
  bool reasked = false;
};

struct JudgeOutcome {
  std::optional<JudgeResponse> response;
  std::string error;
};

class Gateway {
 public:
  using Sleeper = std::function<void(std::chrono::milliseconds)>;

  Gateway(std::shared_ptr<JudgeBackend> backend, GatewayConfig config, Sleeper sleeper = {});

  JudgeRequest make_request(std::string prompt_text) const;

  /// Cache hit: stored text, from_cache=true, no backend call. Miss (or
  /// bypass_cache): calls the backend with retries and stores the reply.
  /// Throws ConfigError on 401/403 and TransportError when retries run out.
  JudgeResponse complete(const JudgeRequest& request, bool bypass_cache = false);

  /// N requests in, N outcomes out, input order, at most max_in_flight concurrent.
  std::vector<JudgeOutcome> complete_batch(const std::vector<JudgeRequest>& requests);

  /// complete() then parse(raw_text). On ParseError, re-asks once with a
  /// fresh completion that bypasses (and then replaces) the cache entry.
  /// A second ParseError propagates.
  template <class Parser>
  auto complete_parsed(const JudgeRequest& request, Parser&& parse)
      -> ParsedCompletion<std::invoke_result_t<Parser&, std::string_view>>;

  const GatewayConfig& config() const { return config_; }
  const JudgeBackend& backend() const { return *backend_; }
  GatewayCounters counters() const;

 private:
  std::shared_ptr<JudgeBackend> backend_;
  GatewayConfig config_;
  Sleeper sleeper_;
  std::optional<JudgeCache> cache_;
  std::counting_semaphore<> slots_;
  mutable std::mutex counters_mu_;
  GatewayCounters counters_;
};

template <class Parser>
auto Gateway::complete_parsed(const JudgeRequest& request, Parser&& parse)
    -> ParsedCompletion<std::invoke_result_t<Parser&, std::string_view>> {
  auto first = complete(request);
  try {
    auto value = parse(std::string_view(first.raw_text));
    return {std::move(value), std::move(first), false};
  } catch (const ParseError&) {
  }
  {
    std::lock_guard lock(counters_mu_);
    ++counters_.reasks;
  }
  auto fresh = complete(request, /*bypass_cache=*/true);
  auto value = parse(std::string_view(fresh.raw_text));
  return {std::move(value), std::move(fresh), true};
}

}  // namespace descry
