#include <algorithm>
#include <thread>

#include "descry/gateway.hpp"
#include "descry/parallel.hpp"

namespace descry {
namespace {

bool retryable(const BackendReply& r) {
  return r.status == 0 || r.status == 200 || r.status == 408 || r.status == 429 ||
         r.status >= 500;
}

std::string describe(const BackendReply& r) {
  std::string s = "HTTP " + std::to_string(r.status);
  if (!r.error.empty()) s += ": " + r.error;
  return s;
}

}  // namespace

std::chrono::milliseconds RetryPolicy::backoff_before(int attempt) const {
  auto delay = initial_backoff;
  for (int i = 2; i < attempt && delay < max_backoff; ++i) delay *= 2;
  return std::min(delay, max_backoff);
}

Gateway::Gateway(std::shared_ptr<JudgeBackend> backend, GatewayConfig config, Sleeper sleeper)
    : backend_(std::move(backend)),
      config_(std::move(config)),
      sleeper_(std::move(sleeper)),
      slots_(static_cast<std::ptrdiff_t>(std::max<std::size_t>(1, config_.max_in_flight))) {
  if (!backend_) throw ConfigError("gateway: no backend");
  if (config_.retry.max_attempts < 1) throw ConfigError("gateway: max_attempts must be >= 1");
  if (!sleeper_) sleeper_ = [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); };
  if (config_.cache_dir) cache_.emplace(*config_.cache_dir);
}

JudgeRequest Gateway::make_request(std::string prompt_text) const {
  JudgeRequest r;
  r.backend_id = backend_->id();
  r.model_name = config_.model_name;
  r.prompt_text = std::move(prompt_text);
  r.sampling = config_.sampling;
  return r;
}

JudgeResponse Gateway::complete(const JudgeRequest& request, bool bypass_cache) {
  if (request.prompt_text.empty()) throw InputError("judge request with empty prompt");
  if (cache_ && !bypass_cache) {
    if (auto hit = cache_->load(request)) {
      std::lock_guard lock(counters_mu_);
      ++counters_.cache_hits;
      return {std::move(*hit), std::nullopt, 0, true};
    }
  }

  BackendReply reply;
  for (int attempt = 1; attempt <= config_.retry.max_attempts; ++attempt) {
    if (attempt > 1) sleeper_(config_.retry.backoff_before(attempt));
    slots_.acquire();
    try {
      reply = backend_->send(request);
    } catch (...) {
      slots_.release();
      throw;
    }
    slots_.release();
    {
      std::lock_guard lock(counters_mu_);
      ++counters_.network_attempts;
    }
    if (reply.ok()) {
      if (cache_) cache_->store(request, reply.text);
      return {std::move(reply.text), std::nullopt, attempt, false};
    }
    if (reply.status == 401 || reply.status == 403) {
      throw ConfigError("judge backend rejected credentials (" + describe(reply) + ")");
    }
    if (!retryable(reply)) {
      throw TransportError("judge backend error (" + describe(reply) + ")", reply.status);
    }
  }
  throw TransportError("judge backend: retries exhausted after " +
                           std::to_string(config_.retry.max_attempts) + " attempts (" +
                           describe(reply) + ")",
                       reply.status);
}

std::vector<JudgeOutcome> Gateway::complete_batch(const std::vector<JudgeRequest>& requests) {
  std::vector<JudgeOutcome> out(requests.size());
  parallel_for(requests.size(), config_.max_in_flight, [&](std::size_t i) {
    try {
      out[i].response = complete(requests[i]);
    } catch (const std::exception& e) {
      out[i].error = e.what();
    }
  });
  return out;
}

GatewayCounters Gateway::counters() const {
  std::lock_guard lock(counters_mu_);
  return counters_;
}

}  // namespace descry
