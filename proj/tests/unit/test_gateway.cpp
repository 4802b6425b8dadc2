#include <gtest/gtest.h>

#include <thread>

#include "descry/error.hpp"
#include "descry/gateway.hpp"
#include "descry/json_lines.hpp"
#include "descry/prompts.hpp"
#include "descry/response_parse.hpp"
#include "fake_backend.hpp"
#include "httplib.h"
#include "synthetic.hpp"

namespace descry {
namespace {

using testing::ScriptedBackend;
using testing::TempDir;
using namespace std::chrono_literals;

std::size_t count_files(const std::filesystem::path& dir) {
  if (!std::filesystem::exists(dir)) return 0;
  std::size_t n = 0;
  for (const auto& e : std::filesystem::directory_iterator(dir)) n += e.is_regular_file();
  return n;
}

// A local chat-completion endpoint whose replies are scripted per test.
class SimulatedEndpoint {
 public:
  explicit SimulatedEndpoint(std::vector<std::pair<int, std::string>> replies) : replies_(std::move(replies)) {
    server_.Post("/v1/chat/completions", [this](const httplib::Request& req, httplib::Response& res) {
      auth_headers.push_back(req.get_header_value("Authorization"));
      bodies.push_back(req.body);
      auto i = std::min(hits++, replies_.size() - 1);
      res.status = replies_[i].first;
      res.set_content(replies_[i].second, "application/json");
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~SimulatedEndpoint() {
    server_.stop();
    thread_.join();
  }
  std::string base_url() const { return "http://127.0.0.1:" + std::to_string(port_) + "/v1"; }

  std::size_t hits = 0;
  std::vector<std::string> auth_headers;
  std::vector<std::string> bodies;

 private:
  std::vector<std::pair<int, std::string>> replies_;
  httplib::Server server_;
  std::thread thread_;
  int port_ = 0;
};

std::string chat_body(const std::string& content) {
  return nlohmann::json{{"choices", {{{"message", {{"role", "assistant"}, {"content", content}}}}}}}.dump();
}

TEST(HttpBackend, RateLimitThenSuccess) {
  SimulatedEndpoint ep({{429, R"({"error":"slow down"})"}, {200, chat_body("hello")}});
  std::vector<std::chrono::milliseconds> sleeps;
  Gateway gw(std::make_shared<HttpChatBackend>(ep.base_url(), "k-123"), GatewayConfig{},
             [&](std::chrono::milliseconds d) { sleeps.push_back(d); });
  auto r = gw.complete(gw.make_request("hi"));
  EXPECT_EQ(r.raw_text, "hello");
  EXPECT_EQ(r.attempt_count, 2);
  EXPECT_FALSE(r.from_cache);
  ASSERT_EQ(sleeps.size(), 1u);
  EXPECT_EQ(sleeps[0], 1000ms);
  ASSERT_EQ(ep.auth_headers.size(), 2u);
  EXPECT_EQ(ep.auth_headers[0], "Bearer k-123");
  auto body = nlohmann::json::parse(ep.bodies[0]);
  EXPECT_EQ(body["model"], "gpt-3.5-turbo-0125");
  EXPECT_EQ(body["temperature"], 0.0);
  EXPECT_EQ(body["messages"][0]["content"], "hi");
}

TEST(HttpBackend, InvalidKeyIsConfigErrorAndNothingCached) {
  SimulatedEndpoint ep({{401, R"({"error":"invalid api key"})"}});
  TempDir tmp;
  Gateway gw(std::make_shared<HttpChatBackend>(ep.base_url(), "bad"), testing::fast_config(tmp / "cache"),
             testing::no_sleep());
  EXPECT_THROW(gw.complete(gw.make_request("hi")), ConfigError);
  EXPECT_EQ(ep.hits, 1u);
  EXPECT_EQ(count_files(tmp / "cache"), 0u);
}

TEST(HttpBackend, MalformedBodyIsRetried) {
  SimulatedEndpoint ep({{200, R"({"choices": []})"}, {200, chat_body("ok")}});
  Gateway gw(std::make_shared<HttpChatBackend>(ep.base_url(), "k"), GatewayConfig{}, testing::no_sleep());
  auto r = gw.complete(gw.make_request("hi"));
  EXPECT_EQ(r.raw_text, "ok");
  EXPECT_EQ(r.attempt_count, 2);
}

TEST(HttpBackend, UnreachableHostExhaustsRetries) {
  int port;
  {
    httplib::Server probe;
    port = probe.bind_to_any_port("127.0.0.1");
  }
  GatewayConfig cfg;
  cfg.retry.max_attempts = 2;
  Gateway gw(std::make_shared<HttpChatBackend>("http://127.0.0.1:" + std::to_string(port), "k", 2s), cfg,
             testing::no_sleep());
  try {
    gw.complete(gw.make_request("hi"));
    FAIL();
  } catch (const TransportError& e) {
    EXPECT_EQ(e.last_status(), 0);
  }
}

TEST(HttpBackend, FromEnvRequiresKey) {
  unsetenv(std::string(kApiKeyEnvVar).c_str());
  EXPECT_THROW(HttpChatBackend::from_env("http://localhost"), ConfigError);
  setenv(std::string(kApiKeyEnvVar).c_str(), "abc", 1);
  EXPECT_NO_THROW(HttpChatBackend::from_env("http://localhost"));
  unsetenv(std::string(kApiKeyEnvVar).c_str());
}

TEST(Gateway, SameRequestTwiceServedFromCache) {
  TempDir tmp;
  auto backend = std::make_shared<testing::CountingStub>();
  Gateway gw(backend, testing::fast_config(tmp / "cache"));
  auto req = gw.make_request(render_prompt(TemplateId::EventExtraction, {{"description", "A dog runs."}}));
  auto a = gw.complete(req);
  auto b = gw.complete(req);
  EXPECT_FALSE(a.from_cache);
  EXPECT_TRUE(b.from_cache);
  EXPECT_EQ(a.raw_text, b.raw_text);
  EXPECT_EQ(b.attempt_count, 0);
  EXPECT_EQ(backend->calls, 1);

  Gateway fresh(backend, testing::fast_config(tmp / "cache"));
  EXPECT_TRUE(fresh.complete(req).from_cache);
  EXPECT_EQ(backend->calls, 1);
  EXPECT_EQ(fresh.counters().cache_hits, 1u);
}

TEST(Gateway, CacheKeyCoversEveryField) {
  JudgeRequest base;
  base.backend_id = "b";
  base.prompt_text = "p";
  auto variants = std::vector<JudgeRequest>(5, base);
  variants[0].backend_id = "c";
  variants[1].model_name = "other";
  variants[2].prompt_text = "q";
  variants[3].sampling.temperature = 0.5;
  variants[4].sampling.max_tokens = 7;
  for (const auto& v : variants) EXPECT_NE(v.cache_key(), base.cache_key());
  // Length prefixing: moving a byte between fields changes the key.
  JudgeRequest x = base, y = base;
  x.backend_id = "ab";
  x.model_name = "c";
  y.backend_id = "a";
  y.model_name = "bc";
  EXPECT_NE(x.cache_key(), y.cache_key());
  EXPECT_EQ(base.cache_key(), JudgeRequest(base).cache_key());
}

TEST(Gateway, NonRetryableStatusFailsFast) {
  auto backend = std::make_shared<ScriptedBackend>(std::deque<BackendReply>{{400, "", "bad request"}});
  Gateway gw(backend, GatewayConfig{}, testing::no_sleep());
  EXPECT_THROW(gw.complete(gw.make_request("x")), TransportError);
  EXPECT_EQ(backend->calls, 1);
}

TEST(Gateway, ForbiddenIsConfigError) {
  auto backend = std::make_shared<ScriptedBackend>(std::deque<BackendReply>{{403, "", "no"}});
  Gateway gw(backend, GatewayConfig{}, testing::no_sleep());
  EXPECT_THROW(gw.complete(gw.make_request("x")), ConfigError);
}

TEST(Gateway, BackoffDoublesAndCaps) {
  auto backend = std::make_shared<ScriptedBackend>(std::deque<BackendReply>{});
  std::vector<std::chrono::milliseconds> sleeps;
  Gateway gw(backend, GatewayConfig{}, [&](std::chrono::milliseconds d) { sleeps.push_back(d); });
  try {
    gw.complete(gw.make_request("x"));
    FAIL();
  } catch (const TransportError& e) {
    EXPECT_EQ(e.last_status(), 500);
  }
  EXPECT_EQ(backend->calls, 5);
  EXPECT_EQ(sleeps, (std::vector<std::chrono::milliseconds>{1000ms, 2000ms, 4000ms, 8000ms}));
  RetryPolicy p;
  EXPECT_EQ(p.backoff_before(6), 16000ms);
  EXPECT_EQ(p.backoff_before(7), 30000ms);
  EXPECT_EQ(p.backoff_before(20), 30000ms);
}

TEST(Gateway, ReaskOnceOnParseFailureAndReplaceCache) {
  TempDir tmp;
  auto backend = std::make_shared<ScriptedBackend>(
      std::deque<BackendReply>{{200, "sorry, no json", ""}, {200, R"({"events": ["a"]})", ""}});
  Gateway gw(backend, testing::fast_config(tmp / "c"));
  auto req = gw.make_request("extract");
  auto r = gw.complete_parsed(req, parse_extraction_response);
  EXPECT_TRUE(r.reasked);
  EXPECT_EQ(r.value, std::vector<std::string>{"a"});
  EXPECT_EQ(gw.counters().reasks, 1u);
  auto again = gw.complete(req);
  EXPECT_TRUE(again.from_cache);
  EXPECT_EQ(again.raw_text, R"({"events": ["a"]})");
}

TEST(Gateway, SecondParseFailurePropagates) {
  auto backend = std::make_shared<ScriptedBackend>(
      std::deque<BackendReply>{{200, "nope", ""}, {200, "still nope", ""}});
  Gateway gw(backend, GatewayConfig{});
  EXPECT_THROW(gw.complete_parsed(gw.make_request("x"), parse_extraction_response), ParseError);
  EXPECT_EQ(backend->calls, 2);
}

TEST(Gateway, BatchKeepsOrderAndBoundsConcurrency) {
  std::atomic<int> in_flight{0}, peak{0};
  auto backend = std::make_shared<ScriptedBackend>(std::deque<BackendReply>{}, [&](const JudgeRequest& r) {
    int now = ++in_flight;
    int prev = peak.load();
    while (now > prev && !peak.compare_exchange_weak(prev, now)) {
    }
    std::this_thread::sleep_for(2ms);
    --in_flight;
    return BackendReply{200, "echo:" + r.prompt_text, ""};
  });
  GatewayConfig cfg;
  cfg.max_in_flight = 3;
  Gateway gw(backend, cfg);
  std::vector<JudgeRequest> reqs;
  for (int i = 0; i < 40; ++i) reqs.push_back(gw.make_request("p" + std::to_string(i)));
  auto out = gw.complete_batch(reqs);
  ASSERT_EQ(out.size(), 40u);
  for (int i = 0; i < 40; ++i) {
    ASSERT_TRUE(out[i].response);
    EXPECT_EQ(out[i].response->raw_text, "echo:p" + std::to_string(i));
  }
  EXPECT_LE(peak.load(), 3);
}

TEST(Gateway, BatchReportsPerRequestErrors) {
  auto backend = std::make_shared<ScriptedBackend>(std::deque<BackendReply>{}, [](const JudgeRequest& r) {
    return r.prompt_text == "bad" ? BackendReply{400, "", "rejected"} : BackendReply{200, "ok", ""};
  });
  Gateway gw(backend, GatewayConfig{}, testing::no_sleep());
  auto out = gw.complete_batch({gw.make_request("good"), gw.make_request("bad")});
  EXPECT_TRUE(out[0].response);
  EXPECT_FALSE(out[1].response);
  EXPECT_NE(out[1].error.find("400"), std::string::npos);
}

TEST(Gateway, EmptyPromptRejected) {
  Gateway gw(std::make_shared<StubJudgeBackend>(), GatewayConfig{});
  EXPECT_THROW(gw.complete(gw.make_request("")), InputError);
}

TEST(StubJudge, SplitsAndCaps) {
  auto split = [](const std::string& d) {
    JudgeRequest r;
    r.prompt_text = render_prompt(TemplateId::EventExtraction, {{"description", d}});
    return parse_extraction_response(stub_judge(r).raw_text);
  };
  EXPECT_EQ(split("A dog runs. A cat sleeps."), (std::vector<std::string>{"A dog runs", "A cat sleeps"}));
  std::string twelve;
  for (int i = 1; i <= 12; ++i) twelve += "Event " + std::to_string(i) + ". ";
  EXPECT_EQ(split(twelve).size(), 10u);
}

TEST(StubJudge, SubstringEntailment) {
  auto classify = [](const std::string& d, const std::string& events) {
    JudgeRequest r;
    r.prompt_text = render_prompt(TemplateId::Entailment, {{"description", d}, {"events", events}});
    return parse_entailment_response(stub_judge(r).raw_text);
  };
  auto v = classify("A dog runs fast.", R"(["a dog runs","a cat sleeps","A DOG, runs!"])");
  ASSERT_EQ(v.size(), 3u);
  EXPECT_EQ(v[0].relationship, Relationship::Entailment);
  EXPECT_EQ(v[1].relationship, Relationship::Neutral);
  EXPECT_EQ(v[2].relationship, Relationship::Entailment);
}

TEST(StubJudge, UnknownPromptRejected) {
  JudgeRequest r;
  r.prompt_text = "What is the capital of France?";
  EXPECT_THROW(stub_judge(r), InputError);
  EXPECT_EQ(stub_normalize("  Hello,   World!  "), "hello world");
}

}  // namespace
}  // namespace descry
