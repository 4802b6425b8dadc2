#include <cstdlib>

#include "descry/gateway.hpp"
#include "httplib.h"

namespace descry {

HttpChatBackend::HttpChatBackend(std::string base_url, std::string api_key,
                                 std::chrono::seconds timeout)
    : base_url_(std::move(base_url)), api_key_(std::move(api_key)), timeout_(timeout) {
  while (!base_url_.empty() && base_url_.back() == '/') base_url_.pop_back();
  auto scheme = base_url_.find("://");
  if (scheme == std::string::npos) throw ConfigError("judge base URL needs a scheme: " + base_url_);
  auto path = base_url_.find('/', scheme + 3);
  scheme_host_port_ = base_url_.substr(0, path);
  path_prefix_ = path == std::string::npos ? "" : base_url_.substr(path);
}

std::unique_ptr<HttpChatBackend> HttpChatBackend::from_env(std::string base_url) {
  const char* key = std::getenv(std::string(kApiKeyEnvVar).c_str());
  if (key == nullptr || *key == '\0') {
    throw ConfigError(std::string(kApiKeyEnvVar) + " is not set");
  }
  return std::make_unique<HttpChatBackend>(std::move(base_url), key);
}

std::string HttpChatBackend::id() const { return "http:" + base_url_; }

BackendReply HttpChatBackend::send(const JudgeRequest& request) {
  httplib::Client client(scheme_host_port_);
  client.set_connection_timeout(timeout_);
  client.set_read_timeout(timeout_);
  client.set_write_timeout(timeout_);
  client.set_bearer_token_auth(api_key_);

  nlohmann::json body = {
      {"model", request.model_name},
      {"messages", nlohmann::json::array({{{"role", "user"}, {"content", request.prompt_text}}})},
      {"temperature", request.sampling.temperature},
      {"max_tokens", request.sampling.max_tokens},
  };
  auto res = client.Post(path_prefix_ + "/chat/completions", body.dump(), "application/json");
  if (!res) return {0, {}, httplib::to_string(res.error())};

  BackendReply reply;
  reply.status = res->status;
  if (res->status != 200) {
    reply.error = res->body.substr(0, 512);
    return reply;
  }
  auto parsed = nlohmann::json::parse(res->body, nullptr, false);
  try {
    if (parsed.is_discarded()) throw std::runtime_error("body is not JSON");
    reply.text = parsed.at("choices").at(0).at("message").at("content").get<std::string>();
  } catch (const std::exception& e) {
    reply.error = std::string("malformed chat-completion body: ") + e.what();
  }
  return reply;
}

}  // namespace descry
