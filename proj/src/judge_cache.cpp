#include <cstdio>
#include <fstream>

#include "descry/gateway.hpp"
#include "descry/json_lines.hpp"
#include "descry/prompts.hpp"

namespace descry {
namespace {

void append_field(std::string& out, std::string_view value) {
  out += std::to_string(value.size());
  out += ':';
  out.append(value);
  out += ';';
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

std::string JudgeRequest::cache_key() const {
  std::string enc;
  append_field(enc, backend_id);
  append_field(enc, model_name);
  append_field(enc, prompt_text);
  append_field(enc, format_double(sampling.temperature));
  append_field(enc, std::to_string(sampling.max_tokens));
  return sha256_hex(enc);
}

nlohmann::json JudgeRequest::to_json() const {
  return {{"backend_id", backend_id},
          {"model_name", model_name},
          {"prompt_text", prompt_text},
          {"temperature", sampling.temperature},
          {"max_tokens", sampling.max_tokens}};
}

JudgeCache::JudgeCache(std::filesystem::path dir) : dir_(std::move(dir)) {
  std::filesystem::create_directories(dir_);
}

std::optional<std::string> JudgeCache::load(const JudgeRequest& request) const {
  auto path = dir_ / (request.cache_key() + ".json");
  std::ifstream in(path, std::ios::binary);
  if (!in) return std::nullopt;
  auto entry = nlohmann::json::parse(in, nullptr, false);
  if (entry.is_discarded() || !entry.contains("response")) return std::nullopt;
  const auto& resp = entry["response"];
  if (!resp.contains("raw_text") || !resp["raw_text"].is_string()) return std::nullopt;
  if (entry.value("request", nlohmann::json{}).value("prompt_text", "") != request.prompt_text) {
    return std::nullopt;
  }
  return resp["raw_text"].get<std::string>();
}

void JudgeCache::store(const JudgeRequest& request, const std::string& raw_text) const {
  nlohmann::json entry = {{"request", request.to_json()},
                          {"response", {{"raw_text", raw_text}}}};
  write_file_atomic(dir_ / (request.cache_key() + ".json"),
                    entry.dump(2, ' ', false, nlohmann::json::error_handler_t::replace) + "\n");
}

}  // namespace descry
