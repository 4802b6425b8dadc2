#include <cctype>

#include "descry/gateway.hpp"
#include "descry/prompts.hpp"
#include "descry/response_parse.hpp"

namespace descry {
namespace {

std::string_view trim(std::string_view s) {
  auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::string stub_extract(std::string_view description) {
  nlohmann::json events = nlohmann::json::array();
  std::size_t pos = 0;
  while (pos <= description.size() && events.size() < kMaxEvents) {
    auto dot = description.find('.', pos);
    auto piece = trim(description.substr(pos, dot == std::string_view::npos ? std::string_view::npos
                                                                             : dot - pos));
    if (!piece.empty()) events.push_back(std::string(piece));
    if (dot == std::string_view::npos) break;
    pos = dot + 1;
  }
  return nlohmann::json{{"events", events}}.dump();
}

std::string stub_entail(std::string_view description, std::string_view events_json) {
  auto events = nlohmann::json::parse(events_json, nullptr, false);
  if (events.is_discarded() || !events.is_array()) {
    throw InputError("stub judge: events placeholder is not a JSON list");
  }
  const auto desc = stub_normalize(description);
  nlohmann::json out = nlohmann::json::array();
  for (const auto& ev : events) {
    if (!ev.is_string()) throw InputError("stub judge: event is not a string");
    const auto& text = ev.get_ref<const std::string&>();
    bool entailed = desc.find(stub_normalize(text)) != std::string::npos;
    out.push_back({{"event", text},
                   {"relationship", entailed ? "entailment" : "neutral"},
                   {"reason", entailed ? "stated in the description" : "not stated"}});
  }
  return out.dump();
}

}  // namespace

std::string stub_normalize(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  bool pending_space = false;
  for (unsigned char c : text) {
    if (std::ispunct(c)) continue;
    if (std::isspace(c)) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out += ' ';
    pending_space = false;
    out += static_cast<char>(std::tolower(c));
  }
  return out;
}

JudgeResponse stub_judge(const JudgeRequest& request, std::string_view vqa_template) {
  const auto& prompt = request.prompt_text;
  JudgeResponse resp;
  resp.attempt_count = 1;
  if (auto b = match_template(template_body(TemplateId::EventExtraction), prompt)) {
    resp.raw_text = stub_extract(b->at("description"));
  } else if (auto b = match_template(template_body(TemplateId::Entailment), prompt)) {
    resp.raw_text = stub_entail(b->at("description"), b->at("events"));
  } else if (auto b = match_template(
                 vqa_template.empty() ? template_body(TemplateId::VqaJudge) : vqa_template, prompt);
             b && b->count("answer") && b->count("prediction")) {
    bool match = stub_normalize(b->at("answer")) == stub_normalize(b->at("prediction"));
    resp.raw_text = nlohmann::json{{"pred", match ? "yes" : "no"}, {"score", match ? 5 : 1}}.dump();
  } else {
    throw InputError("stub judge: prompt does not match any known template");
  }
  return resp;
}

StubJudgeBackend::StubJudgeBackend(std::string vqa_template)
    : vqa_template_(std::move(vqa_template)) {}

BackendReply StubJudgeBackend::send(const JudgeRequest& request) {
  return {200, stub_judge(request, vqa_template_).raw_text, {}};
}

}  // namespace descry
