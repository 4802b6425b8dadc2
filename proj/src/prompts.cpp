#include "descry/prompts.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <array>
#include <cstdio>

#include "descry/error.hpp"

namespace descry {
namespace {

constexpr std::string_view kEventExtraction =
    "Below is a description of a video clip:\n"
    "{{description}}\n"
    "\n"
    "Extract at most 10 key events from the above video description paragraph. Requirements:\n"
    "- An event must include an action, motion or movement (NOT STATIC INFOMATION). DON'T "
    "repeat same events.\n"
    "- Every event is represented by a brief sentence with in 10 words, with a subject, a "
    "predicate and optionally an object, avoid unnecessary appearance descriptions.\n"
    "- Every event must be atomic, meaning that it cannot be further split into multiple "
    "events.\n"
    "- Scene cuts and camera motions are NOT events.\n"
    "- Substitute pronouns by the nouns they refer to.\n"
    "\n"
    "Please generate the response in the form of a Python dictionary string with keys "
    "\"events\". The value of \"events\" is a List(str), of which each item is an event. DO NOT "
    "PROVIDE ANY OTHER OUTPUT TEXT OR EXPLANATION. Only provide the Python dictionary string. "
    "For example, your response should look like this:{\"events\": [event1, event2, ...]}";

constexpr std::string_view kEntailment =
    "Given a video description and a list of events. For each event, classify the relationship "
    "between the video description and the event into three classes: entailment, neutral, "
    "contradiction.\n"
    "- \"entailment\" means that the video description entails the event.\n"
    "- \"contradiction\" means that some detail in the video description contradicts with the "
    "event.\n"
    "- \"neutral\" means that the relationship is neither \"entailment\" or \"contradiction\".\n"
    "\n"
    "Output a list in Json format:\n"
    "[\n"
    "{\"event\": \"copy an event here\", \"relationship\": \"put class name here\", \"reason\": "
    "\"give a reason\"},\n"
    "...\n"
    "]\n"
    "\n"
    "Video description:\n"
    "{{description}}\n"
    "\n"
    "Events:\n"
    "{{events}}\n"
    "\n"
    "DO NOT PROVIDE ANY OTHER OUTPUT TEXT OR EXPLANATION. Only output the JSON. Output:";

// Default open-ended QA judging prompt. Replaceable at runtime (--vqa-template).
constexpr std::string_view kVqaJudge =
    "You are evaluating the correctness of a predicted answer to a question about a video. "
    "Compare the predicted answer with the correct answer and judge whether they match in "
    "meaning. Synonyms and paraphrases count as a match.\n"
    "\n"
    "Question: {{question}}\n"
    "Correct Answer: {{answer}}\n"
    "Predicted Answer: {{prediction}}\n"
    "\n"
    "Provide your evaluation only as a yes/no and a score, where the score is an integer from 1 "
    "to 5 with 5 indicating the highest meaningful match. Please generate the response in the "
    "form of a Python dictionary string with keys 'pred' and 'score', where the value of 'pred' "
    "is a string of 'yes' or 'no' and the value of 'score' is an INTEGER. DO NOT PROVIDE ANY "
    "OTHER OUTPUT TEXT OR EXPLANATION. Only provide the Python dictionary string. For example, "
    "your response should look like this: {'pred': 'yes', 'score': 4}.";

constexpr std::string_view kDescriptionDefault = "Describe the video in detail.";

constexpr std::string_view kDescriptionGpt4v =
    "Given 8 frames uniformly sampled from a video clip, describe the video (not the individual "
    "images!) in detail, focusing on the main subjects, their actions and the background scene. "
    "DON'T describe feelings or atmosphere.";

constexpr std::string_view kDescriptionGemini =
    "Describe the video in one paragraph, mainly focusing on the dynamic events in the video. "
    "Don't describe feelings or atmosphere.";

constexpr std::string_view kDescriptionPllava =
    "You are to assist me in accomplishing a task about the input video. Reply to me with a "
    "precise yet detailed response. For how you would succeed in the recaptioning task, read the "
    "following Instructions section and Then, make your response with a elaborate paragraph.\n"
    "\n"
    "# Instructions\n"
    "1. Avoid providing over detailed information such as color, counts of any objects as you "
    "are terrible regarding observing these details\n"
    "2. Instead, you should carefully go over the provided video and reason about key "
    "information about the overall video\n"
    "3. If you are not sure about something, do not include it in you response.\n"
    "\n"
    "# Task\n"
    "Describe the background, characters and the actions in the provided video.";

constexpr std::string_view kDescriptionLlavaNext =
    "Please provide a detailed description of the video, focusing on the main subjects, their "
    "actions, and the background scenes.";

struct Segment {
  bool placeholder;
  std::string_view text;  // literal bytes or placeholder name
};

std::vector<Segment> split_template(std::string_view body) {
  std::vector<Segment> out;
  std::size_t pos = 0;
  while (pos <= body.size()) {
    auto open = body.find("{{", pos);
    if (open == std::string_view::npos) break;
    auto close = body.find("}}", open + 2);
    if (close == std::string_view::npos) break;
    auto name = body.substr(open + 2, close - open - 2);
    bool valid = !name.empty() && name.find_first_not_of(
                                      "abcdefghijklmnopqrstuvwxyz0123456789_") == std::string_view::npos;
    if (!valid) {
      out.push_back({false, body.substr(pos, open + 2 - pos)});
      pos = open + 2;
      continue;
    }
    if (open > pos) out.push_back({false, body.substr(pos, open - pos)});
    out.push_back({true, name});
    pos = close + 2;
  }
  if (pos < body.size()) out.push_back({false, body.substr(pos)});
  return out;
}

}  // namespace

std::string_view to_token(TemplateId id) {
  switch (id) {
    case TemplateId::EventExtraction: return "event_extraction";
    case TemplateId::Entailment: return "entailment";
    case TemplateId::VqaJudge: return "vqa_judge";
    case TemplateId::DescriptionDefault: return "description_default";
    case TemplateId::DescriptionGpt4v: return "description_gpt4v";
    case TemplateId::DescriptionGemini: return "description_gemini";
    case TemplateId::DescriptionPllava: return "description_pllava";
    case TemplateId::DescriptionLlavaNext: return "description_llava_next";
  }
  return "?";
}

std::optional<TemplateId> parse_template_id(std::string_view token) {
  for (auto id : {TemplateId::EventExtraction, TemplateId::Entailment, TemplateId::VqaJudge,
                  TemplateId::DescriptionDefault, TemplateId::DescriptionGpt4v,
                  TemplateId::DescriptionGemini, TemplateId::DescriptionPllava,
                  TemplateId::DescriptionLlavaNext}) {
    if (to_token(id) == token) return id;
  }
  return std::nullopt;
}

std::string_view template_body(TemplateId id) {
  switch (id) {
    case TemplateId::EventExtraction: return kEventExtraction;
    case TemplateId::Entailment: return kEntailment;
    case TemplateId::VqaJudge: return kVqaJudge;
    case TemplateId::DescriptionDefault: return kDescriptionDefault;
    case TemplateId::DescriptionGpt4v: return kDescriptionGpt4v;
    case TemplateId::DescriptionGemini: return kDescriptionGemini;
    case TemplateId::DescriptionPllava: return kDescriptionPllava;
    case TemplateId::DescriptionLlavaNext: return kDescriptionLlavaNext;
  }
  return {};
}

std::vector<std::string> placeholders(std::string_view body) {
  std::vector<std::string> names;
  for (const auto& seg : split_template(body)) {
    if (!seg.placeholder) continue;
    std::string name(seg.text);
    if (std::find(names.begin(), names.end(), name) == names.end()) names.push_back(name);
  }
  return names;
}

std::string render_template(std::string_view body, const Bindings& bindings) {
  std::string out;
  out.reserve(body.size());
  for (const auto& seg : split_template(body)) {
    if (!seg.placeholder) {
      out.append(seg.text);
      continue;
    }
    auto it = bindings.find(std::string(seg.text));
    if (it == bindings.end()) {
      throw InputError("unbound placeholder '" + std::string(seg.text) + "'");
    }
    out.append(it->second);
  }
  return out;
}

std::string render_prompt(TemplateId id, const Bindings& bindings) {
  return render_template(template_body(id), bindings);
}

std::optional<Bindings> match_template(std::string_view body, std::string_view prompt) {
  auto segs = split_template(body);
  Bindings out;
  std::size_t pos = 0;
  for (std::size_t i = 0; i < segs.size(); ++i) {
    const auto& seg = segs[i];
    if (!seg.placeholder) {
      if (prompt.substr(pos, seg.text.size()) != seg.text) return std::nullopt;
      pos += seg.text.size();
      continue;
    }
    std::string name(seg.text);
    if (i + 1 == segs.size()) {
      out[name] = std::string(prompt.substr(pos));
      pos = prompt.size();
      continue;
    }
    // Next segment is a literal (adjacent placeholders are ambiguous and unsupported).
    const auto& next = segs[i + 1];
    if (next.placeholder) return std::nullopt;
    std::size_t found;
    if (i + 2 == segs.size()) {
      // Trailing literal must sit at the very end.
      if (prompt.size() < pos + next.text.size()) return std::nullopt;
      found = prompt.size() - next.text.size();
      if (prompt.substr(found) != next.text) return std::nullopt;
    } else {
      found = prompt.rfind(next.text);
      if (found == std::string_view::npos || found < pos) return std::nullopt;
    }
    auto value = std::string(prompt.substr(pos, found - pos));
    if (auto prev = out.find(name); prev != out.end() && prev->second != value) return std::nullopt;
    out[name] = std::move(value);
    pos = found;
  }
  if (pos != prompt.size()) return std::nullopt;
  return out;
}

std::string sha256_hex(std::string_view data) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest.data(), &len, EVP_sha256(), nullptr) != 1) {
    throw Error("SHA-256 digest failed");
  }
  std::string hex;
  hex.reserve(len * 2);
  char buf[3];
  for (unsigned int i = 0; i < len; ++i) {
    std::snprintf(buf, sizeof buf, "%02x", digest[i]);
    hex += buf;
  }
  return hex;
}

std::string prompt_set_hash() {
  std::string all;
  for (auto id : {TemplateId::EventExtraction, TemplateId::Entailment, TemplateId::VqaJudge,
                  TemplateId::DescriptionDefault, TemplateId::DescriptionGpt4v,
                  TemplateId::DescriptionGemini, TemplateId::DescriptionPllava,
                  TemplateId::DescriptionLlavaNext}) {
    auto body = template_body(id);
    all += std::string(to_token(id)) + '\0' + std::to_string(body.size()) + '\0';
    all.append(body);
  }
  return sha256_hex(all);
}

}  // namespace descry
