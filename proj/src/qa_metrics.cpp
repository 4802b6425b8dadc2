#include <cctype>

#include "descry/caption_metrics.hpp"
#include "descry/error.hpp"
#include "descry/format.hpp"
#include "descry/parallel.hpp"
#include "descry/prompts.hpp"
#include "descry/response_parse.hpp"

namespace descry {
namespace {

bool istarts_with(std::string_view s, std::string_view prefix) {
  if (s.size() < prefix.size()) return false;
  for (std::size_t i = 0; i < prefix.size(); ++i) {
    if (std::tolower(static_cast<unsigned char>(s[i])) != prefix[i]) return false;
  }
  return true;
}

void skip_space(std::string_view& s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
}

}  // namespace

std::optional<char> normalize_choice(std::string_view raw) {
  std::string_view s = raw;
  skip_space(s);
  for (std::string_view lead : {"the answer is", "answer is", "answer", "option"}) {
    if (istarts_with(s, lead)) {
      s.remove_prefix(lead.size());
      skip_space(s);
      if (!s.empty() && s.front() == ':') s.remove_prefix(1);
      skip_space(s);
      break;
    }
  }
  while (!s.empty() && (s.front() == '(' || s.front() == '[' || s.front() == '{' ||
                        s.front() == '\'' || s.front() == '"' || s.front() == '*')) {
    s.remove_prefix(1);
  }
  if (s.empty()) return std::nullopt;
  char c = static_cast<char>(std::toupper(static_cast<unsigned char>(s.front())));
  if (c < 'A' || c > 'E') return std::nullopt;
  if (s.size() > 1 && std::isalnum(static_cast<unsigned char>(s[1]))) return std::nullopt;
  return c;
}

McqResult multi_choice_accuracy(const std::map<std::string, std::string>& predictions,
                                const std::map<std::string, char>& gold) {
  if (gold.empty()) throw InputError("multi_choice_accuracy: empty gold set");
  McqResult r;
  for (const auto& [id, letter] : gold) {
    char g = static_cast<char>(std::toupper(static_cast<unsigned char>(letter)));
    if (g < 'A' || g > 'E') {
      throw InputError("gold answer for '" + id + "' is not an option letter A-E");
    }
    McqItemResult item{id, g, std::nullopt, false};
    auto it = predictions.find(id);
    if (it == predictions.end()) {
      r.diagnostics.push_back({id, "", "missing prediction"});
    } else {
      item.predicted = normalize_choice(it->second);
      if (!item.predicted) r.diagnostics.push_back({id, it->second, "no option letter found"});
    }
    item.correct = item.predicted && *item.predicted == g;
    r.correct += item.correct ? 1 : 0;
    r.items.push_back(std::move(item));
  }
  for (const auto& [id, raw] : predictions) {
    if (!gold.count(id)) r.diagnostics.push_back({id, raw, "prediction without gold answer"});
  }
  r.total = gold.size();
  r.accuracy = static_cast<double>(r.correct) / static_cast<double>(r.total);
  return r;
}

VqaJudgment vqa_judge_score(std::string_view question, std::string_view gold_answer,
                            std::string_view predicted_answer, Gateway& gateway,
                            std::string_view body) {
  if (body.empty()) body = template_body(TemplateId::VqaJudge);
  auto prompt = render_template(body, {{"question", std::string(question)},
                                       {"answer", std::string(gold_answer)},
                                       {"prediction", std::string(predicted_answer)}});
  auto parsed = gateway.complete_parsed(gateway.make_request(std::move(prompt)), parse_vqa_response);
  parsed.response.parsed = nlohmann::json{{"pred", parsed.value.match ? "yes" : "no"},
                                          {"score", parsed.value.quality}};
  return {parsed.value.match, parsed.value.quality, std::move(parsed.response)};
}

double VqaSummary::accuracy() const {
  return n_scored ? static_cast<double>(n_match) / static_cast<double>(n_scored) : 0.0;
}

double VqaSummary::mean_quality() const {
  return n_scored ? static_cast<double>(quality_sum) / static_cast<double>(n_scored) : 0.0;
}

std::string VqaSummary::render() const {
  if (n_scored == 0) return "–/–";
  const auto n = static_cast<std::int64_t>(n_scored);
  return format_percent(static_cast<std::int64_t>(n_match), n) + "/" + format_tenths(quality_sum, n);
}

VqaSummary summarize_vqa(const std::vector<VqaItemResult>& results) {
  VqaSummary s;
  s.n_items = results.size();
  for (const auto& r : results) {
    if (!r.judgment) {
      ++s.n_excluded;
      continue;
    }
    ++s.n_scored;
    s.n_match += r.judgment->match ? 1 : 0;
    s.quality_sum += r.judgment->quality;
  }
  return s;
}

VqaCorpusResult vqa_corpus(const std::vector<VqaItem>& items, Gateway& gateway,
                           std::string_view body) {
  VqaCorpusResult out;
  out.items.resize(items.size());
  parallel_for(items.size(), gateway.config().max_in_flight, [&](std::size_t i) {
    auto& r = out.items[i];
    r.id = items[i].id;
    try {
      r.judgment = vqa_judge_score(items[i].question, items[i].answer, items[i].prediction, gateway, body);
    } catch (const ConfigError&) {
      throw;
    } catch (const std::exception& e) {
      r.error = e.what();
    }
  });
  out.summary = summarize_vqa(out.items);
  return out;
}

}  // namespace descry
