#include "descry/autodq.hpp"

#include <algorithm>
#include <atomic>
#include <unordered_set>

#include "descry/parallel.hpp"
#include "descry/prompts.hpp"

namespace descry {
namespace {

bool is_blank(std::string_view s) { return s.find_first_not_of(" \t\r\n") == std::string_view::npos; }

std::string events_as_json(const std::vector<std::string>& events) {
  return nlohmann::json(events).dump(-1, ' ', false, nlohmann::json::error_handler_t::replace);
}

std::int64_t count_class(const std::vector<EntailmentVerdict>& vs, Relationship r) {
  std::int64_t n = 0;
  for (const auto& v : vs) n += v.relationship == r ? 1 : 0;
  return n;
}

std::string_view source_token(EventSource s) {
  return s == EventSource::Reference ? "reference" : "candidate";
}

nlohmann::ordered_json verdicts_json(const std::vector<EntailmentVerdict>& vs) {
  auto arr = nlohmann::ordered_json::array();
  for (const auto& v : vs) {
    arr.push_back({{"event", v.event}, {"relationship", to_token(v.relationship)}, {"reason", v.reason}});
  }
  return arr;
}

std::vector<EntailmentVerdict> verdicts_from_json(const nlohmann::json& arr) {
  std::vector<EntailmentVerdict> out;
  for (const auto& v : arr) {
    auto rel = parse_relationship(v.at("relationship").get<std::string>());
    if (!rel) throw ParseError("unknown relationship in stored verdict");
    out.push_back({v.at("event").get<std::string>(), *rel, v.value("reason", "")});
  }
  return out;
}

nlohmann::ordered_json optional_number(std::optional<double> v) {
  return v ? nlohmann::ordered_json(*v) : nlohmann::ordered_json(nullptr);
}

}  // namespace

std::optional<Ratio> DescriptionQuality::recall_ratio() const {
  if (ref_events_total <= 0) return std::nullopt;
  return Ratio{ref_events_entailed, ref_events_total};
}

std::optional<Ratio> DescriptionQuality::precision_ratio() const {
  if (cand_events_total <= 0) return std::nullopt;
  return Ratio{cand_events_entailed, cand_events_total};
}

std::optional<Ratio> DescriptionQuality::f1_ratio() const {
  if (ref_events_total <= 0 || cand_events_total <= 0) return std::nullopt;
  const auto ce = cand_events_entailed, ct = cand_events_total;
  const auto re = ref_events_entailed, rt = ref_events_total;
  const auto den = ce * rt + re * ct;
  if (den == 0) return Ratio{0, 1};
  return Ratio{2 * ce * re, den};
}

std::optional<double> DescriptionQuality::recall() const {
  if (auto r = recall_ratio()) return r->value();
  return std::nullopt;
}

std::optional<double> DescriptionQuality::precision() const {
  if (auto r = precision_ratio()) return r->value();
  return std::nullopt;
}

std::optional<double> DescriptionQuality::f1() const {
  if (auto r = f1_ratio()) return r->value();
  return std::nullopt;
}

DescriptionQuality& DescriptionQuality::operator+=(const DescriptionQuality& o) {
  ref_events_total += o.ref_events_total;
  ref_events_entailed += o.ref_events_entailed;
  cand_events_total += o.cand_events_total;
  cand_events_entailed += o.cand_events_entailed;
  return *this;
}

std::optional<double> f1_of(std::optional<double> precision, std::optional<double> recall) {
  if (!precision || !recall) return std::nullopt;
  const double sum = *precision + *recall;
  if (sum == 0) return 0.0;
  return 2 * *precision * *recall / sum;
}

std::string_view to_token(FailureStage s) {
  switch (s) {
    case FailureStage::None: return "none";
    case FailureStage::Input: return "input";
    case FailureStage::Extraction: return "extraction";
    case FailureStage::Entailment: return "entailment";
    case FailureStage::Protocol: return "protocol";
    case FailureStage::Transport: return "transport";
  }
  return "?";
}

FailureStage parse_failure_stage(std::string_view token) {
  for (auto s : {FailureStage::None, FailureStage::Input, FailureStage::Extraction,
                 FailureStage::Entailment, FailureStage::Protocol, FailureStage::Transport}) {
    if (to_token(s) == token) return s;
  }
  throw ParseError("unknown failure stage '" + std::string(token) + "'");
}

CorpusQuality aggregate(std::span<const ExampleResult> examples) {
  CorpusQuality q;
  q.n_examples = examples.size();
  double p_sum = 0, r_sum = 0;
  std::size_t p_n = 0, r_n = 0;
  for (const auto& ex : examples) {
    if (!ex.ok()) {
      ++q.n_failed;
      ++q.failures_by_stage[std::string(to_token(ex.failure_stage))];
      continue;
    }
    ++q.n_scored;
    const auto& s = *ex.score;
    q.micro += s.quality;
    q.ref_contradicted += s.ref_contradicted;
    q.cand_contradicted += s.cand_contradicted;
    if (auto p = s.quality.precision()) {
      p_sum += *p;
      ++p_n;
    }
    if (auto r = s.quality.recall()) {
      r_sum += *r;
      ++r_n;
    }
  }
  if (q.n_scored == 0) throw InputError("no example was scored successfully");
  if (p_n) q.macro_precision = p_sum / static_cast<double>(p_n);
  if (r_n) q.macro_recall = r_sum / static_cast<double>(r_n);
  q.macro_f1 = f1_of(q.macro_precision, q.macro_recall);
  return q;
}

GroupedResult group_results(std::span<const ExampleResult> examples,
                            const std::vector<std::string>& group_of,
                            const std::vector<std::string>& order) {
  if (group_of.size() != examples.size()) {
    throw InputError("group_results: one group label per example required");
  }
  std::vector<std::string> labels = order;
  std::map<std::string, std::vector<ExampleResult>> members;
  for (std::size_t i = 0; i < examples.size(); ++i) {
    if (std::find(labels.begin(), labels.end(), group_of[i]) == labels.end()) {
      labels.push_back(group_of[i]);
    }
    members[group_of[i]].push_back(examples[i]);
  }
  GroupedResult out;
  for (const auto& label : labels) {
    auto it = members.find(label);
    bool any_ok = false;
    if (it != members.end()) {
      for (const auto& ex : it->second) any_ok = any_ok || ex.ok();
    }
    if (!any_ok) {
      out.omitted.push_back(label);
      continue;
    }
    out.groups.push_back({label, aggregate(it->second)});
  }
  out.overall = aggregate(examples);
  return out;
}

EventList AutoDQ::extract_events(std::string_view description, EventSource source) {
  if (is_blank(description)) {
    throw InputError(std::string("empty ") + std::string(source_token(source)) + " description");
  }
  std::string key(description);
  {
    std::lock_guard lock(memo_mu_);
    if (auto it = event_memo_.find(key); it != event_memo_.end()) return {source, it->second};
  }
  auto request = gateway_.make_request(
      render_prompt(TemplateId::EventExtraction, {{"description", key}}));
  std::vector<std::string> raw;
  try {
    raw = gateway_.complete_parsed(request, parse_extraction_response).value;
  } catch (const ParseError& e) {
    throw StageFailure(FailureStage::Extraction,
                       std::string("event extraction failed: ") + e.what() + "; raw: " + e.raw_text());
  }
  std::vector<std::string> events;
  std::unordered_set<std::string> seen;
  for (auto& ev : raw) {
    if (seen.insert(ev).second) events.push_back(std::move(ev));
  }
  {
    std::lock_guard lock(memo_mu_);
    event_memo_.emplace(std::move(key), events);
  }
  return {source, std::move(events)};
}

std::vector<EntailmentVerdict> AutoDQ::classify_entailments(std::string_view description,
                                                            const EventList& events) {
  if (is_blank(description)) throw InputError("empty description for entailment");
  if (events.events.empty()) return {};
  auto request = gateway_.make_request(render_prompt(
      TemplateId::Entailment,
      {{"description", std::string(description)}, {"events", events_as_json(events.events)}}));
  std::vector<EntailmentVerdict> verdicts;
  try {
    verdicts = gateway_.complete_parsed(request, parse_entailment_response).value;
    if (verdicts.size() != events.events.size()) {
      auto fresh = gateway_.complete(request, /*bypass_cache=*/true);
      verdicts = parse_entailment_response(fresh.raw_text);
    }
  } catch (const ParseError& e) {
    throw StageFailure(FailureStage::Entailment,
                       std::string("entailment failed: ") + e.what() + "; raw: " + e.raw_text());
  }
  if (verdicts.size() != events.events.size()) {
    throw StageFailure(FailureStage::Protocol,
                       "entailment returned " + std::to_string(verdicts.size()) +
                           " verdicts for " + std::to_string(events.events.size()) + " events");
  }
  return verdicts;
}

PairScore AutoDQ::score_pair(std::string_view reference, std::string_view candidate) {
  PairScore s;
  s.ref_events = extract_events(reference, EventSource::Reference);
  s.cand_events = extract_events(candidate, EventSource::Candidate);
  s.recall_verdicts = classify_entailments(candidate, s.ref_events);
  s.precision_verdicts = classify_entailments(reference, s.cand_events);

  s.quality.ref_events_total = static_cast<std::int64_t>(s.ref_events.events.size());
  s.quality.ref_events_entailed = count_class(s.recall_verdicts, Relationship::Entailment);
  s.quality.cand_events_total = static_cast<std::int64_t>(s.cand_events.events.size());
  s.quality.cand_events_entailed = count_class(s.precision_verdicts, Relationship::Entailment);
  s.ref_contradicted = count_class(s.recall_verdicts, Relationship::Contradiction);
  s.cand_contradicted = count_class(s.precision_verdicts, Relationship::Contradiction);
  return s;
}

CorpusResult AutoDQ::score_corpus(const std::vector<ScoringPair>& pairs) {
  if (pairs.empty()) throw InputError("score_corpus: no pairs");
  CorpusResult out;
  out.examples.resize(pairs.size());
  std::atomic<bool> abort{false};
  parallel_for(pairs.size(), gateway_.config().max_in_flight, [&](std::size_t i) {
    auto& ex = out.examples[i];
    ex.id = pairs[i].id;
    if (abort.load()) {
      ex.failure_stage = FailureStage::Transport;
      ex.failure_message = "run aborted";
      return;
    }
    try {
      ex.score = score_pair(pairs[i].reference, pairs[i].candidate);
    } catch (const ConfigError&) {
      abort.store(true);
      throw;
    } catch (const StageFailure& e) {
      ex.failure_stage = e.stage();
      ex.failure_message = e.what();
    } catch (const InputError& e) {
      ex.failure_stage = FailureStage::Input;
      ex.failure_message = e.what();
    } catch (const TransportError& e) {
      ex.failure_stage = FailureStage::Transport;
      ex.failure_message = e.what();
    } catch (const std::exception& e) {
      ex.failure_stage = FailureStage::Protocol;
      ex.failure_message = e.what();
    }
  });
  out.summary = aggregate(out.examples);
  return out;
}

GroupedResult AutoDQ::score_by_group(const std::vector<ScoringPair>& pairs,
                                     const std::vector<std::string>& group_of,
                                     const std::vector<std::string>& order) {
  auto scored = score_corpus(pairs);
  return group_results(scored.examples, group_of, order);
}

nlohmann::ordered_json to_json(const ExampleResult& r) {
  nlohmann::ordered_json j;
  j["id"] = r.id;
  for (const auto& [k, v] : r.meta.items()) j[k] = v;
  j["status"] = r.ok() ? "ok" : "failed";
  if (!r.ok()) {
    j["failure_stage"] = to_token(r.failure_stage);
    j["failure_message"] = r.failure_message;
    return j;
  }
  const auto& s = *r.score;
  const auto& q = s.quality;
  j["ref_events_total"] = q.ref_events_total;
  j["ref_events_entailed"] = q.ref_events_entailed;
  j["cand_events_total"] = q.cand_events_total;
  j["cand_events_entailed"] = q.cand_events_entailed;
  j["precision"] = optional_number(q.precision());
  j["recall"] = optional_number(q.recall());
  j["f1"] = optional_number(q.f1());
  j["ref_contradicted"] = s.ref_contradicted;
  j["cand_contradicted"] = s.cand_contradicted;
  j["ref_events"] = s.ref_events.events;
  j["cand_events"] = s.cand_events.events;
  j["recall_verdicts"] = verdicts_json(s.recall_verdicts);
  j["precision_verdicts"] = verdicts_json(s.precision_verdicts);
  return j;
}

ExampleResult example_from_json(const nlohmann::json& j) {
  static const std::unordered_set<std::string> kReserved = {
      "id", "status", "failure_stage", "failure_message", "ref_events_total",
      "ref_events_entailed", "cand_events_total", "cand_events_entailed", "precision", "recall",
      "f1", "ref_contradicted", "cand_contradicted", "ref_events", "cand_events",
      "recall_verdicts", "precision_verdicts"};
  ExampleResult r;
  try {
    r.id = j.at("id").get<std::string>();
    for (const auto& [k, v] : j.items()) {
      if (!kReserved.count(k)) r.meta[k] = v;
    }
    if (j.at("status").get<std::string>() != "ok") {
      r.failure_stage = parse_failure_stage(j.value("failure_stage", "protocol"));
      r.failure_message = j.value("failure_message", "");
      return r;
    }
    PairScore s;
    s.quality.ref_events_total = j.at("ref_events_total").get<std::int64_t>();
    s.quality.ref_events_entailed = j.at("ref_events_entailed").get<std::int64_t>();
    s.quality.cand_events_total = j.at("cand_events_total").get<std::int64_t>();
    s.quality.cand_events_entailed = j.at("cand_events_entailed").get<std::int64_t>();
    s.ref_contradicted = j.value("ref_contradicted", std::int64_t{0});
    s.cand_contradicted = j.value("cand_contradicted", std::int64_t{0});
    s.ref_events = {EventSource::Reference, j.value("ref_events", std::vector<std::string>{})};
    s.cand_events = {EventSource::Candidate, j.value("cand_events", std::vector<std::string>{})};
    if (j.contains("recall_verdicts")) s.recall_verdicts = verdicts_from_json(j["recall_verdicts"]);
    if (j.contains("precision_verdicts")) s.precision_verdicts = verdicts_from_json(j["precision_verdicts"]);
    const auto& q = s.quality;
    if (q.ref_events_entailed > q.ref_events_total || q.cand_events_entailed > q.cand_events_total ||
        q.ref_events_entailed < 0 || q.cand_events_entailed < 0) {
      throw ValidationError("entailed count exceeds total for example '" + r.id + "'");
    }
    r.score = std::move(s);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("malformed per-example record: ") + e.what(), j.dump());
  }
  return r;
}

nlohmann::ordered_json to_json(const CorpusQuality& q) {
  auto ratio_json = [](const std::optional<Ratio>& r) {
    return r ? nlohmann::ordered_json{{"num", r->num}, {"den", r->den}} : nlohmann::ordered_json(nullptr);
  };
  nlohmann::ordered_json j;
  j["aggregation"] = "micro";
  j["micro"] = {
      {"precision", optional_number(q.micro.precision())},
      {"recall", optional_number(q.micro.recall())},
      {"f1", optional_number(q.micro.f1())},
      {"precision_exact", ratio_json(q.micro.precision_ratio())},
      {"recall_exact", ratio_json(q.micro.recall_ratio())},
      {"f1_exact", ratio_json(q.micro.f1_ratio())},
      {"ref_events_total", q.micro.ref_events_total},
      {"ref_events_entailed", q.micro.ref_events_entailed},
      {"cand_events_total", q.micro.cand_events_total},
      {"cand_events_entailed", q.micro.cand_events_entailed},
  };
  j["macro"] = {{"precision", optional_number(q.macro_precision)},
                {"recall", optional_number(q.macro_recall)},
                {"f1", optional_number(q.macro_f1)}};
  j["n_examples"] = q.n_examples;
  j["n_scored"] = q.n_scored;
  j["n_failed"] = q.n_failed;
  j["failures_by_stage"] = q.failures_by_stage;
  j["contradictions"] = {{"reference_events_contradicted", q.ref_contradicted},
                         {"candidate_events_contradicted", q.cand_contradicted}};
  return j;
}

}  // namespace descry
