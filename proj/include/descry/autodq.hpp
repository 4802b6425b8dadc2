#pragma once

#include <cstdint>
#include <map>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "descry/error.hpp"
#include "descry/gateway.hpp"
#include "descry/response_parse.hpp"
#include "json.hpp"

namespace descry {

enum class EventSource { Reference, Candidate };

struct EventList {
  EventSource source = EventSource::Reference;
  std::vector<std::string> events;  // nonempty strings, at most kMaxEvents
};

/// Exact fraction num/den, den > 0.
struct Ratio {
  std::int64_t num = 0;
  std::int64_t den = 1;
  double value() const { return static_cast<double>(num) / static_cast<double>(den); }
  friend bool operator==(const Ratio&, const Ratio&) = default;
};

/// Event-count pools plus the ratios derived from them.
///   recall    = ref_events_entailed  / ref_events_total    (reference events entailed by the candidate)
///   precision = cand_events_entailed / cand_events_total   (candidate events entailed by the reference)
/// A zero denominator leaves the ratio undefined. f1 is defined only when
/// both are; it is 0 when P + R = 0.
struct DescriptionQuality {
  std::int64_t ref_events_total = 0;
  std::int64_t ref_events_entailed = 0;
  std::int64_t cand_events_total = 0;
  std::int64_t cand_events_entailed = 0;

  std::optional<Ratio> recall_ratio() const;
  std::optional<Ratio> precision_ratio() const;
  /// 2·ce·re / (ce·rt + re·ct), reduced only in the P + R = 0 case (0/1).
  std::optional<Ratio> f1_ratio() const;

  std::optional<double> recall() const;
  std::optional<double> precision() const;
  std::optional<double> f1() const;

  DescriptionQuality& operator+=(const DescriptionQuality& o);
  friend DescriptionQuality operator+(DescriptionQuality a, const DescriptionQuality& b) { return a += b; }
  friend bool operator==(const DescriptionQuality&, const DescriptionQuality&) = default;
};

/// Harmonic mean with the same conventions as DescriptionQuality::f1.
std::optional<double> f1_of(std::optional<double> precision, std::optional<double> recall);

enum class FailureStage { None, Input, Extraction, Entailment, Protocol, Transport };
std::string_view to_token(FailureStage s);
FailureStage parse_failure_stage(std::string_view token);

/// A pipeline stage that could not produce a usable result for one example.
class StageFailure : public Error {
 public:
  StageFailure(FailureStage stage, const std::string& what) : Error(what), stage_(stage) {}
  FailureStage stage() const { return stage_; }

 private:
  FailureStage stage_;
};

struct PairScore {
  DescriptionQuality quality;
  EventList ref_events;
  EventList cand_events;
  std::vector<EntailmentVerdict> recall_verdicts;     // reference events vs candidate text
  std::vector<EntailmentVerdict> precision_verdicts;  // candidate events vs reference text
  std::int64_t ref_contradicted = 0;
  std::int64_t cand_contradicted = 0;
};

struct ScoringPair {
  std::string id;
  std::string reference;
  std::string candidate;
};

struct ExampleResult {
  std::string id;
  std::optional<PairScore> score;  // empty when the example failed
  FailureStage failure_stage = FailureStage::None;
  std::string failure_message;
  /// Free-form metadata carried into the per-example file (category, counts...).
  nlohmann::ordered_json meta = nlohmann::ordered_json::object();

  bool ok() const { return score.has_value(); }
};

struct CorpusQuality {
  DescriptionQuality micro;
  std::optional<double> macro_precision;  // mean over examples where defined
  std::optional<double> macro_recall;
  std::optional<double> macro_f1;         // harmonic mean of the two macro means
  std::size_t n_examples = 0;
  std::size_t n_scored = 0;
  std::size_t n_failed = 0;
  std::map<std::string, std::size_t> failures_by_stage;
  std::int64_t ref_contradicted = 0;
  std::int64_t cand_contradicted = 0;
};

/// Pools successful examples. Throws InputError when none succeeded.
CorpusQuality aggregate(std::span<const ExampleResult> examples);

struct CorpusResult {
  CorpusQuality summary;
  std::vector<ExampleResult> examples;  // input order
};

struct GroupScore {
  std::string label;
  CorpusQuality quality;
};

struct GroupedResult {
  std::vector<GroupScore> groups;      // requested order, empty groups omitted
  std::vector<std::string> omitted;    // groups with no successful example
  CorpusQuality overall;               // over the union of all groups
};

/// Re-pools stored per-example results by group; no judge calls.
/// `group_of[i]` is the group of `examples[i]`; `order` fixes the row order
/// (groups not listed are appended in first-seen order).
GroupedResult group_results(std::span<const ExampleResult> examples,
                            const std::vector<std::string>& group_of,
                            const std::vector<std::string>& order = {});

/// The two-step description-quality procedure over a judge gateway.
/// Extracted events are memoized per description text for the scorer's
/// lifetime, so a reference shared by several candidates is extracted once.
class AutoDQ {
 public:
  explicit AutoDQ(Gateway& gateway) : gateway_(gateway) {}

  /// Throws InputError on a blank description and StageFailure(Extraction)
  /// when the judge output stays unparseable after the re-ask.
  EventList extract_events(std::string_view description, EventSource source);

  /// One verdict per event, in order; no judge call for an empty list.
  /// Throws StageFailure(Entailment) on unparseable output and
  /// StageFailure(Protocol) when the verdict count does not match.
  std::vector<EntailmentVerdict> classify_entailments(std::string_view description,
                                                      const EventList& events);

  PairScore score_pair(std::string_view reference, std::string_view candidate);

  /// Scores every pair (bounded-parallel through the gateway), pooling micro
  /// counts. Failed examples are kept in `examples` and excluded from pools.
  /// ConfigError aborts the run; all-failed throws InputError.
  CorpusResult score_corpus(const std::vector<ScoringPair>& pairs);

  GroupedResult score_by_group(const std::vector<ScoringPair>& pairs,
                               const std::vector<std::string>& group_of,
                               const std::vector<std::string>& order = {});

 private:
  Gateway& gateway_;
  std::mutex memo_mu_;
  std::unordered_map<std::string, std::vector<std::string>> event_memo_;
};

// Per-example audit records (one JSON object per line).
nlohmann::ordered_json to_json(const ExampleResult& r);
ExampleResult example_from_json(const nlohmann::json& j);
nlohmann::ordered_json to_json(const CorpusQuality& q);

}  // namespace descry
