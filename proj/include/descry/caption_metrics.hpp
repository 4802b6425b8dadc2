#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "descry/gateway.hpp"

namespace descry {

// ---------------------------------------------------------------------------
// CIDEr-D
// ---------------------------------------------------------------------------

struct CiderConfig {
  int max_ngram = 4;
  double gaussian_sigma = 6.0;
  double scale = 10.0;
};

/// Lowercase, ASCII punctuation to spaces, split on whitespace.
std::vector<std::string> caption_tokenize(std::string_view text);

struct CiderResult {
  std::map<std::string, double> per_video;
  double corpus_mean = 0;
};

/// CIDEr-D over `candidates`. Document frequencies come from the reference
/// sets of the scored videos only, so a corpus of one video has all idf
/// weights at zero and scores 0.
///
/// Per n-gram order n, each text becomes a vector tf(g)·(log N − log max(1, df(g))).
/// The candidate/reference similarity is Σ min(c,r)·r / (|c|·|r|), times
/// exp(−(len_c − len_r)² / 2σ²). Scores average over n and over references and
/// are multiplied by `scale`.
/// Throws InputError if a candidate has no reference.
CiderResult cider(const std::map<std::string, std::string>& candidates,
                  const std::map<std::string, std::vector<std::string>>& references,
                  const CiderConfig& config = {});

// ---------------------------------------------------------------------------
// Multi-choice QA
// ---------------------------------------------------------------------------

/// Leading option letter of a free-form answer, uppercased, or nullopt.
/// Accepted: "B", "b.", "(b) because ...", "[C]", "Answer: D", "The answer is (E)".
/// The letter must be A-E and must not be followed by another letter or digit.
std::optional<char> normalize_choice(std::string_view raw);

struct McqItemResult {
  std::string id;
  char gold = '?';
  std::optional<char> predicted;
  bool correct = false;
};

struct McqDiagnostic {
  std::string id;
  std::string raw;
  std::string reason;
};

struct McqResult {
  std::size_t correct = 0;
  std::size_t total = 0;
  double accuracy = 0;
  std::vector<McqItemResult> items;
  std::vector<McqDiagnostic> diagnostics;
};

/// Total is the number of gold items. Missing or unnormalizable predictions
/// count as incorrect and are listed in diagnostics. Throws InputError for a
/// gold letter outside A-E or an empty gold set.
McqResult multi_choice_accuracy(const std::map<std::string, std::string>& predictions,
                                const std::map<std::string, char>& gold);

// ---------------------------------------------------------------------------
// Judge-scored open-ended QA
// ---------------------------------------------------------------------------

struct VqaJudgment {
  bool match = false;
  int quality = 1;
  JudgeResponse raw;
};

/// Renders the judging template (default: built-in vqa_judge) with question,
/// answer and prediction, and parses {'pred', 'score'}. Re-asks once on a
/// malformed reply; a second failure throws ParseError.
VqaJudgment vqa_judge_score(std::string_view question, std::string_view gold_answer,
                            std::string_view predicted_answer, Gateway& gateway,
                            std::string_view template_body = {});

struct VqaItem {
  std::string id;
  std::string question;
  std::string answer;
  std::string prediction;
};

struct VqaItemResult {
  std::string id;
  std::optional<VqaJudgment> judgment;
  std::string error;
};

struct VqaSummary {
  std::size_t n_items = 0;
  std::size_t n_scored = 0;
  std::size_t n_excluded = 0;
  std::size_t n_match = 0;
  std::int64_t quality_sum = 0;

  double accuracy() const;      // fraction of scored items judged a match
  double mean_quality() const;  // over scored items
  /// "accuracy%/mean quality", e.g. "66.7/3.7".
  std::string render() const;
};

VqaSummary summarize_vqa(const std::vector<VqaItemResult>& results);

struct VqaCorpusResult {
  std::vector<VqaItemResult> items;
  VqaSummary summary;
};

/// Judges every item through the gateway's bounded parallelism; parse or
/// transport failures exclude the item and are counted.
VqaCorpusResult vqa_corpus(const std::vector<VqaItem>& items, Gateway& gateway,
                           std::string_view template_body = {});

}  // namespace descry
