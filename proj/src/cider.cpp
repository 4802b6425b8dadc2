#include <algorithm>
#include <cctype>
#include <cmath>
#include <unordered_map>
#include <unordered_set>

#include "descry/caption_metrics.hpp"
#include "descry/error.hpp"

namespace descry {
namespace {

using NgramCounts = std::unordered_map<std::string, double>;

/// counts[n-1] holds n-gram term frequencies; n-grams are joined by a single space.
std::vector<NgramCounts> ngram_counts(const std::vector<std::string>& tokens, int max_n) {
  std::vector<NgramCounts> counts(static_cast<std::size_t>(max_n));
  for (int n = 1; n <= max_n; ++n) {
    if (tokens.size() < static_cast<std::size_t>(n)) break;
    for (std::size_t i = 0; i + static_cast<std::size_t>(n) <= tokens.size(); ++i) {
      std::string gram = tokens[i];
      for (int k = 1; k < n; ++k) gram += ' ' + tokens[i + static_cast<std::size_t>(k)];
      counts[static_cast<std::size_t>(n - 1)][gram] += 1.0;
    }
  }
  return counts;
}

struct TfIdfVector {
  std::vector<NgramCounts> weights;
  std::vector<double> norms;
  double length = 0;
};

TfIdfVector to_tfidf(const std::vector<std::string>& tokens, int max_n,
                     const std::unordered_map<std::string, double>& df, double log_n) {
  TfIdfVector v;
  v.weights = ngram_counts(tokens, max_n);
  v.norms.assign(static_cast<std::size_t>(max_n), 0.0);
  v.length = static_cast<double>(tokens.size());
  for (std::size_t n = 0; n < v.weights.size(); ++n) {
    for (auto& [gram, w] : v.weights[n]) {
      auto it = df.find(gram);
      double doc_freq = it == df.end() ? 0.0 : it->second;
      w *= log_n - std::log(std::max(1.0, doc_freq));
      v.norms[n] += w * w;
    }
    v.norms[n] = std::sqrt(v.norms[n]);
  }
  return v;
}

double similarity(const TfIdfVector& cand, const TfIdfVector& ref, double sigma) {
  const double delta = cand.length - ref.length;
  const double penalty = std::exp(-(delta * delta) / (2.0 * sigma * sigma));
  double total = 0;
  for (std::size_t n = 0; n < cand.weights.size(); ++n) {
    double dot = 0;
    for (const auto& [gram, c] : cand.weights[n]) {
      auto it = ref.weights[n].find(gram);
      if (it != ref.weights[n].end()) dot += std::min(c, it->second) * it->second;
    }
    if (cand.norms[n] != 0 && ref.norms[n] != 0) dot /= cand.norms[n] * ref.norms[n];
    total += dot * penalty;
  }
  return total / static_cast<double>(cand.weights.size());
}

}  // namespace

std::vector<std::string> caption_tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::string cur;
  for (unsigned char c : text) {
    if (std::isspace(c) || std::ispunct(c)) {
      if (!cur.empty()) tokens.push_back(std::move(cur));
      cur.clear();
    } else {
      cur += static_cast<char>(std::tolower(c));
    }
  }
  if (!cur.empty()) tokens.push_back(std::move(cur));
  return tokens;
}

CiderResult cider(const std::map<std::string, std::string>& candidates,
                  const std::map<std::string, std::vector<std::string>>& references,
                  const CiderConfig& config) {
  if (config.max_ngram < 1) throw InputError("cider: max_ngram must be >= 1");
  if (!(config.gaussian_sigma > 0)) throw InputError("cider: gaussian_sigma must be > 0");
  if (candidates.empty()) throw InputError("cider: no candidates");

  std::map<std::string, std::vector<std::vector<std::string>>> ref_tokens;
  for (const auto& [id, text] : candidates) {
    auto it = references.find(id);
    if (it == references.end() || it->second.empty()) {
      throw InputError("cider: candidate '" + id + "' has no reference");
    }
    auto& toks = ref_tokens[id];
    for (const auto& r : it->second) toks.push_back(caption_tokenize(r));
  }

  // Document frequency: number of videos whose reference set contains the n-gram.
  std::unordered_map<std::string, double> df;
  for (const auto& [id, refs] : ref_tokens) {
    std::unordered_set<std::string> present;
    for (const auto& toks : refs) {
      for (const auto& level : ngram_counts(toks, config.max_ngram)) {
        for (const auto& [gram, _] : level) present.insert(gram);
      }
    }
    for (const auto& gram : present) df[gram] += 1.0;
  }
  const double log_n = std::log(static_cast<double>(ref_tokens.size()));

  CiderResult result;
  double sum = 0;
  for (const auto& [id, text] : candidates) {
    auto cand = to_tfidf(caption_tokenize(text), config.max_ngram, df, log_n);
    const auto& refs = ref_tokens.at(id);
    double score = 0;
    for (const auto& toks : refs) {
      score += similarity(cand, to_tfidf(toks, config.max_ngram, df, log_n), config.gaussian_sigma);
    }
    score = score / static_cast<double>(refs.size()) * config.scale;
    result.per_video[id] = score;
    sum += score;
  }
  result.corpus_mean = sum / static_cast<double>(candidates.size());
  return result;
}

}  // namespace descry
