#include "synthetic.hpp"

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <fstream>
#include <random>
#include <set>
#include <sstream>
#include <stdexcept>

namespace descry::testing {

const std::vector<std::string>& atomic_sentences() {
  static const std::vector<std::string> pool = [] {
    const char* subjects[] = {"a man", "the woman", "a small dog", "two children", "the old car", "a bird"};
    const char* actions[] = {"opens the door", "runs across the yard", "picks up a cup",
                             "turns around", "jumps over the fence", "waves at the camera"};
    std::vector<std::string> out;
    for (auto* s : subjects) {
      for (auto* a : actions) out.push_back(std::string(s) + " " + a);
    }
    return out;
  }();
  return pool;
}

namespace {

std::string capitalize(std::string s) {
  if (!s.empty()) s[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(s[0])));
  return s;
}

std::string shout(std::string s) {
  for (auto& c : s) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return s;
}

std::string join_sentences(const std::vector<std::string>& sentences) {
  std::string out;
  for (const auto& s : sentences) {
    if (!out.empty()) out += ' ';
    out += capitalize(s) + '.';
  }
  return out;
}

}  // namespace

SyntheticCorpus make_synthetic_corpus(std::size_t n, std::uint64_t seed, const std::string& model_id) {
  const auto& pool = atomic_sentences();
  std::mt19937_64 rng(seed);
  auto uniform = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };
  auto coin = [&](double p) { return std::bernoulli_distribution(p)(rng); };

  SyntheticCorpus corpus;
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<std::size_t> idx(pool.size());
    for (std::size_t k = 0; k < idx.size(); ++k) idx[k] = k;
    std::shuffle(idx.begin(), idx.end(), rng);

    const int n_ref = uniform(1, 12);
    std::vector<std::string> ref;
    for (int k = 0; k < n_ref; ++k) ref.push_back(pool[idx[k]]);

    std::vector<std::string> cand;
    for (const auto& s : ref) {
      if (!coin(0.6)) continue;
      if (coin(0.2)) {
        cand.push_back(shout(s));
      } else if (coin(0.2)) {
        cand.push_back(s + " slowly");  // entails the reference event, not vice versa
      } else {
        cand.push_back(s);
      }
    }
    const int n_extra = uniform(0, 4);
    for (int k = 0; k < n_extra; ++k) cand.push_back(pool[idx[n_ref + k]]);
    if (cand.empty()) cand.push_back(pool[idx[n_ref + n_extra]]);
    std::shuffle(cand.begin(), cand.end(), rng);

    VideoRecord rec;
    rec.video_id = "syn" + std::to_string(i + 1);
    rec.category = kAllCategories[i % kAllCategories.size()];
    rec.duration_s = uniform(20, 300) / 10.0;
    rec.n_events = n_ref;
    rec.n_subjects = uniform(1, 5);
    rec.n_shots = uniform(1, 5);
    rec.reference.text = join_sentences(ref);
    corpus.dataset.push_back(rec);
    corpus.predictions.push_back({rec.video_id, model_id, join_sentences(cand)});
  }
  return corpus;
}

std::string oracle_normalize(const std::string& text) {
  std::string letters;
  for (char c : text) {
    if (std::ispunct(static_cast<unsigned char>(c))) continue;
    letters += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  }
  std::istringstream words(letters);
  std::string w, out;
  while (words >> w) out += (out.empty() ? "" : " ") + w;
  return out;
}

std::vector<std::string> oracle_events(const std::string& description) {
  std::vector<std::string> pieces;
  std::string piece;
  std::istringstream in(description);
  while (std::getline(in, piece, '.')) {
    auto b = piece.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) continue;
    auto e = piece.find_last_not_of(" \t\r\n");
    pieces.push_back(piece.substr(b, e - b + 1));
  }
  if (pieces.size() > 10) pieces.resize(10);
  std::vector<std::string> out;
  std::set<std::string> seen;
  for (auto& p : pieces) {
    if (seen.insert(p).second) out.push_back(p);
  }
  return out;
}

OracleCounts oracle_pair(const std::string& reference, const std::string& candidate) {
  OracleCounts c;
  const auto ref_norm = oracle_normalize(reference);
  const auto cand_norm = oracle_normalize(candidate);
  for (const auto& e : oracle_events(reference)) {
    ++c.ref_total;
    if (cand_norm.find(oracle_normalize(e)) != std::string::npos) ++c.ref_entailed;
  }
  for (const auto& e : oracle_events(candidate)) {
    ++c.cand_total;
    if (ref_norm.find(oracle_normalize(e)) != std::string::npos) ++c.cand_entailed;
  }
  return c;
}

TempDir::TempDir() {
  auto base = std::filesystem::temp_directory_path() / "descry-test-XXXXXX";
  std::string buf = base.string();
  if (!mkdtemp(buf.data())) throw std::runtime_error("mkdtemp failed");
  path_ = buf;
}

TempDir::~TempDir() {
  std::error_code ec;
  std::filesystem::remove_all(path_, ec);
}

void write_text_file(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
  if (!out) throw std::runtime_error("cannot write " + p.string());
}

}  // namespace descry::testing
