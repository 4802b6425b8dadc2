#include "descry/dataset.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <limits>
#include <ostream>
#include <set>
#include <unordered_map>

#include "descry/error.hpp"
#include "descry/json_lines.hpp"

namespace descry {
namespace {

std::string at_line(std::size_t line) { return "line " + std::to_string(line) + ": "; }

const json& require(const json& obj, const char* field, std::size_t line) {
  auto it = obj.find(field);
  if (it == obj.end() || it->is_null()) {
    throw ValidationError(at_line(line) + "missing field '" + field + "'");
  }
  return *it;
}

std::string require_string(const json& obj, const char* field, std::size_t line) {
  const json& v = require(obj, field, line);
  if (!v.is_string()) throw ValidationError(at_line(line) + "field '" + field + "' must be a string");
  return v.get<std::string>();
}

std::int64_t require_int(const json& obj, const char* field, std::size_t line, std::int64_t min) {
  const json& v = require(obj, field, line);
  if (!v.is_number_integer()) {
    throw ValidationError(at_line(line) + "field '" + field + "' must be an integer");
  }
  auto n = v.get<std::int64_t>();
  if (n < min) {
    throw ValidationError(at_line(line) + "field '" + field + "' must be >= " + std::to_string(min));
  }
  return n;
}

VideoRecord record_from_json(const json& obj, std::size_t line) {
  VideoRecord r;
  r.video_id = require_string(obj, "video_id", line);
  if (r.video_id.empty()) throw ValidationError(at_line(line) + "field 'video_id' is empty");

  auto cat_token = require_string(obj, "category", line);
  auto cat = parse_category(cat_token);
  if (!cat) throw ValidationError(at_line(line) + "unknown category '" + cat_token + "'");
  r.category = *cat;

  const json& dur = require(obj, "duration_s", line);
  if (!dur.is_number()) throw ValidationError(at_line(line) + "field 'duration_s' must be a number");
  r.duration_s = dur.get<double>();
  if (!(r.duration_s > 0)) throw ValidationError(at_line(line) + "field 'duration_s' must be > 0");

  r.n_events = require_int(obj, "n_events", line, 0);
  r.n_subjects = require_int(obj, "n_subjects", line, 0);
  r.n_shots = require_int(obj, "n_shots", line, 1);

  r.reference.text = require_string(obj, "reference_text", line);
  if (count_words(r.reference.text) == 0) {
    throw ValidationError(at_line(line) + "field 'reference_text' is empty");
  }
  return r;
}

}  // namespace

std::string_view to_token(Category c) {
  switch (c) {
    case Category::LiveAction: return "live_action";
    case Category::Animation: return "animation";
    case Category::YouTube: return "youtube";
    case Category::Shorts: return "shorts";
    case Category::Stock: return "stock";
  }
  return "?";
}

std::string_view display_name(Category c) {
  switch (c) {
    case Category::LiveAction: return "Live-action";
    case Category::Animation: return "Animation";
    case Category::YouTube: return "YouTube";
    case Category::Shorts: return "Shorts";
    case Category::Stock: return "Stock";
  }
  return "?";
}

std::optional<Category> parse_category(std::string_view token) {
  for (auto c : kAllCategories) {
    if (to_token(c) == token) return c;
  }
  return std::nullopt;
}

std::size_t count_words(std::string_view text) {
  std::size_t n = 0;
  bool in_word = false;
  for (unsigned char ch : text) {
    bool space = std::isspace(ch) != 0;
    if (!space && !in_word) ++n;
    in_word = !space;
  }
  return n;
}

Dataset read_manifest(std::istream& in) {
  Dataset out;
  std::unordered_map<std::string, std::size_t> first_line;
  for_each_json_line(in, [&](const json& obj, std::size_t line) {
    auto rec = record_from_json(obj, line);
    auto [it, inserted] = first_line.emplace(rec.video_id, line);
    if (!inserted) {
      throw ValidationError("duplicate video_id '" + rec.video_id + "' on lines " +
                            std::to_string(it->second) + " and " + std::to_string(line));
    }
    out.push_back(std::move(rec));
  });
  return out;
}

Dataset load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open manifest " + path.string());
  return read_manifest(in);
}

void write_manifest(std::ostream& out, const Dataset& dataset) {
  for (const auto& r : dataset) {
    nlohmann::ordered_json obj;
    obj["video_id"] = r.video_id;
    obj["category"] = to_token(r.category);
    obj["duration_s"] = r.duration_s;
    obj["n_events"] = r.n_events;
    obj["n_subjects"] = r.n_subjects;
    obj["n_shots"] = r.n_shots;
    obj["reference_text"] = r.reference.text;
    out << obj.dump() << '\n';
  }
}

std::vector<CandidateDescription> read_predictions(std::istream& in) {
  std::vector<CandidateDescription> out;
  std::map<std::pair<std::string, std::string>, std::size_t> seen;
  for_each_json_line(in, [&](const json& obj, std::size_t line) {
    CandidateDescription c;
    c.video_id = require_string(obj, "video_id", line);
    c.model_id = require_string(obj, "model_id", line);
    c.text = require_string(obj, "text", line);
    if (count_words(c.text) == 0) throw ValidationError(at_line(line) + "field 'text' is empty");
    auto [it, inserted] = seen.emplace(std::make_pair(c.video_id, c.model_id), line);
    if (!inserted) {
      throw ValidationError("duplicate prediction (" + c.video_id + ", " + c.model_id +
                            ") on lines " + std::to_string(it->second) + " and " +
                            std::to_string(line));
    }
    out.push_back(std::move(c));
  });
  return out;
}

std::vector<CandidateDescription> load_predictions(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open predictions " + path.string());
  return read_predictions(in);
}

void write_predictions(std::ostream& out, const std::vector<CandidateDescription>& preds) {
  for (const auto& p : preds) {
    nlohmann::ordered_json obj;
    obj["video_id"] = p.video_id;
    obj["model_id"] = p.model_id;
    obj["text"] = p.text;
    out << obj.dump() << '\n';
  }
}

GroupStats GroupStats::merge(const GroupStats& a, const GroupStats& b) {
  GroupStats m;
  m.count = a.count + b.count;
  if (m.count == 0) return m;
  const double wa = static_cast<double>(a.count), wb = static_cast<double>(b.count);
  const double n = static_cast<double>(m.count);
  auto mix = [&](double x, double y) { return (x * wa + y * wb) / n; };
  m.avg_duration_s = mix(a.avg_duration_s, b.avg_duration_s);
  m.avg_word_count = mix(a.avg_word_count, b.avg_word_count);
  m.avg_events = mix(a.avg_events, b.avg_events);
  m.avg_subjects = mix(a.avg_subjects, b.avg_subjects);
  m.avg_shots = mix(a.avg_shots, b.avg_shots);
  return m;
}

namespace {

struct Sums {
  std::size_t count = 0;
  double duration = 0;
  double words = 0;
  double events = 0;
  double subjects = 0;
  double shots = 0;

  void add(const VideoRecord& r) {
    ++count;
    duration += r.duration_s;
    words += static_cast<double>(r.reference.word_count());
    events += static_cast<double>(r.n_events);
    subjects += static_cast<double>(r.n_subjects);
    shots += static_cast<double>(r.n_shots);
  }

  GroupStats averages() const {
    const double n = static_cast<double>(count);
    return {count, duration / n, words / n, events / n, subjects / n, shots / n};
  }
};

}  // namespace

DatasetStats compute_stats(const Dataset& dataset) {
  if (dataset.empty()) throw InputError("compute_stats: empty dataset");
  std::map<Category, Sums> per;
  Sums all;
  for (const auto& r : dataset) {
    per[r.category].add(r);
    all.add(r);
  }
  DatasetStats stats;
  for (const auto& [cat, sums] : per) stats.per_category[cat] = sums.averages();
  stats.overall = all.averages();
  return stats;
}

std::string_view to_token(ComplexityKey k) {
  switch (k) {
    case ComplexityKey::Events: return "events";
    case ComplexityKey::Subjects: return "subjects";
    case ComplexityKey::Shots: return "shots";
  }
  return "?";
}

ComplexityKey parse_complexity_key(std::string_view token) {
  for (auto k : {ComplexityKey::Events, ComplexityKey::Subjects, ComplexityKey::Shots}) {
    if (to_token(k) == token) return k;
  }
  throw InputError("unknown stratification key '" + std::string(token) +
                   "' (expected events, subjects or shots)");
}

std::int64_t complexity_value(const VideoRecord& r, ComplexityKey key) {
  switch (key) {
    case ComplexityKey::Events: return r.n_events;
    case ComplexityKey::Subjects: return r.n_subjects;
    case ComplexityKey::Shots: return r.n_shots;
  }
  return 0;
}

std::vector<std::int64_t> default_bucket_edges(ComplexityKey key) {
  switch (key) {
    case ComplexityKey::Events: return {1, 2, 3, 4, 5, 6, 7, 8};
    case ComplexityKey::Subjects:
    case ComplexityKey::Shots: return {1, 2, 3, 4};
  }
  return {};
}

namespace {

void check_edges(const std::vector<std::int64_t>& edges) {
  if (edges.empty()) throw InputError("stratify: bucket edges are empty");
  for (std::size_t i = 1; i < edges.size(); ++i) {
    if (edges[i] <= edges[i - 1]) throw InputError("stratify: bucket edges must be strictly increasing");
  }
}

std::string range_label(std::int64_t lo, std::optional<std::int64_t> hi) {
  if (!hi) return std::to_string(lo) + "+";
  if (*hi - lo == 1) return std::to_string(lo);
  return std::to_string(lo) + "-" + std::to_string(*hi - 1);
}

}  // namespace

std::string bucket_label(std::int64_t value, const std::vector<std::int64_t>& edges) {
  check_edges(edges);
  if (value < edges.front()) return "<" + std::to_string(edges.front());
  auto it = std::upper_bound(edges.begin(), edges.end(), value);
  std::size_t idx = static_cast<std::size_t>(it - edges.begin()) - 1;
  std::optional<std::int64_t> hi;
  if (idx + 1 < edges.size()) hi = edges[idx + 1];
  return range_label(edges[idx], hi);
}

std::vector<Bucket> stratify(const Dataset& dataset, ComplexityKey key,
                             const std::vector<std::int64_t>& edges) {
  check_edges(edges);
  Bucket underflow{"<" + std::to_string(edges.front()),
                   std::numeric_limits<std::int64_t>::min(), edges.front(), {}};
  std::vector<Bucket> buckets;
  for (std::size_t i = 0; i < edges.size(); ++i) {
    std::optional<std::int64_t> hi;
    if (i + 1 < edges.size()) hi = edges[i + 1];
    buckets.push_back({range_label(edges[i], hi), edges[i], hi, {}});
  }
  for (const auto& r : dataset) {
    auto v = complexity_value(r, key);
    if (v < edges.front()) {
      underflow.records.push_back(r);
      continue;
    }
    auto it = std::upper_bound(edges.begin(), edges.end(), v);
    buckets[static_cast<std::size_t>(it - edges.begin()) - 1].records.push_back(r);
  }
  if (!underflow.records.empty()) buckets.insert(buckets.begin(), std::move(underflow));
  return buckets;
}

JoinResult join_predictions(const Dataset& dataset,
                            const std::vector<CandidateDescription>& predictions,
                            const std::string& model_id) {
  std::set<std::string> known;
  for (const auto& r : dataset) known.insert(r.video_id);

  std::unordered_map<std::string, const CandidateDescription*> by_video;
  std::vector<std::string> orphans;
  for (const auto& p : predictions) {
    if (p.model_id != model_id) continue;
    if (!known.count(p.video_id)) {
      orphans.push_back(p.video_id);
      continue;
    }
    by_video[p.video_id] = &p;
  }
  if (!orphans.empty()) {
    std::string list;
    for (const auto& id : orphans) list += (list.empty() ? "" : ", ") + id;
    throw ValidationError("predictions reference unknown video ids: " + list);
  }

  JoinResult out;
  for (const auto& r : dataset) {
    auto it = by_video.find(r.video_id);
    if (it == by_video.end()) {
      out.missing.push_back(r.video_id);
    } else {
      out.pairs.push_back({r, *it->second});
    }
  }
  return out;
}

}  // namespace descry
