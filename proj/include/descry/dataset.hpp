#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace descry {

enum class Category { LiveAction, Animation, YouTube, Shorts, Stock };

inline constexpr std::array<Category, 5> kAllCategories = {
    Category::LiveAction, Category::Animation, Category::YouTube, Category::Shorts,
    Category::Stock};

/// Serialized token: live_action, animation, youtube, shorts, stock.
std::string_view to_token(Category c);
/// Column heading used in report tables ("Live-action", ...).
std::string_view display_name(Category c);
std::optional<Category> parse_category(std::string_view token);

/// Number of whitespace-separated tokens.
std::size_t count_words(std::string_view text);

struct ReferenceDescription {
  std::string text;
  std::size_t word_count() const { return count_words(text); }
};

struct VideoRecord {
  std::string video_id;
  Category category = Category::LiveAction;
  double duration_s = 0;
  std::int64_t n_events = 0;
  std::int64_t n_subjects = 0;
  std::int64_t n_shots = 1;
  ReferenceDescription reference;

  friend bool operator==(const VideoRecord& a, const VideoRecord& b) {
    return a.video_id == b.video_id && a.category == b.category &&
           a.duration_s == b.duration_s && a.n_events == b.n_events &&
           a.n_subjects == b.n_subjects && a.n_shots == b.n_shots &&
           a.reference.text == b.reference.text;
  }
};

using Dataset = std::vector<VideoRecord>;

struct CandidateDescription {
  std::string video_id;
  std::string model_id;
  std::string text;
};

// Manifest / prediction I/O. Both formats are line-delimited JSON.
Dataset read_manifest(std::istream& in);
Dataset load_manifest(const std::filesystem::path& path);
void write_manifest(std::ostream& out, const Dataset& dataset);

std::vector<CandidateDescription> read_predictions(std::istream& in);
std::vector<CandidateDescription> load_predictions(const std::filesystem::path& path);
void write_predictions(std::ostream& out, const std::vector<CandidateDescription>& preds);

struct GroupStats {
  std::size_t count = 0;
  double avg_duration_s = 0;
  double avg_word_count = 0;
  double avg_events = 0;
  double avg_subjects = 0;
  double avg_shots = 0;

  /// Count-weighted combination of two disjoint groups.
  static GroupStats merge(const GroupStats& a, const GroupStats& b);
};

struct DatasetStats {
  std::map<Category, GroupStats> per_category;  // only categories present
  GroupStats overall;
};

DatasetStats compute_stats(const Dataset& dataset);

enum class ComplexityKey { Events, Subjects, Shots };

std::string_view to_token(ComplexityKey k);
/// Throws InputError for anything other than events/subjects/shots.
ComplexityKey parse_complexity_key(std::string_view token);
std::int64_t complexity_value(const VideoRecord& r, ComplexityKey key);

/// Defaults: events 1..8+, subjects 1..4+, shots 1..4+.
std::vector<std::int64_t> default_bucket_edges(ComplexityKey key);

struct Bucket {
  std::string label;                 // "2", "3-4", "8+", "<1"
  std::int64_t lower = 0;            // inclusive; INT64_MIN for the underflow bucket
  std::optional<std::int64_t> upper; // exclusive; nullopt for the open-ended top bucket
  std::vector<VideoRecord> records;
};

/// Partitions records by `key` into [e0,e1), [e1,e2), ..., [ek,inf). Records
/// below e0 land in a leading "<e0" bucket, present only when nonempty.
/// Buckets are returned in ascending order and may be empty.
std::vector<Bucket> stratify(const Dataset& dataset, ComplexityKey key,
                             const std::vector<std::int64_t>& bucket_edges);

/// Label of the bucket a value falls into under `bucket_edges`.
std::string bucket_label(std::int64_t value, const std::vector<std::int64_t>& bucket_edges);

struct JoinedPair {
  VideoRecord record;
  CandidateDescription candidate;
};

struct JoinResult {
  std::vector<JoinedPair> pairs;       // dataset order
  std::vector<std::string> missing;    // dataset ids without a prediction
};

/// Pairs each dataset record with `model_id`'s prediction. Predictions for
/// other models are ignored; a prediction naming an unknown video is an error.
JoinResult join_predictions(const Dataset& dataset,
                            const std::vector<CandidateDescription>& predictions,
                            const std::string& model_id);

}  // namespace descry
