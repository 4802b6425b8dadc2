#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <vector>

#include "descry/dataset.hpp"
#include "json.hpp"

namespace descry {

/// Annotation guide shown to annotators before the first item.
extern const std::string_view kAnnotationGuide;

/// AB: the left pane shows model_a. Never leaves the server except in exports.
enum class Orientation { AB, BA };
enum class Choice { Left, Right, Same };

std::string_view to_token(Orientation o);
std::optional<Orientation> parse_orientation(std::string_view s);
std::string_view to_token(Choice c);
/// Accepts left/right/same and the annotator-facing aliases a/b (any case).
std::optional<Choice> parse_choice(std::string_view s);

struct StudyItem {
  int item_id = 0;  // 1-based, study-wide
  std::string video_id;
  std::string video_ref;
  std::string left_text;
  std::string right_text;
  Orientation orientation = Orientation::AB;
  std::string assigned_to;
};

struct PreferenceLabel {
  int item_id = 0;
  std::string annotator;
  Choice choice = Choice::Same;
  std::string timestamp;  // ISO-8601 UTC
};

struct Study {
  std::string study_id;
  std::string model_a;
  std::string model_b;
  std::vector<StudyItem> items;
  std::vector<std::string> annotators;
  std::string guide_text;
  std::string rng = "mt19937_64";
  std::uint64_t seed = 0;
  bool overlapping = false;

  const StudyItem* find_item(int item_id) const;
};

struct StudyVideo {
  std::string video_id;
  std::string video_ref;
};

struct CreateStudyInput {
  std::string study_id;  // generated when empty
  std::string model_a;
  std::string model_b;
  std::vector<StudyVideo> videos;
  std::map<std::string, std::string> texts_a;  // video_id -> description
  std::map<std::string, std::string> texts_b;
  std::vector<std::string> annotators;
  std::uint64_t seed = 0;
  /// false: videos split into contiguous, near-equal disjoint blocks per
  /// annotator. true: every annotator sees every video (one item each).
  bool overlapping = false;
  std::string guide_text{kAnnotationGuide};
};

/// Pure function of its input. Orientation of item k is the top bit of the
/// k-th draw of mt19937_64(seed). Throws ValidationError listing videos that
/// lack a description from either model.
Study create_study(const CreateStudyInput& input);

/// Builds study input from a manifest and prediction file. `sample` > 0 picks
/// that many videos with a seeded shuffle (seed + 1, independent of the
/// orientation stream); otherwise all videos in manifest order.
CreateStudyInput study_input_from_predictions(const Dataset& dataset,
                                              const std::vector<CandidateDescription>& predictions,
                                              const std::string& model_a, const std::string& model_b,
                                              std::vector<std::string> annotators, std::uint64_t seed,
                                              std::size_t sample = 0,
                                              const std::string& media_base_url = {});

struct AdvantageResult {
  std::size_t wins = 0;
  std::size_t same = 0;
  std::size_t losses = 0;
  double wins_pct = 0;
  double same_pct = 0;
  double losses_pct = 0;
  double advantage_pct = 0;

  std::size_t total() const { return wins + same + losses; }
  /// Throws InputError when all counts are zero.
  static AdvantageResult from_counts(std::size_t wins, std::size_t same, std::size_t losses);
  /// Advantage from already-rounded percentages (wins − losses).
  static AdvantageResult from_percentages(double wins_pct, double same_pct, double losses_pct);
  /// The same labels seen from model_b's side.
  AdvantageResult swapped() const;
};

/// Outcome for model_a of one label, through the item's hidden orientation.
enum class Outcome { Win, Same, Loss };
Outcome outcome_for_model_a(Orientation o, Choice c);

/// Throws InputError when there are no labels.
AdvantageResult compute_advantage(const Study& study, const std::vector<PreferenceLabel>& labels);

struct Progress {
  std::size_t labeled = 0;
  std::size_t total = 0;
};

/// The only shape in which an item reaches an annotator.
struct PresentedItem {
  int item_id = 0;
  std::string video_ref;
  std::string left_text;
  std::string right_text;
  std::size_t position = 0;  // 1-based among the annotator's items
  Progress progress;
};

nlohmann::json to_annotator_json(const PresentedItem& item);
nlohmann::json completed_json(const Progress& progress);

// Exported (de-anonymized) labels.
struct ExportedLabel {
  int item_id = 0;
  std::string annotator;
  std::string video_id;
  Choice choice = Choice::Same;
  Orientation orientation = Orientation::AB;
  std::string timestamp;
};

void write_export(std::ostream& out, const Study& study, const std::vector<PreferenceLabel>& labels);
std::vector<ExportedLabel> read_export(std::istream& in);
AdvantageResult advantage_from_export(const std::vector<ExportedLabel>& labels);

nlohmann::json to_json(const Study& study);
Study study_from_json(const nlohmann::json& j);
nlohmann::json to_json(const PreferenceLabel& label);
PreferenceLabel label_from_json(const nlohmann::json& j);
nlohmann::json to_json(const AdvantageResult& r);

/// Thread-safe registry of studies. With a data directory, each study lives in
/// <dir>/<study_id>/ as study.json, an append-only labels.jsonl and a label
/// snapshot rewritten every `snapshot_every` labels; the constructor reloads
/// them. Label writes are serialized; reads share a lock.
class StudyStore {
 public:
  explicit StudyStore(std::optional<std::filesystem::path> data_dir = std::nullopt,
                      std::size_t snapshot_every = 100);
  ~StudyStore();

  Study create(const CreateStudyInput& input);

  /// nullopt when the annotator has labeled all of their items. Throws
  /// NotFoundError for an unknown study, ForbiddenError for an annotator with
  /// no assignment in it.
  std::optional<PresentedItem> next_item(const std::string& study_id,
                                         const std::string& annotator) const;
  Progress progress(const std::string& study_id, const std::string& annotator) const;

  /// ForbiddenError if the item is not assigned to `annotator`,
  /// ConflictError if already labeled, NotFoundError for unknown ids.
  PreferenceLabel submit_label(const std::string& study_id, const std::string& annotator,
                               int item_id, Choice choice);

  AdvantageResult advantage(const std::string& study_id) const;
  void export_labels(const std::string& study_id, std::ostream& out) const;

  Study study(const std::string& study_id) const;
  std::vector<PreferenceLabel> labels(const std::string& study_id) const;
  std::vector<std::string> study_ids() const;

 private:
  struct Entry;
  Entry& entry(const std::string& study_id) const;
  void load_all();
  void write_snapshot(const Entry& e) const;

  std::optional<std::filesystem::path> data_dir_;
  std::size_t snapshot_every_;
  mutable std::shared_mutex mu_;
  std::map<std::string, std::unique_ptr<Entry>> studies_;
};

}  // namespace descry
