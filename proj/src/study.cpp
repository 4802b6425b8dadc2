#include "descry/study.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <ctime>
#include <fstream>
#include <mutex>
#include <random>
#include <sstream>

#include "descry/error.hpp"
#include "descry/json_lines.hpp"

namespace descry {

const std::string_view kAnnotationGuide =
    "Imagine you are reading video descriptions to a blind person. Which version of the "
    "description better helps the blind person understand the content of the video? You should "
    "choose the more helpful version. This judgment may be subjective, but in principle, you can "
    "consider both accuracy and comprehensiveness:\n"
    "- When equally accurate, the more comprehensive description is more helpful.\n"
    "- When equally comprehensive, the more accurate description is more helpful.\n"
    "- If both descriptions have flaws in accuracy and comprehensiveness, you need to judge which "
    "flaw has a lesser impact on understanding the main content of the video. In this case, you "
    "can use your own subjective feelings and common sense to make a judgment, without relying on "
    "explicit rules.\n"
    "- We value the description of dynamic events. Therefore, your evaluation should focus on "
    "dynamic events (actions, behaviors, changes, etc.). Detailed descriptions of static aspects "
    "(appearance, color, texture, static background) do not earn extra points, unless they help "
    "understand key events. The model does not accept audio input, so you can completely ignore "
    "the sounds in the video.\n"
    "- Please make an effort to discern the better description, and try to use the \"Same "
    "quality\" option as little as possible.";

namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

std::string utc_now() {
  auto now = std::chrono::system_clock::now();
  auto t = std::chrono::system_clock::to_time_t(now);
  auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(now.time_since_epoch()).count() % 1000;
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%S", &tm);
  char out[40];
  std::snprintf(out, sizeof out, "%s.%03dZ", buf, static_cast<int>(ms));
  return out;
}

std::string random_study_id() {
  std::random_device rd;
  std::uniform_int_distribution<int> hex(0, 15);
  std::string id = "s";
  for (int i = 0; i < 16; ++i) id += "0123456789abcdef"[hex(rd)];
  return id;
}

bool valid_study_id(std::string_view id) {
  if (id.empty() || id.size() > 128) return false;
  return std::all_of(id.begin(), id.end(), [](unsigned char c) {
    return std::isalnum(c) || c == '-' || c == '_';
  });
}

}  // namespace

std::string_view to_token(Orientation o) { return o == Orientation::AB ? "ab" : "ba"; }

std::optional<Orientation> parse_orientation(std::string_view s) {
  if (s == "ab") return Orientation::AB;
  if (s == "ba") return Orientation::BA;
  return std::nullopt;
}

std::string_view to_token(Choice c) {
  switch (c) {
    case Choice::Left: return "left";
    case Choice::Right: return "right";
    case Choice::Same: return "same";
  }
  return "?";
}

std::optional<Choice> parse_choice(std::string_view s) {
  auto t = lower(s);
  if (t == "left" || t == "a") return Choice::Left;
  if (t == "right" || t == "b") return Choice::Right;
  if (t == "same") return Choice::Same;
  return std::nullopt;
}

const StudyItem* Study::find_item(int item_id) const {
  if (item_id < 1 || static_cast<std::size_t>(item_id) > items.size()) return nullptr;
  const auto& item = items[static_cast<std::size_t>(item_id - 1)];
  return item.item_id == item_id ? &item : nullptr;
}

Study create_study(const CreateStudyInput& in) {
  if (in.model_a.empty() || in.model_b.empty()) throw InputError("study needs two model ids");
  if (in.model_a == in.model_b) throw InputError("study models must differ");
  if (in.annotators.empty()) throw InputError("study needs at least one annotator");
  if (in.videos.empty()) throw InputError("study needs at least one video");
  std::set<std::string> unique_annotators(in.annotators.begin(), in.annotators.end());
  if (unique_annotators.size() != in.annotators.size()) throw InputError("duplicate annotator id");
  if (unique_annotators.count("")) throw InputError("empty annotator id");

  std::vector<std::string> missing;
  for (const auto& v : in.videos) {
    if (!in.texts_a.count(v.video_id) || !in.texts_b.count(v.video_id)) missing.push_back(v.video_id);
  }
  if (!missing.empty()) {
    std::string list;
    for (const auto& id : missing) list += (list.empty() ? "" : ", ") + id;
    throw ValidationError("missing predictions for videos: " + list);
  }

  Study s;
  s.study_id = in.study_id.empty() ? random_study_id() : in.study_id;
  if (!valid_study_id(s.study_id)) throw InputError("study id must be [A-Za-z0-9_-]+");
  s.model_a = in.model_a;
  s.model_b = in.model_b;
  s.annotators = in.annotators;
  s.guide_text = in.guide_text;
  s.seed = in.seed;
  s.overlapping = in.overlapping;

  std::mt19937_64 rng(in.seed);
  auto add_item = [&](const StudyVideo& v, const std::string& annotator) {
    StudyItem item;
    item.item_id = static_cast<int>(s.items.size()) + 1;
    item.video_id = v.video_id;
    item.video_ref = v.video_ref.empty() ? v.video_id : v.video_ref;
    item.orientation = (rng() >> 63) ? Orientation::BA : Orientation::AB;
    const auto& a = in.texts_a.at(v.video_id);
    const auto& b = in.texts_b.at(v.video_id);
    item.left_text = item.orientation == Orientation::AB ? a : b;
    item.right_text = item.orientation == Orientation::AB ? b : a;
    item.assigned_to = annotator;
    s.items.push_back(std::move(item));
  };

  const std::size_t n = in.videos.size();
  const std::size_t k = in.annotators.size();
  if (in.overlapping) {
    for (const auto& annotator : in.annotators) {
      for (const auto& v : in.videos) add_item(v, annotator);
    }
  } else {
    for (std::size_t i = 0; i < n; ++i) add_item(in.videos[i], in.annotators[i * k / n]);
  }
  return s;
}

CreateStudyInput study_input_from_predictions(const Dataset& dataset,
                                              const std::vector<CandidateDescription>& predictions,
                                              const std::string& model_a, const std::string& model_b,
                                              std::vector<std::string> annotators, std::uint64_t seed,
                                              std::size_t sample, const std::string& media_base_url) {
  CreateStudyInput in;
  in.model_a = model_a;
  in.model_b = model_b;
  in.annotators = std::move(annotators);
  in.seed = seed;
  for (const auto& p : predictions) {
    if (p.model_id == model_a) in.texts_a[p.video_id] = p.text;
    if (p.model_id == model_b) in.texts_b[p.video_id] = p.text;
  }
  std::vector<const VideoRecord*> chosen;
  for (const auto& r : dataset) chosen.push_back(&r);
  if (sample > 0) {
    if (sample > chosen.size()) throw InputError("sample size exceeds dataset size");
    std::mt19937_64 rng(seed + 1);
    for (std::size_t i = chosen.size() - 1; i > 0; --i) {
      std::size_t j = static_cast<std::size_t>(rng() % (i + 1));
      std::swap(chosen[i], chosen[j]);
    }
    chosen.resize(sample);
  }
  for (const auto* r : chosen) {
    in.videos.push_back({r->video_id, media_base_url.empty() ? r->video_id : media_base_url + r->video_id});
  }
  return in;
}

AdvantageResult AdvantageResult::from_counts(std::size_t wins, std::size_t same, std::size_t losses) {
  const std::size_t n = wins + same + losses;
  if (n == 0) throw InputError("advantage: no labels");
  AdvantageResult r;
  r.wins = wins;
  r.same = same;
  r.losses = losses;
  const double total = static_cast<double>(n);
  r.wins_pct = 100.0 * static_cast<double>(wins) / total;
  r.same_pct = 100.0 * static_cast<double>(same) / total;
  r.losses_pct = 100.0 * static_cast<double>(losses) / total;
  r.advantage_pct = 100.0 * (static_cast<double>(wins) - static_cast<double>(losses)) / total;
  return r;
}

AdvantageResult AdvantageResult::from_percentages(double wins_pct, double same_pct, double losses_pct) {
  AdvantageResult r;
  r.wins_pct = wins_pct;
  r.same_pct = same_pct;
  r.losses_pct = losses_pct;
  r.advantage_pct = wins_pct - losses_pct;
  return r;
}

AdvantageResult AdvantageResult::swapped() const {
  AdvantageResult r = *this;
  std::swap(r.wins, r.losses);
  std::swap(r.wins_pct, r.losses_pct);
  r.advantage_pct = -advantage_pct;
  return r;
}

Outcome outcome_for_model_a(Orientation o, Choice c) {
  if (c == Choice::Same) return Outcome::Same;
  const bool left_is_a = o == Orientation::AB;
  return (c == Choice::Left) == left_is_a ? Outcome::Win : Outcome::Loss;
}

namespace {

AdvantageResult tally(const std::vector<Outcome>& outcomes) {
  std::size_t w = 0, s = 0, l = 0;
  for (auto o : outcomes) {
    w += o == Outcome::Win;
    s += o == Outcome::Same;
    l += o == Outcome::Loss;
  }
  return AdvantageResult::from_counts(w, s, l);
}

}  // namespace

AdvantageResult compute_advantage(const Study& study, const std::vector<PreferenceLabel>& labels) {
  if (labels.empty()) throw InputError("advantage: study has no labels");
  std::vector<Outcome> outcomes;
  outcomes.reserve(labels.size());
  for (const auto& l : labels) {
    const auto* item = study.find_item(l.item_id);
    if (!item) throw ValidationError("label for unknown item " + std::to_string(l.item_id));
    outcomes.push_back(outcome_for_model_a(item->orientation, l.choice));
  }
  return tally(outcomes);
}

nlohmann::json to_annotator_json(const PresentedItem& item) {
  return {{"completed", false},
          {"item_id", item.item_id},
          {"video_ref", item.video_ref},
          {"left_text", item.left_text},
          {"right_text", item.right_text},
          {"position", item.position},
          {"progress", {{"labeled", item.progress.labeled}, {"total", item.progress.total}}}};
}

nlohmann::json completed_json(const Progress& progress) {
  return {{"completed", true},
          {"progress", {{"labeled", progress.labeled}, {"total", progress.total}}}};
}

void write_export(std::ostream& out, const Study& study, const std::vector<PreferenceLabel>& labels) {
  out << "# descry study export: de-anonymized labels, not for annotators. study_id="
      << study.study_id << '\n';
  for (const auto& l : labels) {
    const auto* item = study.find_item(l.item_id);
    if (!item) continue;
    auto outcome = outcome_for_model_a(item->orientation, l.choice);
    nlohmann::ordered_json j;
    j["item_id"] = l.item_id;
    j["annotator"] = l.annotator;
    j["video_id"] = item->video_id;
    j["choice"] = to_token(l.choice);
    j["orientation"] = to_token(item->orientation);
    j["model_left"] = item->orientation == Orientation::AB ? study.model_a : study.model_b;
    j["model_right"] = item->orientation == Orientation::AB ? study.model_b : study.model_a;
    j["winner"] = outcome == Outcome::Same ? "same" : outcome == Outcome::Win ? study.model_a : study.model_b;
    j["model_a"] = study.model_a;
    j["model_b"] = study.model_b;
    j["timestamp"] = l.timestamp;
    out << j.dump() << '\n';
  }
}

std::vector<ExportedLabel> read_export(std::istream& in) {
  std::vector<ExportedLabel> out;
  for_each_json_line(in, [&](const json& j, std::size_t line) {
    try {
      ExportedLabel l;
      l.item_id = j.at("item_id").get<int>();
      l.annotator = j.at("annotator").get<std::string>();
      l.video_id = j.value("video_id", "");
      auto c = parse_choice(j.at("choice").get<std::string>());
      auto o = parse_orientation(j.at("orientation").get<std::string>());
      if (!c || !o) throw ParseError("bad choice or orientation", j.dump(), line);
      l.choice = *c;
      l.orientation = *o;
      l.timestamp = j.value("timestamp", "");
      out.push_back(std::move(l));
    } catch (const json::exception& e) {
      throw ParseError("line " + std::to_string(line) + ": " + e.what(), j.dump(), line);
    }
  });
  return out;
}

AdvantageResult advantage_from_export(const std::vector<ExportedLabel>& labels) {
  std::vector<Outcome> outcomes;
  for (const auto& l : labels) outcomes.push_back(outcome_for_model_a(l.orientation, l.choice));
  return tally(outcomes);
}

nlohmann::json to_json(const Study& s) {
  nlohmann::json items = nlohmann::json::array();
  for (const auto& it : s.items) {
    items.push_back({{"item_id", it.item_id},
                     {"video_id", it.video_id},
                     {"video_ref", it.video_ref},
                     {"left_text", it.left_text},
                     {"right_text", it.right_text},
                     {"orientation", to_token(it.orientation)},
                     {"assigned_to", it.assigned_to}});
  }
  return {{"study_id", s.study_id},   {"model_a", s.model_a},       {"model_b", s.model_b},
          {"annotators", s.annotators}, {"guide_text", s.guide_text}, {"rng", s.rng},
          {"seed", s.seed},           {"overlapping", s.overlapping}, {"items", items}};
}

Study study_from_json(const nlohmann::json& j) {
  Study s;
  s.study_id = j.at("study_id").get<std::string>();
  s.model_a = j.at("model_a").get<std::string>();
  s.model_b = j.at("model_b").get<std::string>();
  s.annotators = j.at("annotators").get<std::vector<std::string>>();
  s.guide_text = j.at("guide_text").get<std::string>();
  s.rng = j.value("rng", "mt19937_64");
  s.seed = j.at("seed").get<std::uint64_t>();
  s.overlapping = j.value("overlapping", false);
  for (const auto& it : j.at("items")) {
    StudyItem item;
    item.item_id = it.at("item_id").get<int>();
    item.video_id = it.at("video_id").get<std::string>();
    item.video_ref = it.at("video_ref").get<std::string>();
    item.left_text = it.at("left_text").get<std::string>();
    item.right_text = it.at("right_text").get<std::string>();
    auto o = parse_orientation(it.at("orientation").get<std::string>());
    if (!o) throw ParseError("bad orientation in stored study");
    item.orientation = *o;
    item.assigned_to = it.at("assigned_to").get<std::string>();
    s.items.push_back(std::move(item));
  }
  return s;
}

nlohmann::json to_json(const PreferenceLabel& l) {
  return {{"item_id", l.item_id},
          {"annotator", l.annotator},
          {"choice", to_token(l.choice)},
          {"timestamp", l.timestamp}};
}

PreferenceLabel label_from_json(const nlohmann::json& j) {
  PreferenceLabel l;
  l.item_id = j.at("item_id").get<int>();
  l.annotator = j.at("annotator").get<std::string>();
  auto c = parse_choice(j.at("choice").get<std::string>());
  if (!c) throw ParseError("bad choice in stored label");
  l.choice = *c;
  l.timestamp = j.value("timestamp", "");
  return l;
}

nlohmann::json to_json(const AdvantageResult& r) {
  return {{"wins", r.wins},           {"same", r.same},
          {"losses", r.losses},       {"total", r.total()},
          {"wins_pct", r.wins_pct},   {"same_pct", r.same_pct},
          {"losses_pct", r.losses_pct}, {"advantage_pct", r.advantage_pct}};
}

// ---------------------------------------------------------------------------
// StudyStore
// ---------------------------------------------------------------------------

struct StudyStore::Entry {
  Study study;
  std::vector<PreferenceLabel> labels;
  std::set<int> labeled_items;
  std::map<std::string, std::vector<int>> items_by_annotator;  // ascending item ids
  std::size_t log_lines = 0;
  std::optional<std::filesystem::path> dir;

  void index() {
    for (const auto& it : study.items) items_by_annotator[it.assigned_to].push_back(it.item_id);
  }
  void apply(PreferenceLabel l) {
    labeled_items.insert(l.item_id);
    labels.push_back(std::move(l));
  }
};

StudyStore::StudyStore(std::optional<std::filesystem::path> data_dir, std::size_t snapshot_every)
    : data_dir_(std::move(data_dir)), snapshot_every_(std::max<std::size_t>(1, snapshot_every)) {
  if (data_dir_) {
    std::filesystem::create_directories(*data_dir_);
    load_all();
  }
}

StudyStore::~StudyStore() = default;

void StudyStore::load_all() {
  for (const auto& dirent : std::filesystem::directory_iterator(*data_dir_)) {
    if (!dirent.is_directory()) continue;
    auto study_path = dirent.path() / "study.json";
    if (!std::filesystem::exists(study_path)) continue;
    auto e = std::make_unique<Entry>();
    e->study = study_from_json(json::parse(read_file(study_path)));
    e->dir = dirent.path();
    e->index();

    std::size_t skip = 0;
    auto snap_path = dirent.path() / "snapshot.json";
    if (std::filesystem::exists(snap_path)) {
      auto snap = json::parse(read_file(snap_path));
      for (const auto& l : snap.at("labels")) e->apply(label_from_json(l));
      skip = snap.at("log_lines").get<std::size_t>();
    }
    std::ifstream log(dirent.path() / "labels.jsonl");
    std::string line;
    while (std::getline(log, line)) {
      ++e->log_lines;
      if (e->log_lines <= skip) continue;
      auto j = json::parse(line, nullptr, false);
      if (j.is_discarded()) continue;  // torn trailing write
      auto l = label_from_json(j);
      if (!e->labeled_items.count(l.item_id)) e->apply(std::move(l));
    }
    studies_[e->study.study_id] = std::move(e);
  }
}

void StudyStore::write_snapshot(const Entry& e) const {
  if (!e.dir) return;
  json labels = json::array();
  for (const auto& l : e.labels) labels.push_back(to_json(l));
  write_file_atomic(*e.dir / "snapshot.json",
                    json{{"log_lines", e.log_lines}, {"labels", labels}}.dump() + "\n");
}

Study StudyStore::create(const CreateStudyInput& input) {
  auto study = create_study(input);
  std::unique_lock lock(mu_);
  if (studies_.count(study.study_id)) throw ConflictError("study '" + study.study_id + "' exists");
  auto e = std::make_unique<Entry>();
  e->study = study;
  e->index();
  if (data_dir_) {
    e->dir = *data_dir_ / study.study_id;
    std::filesystem::create_directories(*e->dir);
    write_file_atomic(*e->dir / "study.json", to_json(study).dump() + "\n");
  }
  studies_[study.study_id] = std::move(e);
  return study;
}

StudyStore::Entry& StudyStore::entry(const std::string& study_id) const {
  auto it = studies_.find(study_id);
  if (it == studies_.end()) throw NotFoundError("unknown study '" + study_id + "'");
  return *it->second;
}

std::optional<PresentedItem> StudyStore::next_item(const std::string& study_id,
                                                   const std::string& annotator) const {
  std::shared_lock lock(mu_);
  const auto& e = entry(study_id);
  auto assigned = e.items_by_annotator.find(annotator);
  if (assigned == e.items_by_annotator.end()) {
    throw ForbiddenError("annotator has no assignment in this study");
  }
  const auto& ids = assigned->second;
  Progress p{0, ids.size()};
  for (int id : ids) p.labeled += e.labeled_items.count(id);
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (e.labeled_items.count(ids[i])) continue;
    const auto* item = e.study.find_item(ids[i]);
    return PresentedItem{item->item_id, item->video_ref, item->left_text, item->right_text, i + 1, p};
  }
  return std::nullopt;
}

Progress StudyStore::progress(const std::string& study_id, const std::string& annotator) const {
  std::shared_lock lock(mu_);
  const auto& e = entry(study_id);
  auto assigned = e.items_by_annotator.find(annotator);
  if (assigned == e.items_by_annotator.end()) {
    throw ForbiddenError("annotator has no assignment in this study");
  }
  Progress p{0, assigned->second.size()};
  for (int id : assigned->second) p.labeled += e.labeled_items.count(id);
  return p;
}

PreferenceLabel StudyStore::submit_label(const std::string& study_id, const std::string& annotator,
                                         int item_id, Choice choice) {
  std::unique_lock lock(mu_);
  auto& e = entry(study_id);
  const auto* item = e.study.find_item(item_id);
  if (!item) throw NotFoundError("unknown item " + std::to_string(item_id));
  if (item->assigned_to != annotator) throw ForbiddenError("item is not assigned to this annotator");
  if (e.labeled_items.count(item_id)) throw ConflictError("item " + std::to_string(item_id) + " already labeled");

  PreferenceLabel label{item_id, annotator, choice, utc_now()};
  if (e.dir) {
    std::ofstream log(*e.dir / "labels.jsonl", std::ios::app);
    log << to_json(label).dump() << '\n';
    log.flush();
    if (!log) throw Error("failed to persist label");
    ++e.log_lines;
  }
  e.apply(label);
  if (e.dir && e.labels.size() % snapshot_every_ == 0) write_snapshot(e);
  return label;
}

AdvantageResult StudyStore::advantage(const std::string& study_id) const {
  std::shared_lock lock(mu_);
  const auto& e = entry(study_id);
  return compute_advantage(e.study, e.labels);
}

void StudyStore::export_labels(const std::string& study_id, std::ostream& out) const {
  std::shared_lock lock(mu_);
  const auto& e = entry(study_id);
  write_export(out, e.study, e.labels);
}

Study StudyStore::study(const std::string& study_id) const {
  std::shared_lock lock(mu_);
  return entry(study_id).study;
}

std::vector<PreferenceLabel> StudyStore::labels(const std::string& study_id) const {
  std::shared_lock lock(mu_);
  return entry(study_id).labels;
}

std::vector<std::string> StudyStore::study_ids() const {
  std::shared_lock lock(mu_);
  std::vector<std::string> ids;
  for (const auto& [id, _] : studies_) ids.push_back(id);
  return ids;
}

}  // namespace descry
