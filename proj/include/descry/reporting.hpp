#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "descry/autodq.hpp"
#include "descry/dataset.hpp"
#include "descry/study.hpp"
#include "json.hpp"

namespace descry {

inline constexpr std::string_view kMissingCell = "–";

/// "F1/P/R" in percent, one decimal, round-half-up; undefined parts are "–".
std::string format_quality_cell(const DescriptionQuality& q);
std::string format_quality_cell(std::optional<double> f1, std::optional<double> precision,
                                std::optional<double> recall);

struct CategoryRow {
  std::string model_id;
  GroupedResult by_category;  // group labels are category tokens
};

/// Markdown table: Model | Live-action | Animation | YouTube | Shorts | Stock | Overall.
/// A category absent from a row renders as "–".
std::string render_category_table(const std::vector<CategoryRow>& rows);

struct CurvePoint {
  std::string bucket;
  std::optional<CorpusQuality> quality;  // empty when no scored example fell in the bucket
};

struct CurveSeries {
  std::string model_id;
  ComplexityKey key = ComplexityKey::Events;
  std::vector<CurvePoint> points;  // ascending buckets
};

/// Buckets every example by the complexity counts stored in its metadata.
CurveSeries complexity_curve(const std::string& model_id, std::span<const ExampleResult> examples,
                             ComplexityKey key, const std::vector<std::int64_t>& edges);

/// CSV header: model_id,key,bucket_index,bucket,n_scored,f1,precision,recall.
/// One row per bucket per series; undefined values are empty fields.
std::string render_complexity_curves(const std::vector<CurveSeries>& series);

struct CurveRow {
  std::string model_id;
  std::string key;
  std::size_t bucket_index = 0;
  std::string bucket;
  std::size_t n_scored = 0;
  std::optional<double> f1;
  std::optional<double> precision;
  std::optional<double> recall;

  friend bool operator==(const CurveRow&, const CurveRow&) = default;
};

std::vector<CurveRow> read_curves_csv(std::istream& in);

/// Category layout: one column per category present, plus Total.
std::string render_stats_table(const DatasetStats& stats);
nlohmann::ordered_json to_json(const DatasetStats& stats);

/// Comparison layout: Comparison | Win | Same | Lose | Advantage.
std::string render_advantage_table(const std::vector<std::pair<std::string, AdvantageResult>>& rows);

struct ReportBundle {
  std::string run_id;
  nlohmann::ordered_json config_snapshot;
  std::map<std::string, std::string> tables;  // name -> markdown
  std::map<std::string, std::string> curves;  // name -> CSV
  nlohmann::ordered_json failure_diagnostics;

  nlohmann::ordered_json to_json() const;
  /// Writes report.json plus one file per table (.md) and curve (.csv).
  void write(const std::filesystem::path& out_dir) const;
};

struct ModelResults {
  std::string model_id;
  std::vector<ExampleResult> examples;
};

/// Assembles tables, curves and diagnostics from stored per-example results.
/// Bucket edges are read from config_snapshot["bucket_edges"] when present.
/// The run id is a digest of the snapshot and the results, so regenerating
/// from the same files is byte-identical.
ReportBundle build_autodq_report(const std::vector<ModelResults>& models,
                                 const nlohmann::ordered_json& config_snapshot);

}  // namespace descry
