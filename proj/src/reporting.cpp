#include "descry/reporting.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>

#include "descry/error.hpp"
#include "descry/format.hpp"
#include "descry/json_lines.hpp"
#include "descry/prompts.hpp"

namespace descry {
namespace {

std::string cell(const std::optional<Ratio>& r) {
  return r ? format_percent(r->num, r->den) : std::string(kMissingCell);
}

std::string cell(const std::optional<double>& v) {
  return v ? format_percent(*v) : std::string(kMissingCell);
}

std::string exact_number(const std::optional<double>& v) {
  if (!v) return {};
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", *v);
  return buf;
}

std::optional<double> parse_number(const std::string& s) {
  if (s.empty()) return std::nullopt;
  return std::stod(s);
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  fields.push_back(std::move(cur));
  return fields;
}

std::string fixed1(double v) { return format_one_decimal(v); }

std::string signed_pct(double v) {
  auto s = format_one_decimal(v);
  return (s[0] == '-' || s == "0.0") ? s + "%" : "+" + s + "%";
}

std::vector<std::int64_t> edges_from_config(const nlohmann::ordered_json& cfg, ComplexityKey key) {
  if (cfg.contains("bucket_edges") && cfg["bucket_edges"].contains(std::string(to_token(key)))) {
    return cfg["bucket_edges"][std::string(to_token(key))].get<std::vector<std::int64_t>>();
  }
  return default_bucket_edges(key);
}

}  // namespace

std::string format_quality_cell(const DescriptionQuality& q) {
  return cell(q.f1_ratio()) + "/" + cell(q.precision_ratio()) + "/" + cell(q.recall_ratio());
}

std::string format_quality_cell(std::optional<double> f1, std::optional<double> precision,
                                std::optional<double> recall) {
  return cell(f1) + "/" + cell(precision) + "/" + cell(recall);
}

std::string render_category_table(const std::vector<CategoryRow>& rows) {
  std::ostringstream out;
  out << "| Model |";
  for (auto c : kAllCategories) out << ' ' << display_name(c) << " |";
  out << " Overall |\n|---|";
  for (std::size_t i = 0; i < kAllCategories.size(); ++i) out << "---|";
  out << "---|\n";
  for (const auto& row : rows) {
    out << "| " << row.model_id << " |";
    for (auto c : kAllCategories) {
      auto it = std::find_if(row.by_category.groups.begin(), row.by_category.groups.end(),
                             [&](const GroupScore& g) { return g.label == to_token(c); });
      out << ' ' << (it == row.by_category.groups.end() ? std::string(kMissingCell)
                                                         : format_quality_cell(it->quality.micro))
          << " |";
    }
    out << ' ' << format_quality_cell(row.by_category.overall.micro) << " |\n";
  }
  return out.str();
}

CurveSeries complexity_curve(const std::string& model_id, std::span<const ExampleResult> examples,
                             ComplexityKey key, const std::vector<std::int64_t>& edges) {
  const std::string field = "n_" + std::string(to_token(key));
  std::vector<std::string> group_of;
  std::vector<std::string> order;
  bool underflow = false;
  for (const auto& ex : examples) {
    if (!ex.meta.contains(field)) {
      throw InputError("example '" + ex.id + "' lacks '" + field + "' for stratification");
    }
    auto v = ex.meta[field].get<std::int64_t>();
    underflow = underflow || v < edges.front();
    group_of.push_back(bucket_label(v, edges));
  }
  if (underflow) order.push_back(bucket_label(edges.front() - 1, edges));
  for (auto e : edges) order.push_back(bucket_label(e, edges));

  CurveSeries s{model_id, key, {}};
  std::map<std::string, std::vector<ExampleResult>> members;
  for (std::size_t i = 0; i < examples.size(); ++i) members[group_of[i]].push_back(examples[i]);
  for (const auto& label : order) {
    CurvePoint p{label, std::nullopt};
    auto it = members.find(label);
    if (it != members.end() &&
        std::any_of(it->second.begin(), it->second.end(), [](const auto& e) { return e.ok(); })) {
      p.quality = aggregate(it->second);
    }
    s.points.push_back(std::move(p));
  }
  return s;
}

std::string render_complexity_curves(const std::vector<CurveSeries>& series) {
  std::ostringstream out;
  out << "model_id,key,bucket_index,bucket,n_scored,f1,precision,recall\n";
  for (const auto& s : series) {
    for (std::size_t i = 0; i < s.points.size(); ++i) {
      const auto& p = s.points[i];
      out << csv_field(s.model_id) << ',' << to_token(s.key) << ',' << i << ','
          << csv_field(p.bucket) << ',' << (p.quality ? p.quality->n_scored : 0) << ',';
      if (p.quality) {
        out << exact_number(p.quality->micro.f1()) << ',' << exact_number(p.quality->micro.precision())
            << ',' << exact_number(p.quality->micro.recall());
      } else {
        out << ",,";
      }
      out << '\n';
    }
  }
  return out.str();
}

std::vector<CurveRow> read_curves_csv(std::istream& in) {
  std::vector<CurveRow> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line_no == 1 || line.empty()) continue;
    auto f = split_csv_line(line);
    if (f.size() != 8) throw ParseError("curves CSV line " + std::to_string(line_no) + ": expected 8 fields", line, line_no);
    try {
      rows.push_back({f[0], f[1], std::stoul(f[2]), f[3], std::stoul(f[4]), parse_number(f[5]),
                      parse_number(f[6]), parse_number(f[7])});
    } catch (const std::logic_error&) {
      throw ParseError("curves CSV line " + std::to_string(line_no) + ": bad number", line, line_no);
    }
  }
  return rows;
}

std::string render_stats_table(const DatasetStats& stats) {
  std::vector<std::pair<std::string, const GroupStats*>> cols;
  for (const auto& [cat, g] : stats.per_category) cols.emplace_back(std::string(display_name(cat)), &g);
  cols.emplace_back("Total", &stats.overall);

  std::ostringstream out;
  out << "| |";
  for (const auto& [name, _] : cols) out << ' ' << name << " |";
  out << "\n|---|";
  for (std::size_t i = 0; i < cols.size(); ++i) out << "---|";
  out << '\n';
  auto row = [&](const char* label, auto value) {
    out << "| " << label << " |";
    for (const auto& [_, g] : cols) out << ' ' << value(*g) << " |";
    out << '\n';
  };
  row("Number of videos", [](const GroupStats& g) { return std::to_string(g.count); });
  row("Avg. video length (second)", [](const GroupStats& g) { return fixed1(g.avg_duration_s); });
  row("Avg. text length (word)", [](const GroupStats& g) { return fixed1(g.avg_word_count); });
  row("Avg. number of events", [](const GroupStats& g) { return fixed1(g.avg_events); });
  row("Avg. number of subjects", [](const GroupStats& g) { return fixed1(g.avg_subjects); });
  row("Avg. number of shots", [](const GroupStats& g) { return fixed1(g.avg_shots); });
  return out.str();
}

nlohmann::ordered_json to_json(const DatasetStats& stats) {
  auto group = [](const GroupStats& g) {
    return nlohmann::ordered_json{{"count", g.count},
                                  {"avg_duration_s", g.avg_duration_s},
                                  {"avg_word_count", g.avg_word_count},
                                  {"avg_events", g.avg_events},
                                  {"avg_subjects", g.avg_subjects},
                                  {"avg_shots", g.avg_shots}};
  };
  nlohmann::ordered_json j;
  j["overall"] = group(stats.overall);
  j["per_category"] = nlohmann::ordered_json::object();
  for (const auto& [cat, g] : stats.per_category) j["per_category"][std::string(to_token(cat))] = group(g);
  return j;
}

std::string render_advantage_table(const std::vector<std::pair<std::string, AdvantageResult>>& rows) {
  std::ostringstream out;
  out << "| Comparison | Win | Same | Lose | Advantage |\n|---|---|---|---|---|\n";
  for (const auto& [label, r] : rows) {
    out << "| " << label << " | " << fixed1(r.wins_pct) << "% | " << fixed1(r.same_pct) << "% | "
        << fixed1(r.losses_pct) << "% | " << signed_pct(r.advantage_pct) << " |\n";
  }
  return out.str();
}

nlohmann::ordered_json ReportBundle::to_json() const {
  nlohmann::ordered_json j;
  j["run_id"] = run_id;
  j["config_snapshot"] = config_snapshot;
  j["tables"] = tables;
  j["curves"] = curves;
  j["failure_diagnostics"] = failure_diagnostics;
  return j;
}

void ReportBundle::write(const std::filesystem::path& out_dir) const {
  std::filesystem::create_directories(out_dir);
  write_file_atomic(out_dir / "report.json", to_json().dump(2) + "\n");
  for (const auto& [name, md] : tables) write_file_atomic(out_dir / (name + ".md"), md);
  for (const auto& [name, csv] : curves) write_file_atomic(out_dir / (name + ".csv"), csv);
}

ReportBundle build_autodq_report(const std::vector<ModelResults>& models,
                                 const nlohmann::ordered_json& config_snapshot) {
  ReportBundle b;
  b.config_snapshot = config_snapshot;

  std::string digest_input = config_snapshot.dump();
  std::vector<CategoryRow> rows;
  std::vector<CurveSeries> series;
  b.failure_diagnostics = nlohmann::ordered_json::object();
  for (const auto& m : models) {
    for (const auto& ex : m.examples) digest_input += to_json(ex).dump();

    std::vector<std::string> group_of;
    for (const auto& ex : m.examples) group_of.push_back(ex.meta.value("category", "unknown"));
    std::vector<std::string> order;
    for (auto c : kAllCategories) order.emplace_back(to_token(c));
    rows.push_back({m.model_id, group_results(m.examples, group_of, order)});

    for (auto key : {ComplexityKey::Events, ComplexityKey::Subjects, ComplexityKey::Shots}) {
      series.push_back(complexity_curve(m.model_id, m.examples, key, edges_from_config(config_snapshot, key)));
    }

    const auto& overall = rows.back().by_category.overall;
    nlohmann::ordered_json diag;
    diag["n_examples"] = overall.n_examples;
    diag["n_failed"] = overall.n_failed;
    diag["failures_by_stage"] = overall.failures_by_stage;
    diag["reference_events_contradicted"] = overall.ref_contradicted;
    diag["candidate_events_contradicted"] = overall.cand_contradicted;
    auto samples = nlohmann::ordered_json::array();
    for (const auto& ex : m.examples) {
      if (ex.ok() || samples.size() >= 5) continue;
      samples.push_back({{"id", ex.id}, {"stage", to_token(ex.failure_stage)}, {"message", ex.failure_message}});
    }
    diag["samples"] = samples;
    b.failure_diagnostics[m.model_id] = diag;
  }
  b.tables["category_table"] = render_category_table(rows);
  b.curves["complexity_curves"] = render_complexity_curves(series);
  b.run_id = sha256_hex(digest_input).substr(0, 16);
  return b;
}

}  // namespace descry
