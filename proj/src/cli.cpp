#include "descry/cli.hpp"

#include <pthread.h>

#include <csignal>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "descry/autodq.hpp"
#include "descry/caption_metrics.hpp"
#include "descry/dataset.hpp"
#include "descry/error.hpp"
#include "descry/format.hpp"
#include "descry/json_lines.hpp"
#include "descry/prompts.hpp"
#include "descry/reporting.hpp"
#include "descry/study.hpp"
#include "descry/study_server.hpp"

namespace descry {
namespace {

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

constexpr int kUsageError = 2;

struct JudgeOptions {
  std::string judge = "http";
  std::string base_url = "https://api.openai.com/v1";
  std::string model{kDefaultJudgeModel};
  double temperature = 0.0;
  int max_tokens = 1024;
  std::size_t max_in_flight = 8;
  int max_attempts = 5;
  std::string cache_dir;
  std::string vqa_template_path;
};

void add_judge_options(CLI::App* app, JudgeOptions& o) {
  app->add_option("--judge", o.judge, "Judge backend")->check(CLI::IsMember({"http", "stub"}))->capture_default_str();
  app->add_option("--base-url", o.base_url, "Chat-completion base URL (http judge)")->capture_default_str();
  app->add_option("--judge-model", o.model, "Judge model name")->capture_default_str();
  app->add_option("--temperature", o.temperature, "Judge sampling temperature")->capture_default_str();
  app->add_option("--max-tokens", o.max_tokens, "Judge max_tokens")->capture_default_str();
  app->add_option("--max-in-flight", o.max_in_flight, "Concurrent judge requests")
      ->check(CLI::PositiveNumber)->capture_default_str();
  app->add_option("--max-attempts", o.max_attempts, "Attempts per judge request")
      ->check(CLI::PositiveNumber)->capture_default_str();
  app->add_option("--cache-dir", o.cache_dir, "Judge response cache directory");
}

std::string vqa_template_text(const JudgeOptions& o) {
  return o.vqa_template_path.empty() ? std::string() : read_file(o.vqa_template_path);
}

std::unique_ptr<Gateway> make_gateway(const JudgeOptions& o) {
  std::shared_ptr<JudgeBackend> backend;
  if (o.judge == "stub") {
    backend = std::make_shared<StubJudgeBackend>(vqa_template_text(o));
  } else {
    backend = HttpChatBackend::from_env(o.base_url);
  }
  GatewayConfig cfg;
  cfg.model_name = o.model;
  cfg.sampling = {o.temperature, o.max_tokens};
  cfg.max_in_flight = o.max_in_flight;
  cfg.retry.max_attempts = o.max_attempts;
  if (!o.cache_dir.empty()) cfg.cache_dir = o.cache_dir;
  return std::make_unique<Gateway>(std::move(backend), cfg);
}

ojson judge_snapshot(const Gateway& gw) {
  return {{"backend", gw.backend().id()},
          {"model", gw.config().model_name},
          {"temperature", gw.config().sampling.temperature},
          {"max_tokens", gw.config().sampling.max_tokens}};
}

std::vector<std::int64_t> parse_edges(const std::string& spec, ComplexityKey key) {
  if (spec.empty()) return default_bucket_edges(key);
  std::vector<std::int64_t> edges;
  std::stringstream ss(spec);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    try {
      std::size_t used = 0;
      edges.push_back(std::stoll(tok, &used));
      if (used != tok.size()) throw std::invalid_argument(tok);
    } catch (const std::logic_error&) {
      throw InputError("bad bucket edge '" + tok + "'");
    }
  }
  for (std::size_t i = 1; i < edges.size(); ++i) {
    if (edges[i] <= edges[i - 1]) throw InputError("bucket edges must be strictly increasing");
  }
  if (edges.empty()) throw InputError("empty bucket edge list");
  return edges;
}

std::string file_safe(const std::string& s) {
  std::string out;
  for (unsigned char c : s) out += (std::isalnum(c) || c == '-' || c == '_' || c == '.') ? static_cast<char>(c) : '_';
  return out.empty() ? "_" : out;
}

void write_text(const fs::path& path, const std::string& text) { write_file_atomic(path, text); }

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (!tok.empty()) out.push_back(tok);
  }
  return out;
}

// ---------------------------------------------------------------------------
// stats
// ---------------------------------------------------------------------------

struct StatsArgs {
  std::string manifest;
  std::string out_dir;
};

int run_stats(const StatsArgs& a, std::ostream& out) {
  auto stats = compute_stats(load_manifest(a.manifest));
  auto j = to_json(stats);
  if (!a.out_dir.empty()) {
    write_text(fs::path(a.out_dir) / "stats.json", j.dump(2) + "\n");
    write_text(fs::path(a.out_dir) / "stats_table.md", render_stats_table(stats));
  }
  out << j.dump(2) << '\n';
  return 0;
}

// ---------------------------------------------------------------------------
// eval-autodq / report
// ---------------------------------------------------------------------------

struct AutodqArgs {
  std::string manifest;
  std::string pred;
  std::vector<std::string> models;
  std::string out_dir = ".";
  std::string edges_events, edges_subjects, edges_shots;
  JudgeOptions judge;
};

std::vector<ExampleResult> read_examples(const fs::path& path) {
  std::vector<ExampleResult> out;
  for_each_json_line(path, [&](const json& j, std::size_t) { out.push_back(example_from_json(j)); });
  return out;
}

std::vector<ModelResults> group_by_model(const std::vector<ExampleResult>& examples,
                                         const std::string& fallback_model) {
  std::vector<ModelResults> models;
  for (const auto& ex : examples) {
    auto id = ex.meta.value("model_id", fallback_model);
    auto it = std::find_if(models.begin(), models.end(), [&](const auto& m) { return m.model_id == id; });
    if (it == models.end()) {
      models.push_back({id, {}});
      it = std::prev(models.end());
    }
    it->examples.push_back(ex);
  }
  return models;
}

int run_eval_autodq(const AutodqArgs& a, std::ostream& out, std::ostream& err) {
  auto dataset = load_manifest(a.manifest);
  auto predictions = load_predictions(a.pred);

  std::vector<std::string> models = a.models;
  if (models.empty()) {
    for (const auto& p : predictions) {
      if (std::find(models.begin(), models.end(), p.model_id) == models.end()) models.push_back(p.model_id);
    }
  }
  if (models.empty()) throw InputError("prediction file is empty");

  auto gateway = make_gateway(a.judge);
  AutoDQ scorer(*gateway);

  ojson snapshot;
  snapshot["tool"] = "descry eval-autodq";
  snapshot["judge"] = judge_snapshot(*gateway);
  snapshot["prompts_sha256"] = prompt_set_hash();
  snapshot["aggregation"] = "micro";
  snapshot["auxiliary_aggregation"] = "macro";
  snapshot["event_cap"] = kMaxEvents;
  snapshot["bucket_edges"] = {
      {"events", parse_edges(a.edges_events, ComplexityKey::Events)},
      {"subjects", parse_edges(a.edges_subjects, ComplexityKey::Subjects)},
      {"shots", parse_edges(a.edges_shots, ComplexityKey::Shots)}};
  snapshot["bucket_edges_source"] =
      (a.edges_events.empty() && a.edges_subjects.empty() && a.edges_shots.empty()) ? "default" : "user";

  const fs::path out_dir(a.out_dir);
  fs::create_directories(out_dir);
  write_text(out_dir / "run_config.json", snapshot.dump(2) + "\n");

  ojson summaries = ojson::object();
  std::vector<ModelResults> stored;
  for (const auto& model : models) {
    auto joined = join_predictions(dataset, predictions, model);
    if (joined.pairs.empty()) throw InputError("no predictions for model '" + model + "'");
    if (!joined.missing.empty()) {
      err << "warning: " << joined.missing.size() << " videos have no prediction from '" << model << "'\n";
    }
    std::vector<ScoringPair> pairs;
    for (const auto& p : joined.pairs) pairs.push_back({p.record.video_id, p.record.reference.text, p.candidate.text});
    auto result = scorer.score_corpus(pairs);

    const auto examples_path = out_dir / ("examples." + file_safe(model) + ".jsonl");
    std::string lines;
    for (std::size_t i = 0; i < result.examples.size(); ++i) {
      auto& ex = result.examples[i];
      const auto& rec = joined.pairs[i].record;
      ex.meta["model_id"] = model;
      ex.meta["category"] = to_token(rec.category);
      ex.meta["n_events"] = rec.n_events;
      ex.meta["n_subjects"] = rec.n_subjects;
      ex.meta["n_shots"] = rec.n_shots;
      lines += to_json(ex).dump(-1, ' ', false, nlohmann::json::error_handler_t::replace) + "\n";
    }
    write_text(examples_path, lines);
    stored.push_back({model, read_examples(examples_path)});

    auto summary = to_json(aggregate(stored.back().examples));
    ojson full;
    full["model_id"] = model;
    for (const auto& [k, v] : summary.items()) full[k] = v;
    full["missing_predictions"] = joined.missing;
    write_text(out_dir / ("summary." + file_safe(model) + ".json"), full.dump(2) + "\n");
    summaries[model] = full;
  }

  build_autodq_report(stored, snapshot).write(out_dir);
  auto c = gateway->counters();
  err << "judge: " << c.network_attempts << " network attempts, " << c.cache_hits << " cache hits, "
      << c.reasks << " re-asks\n";
  out << summaries.dump(2) << '\n';
  return 0;
}

struct ReportArgs {
  std::vector<std::string> results;
  std::string config;
  std::string out_dir = ".";
};

int run_report(const ReportArgs& a, std::ostream& out) {
  std::vector<ModelResults> models;
  for (const auto& path : a.results) {
    auto stem = fs::path(path).stem().string();
    for (auto& m : group_by_model(read_examples(path), stem)) models.push_back(std::move(m));
  }
  fs::path config_path = a.config;
  if (config_path.empty()) {
    auto sibling = fs::path(a.results.front()).parent_path() / "run_config.json";
    if (fs::exists(sibling)) config_path = sibling;
  }
  ojson snapshot = config_path.empty() ? ojson::object() : ojson::parse(read_file(config_path));
  auto bundle = build_autodq_report(models, snapshot);
  bundle.write(a.out_dir);
  out << bundle.tables.at("category_table");
  return 0;
}

// ---------------------------------------------------------------------------
// eval-cider / eval-mcq / eval-vqa
// ---------------------------------------------------------------------------

struct CiderArgs {
  std::string pred;
  std::string refs;
  std::string manifest;
  std::string model;
  std::string out_dir = ".";
  CiderConfig config;
};

int run_eval_cider(const CiderArgs& a, std::ostream& out) {
  std::map<std::string, std::vector<std::string>> refs;
  if (!a.refs.empty()) {
    for_each_json_line(fs::path(a.refs), [&](const json& j, std::size_t line) {
      try {
        auto id = j.at("video_id").get<std::string>();
        auto& list = refs[id];
        for (const auto& r : j.at("references")) list.push_back(r.get<std::string>());
      } catch (const json::exception& e) {
        throw ParseError("references line " + std::to_string(line) + ": " + e.what(), j.dump(), line);
      }
    });
  } else if (!a.manifest.empty()) {
    for (const auto& r : load_manifest(a.manifest)) refs[r.video_id].push_back(r.reference.text);
  } else {
    throw InputError("eval-cider needs --refs or --manifest");
  }
  auto preds = load_predictions(a.pred);
  std::string model = a.model;
  if (model.empty() && !preds.empty()) model = preds.front().model_id;
  std::map<std::string, std::string> cands;
  for (const auto& p : preds) {
    if (p.model_id == model) cands[p.video_id] = p.text;
  }
  auto result = cider(cands, refs, a.config);

  ojson summary;
  summary["model_id"] = model;
  summary["metric"] = "CIDEr-D";
  summary["n"] = result.per_video.size();
  summary["cider"] = result.corpus_mean;
  summary["config"] = {{"max_ngram", a.config.max_ngram},
                       {"gaussian_sigma", a.config.gaussian_sigma},
                       {"scale", a.config.scale},
                       {"tokenizer", "lowercase, punctuation to space, whitespace split"},
                       {"document_frequency", "evaluation references"}};
  std::string csv = "video_id,cider\n";
  char buf[64];
  for (const auto& [id, s] : result.per_video) {
    std::snprintf(buf, sizeof buf, "%.10f", s);
    csv += id + "," + buf + "\n";
  }
  const fs::path out_dir(a.out_dir);
  write_text(out_dir / "cider_summary.json", summary.dump(2) + "\n");
  write_text(out_dir / "cider_items.csv", csv);
  out << summary.dump(2) << '\n';
  return 0;
}

struct McqArgs {
  std::string qa;
  std::string out_dir = ".";
};

int run_eval_mcq(const McqArgs& a, std::ostream& out) {
  std::map<std::string, std::string> preds;
  std::map<std::string, char> gold;
  for_each_json_line(fs::path(a.qa), [&](const json& j, std::size_t line) {
    try {
      auto id = j.at("id").get<std::string>();
      auto g = j.at("gold").get<std::string>();
      if (g.size() != 1) throw InputError("line " + std::to_string(line) + ": gold must be one letter");
      gold[id] = g[0];
      if (j.contains("prediction") && j["prediction"].is_string()) preds[id] = j["prediction"].get<std::string>();
    } catch (const json::exception& e) {
      throw ParseError("qa line " + std::to_string(line) + ": " + e.what(), j.dump(), line);
    }
  });
  auto r = multi_choice_accuracy(preds, gold);
  ojson summary;
  summary["accuracy"] = r.accuracy;
  summary["accuracy_pct"] = format_percent(static_cast<std::int64_t>(r.correct), static_cast<std::int64_t>(r.total));
  summary["correct"] = r.correct;
  summary["total"] = r.total;
  auto diags = ojson::array();
  for (const auto& d : r.diagnostics) diags.push_back({{"id", d.id}, {"raw", d.raw}, {"reason", d.reason}});
  summary["diagnostics"] = diags;
  std::string csv = "id,gold,predicted,correct\n";
  for (const auto& it : r.items) {
    csv += it.id + "," + it.gold + "," + (it.predicted ? std::string(1, *it.predicted) : "") + "," +
           (it.correct ? "1" : "0") + "\n";
  }
  write_text(fs::path(a.out_dir) / "mcq_summary.json", summary.dump(2) + "\n");
  write_text(fs::path(a.out_dir) / "mcq_items.csv", csv);
  out << summary.dump(2) << '\n';
  return 0;
}

struct VqaArgs {
  std::string qa;
  std::string out_dir = ".";
  JudgeOptions judge;
};

int run_eval_vqa(const VqaArgs& a, std::ostream& out) {
  std::vector<VqaItem> items;
  for_each_json_line(fs::path(a.qa), [&](const json& j, std::size_t line) {
    try {
      items.push_back({j.at("id").get<std::string>(), j.at("question").get<std::string>(),
                       j.at("answer").get<std::string>(), j.at("prediction").get<std::string>()});
    } catch (const json::exception& e) {
      throw ParseError("qa line " + std::to_string(line) + ": " + e.what(), j.dump(), line);
    }
  });
  if (items.empty()) throw InputError("QA file is empty");
  auto gateway = make_gateway(a.judge);
  auto result = vqa_corpus(items, *gateway, vqa_template_text(a.judge));
  const auto& s = result.summary;
  ojson summary;
  summary["judge"] = judge_snapshot(*gateway);
  summary["template"] = a.judge.vqa_template_path.empty() ? "builtin:vqa_judge" : a.judge.vqa_template_path;
  summary["n_items"] = s.n_items;
  summary["n_scored"] = s.n_scored;
  summary["n_excluded"] = s.n_excluded;
  summary["accuracy"] = s.accuracy();
  summary["mean_quality"] = s.mean_quality();
  summary["table_cell"] = s.render();
  std::string csv = "id,match,quality,error\n";
  for (const auto& it : result.items) {
    if (it.judgment) {
      csv += it.id + "," + (it.judgment->match ? "1" : "0") + "," + std::to_string(it.judgment->quality) + ",\n";
    } else {
      std::string e = it.error;
      std::replace(e.begin(), e.end(), '\n', ' ');
      std::replace(e.begin(), e.end(), ',', ';');
      csv += it.id + ",,," + e + "\n";
    }
  }
  write_text(fs::path(a.out_dir) / "vqa_summary.json", summary.dump(2) + "\n");
  write_text(fs::path(a.out_dir) / "vqa_items.csv", csv);
  out << summary.dump(2) << '\n';
  return 0;
}

// ---------------------------------------------------------------------------
// study-serve
// ---------------------------------------------------------------------------

struct ServeArgs {
  std::string data_dir;
  std::string host = "127.0.0.1";
  int port = 8080;
  std::string admin_token;
  std::string manifest, pred, model_a, model_b, annotators, study_id, media_base_url;
  std::uint64_t seed = 0;
  std::size_t sample = 0;
};

int run_study_serve(const ServeArgs& a, std::ostream& out, std::ostream& err) {
  StudyStore store(fs::path(a.data_dir));
  if (!a.manifest.empty() || !a.pred.empty()) {
    if (a.manifest.empty() || a.pred.empty() || a.model_a.empty() || a.model_b.empty() ||
        a.annotators.empty()) {
      throw InputError("creating a study needs --manifest, --pred, --model-a, --model-b and --annotators");
    }
    auto input = study_input_from_predictions(load_manifest(a.manifest), load_predictions(a.pred),
                                              a.model_a, a.model_b, split_list(a.annotators), a.seed,
                                              a.sample, a.media_base_url);
    input.study_id = a.study_id;
    auto study = store.create(input);
    out << "created study " << study.study_id << " with " << study.items.size() << " items\n";
  }
  StudyServer server(store, {a.admin_token});
  int port = server.bind(a.host, a.port);
  if (port < 0) throw Error("cannot bind " + a.host + ":" + std::to_string(a.port));
  out << "listening on http://" << a.host << ":" << port << std::endl;

  // SIGINT/SIGTERM are blocked before the server spawns workers and consumed
  // by a dedicated thread, so shutdown never runs inside a signal handler.
  sigset_t stop_signals;
  sigemptyset(&stop_signals);
  sigaddset(&stop_signals, SIGINT);
  sigaddset(&stop_signals, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &stop_signals, nullptr);
  std::thread waiter([&] {
    int sig = 0;
    sigwait(&stop_signals, &sig);
    server.stop();
  });
  bool ok = server.serve();
  pthread_kill(waiter.native_handle(), SIGTERM);  // wakes the waiter if serve() ended on its own
  waiter.join();
  pthread_sigmask(SIG_UNBLOCK, &stop_signals, nullptr);
  if (!ok) err << "server stopped with an error\n";
  return ok ? 0 : 1;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"descry: video description evaluation toolkit", "descry"};
  app.require_subcommand(1);

  StatsArgs stats;
  auto* c_stats = app.add_subcommand("stats", "Dataset statistics for a manifest");
  c_stats->add_option("--manifest", stats.manifest, "Manifest JSONL")->required()->check(CLI::ExistingFile);
  c_stats->add_option("--out-dir", stats.out_dir, "Also write stats.json and stats_table.md here");

  AutodqArgs autodq;
  auto* c_autodq = app.add_subcommand("eval-autodq", "Event-level precision/recall/F1 of descriptions");
  c_autodq->add_option("--manifest", autodq.manifest, "Manifest JSONL")->required()->check(CLI::ExistingFile);
  c_autodq->add_option("--pred", autodq.pred, "Prediction JSONL")->required()->check(CLI::ExistingFile);
  c_autodq->add_option("--model", autodq.models, "Model id(s) to score (default: all in --pred)");
  c_autodq->add_option("--out-dir", autodq.out_dir, "Output directory")->capture_default_str();
  c_autodq->add_option("--edges-events", autodq.edges_events, "Bucket edges, e.g. 1,2,3,4,5,6,7,8");
  c_autodq->add_option("--edges-subjects", autodq.edges_subjects, "Bucket edges, e.g. 1,2,3,4");
  c_autodq->add_option("--edges-shots", autodq.edges_shots, "Bucket edges, e.g. 1,2,3,4");
  add_judge_options(c_autodq, autodq.judge);

  CiderArgs cider_args;
  auto* c_cider = app.add_subcommand("eval-cider", "CIDEr-D for captions");
  c_cider->add_option("--pred", cider_args.pred, "Prediction JSONL")->required()->check(CLI::ExistingFile);
  c_cider->add_option("--refs", cider_args.refs, "References JSONL {video_id, references}")->check(CLI::ExistingFile);
  c_cider->add_option("--manifest", cider_args.manifest, "Use manifest reference_text as the reference")
      ->check(CLI::ExistingFile);
  c_cider->add_option("--model", cider_args.model, "Model id (default: first in --pred)");
  c_cider->add_option("--out-dir", cider_args.out_dir, "Output directory")->capture_default_str();
  c_cider->add_option("--max-ngram", cider_args.config.max_ngram)->check(CLI::PositiveNumber)->capture_default_str();
  c_cider->add_option("--sigma", cider_args.config.gaussian_sigma)->check(CLI::PositiveNumber)->capture_default_str();

  McqArgs mcq;
  auto* c_mcq = app.add_subcommand("eval-mcq", "Multi-choice QA accuracy");
  c_mcq->add_option("--qa", mcq.qa, "QA JSONL {id, gold, prediction}")->required()->check(CLI::ExistingFile);
  c_mcq->add_option("--out-dir", mcq.out_dir, "Output directory")->capture_default_str();

  VqaArgs vqa;
  auto* c_vqa = app.add_subcommand("eval-vqa", "Judge-scored open-ended QA");
  c_vqa->add_option("--qa", vqa.qa, "QA JSONL {id, question, answer, prediction}")->required()->check(CLI::ExistingFile);
  c_vqa->add_option("--out-dir", vqa.out_dir, "Output directory")->capture_default_str();
  c_vqa->add_option("--vqa-template", vqa.judge.vqa_template_path, "Judging prompt template file")
      ->check(CLI::ExistingFile);
  add_judge_options(c_vqa, vqa.judge);

  ReportArgs report;
  auto* c_report = app.add_subcommand("report", "Re-render tables and curves from stored results");
  c_report->add_option("--results", report.results, "Per-example JSONL file(s)")->required()->check(CLI::ExistingFile);
  c_report->add_option("--config", report.config, "run_config.json (default: next to the first results file)")
      ->check(CLI::ExistingFile);
  c_report->add_option("--out-dir", report.out_dir, "Output directory")->capture_default_str();

  ServeArgs serve;
  auto* c_serve = app.add_subcommand("study-serve", "Serve a blind side-by-side human study");
  c_serve->add_option("--data-dir", serve.data_dir, "Study storage directory")->required();
  c_serve->add_option("--host", serve.host)->capture_default_str();
  c_serve->add_option("--port", serve.port)->capture_default_str();
  c_serve->add_option("--admin-token", serve.admin_token, "Token required for admin routes");
  c_serve->add_option("--manifest", serve.manifest, "Create a study from this manifest")->check(CLI::ExistingFile);
  c_serve->add_option("--pred", serve.pred, "Predictions for both models")->check(CLI::ExistingFile);
  c_serve->add_option("--model-a", serve.model_a);
  c_serve->add_option("--model-b", serve.model_b);
  c_serve->add_option("--annotators", serve.annotators, "Comma-separated annotator tokens");
  c_serve->add_option("--seed", serve.seed)->capture_default_str();
  c_serve->add_option("--sample", serve.sample, "Number of videos to sample (0 = all)")->capture_default_str();
  c_serve->add_option("--study-id", serve.study_id);
  c_serve->add_option("--media-base-url", serve.media_base_url, "Prefix joined with video_id for video_ref");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  if (!reversed.empty()) reversed.pop_back();  // program name
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << "\n\n" << app.help();
    return kUsageError;
  }

  try {
    if (c_stats->parsed()) return run_stats(stats, out);
    if (c_autodq->parsed()) return run_eval_autodq(autodq, out, err);
    if (c_cider->parsed()) return run_eval_cider(cider_args, out);
    if (c_mcq->parsed()) return run_eval_mcq(mcq, out);
    if (c_vqa->parsed()) return run_eval_vqa(vqa, out);
    if (c_report->parsed()) return run_report(report, out);
    if (c_serve->parsed()) return run_study_serve(serve, out, err);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return kUsageError;
}

int run_cli(int argc, const char* const argv[], std::ostream& out, std::ostream& err) {
  return run_cli(std::vector<std::string>(argv, argv + argc), out, err);
}

}  // namespace descry
