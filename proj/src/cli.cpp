// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The tracebayes Authors

#include "tracebayes/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>

#include <spdlog/spdlog.h>

#include "tracebayes/bands.hpp"
#include "tracebayes/pipeline.hpp"

namespace tracebayes {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string default_run_id(int stage) {
  std::string ts = utc_timestamp();
  ts.erase(std::remove_if(ts.begin(), ts.end(), [](char c) { return c == '-' || c == ':'; }), ts.end());
  return "stage" + std::to_string(stage) + "-" + ts;
}

void write_json(const fs::path& path, const json& j) {
  write_file_atomically(path, [&](std::ostream& out) { out << j.dump(2) << '\n'; });
}

AnswerSet answers_for(const ProjectConfig& project, const std::optional<fs::path>& override_path,
                      const Corpus* corpus) {
  const auto path = override_path ? override_path : project.answer_file;
  if (!path) fail(ErrorKind::kNotFound, "no answer file: set answer_file in the project or pass --answers");
  return load_answers(*path, corpus);
}

std::string html_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string fixed(double x, int digits = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, x);
  return buf;
}

}  // namespace

int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kInvalidArgument: return 2;
    case ErrorKind::kNotFound: return 3;
    case ErrorKind::kParse: return 4;
    case ErrorKind::kIo: return 5;
    case ErrorKind::kNumerical: return 6;
  }
  return 1;
}

InferOutcome run_infer(const InferRequest& request) {
  const auto start = std::chrono::steady_clock::now();
  const int stage = request.stage;
  if (stage < 1 || stage > 4) fail(ErrorKind::kInvalidArgument, "stage must be 1-4");

  std::vector<FeedbackRecord> feedback;
  const auto project = prepare_project(request.project);
  if (stage == 2 || stage == 4) {
    if (!fs::exists(request.project.feedback_file)) {
      fail(ErrorKind::kNotFound, "stage " + std::to_string(stage) + " needs the feedback log " +
                                     request.project.feedback_file.string());
    }
    feedback = FeedbackLog(request.project.feedback_file).load(&project.corpus);
  }

  InferenceOptions options;
  options.stage = stage;
  options.workers = request.workers;
  const auto records = run_inference(project, options, feedback);

  InferOutcome outcome;
  outcome.manifest = make_manifest(project, request.run_id.value_or(default_run_id(stage)), stage, records.size(),
                                   feedback.size());
  outcome.run_dir = persist_results(request.out_dir / "runs", outcome.manifest, records);
  if (request.write_similarities) {
    write_file_atomically(outcome.run_dir / "similarities.tsv",
                          [&](std::ostream& out) { write_similarity_table(out, project.techniques.matrices); });
  }
  outcome.bands = band_counts(records);
  outcome.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return outcome;
}

EvalOutcome run_eval(const EvalRequest& request) {
  const auto run = load_results(request.run_dir);
  const Corpus corpus = load_corpus(request.project);
  const auto answers = answers_for(request.project, request.answers, &corpus);

  std::set<std::string> run_sources;
  std::set<std::string> run_targets;
  for (const auto& r : run.records) {
    run_sources.insert(r.estimate.source_id);
    run_targets.insert(r.estimate.target_id);
  }
  for (const auto& [s, t] : answers) {
    if (!run_sources.contains(s) || !run_targets.contains(t)) {
      fail(ErrorKind::kInvalidArgument, "answer link " + s + " -> " + t + " has no counterpart in the run");
    }
  }

  EvalOutcome outcome;
  const auto scores = scored_pairs(run.records);
  outcome.reports.push_back(
      evaluate("stage" + std::to_string(run.manifest.stage), scores, answers, request.resamples, request.seed));

  if (request.include_techniques) {
    const auto project = prepare_project(request.project);
    std::vector<double> aps;
    for (const auto& m : project.techniques.matrices) {
      std::vector<ScoredPair> tech;
      tech.reserve(static_cast<std::size_t>(m.values.size()));
      for (std::size_t i = 0; i < m.source_ids.size(); ++i) {
        for (std::size_t j = 0; j < m.target_ids.size(); ++j) {
          tech.push_back({m.source_ids[i], m.target_ids[j],
                          m.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j))});
        }
      }
      outcome.reports.push_back(
          evaluate(std::string(to_string(m.technique)), tech, answers, request.resamples, request.seed));
      aps.push_back(outcome.reports.back().ap);
    }
    outcome.median_technique_ap = median_of(aps);
  }

  const fs::path out_dir = request.out_dir.empty() ? request.run_dir : request.out_dir;
  fs::create_directories(out_dir);
  json doc;
  doc["run_id"] = run.manifest.run_id;
  doc["reports"] = json::array();
  for (const auto& r : outcome.reports) doc["reports"].push_back(report_to_json(r));
  if (outcome.median_technique_ap) doc["median_technique_ap"] = *outcome.median_technique_ap;
  outcome.json_path = out_dir / "eval.json";
  outcome.table_path = out_dir / "pr_table.tsv";
  write_json(outcome.json_path, doc);
  write_file_atomically(outcome.table_path, [&](std::ostream& out) { write_pr_table(out, outcome.reports); });
  return outcome;
}

SimulateOutcome run_simulate(const SimulateRequest& request) {
  const auto project = prepare_project(request.project);
  const auto answers = answers_for(request.project, std::nullopt, &project.corpus);
  const auto keys = all_pair_keys(project.corpus);
  const auto feedback = simulate_feedback(answers, keys, request.sample_rate, request.error_rate, request.seed);

  SimulateOutcome outcome;
  outcome.sampled = feedback.size();
  for (const auto& r : feedback) {
    const bool truth = answers.contains({r.source_id, r.target_id});
    if ((r.confidence > 0.5) != truth) ++outcome.flipped;
  }

  InferenceOptions options;
  options.workers = request.workers;
  options.pairs.emplace();
  AnswerSet sampled_answers;
  for (const auto& r : feedback) {
    options.pairs->push_back({project.source_index(r.source_id), project.target_index(r.target_id)});
    if (answers.contains({r.source_id, r.target_id})) sampled_answers.insert({r.source_id, r.target_id});
  }
  if (sampled_answers.empty()) fail(ErrorKind::kInvalidArgument, "no true links among the sampled pairs");

  options.stage = 1;
  const auto stage1 = run_inference(project, options, {});
  options.stage = 2;
  const auto stage2 = run_inference(project, options, feedback);
  outcome.stage1 = evaluate("stage1_sampled", scored_pairs(stage1), sampled_answers, 200, request.seed);
  outcome.stage2 = evaluate("stage2_sampled", scored_pairs(stage2), sampled_answers, 200, request.seed);

  fs::create_directories(request.out_dir);
  outcome.feedback_path = request.out_dir / "feedback.simulated.jsonl";
  FeedbackLog(outcome.feedback_path).write_all(feedback);
  outcome.report_path = request.out_dir / "simulate.json";
  write_json(outcome.report_path, {{"error_rate", request.error_rate},
                                   {"sample_rate", request.sample_rate},
                                   {"seed", request.seed},
                                   {"sampled", outcome.sampled},
                                   {"flipped", outcome.flipped},
                                   {"sampled_true_links", sampled_answers.size()},
                                   {"stage1", report_to_json(outcome.stage1)},
                                   {"stage2", report_to_json(outcome.stage2)}});
  return outcome;
}

fs::path write_html_report(const ProjectConfig& project, const fs::path& run_dir, const fs::path& out_file,
                           std::size_t top) {
  const auto run = load_results(run_dir);
  const auto& m = run.manifest;
  std::vector<const ResultRecord*> ranked;
  for (const auto& r : run.records) ranked.push_back(&r);
  std::stable_sort(ranked.begin(), ranked.end(), [](const ResultRecord* a, const ResultRecord* b) {
    return a->estimate.mean > b->estimate.mean;
  });
  const auto bands = band_counts(run.records);

  std::optional<EvalReport> eval;
  if (project.answer_file) {
    const Corpus corpus = load_corpus(project);
    const auto answers = load_answers(*project.answer_file, &corpus);
    if (!answers.empty()) eval = evaluate("stage" + std::to_string(m.stage), scored_pairs(run.records), answers);
  }

  std::string h;
  h += "<!DOCTYPE html>\n<html><head><meta charset=\"utf-8\"><title>Trace links: " + html_escape(project.name) +
       "</title>\n<style>body{font-family:sans-serif}table{border-collapse:collapse;margin-bottom:1em}"
       "td,th{border:1px solid #999;padding:2px 6px}</style></head><body>\n";
  h += "<h1>" + html_escape(project.name) + "</h1>\n<table>\n";
  h += "<tr><th>run</th><td>" + html_escape(m.run_id) + "</td></tr>\n";
  h += "<tr><th>created</th><td>" + html_escape(m.created_at) + "</td></tr>\n";
  h += "<tr><th>stage</th><td>" + std::to_string(m.stage) + "</td></tr>\n";
  h += "<tr><th>pairs</th><td>" + std::to_string(m.pair_count) + "</td></tr>\n";
  h += "<tr><th>feedback records</th><td>" + std::to_string(m.feedback_records) + "</td></tr>\n";
  if (eval) {
    h += "<tr><th>average precision</th><td>" + fixed(eval->ap) + " &plusmn; " + fixed(eval->ap_std_err) +
         "</td></tr>\n";
  }
  h += "</table>\n<h2>Bands</h2>\n<table><tr><th>band</th><th>pairs</th></tr>\n";
  for (std::size_t b = 0; b < 3; ++b) {
    h += "<tr><td>" + std::string(to_string(static_cast<ProbabilityBand>(b))) + "</td><td>" +
         std::to_string(bands[b]) + "</td></tr>\n";
  }
  h += "</table>\n<h2>Thresholds</h2>\n<table><tr><th>technique</th><th>k</th></tr>\n";
  for (const auto& [t, k] : m.thresholds) {
    h += "<tr><td>" + html_escape(std::string(to_string(t))) + "</td><td>" + fixed(k) + "</td></tr>\n";
  }
  h += "</table>\n<h2>Top links</h2>\n<table><tr><th>#</th><th>source</th><th>target</th><th>probability</th>"
       "<th>band</th></tr>\n";
  for (std::size_t i = 0; i < std::min(top, ranked.size()); ++i) {
    const auto& e = ranked[i]->estimate;
    h += "<tr><td>" + std::to_string(i + 1) + "</td><td>" + html_escape(e.source_id) + "</td><td>" +
         html_escape(e.target_id) + "</td><td>" + fixed(e.mean) + "</td><td>" +
         std::string(to_string(band_of(e.mean))) + "</td></tr>\n";
  }
  h += "</table>\n</body></html>\n";

  if (out_file.has_parent_path()) fs::create_directories(out_file.parent_path());
  write_file_atomically(out_file, [&](std::ostream& out) { out << h; });
  return out_file;
}

}  // namespace tracebayes
