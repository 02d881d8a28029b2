// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The tracebayes Authors

#include <csignal>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <thread>

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "CLI11.hpp"
#include "tracebayes/cli.hpp"
#include "tracebayes/error.hpp"
#include "tracebayes/service.hpp"
#include "tracebayes/store.hpp"
// Last: it pulls in <resolv.h>, whose _res macro breaks Eigen headers.
#include "httplib.h"

namespace fs = std::filesystem;
using namespace tracebayes;

namespace {

struct Overrides {
  std::optional<std::string> sampler;
  std::optional<std::uint64_t> seed;
  std::optional<double> tau;
  std::optional<double> sigma;
  std::optional<double> rho;
};

void add_model_flags(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--sampler", o.sampler, "Posterior estimator")->check(CLI::IsMember({"map", "mcmc"}));
  cmd->add_option("--seed", o.seed, "Global seed for per-pair sampling");
  cmd->add_option("--tau", o.tau, "Source-source similarity cut for transitive links")->check(CLI::Range(0.0, 1.0));
  cmd->add_option("--sigma", o.sigma, "Belief factor of developer feedback")->check(CLI::Range(0.0, 1.0));
  cmd->add_option("--rho", o.rho, "Belief factor of transitive links")->check(CLI::Range(0.0, 1.0));
}

ProjectConfig load_with_overrides(const std::string& path, const Overrides& o) {
  ProjectConfig cfg = load_project(path);
  if (o.sampler) cfg.model.sampler = *parse_sampler(*o.sampler);
  if (o.seed) cfg.model.seed = *o.seed;
  if (o.tau) cfg.transitive.tau = *o.tau;
  if (o.sigma) cfg.model.sigma_feedback = *o.sigma;
  if (o.rho) cfg.model.rho = *o.rho;
  return cfg;
}

fs::path project_dir(const std::string& project) { return fs::absolute(project).parent_path(); }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Probabilistic trace link recovery"};
  app.require_subcommand(1);
  spdlog::set_default_logger(spdlog::stderr_color_mt("tracebayes"));

  std::string project;
  bool verbose = false;
  int workers = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  app.add_flag("-v,--verbose", verbose, "Debug logging");

  auto add_project = [&](CLI::App* cmd) {
    cmd->add_option("--project", project, "Path to project.json")->envname("TRACEBAYES_PROJECT")->required();
  };

  // infer
  auto* infer = app.add_subcommand("infer", "Compute link probabilities for every pair");
  Overrides infer_o;
  int stage = 1;
  std::string infer_out;
  std::optional<std::string> run_id;
  bool write_sims = false;
  add_project(infer);
  add_model_flags(infer, infer_o);
  infer->add_option("--stage", stage, "Model stage")->check(CLI::Range(1, 4));
  infer->add_option("--out", infer_out, "Output root (default: project directory)");
  infer->add_option("--run-id", run_id, "Run directory name");
  infer->add_option("--workers", workers, "Worker threads")->check(CLI::PositiveNumber);
  infer->add_flag("--similarities", write_sims, "Also write the ten similarity matrices as TSV");

  // eval
  auto* eval = app.add_subcommand("eval", "Evaluate a run against the answer set");
  std::string eval_run;
  std::optional<std::string> answers;
  std::string eval_out;
  bool techniques = false;
  int resamples = 200;
  add_project(eval);
  eval->add_option("--run", eval_run, "Run directory")->required();
  eval->add_option("--answers", answers, "Answer file (default: project answer_file)");
  eval->add_option("--out", eval_out, "Output directory (default: run directory)");
  eval->add_flag("--techniques", techniques, "Also evaluate each IR technique");
  eval->add_option("--resamples", resamples, "Bootstrap resamples")->check(CLI::Range(100, 1000000));

  // simulate
  auto* simulate = app.add_subcommand("simulate", "Simulate feedback and compare Stage 1 with Stage 2");
  Overrides sim_o;
  double error_rate = 0.0;
  double sample_rate = 0.10;
  std::uint64_t sim_seed = 1;
  std::string sim_out;
  add_project(simulate);
  add_model_flags(simulate, sim_o);
  simulate->add_option("--error-rate", error_rate, "Fraction of sampled feedback that is wrong")
      ->check(CLI::Range(0.0, 1.0));
  simulate->add_option("--sample-rate", sample_rate, "Fraction of pairs receiving feedback")
      ->check(CLI::Range(0.0, 1.0));
  simulate->add_option("--feedback-seed", sim_seed, "Seed of the feedback sample");
  simulate->add_option("--out", sim_out, "Output directory (default: <project>/simulate)");
  simulate->add_option("--workers", workers, "Worker threads")->check(CLI::PositiveNumber);

  // serve
  auto* serve = app.add_subcommand("serve", "Serve a run over HTTP");
  std::string serve_run;
  std::string host = "127.0.0.1";
  int port = 8080;
  std::optional<std::string> ui_dir;
  Overrides serve_o;
  add_project(serve);
  add_model_flags(serve, serve_o);
  serve->add_option("--run", serve_run, "Run directory")->required();
  serve->add_option("--host", host, "Bind address");
  serve->add_option("--port", port, "Port")->check(CLI::Range(1, 65535));
  serve->add_option("--ui", ui_dir, "Static review UI directory served under /");

  // report
  auto* report = app.add_subcommand("report", "Write a static HTML summary of a run");
  std::string report_run;
  std::string report_out;
  std::size_t top = 100;
  add_project(report);
  report->add_option("--run", report_run, "Run directory")->required();
  report->add_option("--out", report_out, "HTML file (default: <run>/report.html)");
  report->add_option("--top", top, "Number of links listed");

  CLI11_PARSE(app, argc, argv);
  spdlog::set_level(verbose ? spdlog::level::debug : spdlog::level::info);

  try {
    if (*infer) {
      InferRequest req;
      req.project = load_with_overrides(project, infer_o);
      req.stage = stage;
      req.out_dir = infer_out.empty() ? project_dir(project) : fs::path(infer_out);
      req.run_id = run_id;
      req.workers = workers;
      req.write_similarities = write_sims;
      const auto out = run_infer(req);
      std::printf("run %s\n", out.run_dir.string().c_str());
      std::printf("pairs %zu  probably_linked %zu  unsure %zu  probably_not_linked %zu  (%.2f s)\n",
                  out.manifest.pair_count, out.bands[0], out.bands[1], out.bands[2], out.seconds);
    } else if (*eval) {
      EvalRequest req;
      req.project = load_project(project);
      req.run_dir = eval_run;
      if (answers) req.answers = fs::path(*answers);
      req.out_dir = eval_out;
      req.include_techniques = techniques;
      req.resamples = resamples;
      const auto out = run_eval(req);
      for (const auto& r : out.reports) std::printf("%-10s AP %.4f +/- %.4f\n", r.tag.c_str(), r.ap, r.ap_std_err);
      if (out.median_technique_ap) std::printf("median technique AP %.4f\n", *out.median_technique_ap);
      std::printf("wrote %s and %s\n", out.json_path.string().c_str(), out.table_path.string().c_str());
    } else if (*simulate) {
      SimulateRequest req;
      req.project = load_with_overrides(project, sim_o);
      req.error_rate = error_rate;
      req.sample_rate = sample_rate;
      req.seed = sim_seed;
      req.out_dir = sim_out.empty() ? project_dir(project) / "simulate" : fs::path(sim_out);
      req.workers = workers;
      const auto out = run_simulate(req);
      std::printf("sampled %zu pairs, %zu flipped\n", out.sampled, out.flipped);
      std::printf("stage1 AP %.4f  stage2 AP %.4f  (sampled pairs)\n", out.stage1.ap, out.stage2.ap);
      std::printf("wrote %s\n", out.report_path.string().c_str());
    } else if (*serve) {
      const auto cfg = load_with_overrides(project, serve_o);
      auto service = LinkService::open(cfg, serve_run);
      httplib::Server server;
      std::optional<fs::path> ui;
      if (ui_dir) ui = fs::path(*ui_dir);
      register_routes(server, *service, ui);
      spdlog::info("serving {} on http://{}:{}", service->manifest().run_id, host, port);
      if (!server.listen(host, port)) fail(ErrorKind::kIo, "cannot bind " + host + ":" + std::to_string(port));
    } else if (*report) {
      const auto cfg = load_project(project);
      const fs::path out = report_out.empty() ? fs::path(report_run) / "report.html" : fs::path(report_out);
      std::printf("wrote %s\n", write_html_report(cfg, report_run, out, top).string().c_str());
    }
  } catch (const Error& e) {
    spdlog::error("{}", e.what());
    return exit_code_for(e.kind());
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return 1;
  }
  return 0;
}
