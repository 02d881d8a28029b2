// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The tracebayes Authors

#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "tracebayes/config.hpp"
#include "tracebayes/error.hpp"
#include "tracebayes/evalkit.hpp"
#include "tracebayes/store.hpp"

namespace tracebayes {

struct InferRequest {
  ProjectConfig project;
  int stage = 1;
  std::filesystem::path out_dir;  // runs land in <out_dir>/runs/<run_id>
  std::optional<std::string> run_id;
  int workers = 1;
  bool write_similarities = false;
};

struct InferOutcome {
  std::filesystem::path run_dir;
  RunManifest manifest;
  std::array<std::size_t, 3> bands{};
  double seconds = 0.0;
};

/// Stage 2 and 4 read the project's feedback log, which must exist.
InferOutcome run_infer(const InferRequest& request);

struct EvalRequest {
  ProjectConfig project;
  std::filesystem::path run_dir;
  std::optional<std::filesystem::path> answers;  // project answer_file otherwise
  std::filesystem::path out_dir;                 // run_dir when empty
  bool include_techniques = false;                // also score the ten IR matrices
  int resamples = 200;
  std::uint64_t seed = 1;
};

struct EvalOutcome {
  std::filesystem::path json_path;
  std::filesystem::path table_path;
  std::vector<EvalReport> reports;  // run first, then techniques
  std::optional<double> median_technique_ap;
};

EvalOutcome run_eval(const EvalRequest& request);

struct SimulateRequest {
  ProjectConfig project;
  double error_rate = 0.0;
  double sample_rate = 0.10;
  std::uint64_t seed = 1;
  std::filesystem::path out_dir;
  int workers = 1;
};

struct SimulateOutcome {
  std::filesystem::path feedback_path;
  std::filesystem::path report_path;
  std::size_t sampled = 0;
  std::size_t flipped = 0;
  EvalReport stage1;
  EvalReport stage2;
};

/// Simulated feedback over all pairs, then Stage 1 and Stage 2 on the
/// sampled pairs only, each evaluated against the answers restricted to them.
SimulateOutcome run_simulate(const SimulateRequest& request);

/// Static HTML summary of a run: manifest, thresholds, band counts, the
/// highest-ranked links, and AP when answers are available.
std::filesystem::path write_html_report(const ProjectConfig& project, const std::filesystem::path& run_dir,
                                        const std::filesystem::path& out_file, std::size_t top = 100);

/// Process exit code for a failure class.
int exit_code_for(ErrorKind kind);

}  // namespace tracebayes
