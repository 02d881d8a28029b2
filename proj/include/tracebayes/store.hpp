// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The tracebayes Authors

#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <mutex>
#include <string>
#include <vector>

#include "json.hpp"
#include "tracebayes/config.hpp"
#include "tracebayes/corpus.hpp"
#include "tracebayes/hbn.hpp"
#include "tracebayes/thresholds.hpp"

namespace tracebayes {

/// Reads project.json. Relative paths resolve against the file's directory;
/// omitted settings take their defaults. Unknown keys and out-of-range values
/// are rejected with the offending field named.
ProjectConfig load_project(const std::filesystem::path& path);

/// Same, from an in-memory document whose relative paths resolve against
/// `base_dir`.
ProjectConfig parse_project(const std::string& text, const std::filesystem::path& base_dir,
                            const std::string& origin = "project.json");

nlohmann::json project_to_json(const ProjectConfig& config);

// ---------------------------------------------------------------------------
// Feedback log
// ---------------------------------------------------------------------------

nlohmann::json feedback_to_json(const FeedbackRecord& record);
FeedbackRecord feedback_from_json(const nlohmann::json& j);

/// Append-only JSON-lines log. Appends are serialized by an internal mutex;
/// each line is flushed before append returns.
class FeedbackLog {
 public:
  explicit FeedbackLog(std::filesystem::path path);

  const std::filesystem::path& path() const { return path_; }

  /// Rejects records whose pair is not in `corpus` when one is given.
  void append(const FeedbackRecord& record, const Corpus* corpus = nullptr);
  /// Records in file order. A missing file is an empty log; a malformed line
  /// raises a parse error naming it.
  std::vector<FeedbackRecord> load(const Corpus* corpus = nullptr) const;

  void write_all(const std::vector<FeedbackRecord>& records);

 private:
  std::filesystem::path path_;
  mutable std::mutex mutex_;
};

// ---------------------------------------------------------------------------
// Runs
// ---------------------------------------------------------------------------

struct RunManifest {
  std::string run_id;
  std::string created_at;  // ISO-8601 UTC
  int stage = 1;
  std::size_t pair_count = 0;
  std::size_t feedback_records = 0;
  ThresholdSet thresholds;
  std::vector<double> medians;  // canonical technique order
  TechniqueConfig resolved_techniques;
  nlohmann::json config;  // project snapshot
};

nlohmann::json manifest_to_json(const RunManifest& manifest);
RunManifest manifest_from_json(const nlohmann::json& j);

/// One results.jsonl line. fit_mu, fit_nu and mu_trans are the cached pair
/// inputs that let the service recompute a pair after feedback.
struct ResultRecord {
  PosteriorEstimate estimate;
  std::vector<std::uint8_t> observations;
  std::vector<double> thresholds;
  double fit_mu = 0.5;
  double fit_nu = 1.0 / 12.0;
  double mu_trans = 0.5;
};

std::string result_to_line(const ResultRecord& record);
ResultRecord result_from_json(const nlohmann::json& j);

/// Writes `path` through a sibling temporary file and a rename, so readers
/// see either the previous file or the complete new one. The temporary is
/// removed when `writer` throws.
void write_file_atomically(const std::filesystem::path& path,
                           const std::function<void(std::ostream&)>& writer);

/// Writes <runs_root>/<run_id>/results.jsonl, then manifest.json. Returns the
/// run directory.
std::filesystem::path persist_results(const std::filesystem::path& runs_root, const RunManifest& manifest,
                                      const std::vector<ResultRecord>& records);

struct LoadedRun {
  RunManifest manifest;
  std::vector<ResultRecord> records;
};

LoadedRun load_results(const std::filesystem::path& run_dir);

/// Current UTC time as ISO-8601 with a trailing Z, and as microseconds.
std::string utc_timestamp();
std::int64_t now_micros();

}  // namespace tracebayes
