// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The tracebayes Authors

#pragma once

#include <array>
#include <cstddef>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "tracebayes/config.hpp"
#include "tracebayes/corpus.hpp"
#include "tracebayes/evalkit.hpp"
#include "tracebayes/hbn.hpp"
#include "tracebayes/similarity.hpp"
#include "tracebayes/store.hpp"
#include "tracebayes/thresholds.hpp"
#include "tracebayes/transitive.hpp"

namespace tracebayes {

/// Runs body(i) for i in [0, n) on up to `workers` threads. Work is claimed
/// by index, so any output a body writes to slot i is schedule-independent.
/// The first exception thrown by a body is rethrown after all threads join.
void parallel_for(std::size_t n, int workers, const std::function<void(std::size_t)>& body);

/// Sources x tests evidence used when execution transitivity is enabled.
struct ExecutionSupport {
  Corpus corpus;  // sources paired with tests
  TechniqueSet techniques;
  std::array<double, kTechniqueCount> medians{};
  ExecutionIndex index;
};

/// Everything about a project that does not depend on the stage: the ten
/// similarity matrices, thresholds, per-technique medians, and the
/// source-source similarities behind transitive contexts.
struct PreparedProject {
  ProjectConfig config;
  Corpus corpus;
  TechniqueSet techniques;
  ThresholdSet thresholds;
  std::array<double, kTechniqueCount> medians{};
  SquareSimilarity source_sims;
  std::optional<ExecutionSupport> execution;

  std::size_t source_index(const std::string& id) const;
  std::size_t target_index(const std::string& id) const;
};

PreparedProject prepare_project(const ProjectConfig& config);

/// Raw similarities of one pair in canonical technique order.
std::array<double, kTechniqueCount> pair_similarities(const TechniqueSet& set, std::size_t source,
                                                      std::size_t target);

Stage1Fit pair_fit(const TechniqueSet& set, const std::array<double, kTechniqueCount>& medians,
                   std::size_t source, std::size_t target, const ModelHyperParams& params);

ObservationSet pair_observations(const PreparedProject& project, std::size_t source, std::size_t target);

/// A pair to infer, by corpus index.
struct PairRef {
  std::size_t source = 0;
  std::size_t target = 0;
};

struct InferenceOptions {
  int stage = 1;
  int workers = 1;
  // Restricts inference to these pairs (results keep this order); all pairs
  // in source-major order otherwise.
  std::optional<std::vector<PairRef>> pairs;
};

/// Stage 1 fits for every pair, indexed source * |T| + target.
std::vector<Stage1Fit> all_pair_fits(const PreparedProject& project, int workers);

TransitiveSummary transitive_summary(const PreparedProject& project, const std::vector<Stage1Fit>& fits,
                                     std::size_t source, std::size_t target,
                                     const std::vector<TransitiveContext>& contexts);

/// Per-pair inference for one stage. Feedback is taken from `feedback`
/// (typically the project log) and grouped by pair.
std::vector<ResultRecord> run_inference(const PreparedProject& project, const InferenceOptions& options,
                                        const std::vector<FeedbackRecord>& feedback);

RunManifest make_manifest(const PreparedProject& project, const std::string& run_id, int stage,
                          std::size_t pair_count, std::size_t feedback_records);

std::vector<ScoredPair> scored_pairs(const std::vector<ResultRecord>& records);
/// Every corpus pair as (source_id, target_id), source-major.
std::vector<LinkKey> all_pair_keys(const Corpus& corpus);

/// Band counts over posterior means: probably linked, unsure, probably not.
std::array<std::size_t, 3> band_counts(const std::vector<ResultRecord>& records);

}  // namespace tracebayes
