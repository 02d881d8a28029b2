// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The tracebayes Authors

#pragma once

#include <map>
#include <optional>
#include <span>

#include "tracebayes/config.hpp"
#include "tracebayes/similarity.hpp"

namespace tracebayes {

/// Per-technique binarization thresholds k_i.
using ThresholdSet = std::map<Technique, double>;

/// E = round(factor * max(n_sources, n_targets)), clamped to [1, n_sources * n_targets].
std::size_t derive_link_count_estimate(std::size_t n_sources, std::size_t n_targets,
                                       double factor = 2.0);

struct SigmoidFit {
  double height = 0.0;    // L
  double slope = 0.0;     // k (per unit of normalized rank)
  double midpoint = 0.0;  // r0 as a fraction of the sequence length
  double sse = 0.0;
};

/// Least-squares fit of L / (1 + exp(-k (x - x0))) to a descending sequence
/// sampled at x = (rank - 1) / (n - 1). Coarse grid, then pattern search.
SigmoidFit fit_rank_sigmoid(std::span<const double> descending);

/// Threshold from the multiset of entries. `link_count_hint` only affects
/// link_est; without it the estimate comes from the matrix shape.
double estimate_threshold(std::span<const double> entries, std::size_t n_sources,
                          std::size_t n_targets, ThresholdMethod method,
                          std::optional<std::size_t> link_count_hint = std::nullopt,
                          const ThresholdConfig& config = {});

double estimate_threshold(const SimilarityMatrix& matrix, ThresholdMethod method,
                          std::optional<std::size_t> link_count_hint = std::nullopt,
                          const ThresholdConfig& config = {});

/// One threshold per matrix, using the configured or default method for
/// each technique; value overrides win outright.
ThresholdSet estimate_thresholds(const std::vector<SimilarityMatrix>& matrices,
                                 const ThresholdConfig& config);

double median_of(std::vector<double> values);

}  // namespace tracebayes
