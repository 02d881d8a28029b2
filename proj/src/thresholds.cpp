// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The tracebayes Authors

#include "tracebayes/thresholds.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <vector>

#include <spdlog/spdlog.h>

#include "tracebayes/error.hpp"

namespace tracebayes {

std::size_t derive_link_count_estimate(std::size_t n_sources, std::size_t n_targets, double factor) {
  const std::size_t pairs = n_sources * n_targets;
  const double raw = std::round(factor * static_cast<double>(std::max(n_sources, n_targets)));
  const auto e = static_cast<std::size_t>(std::max(raw, 1.0));
  return std::clamp<std::size_t>(e, 1, std::max<std::size_t>(pairs, 1));
}

double median_of(std::vector<double> values) {
  if (values.empty()) fail(ErrorKind::kInvalidArgument, "median of an empty set");
  const auto mid = values.size() / 2;
  std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid), values.end());
  const double upper = values[mid];
  if (values.size() % 2 == 1) return upper;
  const double lower = *std::max_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid));
  return 0.5 * (lower + upper);
}

namespace {

double sigmoid_sse(std::span<const double> xs, std::span<const double> ys, double slope,
                   double midpoint, double* height_out) {
  // For fixed slope and midpoint the best height is a linear least-squares
  // solution: L = sum(y g) / sum(g^2).
  double gy = 0.0;
  double gg = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double g = 1.0 / (1.0 + std::exp(-slope * (xs[i] - midpoint)));
    gy += g * ys[i];
    gg += g * g;
  }
  const double height = gg > 0 ? gy / gg : 0.0;
  double sse = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double g = 1.0 / (1.0 + std::exp(-slope * (xs[i] - midpoint)));
    const double r = ys[i] - height * g;
    sse += r * r;
  }
  if (height_out) *height_out = height;
  return sse;
}

}  // namespace

SigmoidFit fit_rank_sigmoid(std::span<const double> descending) {
  const std::size_t n = descending.size();
  if (n == 0) fail(ErrorKind::kInvalidArgument, "sigmoid fit of an empty sequence");
  if (n == 1) return {descending[0], 0.0, 0.0, 0.0};

  // Long sequences are thinned to evenly spaced ranks; the fit is in
  // normalized rank so thinning does not move the midpoint.
  constexpr std::size_t kMaxPoints = 2000;
  const std::size_t m = std::min(n, kMaxPoints);
  std::vector<double> xs(m);
  std::vector<double> ys(m);
  for (std::size_t i = 0; i < m; ++i) {
    const std::size_t rank = m == n ? i : static_cast<std::size_t>(std::llround(
                                              static_cast<double>(i) * static_cast<double>(n - 1) /
                                              static_cast<double>(m - 1)));
    xs[i] = static_cast<double>(rank) / static_cast<double>(n - 1);
    ys[i] = descending[rank];
  }

  SigmoidFit best;
  best.sse = std::numeric_limits<double>::infinity();
  auto consider = [&](double slope, double midpoint) {
    double height = 0.0;
    const double sse = sigmoid_sse(xs, ys, slope, midpoint, &height);
    if (sse < best.sse) best = {height, slope, midpoint, sse};
  };

  // Descending data wants a negative slope; positive slopes are still tried
  // so a flat or odd sequence gets an honest fit.
  for (int si = -40; si <= 40; ++si) {
    if (si == 0) continue;
    const double mag = std::pow(10.0, -1.0 + 3.5 * (std::abs(si) - 1) / 39.0);
    const double slope = si < 0 ? -mag : mag;
    for (int mi = 0; mi <= 50; ++mi) consider(slope, mi / 50.0);
  }

  double slope_step = std::max(std::abs(best.slope) * 0.25, 0.05);
  double mid_step = 0.02;
  for (int round = 0; round < 200 && (mid_step > 1e-7 || slope_step > 1e-7); ++round) {
    const SigmoidFit before = best;
    for (double ds : {-slope_step, slope_step}) consider(best.slope + ds, best.midpoint);
    for (double dm : {-mid_step, mid_step}) consider(best.slope, std::clamp(best.midpoint + dm, 0.0, 1.0));
    if (best.sse >= before.sse) {
      slope_step *= 0.5;
      mid_step *= 0.5;
    }
  }
  return best;
}

double estimate_threshold(std::span<const double> entries, std::size_t n_sources,
                          std::size_t n_targets, ThresholdMethod method,
                          std::optional<std::size_t> link_count_hint, const ThresholdConfig& config) {
  if (entries.empty()) fail(ErrorKind::kInvalidArgument, "threshold of an empty matrix");
  const auto [lo_it, hi_it] = std::minmax_element(entries.begin(), entries.end());
  const double lo = *lo_it;
  const double hi = *hi_it;
  if (hi <= lo) {
    spdlog::warn("threshold estimation on a constant matrix ({}); using that constant", lo);
    return lo;
  }

  switch (method) {
    case ThresholdMethod::kMean: {
      // Sorted summation keeps the result permutation invariant.
      std::vector<double> sorted(entries.begin(), entries.end());
      std::sort(sorted.begin(), sorted.end());
      const double mean = std::accumulate(sorted.begin(), sorted.end(), 0.0) /
                          static_cast<double>(sorted.size());
      return std::clamp(mean, lo, hi);
    }
    case ThresholdMethod::kMedian:
      return median_of(std::vector<double>(entries.begin(), entries.end()));
    case ThresholdMethod::kMinMax:
      return lo + config.min_max_fraction * (hi - lo);
    case ThresholdMethod::kSigmoidEst: {
      std::vector<double> sorted(entries.begin(), entries.end());
      std::sort(sorted.begin(), sorted.end(), std::greater<>());
      const SigmoidFit fit = fit_rank_sigmoid(sorted);
      const auto rank = static_cast<std::size_t>(
          std::llround(std::clamp(fit.midpoint, 0.0, 1.0) * static_cast<double>(sorted.size() - 1)));
      return sorted[rank];
    }
    case ThresholdMethod::kLinkEst: {
      const std::size_t e = std::clamp<std::size_t>(
          link_count_hint.value_or(
              derive_link_count_estimate(n_sources, n_targets, config.link_count_factor)),
          1, entries.size());
      std::vector<double> sorted(entries.begin(), entries.end());
      std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(e - 1), sorted.end(),
                       std::greater<>());
      return sorted[e - 1];
    }
  }
  fail(ErrorKind::kInvalidArgument, "unknown threshold method");
}

double estimate_threshold(const SimilarityMatrix& matrix, ThresholdMethod method,
                          std::optional<std::size_t> link_count_hint, const ThresholdConfig& config) {
  const auto& v = matrix.values;
  return estimate_threshold(std::span<const double>(v.data(), static_cast<std::size_t>(v.size())),
                            static_cast<std::size_t>(v.rows()), static_cast<std::size_t>(v.cols()),
                            method, link_count_hint, config);
}

ThresholdSet estimate_thresholds(const std::vector<SimilarityMatrix>& matrices,
                                 const ThresholdConfig& config) {
  ThresholdSet set;
  for (const auto& m : matrices) {
    if (auto it = config.value_overrides.find(m.technique); it != config.value_overrides.end()) {
      set[m.technique] = it->second;
      continue;
    }
    auto method = default_threshold_method(m.technique);
    if (auto it = config.method_overrides.find(m.technique); it != config.method_overrides.end()) {
      method = it->second;
    }
    set[m.technique] = estimate_threshold(m, method, std::nullopt, config);
  }
  return set;
}

}  // namespace tracebayes
