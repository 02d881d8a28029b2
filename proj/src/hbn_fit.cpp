// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The tracebayes Authors

#include <algorithm>
#include <cmath>

#include <boost/math/special_functions/digamma.hpp>
#include <boost/math/special_functions/trigamma.hpp>

#include "tracebayes/error.hpp"
#include "tracebayes/hbn.hpp"

namespace tracebayes {

int ObservationSet::ones() const {
  int k = 0;
  for (auto b : bits) k += b ? 1 : 0;
  return k;
}

std::vector<double> normalize_similarities(std::span<const double> raw, std::span<const double> medians,
                                           double slope) {
  if (raw.size() != medians.size()) {
    fail(ErrorKind::kInvalidArgument, "normalize_similarities: one median per similarity required");
  }
  std::vector<double> out(raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i) {
    out[i] = 1.0 / (1.0 + std::exp(-slope * (raw[i] - medians[i])));
  }
  return out;
}

double beta_mean(double alpha, double beta) { return alpha / (alpha + beta); }

double beta_variance(double alpha, double beta) {
  const double s = alpha + beta;
  return alpha * beta / (s * s * (s + 1.0));
}

std::pair<double, double> beta_from_mean_var(double mu, double nu) {
  if (!(mu > 0.0 && mu < 1.0)) {
    fail(ErrorKind::kInvalidArgument, "beta_from_mean_var: mean " + std::to_string(mu) + " outside (0,1)");
  }
  if (!(nu > 0.0) || !std::isfinite(nu)) {
    fail(ErrorKind::kInvalidArgument, "beta_from_mean_var: variance must be positive");
  }
  const double bound = mu * (1.0 - mu);
  if (nu >= bound) nu = 0.99 * bound;
  const double f = bound / nu - 1.0;
  return {mu * f, (1.0 - mu) * f};
}

namespace {

constexpr double kVarianceFloor = 1e-6;

double beta_loglik(double a, double b, double mean_log_x, double mean_log_1mx) {
  return (a - 1.0) * mean_log_x + (b - 1.0) * mean_log_1mx -
         (std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b));
}

Stage1Fit make_fit(double alpha, double beta, std::vector<double> xs) {
  Stage1Fit fit;
  fit.alpha_hat = alpha;
  fit.beta_hat = beta;
  fit.mu = beta_mean(alpha, beta);
  fit.nu = beta_variance(alpha, beta);
  fit.normalized_sims = std::move(xs);
  return fit;
}

}  // namespace

Stage1Fit fit_theta_ir(std::span<const double> normalized_sims, double epsilon) {
  if (normalized_sims.empty()) fail(ErrorKind::kInvalidArgument, "fit_theta_ir: no similarities");
  std::vector<double> xs;
  xs.reserve(normalized_sims.size());
  for (double x : normalized_sims) {
    if (!std::isfinite(x)) fail(ErrorKind::kNumerical, "fit_theta_ir: non-finite input");
    xs.push_back(std::clamp(x, epsilon, 1.0 - epsilon));
  }

  const double n = static_cast<double>(xs.size());
  double mean = 0.0;
  for (double x : xs) mean += x;
  mean /= n;
  double var = 0.0;
  for (double x : xs) var += (x - mean) * (x - mean);
  var = xs.size() > 1 ? var / (n - 1.0) : 0.0;

  if (var < kVarianceFloor) {
    auto [a, b] = beta_from_mean_var(mean, kVarianceFloor);
    return make_fit(a, b, std::move(xs));
  }

  double mean_log_x = 0.0;
  double mean_log_1mx = 0.0;
  for (double x : xs) {
    mean_log_x += std::log(x);
    mean_log_1mx += std::log1p(-x);
  }
  mean_log_x /= n;
  mean_log_1mx /= n;

  auto [a, b] = beta_from_mean_var(mean, var);
  double ll = beta_loglik(a, b, mean_log_x, mean_log_1mx);
  for (int iter = 0; iter < 200; ++iter) {
    const double psi_ab = boost::math::digamma(a + b);
    const double g1 = psi_ab - boost::math::digamma(a) + mean_log_x;
    const double g2 = psi_ab - boost::math::digamma(b) + mean_log_1mx;
    const double t_ab = boost::math::trigamma(a + b);
    const double h11 = t_ab - boost::math::trigamma(a);
    const double h22 = t_ab - boost::math::trigamma(b);
    const double h12 = t_ab;
    const double det = h11 * h22 - h12 * h12;
    if (!(det > 0.0) || !std::isfinite(det)) break;
    // Newton direction -H^{-1} g; the Beta log-likelihood is concave.
    const double da = -(h22 * g1 - h12 * g2) / det;
    const double db = -(h11 * g2 - h12 * g1) / det;

    double step = 1.0;
    bool improved = false;
    for (int halving = 0; halving < 60; ++halving, step *= 0.5) {
      const double na = a + step * da;
      const double nb = b + step * db;
      if (!(na > 0.0 && nb > 0.0)) continue;
      const double nll = beta_loglik(na, nb, mean_log_x, mean_log_1mx);
      if (nll >= ll) {
        const double change = std::max(std::abs(na - a) / a, std::abs(nb - b) / b);
        a = na;
        b = nb;
        ll = nll;
        improved = change > 1e-12;
        break;
      }
    }
    if (!improved) break;
  }
  if (!std::isfinite(a) || !std::isfinite(b)) fail(ErrorKind::kNumerical, "fit_theta_ir diverged");
  return make_fit(a, b, std::move(xs));
}

ObservationSet make_observations(std::span<const double> raw_sims, std::span<const Technique> techniques,
                                 const ThresholdSet& thresholds) {
  if (raw_sims.size() != techniques.size()) {
    fail(ErrorKind::kInvalidArgument, "make_observations: one technique tag per similarity required");
  }
  ObservationSet obs;
  obs.bits.reserve(raw_sims.size());
  for (std::size_t i = 0; i < raw_sims.size(); ++i) {
    auto it = thresholds.find(techniques[i]);
    if (it == thresholds.end()) {
      fail(ErrorKind::kInvalidArgument,
           "make_observations: missing threshold for " + std::string(to_string(techniques[i])));
    }
    obs.bits.push_back(raw_sims[i] >= it->second ? 1 : 0);
    obs.thresholds.push_back(it->second);
    obs.techniques.push_back(techniques[i]);
  }
  return obs;
}

std::pair<double, double> analytic_conjugate_posterior(double alpha, double beta,
                                                       const ObservationSet& obs) {
  const double a = alpha + obs.ones();
  const double b = beta + (obs.n() - obs.ones());
  return {beta_mean(a, b), beta_variance(a, b)};
}

}  // namespace tracebayes
