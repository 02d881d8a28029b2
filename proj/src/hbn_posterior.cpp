// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The tracebayes Authors

#include <algorithm>
#include <cmath>
#include <numbers>

#include <boost/math/distributions/normal.hpp>
#include <boost/math/quadrature/gauss.hpp>

#include "tracebayes/error.hpp"
#include "tracebayes/hbn.hpp"
#include "tracebayes/rng.hpp"

namespace tracebayes {

std::vector<std::pair<double, double>> shifted_mean_nodes(const ShiftedMeanPrior& prior) {
  const double lo = prior.epsilon;
  const double hi = 1.0 - prior.epsilon;
  if (prior.center_sd == 0.0) return {{std::clamp(prior.center, lo, hi), 1.0}};

  // The clamp turns the Normal tails beyond [lo, hi] into point masses at the
  // bounds; the interior is smooth, so composite Gauss-Legendre is exact there
  // up to truncation at 8 sd.
  const boost::math::normal_distribution<double> normal(prior.center, prior.center_sd);
  std::vector<std::pair<double, double>> nodes;
  const double below = boost::math::cdf(normal, lo);
  const double above = boost::math::cdf(boost::math::complement(normal, hi));
  if (below > 0.0) nodes.emplace_back(lo, below);
  if (above > 0.0) nodes.emplace_back(hi, above);

  const double a = std::max(lo, prior.center - 8.0 * prior.center_sd);
  const double b = std::min(hi, prior.center + 8.0 * prior.center_sd);
  if (a < b) {
    using Rule = boost::math::quadrature::gauss<double, 8>;
    // Panels no wider than the narrower of the two scales, so neither the
    // Normal nor a Beta component is undersampled; capped for cost.
    const double scale = std::min(prior.center_sd, std::sqrt(prior.variance));
    const int panels = std::clamp(static_cast<int>(std::ceil((b - a) / scale)), 2, 32);
    const double width = (b - a) / panels;
    for (int p = 0; p < panels; ++p) {
      const double mid = a + (p + 0.5) * width;
      const double half = 0.5 * width;
      const auto& xs = Rule::abscissa();
      const auto& ws = Rule::weights();
      // Boost stores the non-negative half of the symmetric 8-point rule.
      for (std::size_t i = 0; i < xs.size(); ++i) {
        for (double sign : {-1.0, 1.0}) {
          if (xs[i] == 0.0 && sign < 0) continue;
          const double m = mid + sign * half * xs[i];
          nodes.emplace_back(m, half * ws[i] * boost::math::pdf(normal, m));
        }
      }
    }
  }
  double total = 0.0;
  for (const auto& n : nodes) total += n.second;
  if (!(total > 0.0)) return {{std::clamp(prior.center, lo, hi), 1.0}};
  for (auto& n : nodes) n.second /= total;
  return nodes;
}

namespace {

double log_beta_fn(double a, double b) { return std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b); }

double log_sum_exp(const std::vector<double>& xs) {
  const double hi = *std::max_element(xs.begin(), xs.end());
  if (!std::isfinite(hi)) return hi;
  double s = 0.0;
  for (double x : xs) s += std::exp(x - hi);
  return hi + std::log(s);
}

// Prior in a form that is cheap to evaluate repeatedly: a finite mixture of
// Beta components (one component for a plain Beta prior).
struct Component {
  double log_weight;
  double alpha;
  double beta;
  double log_norm;
};

struct PreparedPrior {
  std::vector<Component> components;
  mutable std::vector<double> scratch;

  double log_density(double theta) const {
    const double lt = std::log(theta);
    const double l1t = std::log1p(-theta);
    scratch.resize(components.size());
    for (std::size_t i = 0; i < components.size(); ++i) {
      const auto& c = components[i];
      scratch[i] = c.log_weight + (c.alpha - 1.0) * lt + (c.beta - 1.0) * l1t - c.log_norm;
    }
    return scratch.size() == 1 ? scratch[0] : log_sum_exp(scratch);
  }
};

PreparedPrior prepare(const LinkPrior& prior) {
  PreparedPrior p;
  if (const auto* b = std::get_if<BetaPrior>(&prior)) {
    if (!(b->alpha > 0 && b->beta > 0)) fail(ErrorKind::kInvalidArgument, "Beta prior needs alpha, beta > 0");
    p.components.push_back({0.0, b->alpha, b->beta, log_beta_fn(b->alpha, b->beta)});
    return p;
  }
  const auto& s = std::get<ShiftedMeanPrior>(prior);
  if (!std::isfinite(s.center) || !(s.center_sd >= 0) || !(s.variance > 0)) {
    fail(ErrorKind::kInvalidArgument, "invalid shifted-mean prior");
  }
  for (const auto& [m, w] : shifted_mean_nodes(s)) {
    const auto [a, b] = beta_from_mean_var(m, s.variance);
    p.components.push_back({std::log(w), a, b, log_beta_fn(a, b)});
  }
  return p;
}

struct Target {
  PreparedPrior prior;
  double ones;
  double zeros;

  double log_post(double theta) const {
    return prior.log_density(theta) + ones * std::log(theta) + zeros * std::log1p(-theta);
  }

  // Density of y = logit(theta), including the Jacobian theta (1 - theta).
  double log_post_logit(double y) const {
    const double log_theta = -std::log1p(std::exp(-y));
    const double log_1m_theta = -std::log1p(std::exp(y));
    const double theta = std::exp(log_theta);
    const double lp = prior.log_density(std::clamp(theta, 1e-300, 1.0 - 1e-16));
    return lp + (ones + 1.0) * log_theta + (zeros + 1.0) * log_1m_theta;
  }
};

Target make_target(const LinkPrior& prior, const ObservationSet& obs) {
  return Target{prepare(prior), static_cast<double>(obs.ones()),
                static_cast<double>(obs.n() - obs.ones())};
}

template <typename F>
double golden_section_max(F&& f, double lo, double hi) {
  constexpr double kInvPhi = 0.6180339887498949;
  double a = lo;
  double b = hi;
  double c = b - kInvPhi * (b - a);
  double d = a + kInvPhi * (b - a);
  double fc = f(c);
  double fd = f(d);
  for (int i = 0; i < 200 && (b - a) > 1e-13; ++i) {
    if (fc >= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - kInvPhi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + kInvPhi * (b - a);
      fd = f(d);
    }
  }
  return 0.5 * (a + b);
}

template <typename F>
double second_derivative(F&& f, double x, double h) {
  return (f(x + h) - 2.0 * f(x) + f(x - h)) / (h * h);
}

}  // namespace

double prior_mean(const LinkPrior& prior) {
  if (const auto* b = std::get_if<BetaPrior>(&prior)) return beta_mean(b->alpha, b->beta);
  const auto p = prepare(prior);
  double mean = 0.0;
  for (const auto& c : p.components) mean += std::exp(c.log_weight) * beta_mean(c.alpha, c.beta);
  return mean;
}

double log_prior_density(const LinkPrior& prior, double theta) {
  if (!(theta > 0.0 && theta < 1.0)) return -std::numeric_limits<double>::infinity();
  return prepare(prior).log_density(theta);
}

double log_posterior(const LinkPrior& prior, const ObservationSet& obs, double theta) {
  if (!(theta > 0.0 && theta < 1.0)) return -std::numeric_limits<double>::infinity();
  return make_target(prior, obs).log_post(theta);
}

PosteriorEstimate map_estimate(const LinkPrior& prior, const ObservationSet& obs, double epsilon) {
  const Target target = make_target(prior, obs);
  auto f = [&](double theta) { return target.log_post(theta); };
  const double lo = epsilon;
  const double hi = 1.0 - epsilon;

  double best = golden_section_max(f, lo, hi);
  double best_value = f(best);
  for (double edge : {lo, hi}) {
    const double v = f(edge);
    if (v > best_value) {
      best = edge;
      best_value = v;
    }
  }
  if (!std::isfinite(best_value)) fail(ErrorKind::kNumerical, "MAP: non-finite posterior density");

  PosteriorEstimate est;
  est.mean = best;
  est.method = SamplerKind::kMap;
  const double h = std::min({1e-4, (best - lo) / 2.0, (hi - best) / 2.0});
  if (h > 1e-9) {
    const double curvature = second_derivative(f, best, h);
    if (curvature < 0 && std::isfinite(curvature)) est.variance = -1.0 / curvature;
  }
  return est;
}

PosteriorEstimate sample_posterior(const LinkPrior& prior, const ObservationSet& obs,
                                   const SamplerSettings& settings, SamplerDiagnostics* diagnostics) {
  if (settings.samples < 1000) fail(ErrorKind::kInvalidArgument, "MCMC needs at least 1000 samples");
  if (settings.burn_in < 0) fail(ErrorKind::kInvalidArgument, "negative burn-in");
  const Target target = make_target(prior, obs);
  auto g = [&](double y) { return target.log_post_logit(y); };

  const double mode = golden_section_max(g, -30.0, 30.0);
  double laplace_sd = 1.0;
  {
    const double curvature = second_derivative(g, mode, 1e-3);
    if (curvature < 0 && std::isfinite(curvature)) laplace_sd = 1.0 / std::sqrt(-curvature);
  }

  // Independence proposal: Student-t(5), a little wider than the Laplace fit
  // so its tails dominate the target's.
  constexpr double kDof = 5.0;
  const double t_scale = 1.25 * laplace_sd;
  auto log_q = [&](double y) {
    const double z = (y - mode) / t_scale;
    return -0.5 * (kDof + 1.0) * std::log1p(z * z / kDof);
  };

  Rng rng(settings.seed);
  auto draw_t = [&] {
    const double z = standard_normal(rng);
    double chi2 = 0.0;
    for (int i = 0; i < static_cast<int>(kDof); ++i) {
      const double n = standard_normal(rng);
      chi2 += n * n;
    }
    return mode + t_scale * z / std::sqrt(chi2 / kDof);
  };

  double y = mode;
  double gy = g(y);
  double rw_scale = 2.4 * laplace_sd;
  long accepted = 0;
  long window_accepted = 0;
  long window_steps = 0;

  double mean = 0.0;
  double m2 = 0.0;
  const int total = settings.burn_in + settings.samples;
  for (int iter = 0; iter < total; ++iter) {
    const bool sampling = iter >= settings.burn_in;

    // Independence step.
    {
      const double cand = draw_t();
      const double gc = g(cand);
      const double log_ratio = (gc - gy) + (log_q(y) - log_q(cand));
      if (std::log(uniform01(rng) + 1e-300) < log_ratio) {
        y = cand;
        gy = gc;
        if (sampling) ++accepted;
      }
    }
    // Random-walk step.
    {
      const double cand = y + rw_scale * standard_normal(rng);
      const double gc = g(cand);
      const bool ok = std::log(uniform01(rng) + 1e-300) < gc - gy;
      if (ok) {
        y = cand;
        gy = gc;
        if (sampling) ++accepted;
      }
      if (!sampling) {
        window_accepted += ok ? 1 : 0;
        if (++window_steps == 50) {
          rw_scale *= window_accepted > 22 ? 1.1 : 0.9;
          window_accepted = 0;
          window_steps = 0;
        }
      }
    }

    if (sampling) {
      const double theta = 1.0 / (1.0 + std::exp(-y));
      const double n = iter - settings.burn_in + 1;
      const double delta = theta - mean;
      mean += delta / n;
      m2 += delta * (theta - mean);
    }
  }

  const double acceptance = static_cast<double>(accepted) / (2.0 * settings.samples);
  if (diagnostics) {
    diagnostics->acceptance_rate = acceptance;
    diagnostics->proposal_scale = rw_scale;
  }
  if (acceptance < 0.01) {
    fail(ErrorKind::kNumerical, "MCMC acceptance rate " + std::to_string(acceptance) +
                                    " below 1%; the model is degenerate");
  }
  PosteriorEstimate est;
  est.mean = mean;
  est.variance = settings.samples > 1 ? m2 / (settings.samples - 1) : 0.0;
  est.method = SamplerKind::kMcmc;
  return est;
}

}  // namespace tracebayes
