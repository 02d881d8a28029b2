// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The tracebayes Authors

#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "tracebayes/config.hpp"
#include "tracebayes/thresholds.hpp"

namespace tracebayes {

/// Binary link observations l_i = [similarity_i >= k_i], one per technique.
struct ObservationSet {
  std::vector<std::uint8_t> bits;
  std::vector<double> thresholds;
  std::vector<Technique> techniques;

  int n() const { return static_cast<int>(bits.size()); }
  int ones() const;
};

/// Hyperprior theta_IR fitted to the normalized similarities of one pair.
struct Stage1Fit {
  double alpha_hat = 1.0;
  double beta_hat = 1.0;
  double mu = 0.5;
  double nu = 1.0 / 12.0;
  std::vector<double> normalized_sims;
};

struct FeedbackRecord {
  std::string source_id;
  std::string target_id;
  double confidence = 0.5;
  std::string reviewer;
  std::int64_t timestamp = 0;  // microseconds since the Unix epoch
};

struct TransitiveSummary {
  double mu_trans = 0.5;
  std::vector<std::string> contributing_ids;
  std::vector<double> weights;
  double rho = 0.5;
};

struct PosteriorEstimate {
  std::string source_id;
  std::string target_id;
  double mean = 0.0;
  double variance = 0.0;
  SamplerKind method = SamplerKind::kMap;
  int stage = 1;
};

// ---------------------------------------------------------------------------
// Stage 1: normalization and the theta_IR fit
// ---------------------------------------------------------------------------

/// Logistic squashing centred on each technique's median:
/// 1 / (1 + exp(-slope * (raw_i - median_i))).
std::vector<double> normalize_similarities(std::span<const double> raw,
                                           std::span<const double> medians, double slope = 10.0);

/// Maximum-likelihood Beta fit (Newton on alpha, beta from a method-of-moments
/// start). Inputs are clamped to [epsilon, 1 - epsilon] first. When the sample
/// variance is below 1e-6 the fit falls back to moments with that floor.
Stage1Fit fit_theta_ir(std::span<const double> normalized_sims, double epsilon = 1e-3);

/// alpha, beta of the Beta distribution with the given mean and variance.
/// A variance at or above mu (1 - mu) is clamped to 0.99 mu (1 - mu).
std::pair<double, double> beta_from_mean_var(double mu, double nu);

double beta_mean(double alpha, double beta);
double beta_variance(double alpha, double beta);

ObservationSet make_observations(std::span<const double> raw_sims, std::span<const Technique> techniques,
                                 const ThresholdSet& thresholds);

/// Beta(alpha + ones, beta + n - ones): (mean, variance).
std::pair<double, double> analytic_conjugate_posterior(double alpha, double beta,
                                                       const ObservationSet& obs);

// ---------------------------------------------------------------------------
// Priors on theta and posterior estimation
// ---------------------------------------------------------------------------

struct BetaPrior {
  double alpha = 1.0;
  double beta = 1.0;
};

/// theta ~ Beta(mean m, variance `variance`) with the mean itself uncertain:
/// m ~ Normal(center, center_sd^2), clamped to [epsilon, 1 - epsilon]. This is
/// the prior of stages 2-4, where feedback and transitive evidence move the
/// centre. The theta marginal is a finite Beta mixture over shifted_mean_nodes.
struct ShiftedMeanPrior {
  double center = 0.5;
  double center_sd = 0.01;
  double variance = 1.0 / 12.0;
  double epsilon = 1e-3;
};

using LinkPrior = std::variant<BetaPrior, ShiftedMeanPrior>;

double prior_mean(const LinkPrior& prior);
double log_prior_density(const LinkPrior& prior, double theta);
/// Unnormalized log posterior: log p(theta) + ones log theta + zeros log(1 - theta).
double log_posterior(const LinkPrior& prior, const ObservationSet& obs, double theta);

/// (mean, weight) nodes discretizing the clamped Normal over the Beta mean.
/// Weights sum to 1. Clamped tail mass sits on the two bounds.
std::vector<std::pair<double, double>> shifted_mean_nodes(const ShiftedMeanPrior& prior);

struct SamplerSettings {
  int samples = 5000;
  int burn_in = 1000;
  double epsilon = 1e-3;
  std::uint64_t seed = 1;
};

struct SamplerDiagnostics {
  double acceptance_rate = 0.0;
  double proposal_scale = 0.0;
};

/// Metropolis sampler on logit(theta). Each iteration applies an independence
/// step (Student-t proposal from the Laplace approximation) followed by a
/// random-walk step whose scale is tuned during burn-in. Both kernels leave
/// the posterior invariant. Throws when post-burn-in acceptance is below 1%.
PosteriorEstimate sample_posterior(const LinkPrior& prior, const ObservationSet& obs,
                                   const SamplerSettings& settings,
                                   SamplerDiagnostics* diagnostics = nullptr);

/// Golden-section maximization of the log posterior on [epsilon, 1 - epsilon];
/// both endpoints are also checked. Variance is the Laplace curvature
/// estimate at an interior mode, 0 at a boundary.
PosteriorEstimate map_estimate(const LinkPrior& prior, const ObservationSet& obs, double epsilon = 1e-3);

// ---------------------------------------------------------------------------
// Stages 2-4
// ---------------------------------------------------------------------------

/// Reward (1 - m) sigma c plus penalty m sigma (c - 1), clamped to
/// [epsilon, 1 - epsilon].
double adjust_mean_with_feedback(double base_mean, double confidence, double sigma,
                                 double epsilon = 1e-3);

/// Applies records in timestamp order (stable for ties), each starting from
/// the previous result.
double apply_feedback(double base_mean, std::vector<FeedbackRecord> records, double sigma,
                      double epsilon = 1e-3);

/// rho * sum_j w_j mu_j + (1 - rho) * stage1_mu; stage1_mu when no fits.
double transitive_mixture_mean(std::span<const Stage1Fit> transitive_fits,
                               std::span<const double> weights, double stage1_mu, double rho);

struct LinkInputs {
  Stage1Fit fit;
  ObservationSet observations;
  std::optional<std::vector<FeedbackRecord>> feedback;  // stages 2 and 4
  std::optional<TransitiveSummary> transitive;          // stages 3 and 4
};

/// The prior on theta for a stage, before the observation update.
LinkPrior stage_prior(int stage, const LinkInputs& inputs, const ModelHyperParams& params);

PosteriorEstimate infer_link(const std::string& source_id, const std::string& target_id, int stage,
                             const LinkInputs& inputs, const ModelHyperParams& params);

}  // namespace tracebayes
