// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The tracebayes Authors

#include <algorithm>
#include <cmath>

#include "tracebayes/error.hpp"
#include "tracebayes/hbn.hpp"
#include "tracebayes/rng.hpp"

namespace tracebayes {

double adjust_mean_with_feedback(double base_mean, double confidence, double sigma, double epsilon) {
  // The feedback Bernoulli D is replaced by its expectation, the confidence.
  const double d = confidence;
  const double reward = (1.0 - base_mean) * sigma * d;
  const double penalty = base_mean * sigma * (d - 1.0);
  return std::clamp(base_mean + reward + penalty, epsilon, 1.0 - epsilon);
}

double apply_feedback(double base_mean, std::vector<FeedbackRecord> records, double sigma, double epsilon) {
  std::stable_sort(records.begin(), records.end(),
                   [](const FeedbackRecord& a, const FeedbackRecord& b) { return a.timestamp < b.timestamp; });
  double m = base_mean;
  for (const auto& r : records) m = adjust_mean_with_feedback(m, r.confidence, sigma, epsilon);
  return m;
}

double transitive_mixture_mean(std::span<const Stage1Fit> transitive_fits, std::span<const double> weights,
                               double stage1_mu, double rho) {
  if (transitive_fits.size() != weights.size()) {
    fail(ErrorKind::kInvalidArgument, "transitive_mixture_mean: one weight per transitive fit required");
  }
  if (transitive_fits.empty()) return stage1_mu;
  double mix = 0.0;
  for (std::size_t j = 0; j < weights.size(); ++j) mix += weights[j] * transitive_fits[j].mu;
  return rho * mix + (1.0 - rho) * stage1_mu;
}

LinkPrior stage_prior(int stage, const LinkInputs& inputs, const ModelHyperParams& params) {
  const double eps = params.epsilon_clamp;
  const auto& fit = inputs.fit;
  if (stage == 1) {
    const auto [a, b] = beta_from_mean_var(std::clamp(fit.mu, eps, 1.0 - eps), fit.nu);
    return BetaPrior{a, b};
  }
  if ((stage == 2 || stage == 4) && !inputs.feedback) {
    fail(ErrorKind::kInvalidArgument, "stage " + std::to_string(stage) + " needs feedback records");
  }
  if ((stage == 3 || stage == 4) && !inputs.transitive) {
    fail(ErrorKind::kInvalidArgument, "stage " + std::to_string(stage) + " needs a transitive summary");
  }

  double center = 0.0;
  switch (stage) {
    case 2:
      center = apply_feedback(fit.mu, *inputs.feedback, params.sigma_feedback, eps);
      break;
    case 3:
      center = inputs.transitive->mu_trans;
      if (params.literal_stage3_rewards) {
        const double reward = params.sigma_feedback * (1.0 - center);
        const double penalty = params.sigma_feedback * center;
        center = center + reward + penalty;
      }
      break;
    case 4:
      center = apply_feedback(inputs.transitive->mu_trans, *inputs.feedback, params.sigma_feedback, eps);
      break;
    default:
      fail(ErrorKind::kInvalidArgument, "stage must be 1-4, got " + std::to_string(stage));
  }
  ShiftedMeanPrior prior;
  prior.center = std::clamp(center, eps, 1.0 - eps);
  prior.center_sd = params.prior_sd;
  prior.variance = fit.nu;
  prior.epsilon = eps;
  return prior;
}

PosteriorEstimate infer_link(const std::string& source_id, const std::string& target_id, int stage,
                             const LinkInputs& inputs, const ModelHyperParams& params) {
  const LinkPrior prior = stage_prior(stage, inputs, params);
  PosteriorEstimate est;
  if (params.sampler == SamplerKind::kMap) {
    est = map_estimate(prior, inputs.observations, params.epsilon_clamp);
  } else {
    SamplerSettings s;
    s.samples = params.mcmc_samples;
    s.burn_in = params.burn_in;
    s.epsilon = params.epsilon_clamp;
    s.seed = pair_seed(params.seed, source_id, target_id);
    est = sample_posterior(prior, inputs.observations, s);
  }
  est.source_id = source_id;
  est.target_id = target_id;
  est.stage = stage;
  est.mean = std::clamp(est.mean, 0.0, 1.0);
  return est;
}

}  // namespace tracebayes
