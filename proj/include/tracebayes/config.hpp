// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The tracebayes Authors

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>

namespace tracebayes {

enum class ArtifactKind { kRequirement, kUseCase, kSourceCode, kTest };

/// Which artifact roles a project pairs up: requirements to source,
/// requirements to tests, or use cases to source.
enum class PairKind { kReqSrc, kReqTest, kUcSrc };

std::string_view to_string(ArtifactKind kind);
std::string_view to_string(PairKind kind);
std::optional<PairKind> parse_pair_kind(std::string_view text);
ArtifactKind source_kind(PairKind kind);
ArtifactKind target_kind(PairKind kind);

/// The ten IR techniques, in their canonical column order.
enum class Technique {
  kVsm,
  kLsi,
  kJs,
  kLda,
  kNmf,
  kVsmLda,
  kJsLda,
  kVsmNmf,
  kJsNmf,
  kVsmJs,
};

inline constexpr std::size_t kTechniqueCount = 10;
inline constexpr Technique kAllTechniques[kTechniqueCount] = {
    Technique::kVsm,    Technique::kLsi,   Technique::kJs,     Technique::kLda,
    Technique::kNmf,    Technique::kVsmLda, Technique::kJsLda, Technique::kVsmNmf,
    Technique::kJsNmf,  Technique::kVsmJs,
};

std::string_view to_string(Technique t);
std::optional<Technique> parse_technique(std::string_view text);

enum class ThresholdMethod { kMean, kMedian, kMinMax, kSigmoidEst, kLinkEst };

std::string_view to_string(ThresholdMethod m);
std::optional<ThresholdMethod> parse_threshold_method(std::string_view text);

/// Default per-technique threshold estimator.
ThresholdMethod default_threshold_method(Technique t);

struct TechniqueConfig {
  // 0 selects the size-dependent default (see resolve_ranks).
  int lsi_rank = 0;
  int lda_topics = 20;
  int nmf_rank = 0;
  double lambda = 0.5;
  std::uint64_t seed = 42;

  int lda_iterations = 500;
  double lda_alpha = 0.0;  // 0 selects 50 / topics
  double lda_beta = 0.01;
  int nmf_iterations = 200;
};

struct ThresholdConfig {
  double min_max_fraction = 0.75;
  double link_count_factor = 2.0;
  std::map<Technique, ThresholdMethod> method_overrides;
  std::map<Technique, double> value_overrides;
};

enum class SamplerKind { kMap, kMcmc };

std::string_view to_string(SamplerKind s);
std::optional<SamplerKind> parse_sampler(std::string_view text);

struct ModelHyperParams {
  double sigma_feedback = 0.5;
  double rho = 0.5;
  double prior_sd = 0.01;
  double epsilon_clamp = 1e-3;
  double sigmoid_slope = 10.0;
  SamplerKind sampler = SamplerKind::kMap;
  int mcmc_samples = 5000;
  int burn_in = 1000;
  std::uint64_t seed = 7;
  // Reads the Stage 3 reward/penalty pair literally (a constant +sigma shift).
  bool literal_stage3_rewards = false;
};

struct TransitiveConfig {
  double tau = 0.65;
  int pi = 5;
  bool use_execution = false;
};

struct ProjectConfig {
  std::string name;
  std::filesystem::path source_dir;
  std::filesystem::path target_dir;
  PairKind pair_kind = PairKind::kReqSrc;
  std::optional<std::filesystem::path> answer_file;
  std::optional<std::filesystem::path> coverage_file;
  // Test artifacts referenced by the coverage file; only needed when
  // transitive.use_execution is on and targets are source files.
  std::optional<std::filesystem::path> test_dir;
  std::filesystem::path feedback_file;

  TechniqueConfig techniques;
  ThresholdConfig thresholds;
  ModelHyperParams model;
  TransitiveConfig transitive;
};

}  // namespace tracebayes
