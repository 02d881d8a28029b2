// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The tracebayes Authors

#include "tracebayes/config.hpp"

namespace tracebayes {

std::string_view to_string(ArtifactKind kind) {
  switch (kind) {
    case ArtifactKind::kRequirement: return "requirement";
    case ArtifactKind::kUseCase: return "use_case";
    case ArtifactKind::kSourceCode: return "source_code";
    case ArtifactKind::kTest: return "test";
  }
  return "unknown";
}

std::string_view to_string(PairKind kind) {
  switch (kind) {
    case PairKind::kReqSrc: return "req_src";
    case PairKind::kReqTest: return "req_test";
    case PairKind::kUcSrc: return "uc_src";
  }
  return "unknown";
}

std::optional<PairKind> parse_pair_kind(std::string_view text) {
  for (auto k : {PairKind::kReqSrc, PairKind::kReqTest, PairKind::kUcSrc}) {
    if (to_string(k) == text) return k;
  }
  return std::nullopt;
}

ArtifactKind source_kind(PairKind kind) {
  return kind == PairKind::kUcSrc ? ArtifactKind::kUseCase : ArtifactKind::kRequirement;
}

ArtifactKind target_kind(PairKind kind) {
  return kind == PairKind::kReqTest ? ArtifactKind::kTest : ArtifactKind::kSourceCode;
}

std::string_view to_string(Technique t) {
  switch (t) {
    case Technique::kVsm: return "VSM";
    case Technique::kLsi: return "LSI";
    case Technique::kJs: return "JS";
    case Technique::kLda: return "LDA";
    case Technique::kNmf: return "NMF";
    case Technique::kVsmLda: return "VSM+LDA";
    case Technique::kJsLda: return "JS+LDA";
    case Technique::kVsmNmf: return "VSM+NMF";
    case Technique::kJsNmf: return "JS+NMF";
    case Technique::kVsmJs: return "VSM+JS";
  }
  return "unknown";
}

std::optional<Technique> parse_technique(std::string_view text) {
  for (auto t : kAllTechniques) {
    if (to_string(t) == text) return t;
  }
  return std::nullopt;
}

std::string_view to_string(ThresholdMethod m) {
  switch (m) {
    case ThresholdMethod::kMean: return "mean";
    case ThresholdMethod::kMedian: return "median";
    case ThresholdMethod::kMinMax: return "min_max";
    case ThresholdMethod::kSigmoidEst: return "sigmoid_est";
    case ThresholdMethod::kLinkEst: return "link_est";
  }
  return "unknown";
}

std::optional<ThresholdMethod> parse_threshold_method(std::string_view text) {
  for (auto m : {ThresholdMethod::kMean, ThresholdMethod::kMedian, ThresholdMethod::kMinMax,
                 ThresholdMethod::kSigmoidEst, ThresholdMethod::kLinkEst}) {
    if (to_string(m) == text) return m;
  }
  return std::nullopt;
}

ThresholdMethod default_threshold_method(Technique t) {
  switch (t) {
    case Technique::kJs:
    case Technique::kLda:
    case Technique::kVsmJs:
      return ThresholdMethod::kMinMax;
    case Technique::kNmf:
      return ThresholdMethod::kMedian;
    default:
      return ThresholdMethod::kLinkEst;
  }
}

std::string_view to_string(SamplerKind s) {
  return s == SamplerKind::kMap ? "map" : "mcmc";
}

std::optional<SamplerKind> parse_sampler(std::string_view text) {
  if (text == "map") return SamplerKind::kMap;
  if (text == "mcmc") return SamplerKind::kMcmc;
  return std::nullopt;
}

}  // namespace tracebayes
