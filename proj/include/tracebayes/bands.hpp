// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The tracebayes Authors

#pragma once

#include <optional>
#include <string_view>

namespace tracebayes {

/// Partition of [0, 1]: [0.7, 1], [0.4, 0.7), [0, 0.4).
enum class ProbabilityBand { kProbablyLinked, kUnsure, kProbablyNotLinked };

inline ProbabilityBand band_of(double probability) {
  if (probability >= 0.7) return ProbabilityBand::kProbablyLinked;
  if (probability >= 0.4) return ProbabilityBand::kUnsure;
  return ProbabilityBand::kProbablyNotLinked;
}

inline std::string_view to_string(ProbabilityBand b) {
  switch (b) {
    case ProbabilityBand::kProbablyLinked: return "probably_linked";
    case ProbabilityBand::kUnsure: return "unsure";
    case ProbabilityBand::kProbablyNotLinked: return "probably_not_linked";
  }
  return "unknown";
}

inline std::optional<ProbabilityBand> parse_band(std::string_view text) {
  if (text == "probably_linked") return ProbabilityBand::kProbablyLinked;
  if (text == "unsure") return ProbabilityBand::kUnsure;
  if (text == "probably_not_linked") return ProbabilityBand::kProbablyNotLinked;
  return std::nullopt;
}

}  // namespace tracebayes
