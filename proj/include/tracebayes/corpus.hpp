// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The tracebayes Authors

#pragma once

#include <filesystem>
#include <string>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>

#include "tracebayes/config.hpp"

namespace tracebayes {

struct Artifact {
  std::string id;
  ArtifactKind kind = ArtifactKind::kRequirement;
  std::filesystem::path path;
  std::string raw_text;
};

struct Corpus {
  std::vector<Artifact> sources;
  std::vector<Artifact> targets;
  PairKind pair_kind = PairKind::kReqSrc;

  std::size_t pair_count() const { return sources.size() * targets.size(); }
  /// Null when the id is unknown in either role.
  const Artifact* find(std::string_view id) const;
};

struct TokenStream {
  std::string artifact_id;
  std::vector<std::string> tokens;
};

enum class WeightScheme { kTfidf, kTermProbability };

/// Dense document-term weights. Row i belongs to doc_ids[i]; columns follow
/// `terms` (sorted lexicographically).
struct TermWeightMatrix {
  WeightScheme scheme = WeightScheme::kTfidf;
  std::vector<std::string> terms;
  std::unordered_map<std::string, Eigen::Index> vocabulary;
  std::vector<std::string> doc_ids;
  std::unordered_map<std::string, Eigen::Index> rows;
  Eigen::MatrixXd weights;

  Eigen::Index row_of(const std::string& artifact_id) const;
};

/// Reads every regular file under `dir` (recursively) as one artifact. Ids
/// are generic relative paths; ordering is lexicographic by id.
std::vector<Artifact> load_artifacts(const std::filesystem::path& dir, ArtifactKind kind);

Corpus load_corpus(const ProjectConfig& config);

/// Token streams for sources followed by targets, in corpus order.
std::vector<TokenStream> tokenize(const Corpus& corpus);

TermWeightMatrix build_term_weights(const std::vector<TokenStream>& streams,
                                    WeightScheme scheme);

}  // namespace tracebayes
