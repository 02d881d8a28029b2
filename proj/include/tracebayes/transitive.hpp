// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The tracebayes Authors

#pragma once

#include <filesystem>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "tracebayes/similarity.hpp"

namespace tracebayes {

/// Sources related to `source_id` by similarity at or above tau, best first,
/// at most pi of them.
struct TransitiveContext {
  std::string source_id;
  std::vector<std::pair<std::string, double>> related;
  double tau = 0.65;
  int pi = 5;
};

/// Square similarity over one artifact set (e.g. VSM among the sources).
struct SquareSimilarity {
  std::vector<std::string> ids;
  Eigen::MatrixXd values;
};

SquareSimilarity source_source_similarity(const TermWeightMatrix& tfidf, const Corpus& corpus);

/// Ties are broken by id so the result is deterministic.
TransitiveContext derive_related_sources(const SquareSimilarity& sims, const std::string& source_id,
                                         double tau, int pi);

/// Expected Dirichlet weights: similarities normalized to the simplex.
std::vector<double> mixture_weights(const TransitiveContext& context);

enum class ExecutionStrength { kWeak, kStrong };

struct ExecutionRelation {
  std::string test_id;
  std::string target_id;
  ExecutionStrength strength = ExecutionStrength::kStrong;
};

/// Strong (test, target) relations from a coverage file; every pair not
/// listed is weak. Duplicate lines collapse to one relation.
class ExecutionIndex {
 public:
  ExecutionIndex() = default;
  explicit ExecutionIndex(std::vector<ExecutionRelation> relations);

  const std::vector<ExecutionRelation>& relations() const { return relations_; }
  ExecutionStrength strength(const std::string& test_id, const std::string& target_id) const;
  /// Tests that strongly execute `target_id`, sorted by id.
  std::vector<std::string> tests_executing(const std::string& target_id) const;
  bool empty() const { return relations_.empty(); }

 private:
  std::vector<ExecutionRelation> relations_;
  std::set<std::pair<std::string, std::string>> strong_;
};

/// "test_id<TAB>target_id" per line. Blank lines are skipped; ids must be in
/// the given sets.
ExecutionIndex load_execution_relations(const std::filesystem::path& coverage_file,
                                        const std::set<std::string>& test_ids,
                                        const std::set<std::string>& target_ids);

}  // namespace tracebayes
