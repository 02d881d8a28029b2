// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The tracebayes Authors

#pragma once

#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "tracebayes/config.hpp"
#include "tracebayes/corpus.hpp"

namespace tracebayes {

/// |S| x |T| similarity scores in [0, 1] for one technique.
struct SimilarityMatrix {
  Technique technique = Technique::kVsm;
  std::vector<std::string> source_ids;
  std::vector<std::string> target_ids;
  Eigen::MatrixXd values;
};

/// Cosine similarity between two row sets, clamped to [0, 1]; zero rows score
/// 0 against everything.
Eigen::MatrixXd cosine_similarity(const Eigen::MatrixXd& rows_a, const Eigen::MatrixXd& rows_b);

/// Rows of `doc_space` (indexed like `weights.rows`) gathered for the corpus
/// sources and targets, then compared by cosine.
SimilarityMatrix cosine_engine(Technique technique, const Eigen::MatrixXd& doc_space,
                               const TermWeightMatrix& weights, const Corpus& corpus);

SimilarityMatrix vsm_similarity(const TermWeightMatrix& tfidf, const Corpus& corpus);

/// Cosine in the rank-k latent document space of a truncated SVD of the
/// document-term matrix.
SimilarityMatrix lsi_similarity(const TermWeightMatrix& tfidf, int rank, const Corpus& corpus);

/// Document coordinates U_k * S_k of the rank-k truncated SVD.
Eigen::MatrixXd lsi_document_space(const Eigen::MatrixXd& doc_term, int rank);

double jensen_shannon_divergence(const Eigen::Ref<const Eigen::RowVectorXd>& p,
                                 const Eigen::Ref<const Eigen::RowVectorXd>& q);

/// 1 - JSD (base 2) between term distributions.
SimilarityMatrix js_similarity(const TermWeightMatrix& term_probs, const Corpus& corpus);

struct LdaOptions {
  int topics = 20;
  int iterations = 500;
  double alpha = 0.0;  // 0 selects 50 / topics
  double beta = 0.01;
  std::uint64_t seed = 42;
};

/// Collapsed Gibbs sampling. Returns one topic distribution per stream, in
/// stream order.
Eigen::MatrixXd lda_topic_distributions(const std::vector<TokenStream>& streams,
                                        const LdaOptions& options);

SimilarityMatrix lda_similarity(const std::vector<TokenStream>& streams, const LdaOptions& options,
                                const Corpus& corpus);

struct NmfOptions {
  int rank = 10;
  int iterations = 200;
  std::uint64_t seed = 42;
  // Called with (iteration, objective) after every update; iteration 0 is
  // the initial point.
  std::function<void(int, double)> on_objective;
};

struct NmfResult {
  Eigen::MatrixXd w;  // docs x rank
  Eigen::MatrixXd h;  // rank x terms
  double objective = 0.0;
};

/// Multiplicative-update NMF on the Frobenius objective 0.5 * ||X - WH||^2.
NmfResult nmf_factorize(const Eigen::MatrixXd& x, const NmfOptions& options);

SimilarityMatrix nmf_similarity(const TermWeightMatrix& tfidf, const NmfOptions& options,
                                const Corpus& corpus);

/// Min-max normalizes each input over its entries, then lambda * a + (1 - lambda) * b.
SimilarityMatrix combine(const SimilarityMatrix& a, const SimilarityMatrix& b, double lambda,
                         Technique tag);

/// Ranks resolved against corpus size: explicit values are validated,
/// zero selects min(100, docs - 1) for LSI and min(50, docs - 1) for NMF.
TechniqueConfig resolve_ranks(TechniqueConfig config, Eigen::Index docs, Eigen::Index terms);

struct TechniqueSet {
  std::vector<SimilarityMatrix> matrices;  // canonical Technique order
  TermWeightMatrix tfidf;
  TermWeightMatrix term_probs;
  TechniqueConfig resolved;

  const SimilarityMatrix& at(Technique t) const {
    return matrices[static_cast<std::size_t>(t)];
  }
};

/// All ten matrices: five engines plus the five lambda-weighted combinations.
TechniqueSet compute_all(const Corpus& corpus, const std::vector<TokenStream>& streams,
                         const TechniqueConfig& config);

/// Columnar TSV: source_id, target_id, one column per technique, 6 decimals.
void write_similarity_table(std::ostream& out, const std::vector<SimilarityMatrix>& matrices);
std::vector<SimilarityMatrix> read_similarity_table(std::istream& in);

}  // namespace tracebayes
