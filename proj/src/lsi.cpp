// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The tracebayes Authors

#include <Eigen/SVD>

#include "tracebayes/error.hpp"
#include "tracebayes/similarity.hpp"

namespace tracebayes {

Eigen::MatrixXd lsi_document_space(const Eigen::MatrixXd& doc_term, int rank) {
  const auto max_rank = std::min(doc_term.rows(), doc_term.cols());
  if (rank < 1 || rank > max_rank) {
    fail(ErrorKind::kInvalidArgument, "LSI rank " + std::to_string(rank) + " outside [1, " +
                                          std::to_string(max_rank) + "]");
  }
  Eigen::BDCSVD<Eigen::MatrixXd> svd(doc_term, Eigen::ComputeThinV);
  if (svd.info() != Eigen::Success) fail(ErrorKind::kNumerical, "LSI: SVD did not converge");
  // X V_k equals U_k S_k; projecting keeps identical documents bit-identical.
  return doc_term * svd.matrixV().leftCols(rank);
}

SimilarityMatrix lsi_similarity(const TermWeightMatrix& tfidf, int rank, const Corpus& corpus) {
  return cosine_engine(Technique::kLsi, lsi_document_space(tfidf.weights, rank), tfidf, corpus);
}

}  // namespace tracebayes
