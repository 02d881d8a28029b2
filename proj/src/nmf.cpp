// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The tracebayes Authors

#include <cmath>
#include <string_view>

#include <Eigen/Sparse>

#include "tracebayes/error.hpp"
#include "tracebayes/rng.hpp"
#include "tracebayes/similarity.hpp"

namespace tracebayes {
namespace {

double frobenius_objective(const Eigen::MatrixXd& x, const Eigen::MatrixXd& w,
                           const Eigen::MatrixXd& h) {
  return 0.5 * (x - w * h).squaredNorm();
}

// Lee-Seung ratio; a zero denominator leaves the entry where it is.
void multiply_by_ratio(Eigen::MatrixXd& target, const Eigen::MatrixXd& num, const Eigen::MatrixXd& den) {
  for (Eigen::Index c = 0; c < target.cols(); ++c) {
    for (Eigen::Index r = 0; r < target.rows(); ++r) {
      const double d = den(r, c);
      if (d > 0) target(r, c) *= num(r, c) / d;
    }
  }
}

}  // namespace

NmfResult nmf_factorize(const Eigen::MatrixXd& x, const NmfOptions& options) {
  if (options.rank < 1) fail(ErrorKind::kInvalidArgument, "NMF rank must be >= 1");
  if ((x.array() < 0).any()) fail(ErrorKind::kInvalidArgument, "NMF input must be non-negative");
  const Eigen::Index k = options.rank;
  const Eigen::SparseMatrix<double> xs = x.sparseView();

  const double scale = std::sqrt(std::max(x.mean(), 1e-12) / static_cast<double>(k));
  NmfResult r;
  r.w.resize(x.rows(), k);
  r.h.resize(k, x.cols());
  // A W row only ever sees its own X row and the shared H, so seeding it from
  // the row's content keeps duplicate documents on identical coordinates.
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const Eigen::RowVectorXd row = x.row(i);
    const std::string_view bytes(reinterpret_cast<const char*>(row.data()),
                                 static_cast<std::size_t>(row.size()) * sizeof(double));
    Rng row_rng(derive_seed(options.seed, fnv1a(bytes)));
    for (Eigen::Index c = 0; c < k; ++c) r.w(i, c) = scale * (0.01 + uniform01(row_rng));
  }
  Rng rng(options.seed);
  for (Eigen::Index c = 0; c < x.cols(); ++c) {
    for (Eigen::Index i = 0; i < k; ++i) r.h(i, c) = scale * (0.01 + uniform01(rng));
  }

  if (options.on_objective) options.on_objective(0, frobenius_objective(x, r.w, r.h));
  for (int iter = 1; iter <= options.iterations; ++iter) {
    const Eigen::MatrixXd wt_x = (xs.transpose() * r.w).transpose();
    const Eigen::MatrixXd wt_w_h = (r.w.transpose() * r.w) * r.h;
    multiply_by_ratio(r.h, wt_x, wt_w_h);

    const Eigen::MatrixXd x_ht = xs * r.h.transpose();
    const Eigen::MatrixXd w_h_ht = r.w * (r.h * r.h.transpose());
    multiply_by_ratio(r.w, x_ht, w_h_ht);

    if (!r.w.allFinite() || !r.h.allFinite()) {
      fail(ErrorKind::kNumerical, "NMF diverged at iteration " + std::to_string(iter));
    }
    if (options.on_objective) options.on_objective(iter, frobenius_objective(x, r.w, r.h));
  }
  r.objective = frobenius_objective(x, r.w, r.h);
  if (!std::isfinite(r.objective)) fail(ErrorKind::kNumerical, "NMF objective is not finite");
  return r;
}

SimilarityMatrix nmf_similarity(const TermWeightMatrix& tfidf, const NmfOptions& options,
                                const Corpus& corpus) {
  const auto max_rank = std::min(tfidf.weights.rows(), tfidf.weights.cols());
  if (options.rank > max_rank) {
    fail(ErrorKind::kInvalidArgument, "NMF rank exceeds min(docs, terms)");
  }
  const NmfResult f = nmf_factorize(tfidf.weights, options);
  return cosine_engine(Technique::kNmf, f.w, tfidf, corpus);
}

}  // namespace tracebayes
