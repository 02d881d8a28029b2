// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The tracebayes Authors

#include "tracebayes/similarity.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <utility>

#include <spdlog/spdlog.h>

#include "tracebayes/error.hpp"
#include "tracebayes/rng.hpp"

namespace tracebayes {

Eigen::MatrixXd cosine_similarity(const Eigen::MatrixXd& rows_a, const Eigen::MatrixXd& rows_b) {
  if (rows_a.cols() != rows_b.cols()) {
    fail(ErrorKind::kInvalidArgument, "cosine_similarity: dimension mismatch");
  }
  auto normalized = [](const Eigen::MatrixXd& m) {
    Eigen::MatrixXd out = m;
    for (Eigen::Index r = 0; r < out.rows(); ++r) {
      const double norm = out.row(r).norm();
      if (norm > 0) {
        out.row(r) /= norm;
      } else {
        out.row(r).setZero();
      }
    }
    return out;
  };
  Eigen::MatrixXd sims = normalized(rows_a) * normalized(rows_b).transpose();
  return sims.cwiseMax(0.0).cwiseMin(1.0);
}

namespace {

Eigen::MatrixXd gather_rows(const Eigen::MatrixXd& doc_space, const TermWeightMatrix& weights,
                            const std::vector<Artifact>& artifacts) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(artifacts.size()), doc_space.cols());
  for (std::size_t i = 0; i < artifacts.size(); ++i) {
    out.row(static_cast<Eigen::Index>(i)) = doc_space.row(weights.row_of(artifacts[i].id));
  }
  return out;
}

SimilarityMatrix empty_matrix(Technique technique, const Corpus& corpus) {
  SimilarityMatrix m;
  m.technique = technique;
  for (const auto& a : corpus.sources) m.source_ids.push_back(a.id);
  for (const auto& a : corpus.targets) m.target_ids.push_back(a.id);
  return m;
}

}  // namespace

SimilarityMatrix cosine_engine(Technique technique, const Eigen::MatrixXd& doc_space,
                               const TermWeightMatrix& weights, const Corpus& corpus) {
  if (doc_space.rows() != static_cast<Eigen::Index>(weights.doc_ids.size())) {
    fail(ErrorKind::kInvalidArgument, "document space rows do not match the term-weight matrix");
  }
  SimilarityMatrix m = empty_matrix(technique, corpus);
  m.values = cosine_similarity(gather_rows(doc_space, weights, corpus.sources),
                               gather_rows(doc_space, weights, corpus.targets));
  return m;
}

SimilarityMatrix vsm_similarity(const TermWeightMatrix& tfidf, const Corpus& corpus) {
  return cosine_engine(Technique::kVsm, tfidf.weights, tfidf, corpus);
}

double jensen_shannon_divergence(const Eigen::Ref<const Eigen::RowVectorXd>& p,
                                 const Eigen::Ref<const Eigen::RowVectorXd>& q) {
  if (p.size() != q.size()) fail(ErrorKind::kInvalidArgument, "JSD: dimension mismatch");
  double jsd = 0.0;
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    const double a = p(i);
    const double b = q(i);
    const double mid = 0.5 * (a + b);
    if (a > 0) jsd += 0.5 * a * std::log2(a / mid);
    if (b > 0) jsd += 0.5 * b * std::log2(b / mid);
  }
  return std::clamp(jsd, 0.0, 1.0);
}

namespace {

using SparseRow = std::vector<std::pair<Eigen::Index, double>>;

SparseRow sparse_row(const Eigen::MatrixXd& m, Eigen::Index r) {
  SparseRow row;
  for (Eigen::Index c = 0; c < m.cols(); ++c) {
    if (m(r, c) > 0) row.emplace_back(c, m(r, c));
  }
  return row;
}

// Same sum as jensen_shannon_divergence, walking only the two supports.
double sparse_jsd(const SparseRow& p, const SparseRow& q) {
  double jsd = 0.0;
  std::size_t i = 0;
  std::size_t j = 0;
  while (i < p.size() || j < q.size()) {
    if (j == q.size() || (i < p.size() && p[i].first < q[j].first)) {
      jsd += 0.5 * p[i].second;
      ++i;
    } else if (i == p.size() || q[j].first < p[i].first) {
      jsd += 0.5 * q[j].second;
      ++j;
    } else {
      const double a = p[i].second;
      const double b = q[j].second;
      const double mid = 0.5 * (a + b);
      jsd += 0.5 * a * std::log2(a / mid) + 0.5 * b * std::log2(b / mid);
      ++i;
      ++j;
    }
  }
  return std::clamp(jsd, 0.0, 1.0);
}

}  // namespace

SimilarityMatrix js_similarity(const TermWeightMatrix& term_probs, const Corpus& corpus) {
  const auto& w = term_probs.weights;
  for (Eigen::Index r = 0; r < w.rows(); ++r) {
    const double sum = w.row(r).sum();
    if (sum != 0.0 && std::abs(sum - 1.0) > 1e-9) {
      fail(ErrorKind::kInvalidArgument,
           "js_similarity: row for " + term_probs.doc_ids[static_cast<std::size_t>(r)] +
               " is not a probability distribution");
    }
    if ((w.row(r).array() < 0).any()) {
      fail(ErrorKind::kInvalidArgument, "js_similarity: negative term probability");
    }
  }

  auto rows_for = [&](const std::vector<Artifact>& list) {
    std::vector<SparseRow> rows;
    rows.reserve(list.size());
    for (const auto& a : list) rows.push_back(sparse_row(w, term_probs.row_of(a.id)));
    return rows;
  };
  const auto src = rows_for(corpus.sources);
  const auto tgt = rows_for(corpus.targets);

  SimilarityMatrix m = empty_matrix(Technique::kJs, corpus);
  m.values.resize(static_cast<Eigen::Index>(src.size()), static_cast<Eigen::Index>(tgt.size()));
  for (std::size_t i = 0; i < src.size(); ++i) {
    for (std::size_t j = 0; j < tgt.size(); ++j) {
      const bool empty = src[i].empty() || tgt[j].empty();
      m.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          empty ? 0.0 : 1.0 - sparse_jsd(src[i], tgt[j]);
    }
  }
  return m;
}

SimilarityMatrix combine(const SimilarityMatrix& a, const SimilarityMatrix& b, double lambda,
                         Technique tag) {
  if (a.values.rows() != b.values.rows() || a.values.cols() != b.values.cols() ||
      a.source_ids != b.source_ids || a.target_ids != b.target_ids) {
    fail(ErrorKind::kInvalidArgument, "combine: dimension or id-order mismatch");
  }
  if (!(lambda >= 0.0 && lambda <= 1.0)) fail(ErrorKind::kInvalidArgument, "combine: lambda outside [0,1]");

  auto normalize = [](const SimilarityMatrix& m) -> Eigen::MatrixXd {
    const double lo = m.values.minCoeff();
    const double hi = m.values.maxCoeff();
    if (hi <= lo) {
      spdlog::warn("combine: {} matrix is constant ({}); normalizing to 0.5",
                   to_string(m.technique), lo);
      return Eigen::MatrixXd::Constant(m.values.rows(), m.values.cols(), 0.5);
    }
    return (m.values.array() - lo) / (hi - lo);
  };

  SimilarityMatrix out;
  out.technique = tag;
  out.source_ids = a.source_ids;
  out.target_ids = a.target_ids;
  out.values = lambda * normalize(a) + (1.0 - lambda) * normalize(b);
  out.values = out.values.cwiseMax(0.0).cwiseMin(1.0);
  return out;
}

TechniqueConfig resolve_ranks(TechniqueConfig config, Eigen::Index docs, Eigen::Index terms) {
  const int max_rank = static_cast<int>(std::min(docs, terms));
  const int default_cap = std::max(1, static_cast<int>(docs) - 1);
  auto resolve = [&](int requested, int fallback, const char* what) {
    if (requested == 0) return std::min({fallback, default_cap, max_rank});
    if (requested < 0 || requested > max_rank) {
      fail(ErrorKind::kInvalidArgument, std::string(what) + " rank " + std::to_string(requested) +
                                            " outside [1, " + std::to_string(max_rank) + "]");
    }
    return requested;
  };
  config.lsi_rank = resolve(config.lsi_rank, 100, "LSI");
  config.nmf_rank = resolve(config.nmf_rank, 50, "NMF");
  if (config.lda_topics < 2) fail(ErrorKind::kInvalidArgument, "LDA needs at least 2 topics");
  if (!(config.lambda >= 0.0 && config.lambda <= 1.0)) {
    fail(ErrorKind::kInvalidArgument, "lambda outside [0,1]");
  }
  return config;
}

TechniqueSet compute_all(const Corpus& corpus, const std::vector<TokenStream>& streams,
                         const TechniqueConfig& config) {
  TechniqueSet set;
  set.tfidf = build_term_weights(streams, WeightScheme::kTfidf);
  set.term_probs = build_term_weights(streams, WeightScheme::kTermProbability);
  set.resolved = resolve_ranks(config, set.tfidf.weights.rows(), set.tfidf.weights.cols());
  const auto& cfg = set.resolved;

  auto vsm = vsm_similarity(set.tfidf, corpus);
  auto lsi = lsi_similarity(set.tfidf, cfg.lsi_rank, corpus);
  auto js = js_similarity(set.term_probs, corpus);
  LdaOptions lda_opts;
  lda_opts.topics = cfg.lda_topics;
  lda_opts.iterations = cfg.lda_iterations;
  lda_opts.alpha = cfg.lda_alpha;
  lda_opts.beta = cfg.lda_beta;
  lda_opts.seed = derive_seed(cfg.seed, 1);
  auto lda = lda_similarity(streams, lda_opts, corpus);
  NmfOptions nmf_opts;
  nmf_opts.rank = cfg.nmf_rank;
  nmf_opts.iterations = cfg.nmf_iterations;
  nmf_opts.seed = derive_seed(cfg.seed, 2);
  auto nmf = nmf_similarity(set.tfidf, nmf_opts, corpus);

  const double l = cfg.lambda;
  auto vsm_lda = combine(vsm, lda, l, Technique::kVsmLda);
  auto js_lda = combine(js, lda, l, Technique::kJsLda);
  auto vsm_nmf = combine(vsm, nmf, l, Technique::kVsmNmf);
  auto js_nmf = combine(js, nmf, l, Technique::kJsNmf);
  auto vsm_js = combine(vsm, js, l, Technique::kVsmJs);

  set.matrices = {std::move(vsm),     std::move(lsi),    std::move(js),      std::move(lda),
                  std::move(nmf),     std::move(vsm_lda), std::move(js_lda), std::move(vsm_nmf),
                  std::move(js_nmf),  std::move(vsm_js)};
  return set;
}

void write_similarity_table(std::ostream& out, const std::vector<SimilarityMatrix>& matrices) {
  if (matrices.empty()) fail(ErrorKind::kInvalidArgument, "no matrices to write");
  const auto& first = matrices.front();
  for (const auto& m : matrices) {
    if (m.source_ids != first.source_ids || m.target_ids != first.target_ids) {
      fail(ErrorKind::kInvalidArgument, "similarity table: matrices disagree on ids");
    }
  }
  out << "source_id\ttarget_id";
  for (const auto& m : matrices) out << '\t' << to_string(m.technique);
  out << '\n';
  char buf[32];
  for (std::size_t i = 0; i < first.source_ids.size(); ++i) {
    for (std::size_t j = 0; j < first.target_ids.size(); ++j) {
      out << first.source_ids[i] << '\t' << first.target_ids[j];
      for (const auto& m : matrices) {
        std::snprintf(buf, sizeof buf, "%.6f",
                      m.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)));
        out << '\t' << buf;
      }
      out << '\n';
    }
  }
}

std::vector<SimilarityMatrix> read_similarity_table(std::istream& in) {
  auto split = [](const std::string& line) {
    std::vector<std::string> fields;
    std::string field;
    std::istringstream ss(line);
    while (std::getline(ss, field, '\t')) fields.push_back(field);
    return fields;
  };

  std::string line;
  if (!std::getline(in, line)) fail(ErrorKind::kParse, "similarity table: missing header");
  const auto header = split(line);
  if (header.size() < 3 || header[0] != "source_id" || header[1] != "target_id") {
    fail(ErrorKind::kParse, "similarity table: bad header");
  }
  std::vector<SimilarityMatrix> out(header.size() - 2);
  for (std::size_t c = 2; c < header.size(); ++c) {
    auto t = parse_technique(header[c]);
    if (!t) fail(ErrorKind::kParse, "similarity table: unknown technique " + header[c]);
    out[c - 2].technique = *t;
  }

  std::vector<std::pair<std::string, std::string>> pairs;
  std::vector<std::vector<double>> values(out.size());
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto fields = split(line);
    if (fields.size() != header.size()) {
      fail(ErrorKind::kParse, "similarity table line " + std::to_string(line_no) + ": wrong field count");
    }
    pairs.emplace_back(fields[0], fields[1]);
    for (std::size_t c = 2; c < fields.size(); ++c) {
      try {
        values[c - 2].push_back(std::stod(fields[c]));
      } catch (const std::exception&) {
        fail(ErrorKind::kParse, "similarity table line " + std::to_string(line_no) + ": bad number");
      }
    }
  }

  std::vector<std::string> sources;
  std::vector<std::string> targets;
  for (const auto& [s, t] : pairs) {
    if (sources.empty() || sources.back() != s) sources.push_back(s);
    if (sources.size() == 1) targets.push_back(t);
  }
  if (sources.size() * targets.size() != pairs.size()) {
    fail(ErrorKind::kParse, "similarity table is not a full source x target grid");
  }
  for (std::size_t k = 0; k < out.size(); ++k) {
    out[k].source_ids = sources;
    out[k].target_ids = targets;
    out[k].values.resize(static_cast<Eigen::Index>(sources.size()),
                         static_cast<Eigen::Index>(targets.size()));
    for (std::size_t p = 0; p < pairs.size(); ++p) {
      out[k].values(static_cast<Eigen::Index>(p / targets.size()),
                    static_cast<Eigen::Index>(p % targets.size())) = values[k][p];
    }
  }
  return out;
}

}  // namespace tracebayes
