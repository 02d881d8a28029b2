// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The tracebayes Authors

#include <cmath>
#include <sstream>
#include <vector>

#include "doctest.h"
#include "tracebayes/error.hpp"
#include "tracebayes/rng.hpp"
#include "tracebayes/similarity.hpp"

using namespace tracebayes;

namespace {

Corpus make_corpus(const std::vector<std::string>& sources, const std::vector<std::string>& targets) {
  Corpus c;
  for (std::size_t i = 0; i < sources.size(); ++i) {
    c.sources.push_back({"s" + std::to_string(i), ArtifactKind::kRequirement, {}, sources[i]});
  }
  for (std::size_t i = 0; i < targets.size(); ++i) {
    c.targets.push_back({"t" + std::to_string(i), ArtifactKind::kSourceCode, {}, targets[i]});
  }
  return c;
}

// Cyclic Jacobi eigen-decomposition of a small symmetric matrix; columns of
// `vectors` are eigenvectors.
void jacobi_eigen(Eigen::MatrixXd a, Eigen::VectorXd& values, Eigen::MatrixXd& vectors) {
  const Eigen::Index n = a.rows();
  vectors = Eigen::MatrixXd::Identity(n, n);
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (Eigen::Index p = 0; p < n; ++p)
      for (Eigen::Index q = p + 1; q < n; ++q) off += a(p, q) * a(p, q);
    if (off < 1e-30) break;
    for (Eigen::Index p = 0; p < n; ++p) {
      for (Eigen::Index q = p + 1; q < n; ++q) {
        if (std::abs(a(p, q)) < 1e-300) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * a(p, q));
        const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (Eigen::Index k = 0; k < n; ++k) {
          const double akp = a(k, p), akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (Eigen::Index k = 0; k < n; ++k) {
          const double apk = a(p, k), aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        for (Eigen::Index k = 0; k < n; ++k) {
          const double vkp = vectors(k, p), vkq = vectors(k, q);
          vectors(k, p) = c * vkp - s * vkq;
          vectors(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }
  values = a.diagonal();
}

// Gram matrix of the rank-k document space, which is invariant to the sign
// and rotation ambiguities of an SVD.
Eigen::MatrixXd oracle_latent_gram(const Eigen::MatrixXd& x, int rank) {
  Eigen::VectorXd values;
  Eigen::MatrixXd vectors;
  jacobi_eigen(x * x.transpose(), values, vectors);
  std::vector<Eigen::Index> order(static_cast<std::size_t>(values.size()));
  for (Eigen::Index i = 0; i < values.size(); ++i) order[static_cast<std::size_t>(i)] = i;
  std::sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) { return values(a) > values(b); });
  Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(x.rows(), x.rows());
  for (int k = 0; k < rank; ++k) {
    const auto i = order[static_cast<std::size_t>(k)];
    gram += values(i) * vectors.col(i) * vectors.col(i).transpose();
  }
  return gram;
}

double oracle_jsd(const std::vector<double>& p, const std::vector<double>& q) {
  double d = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double m = 0.5 * (p[i] + q[i]);
    if (p[i] > 0) d += 0.5 * p[i] * std::log2(p[i] / m);
    if (q[i] > 0) d += 0.5 * q[i] * std::log2(q[i] / m);
  }
  return d;
}

const std::vector<std::string> kReqs = {
    "The system shall encrypt stored passwords using a salted hash",
    "Users shall reset a forgotten password by email",
    "The report module exports monthly invoices as spreadsheet files",
    "Administrators can disable inactive user accounts",
};
const std::vector<std::string> kCode = {
    "class PasswordHasher { String hashWithSalt(String password, byte[] salt) }",
    "class InvoiceExporter { void exportMonthly(Spreadsheet sheet) }",
    "class AccountService { void disableInactive(User user) ; void resetPassword(Email email) }",
    "class EmailSender { void send(Email email) }",
    "class Unrelated { int counter ; void tick() }",
};

}  // namespace

TEST_CASE("cosine basics") {
  Eigen::MatrixXd a(3, 3);
  a << 1, 1, 0,  //
      1, 0, 0,   //
      0, 0, 5;
  const auto c = cosine_similarity(a, a);
  CHECK(c(0, 0) == doctest::Approx(1.0));
  CHECK(c(0, 1) == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-12));
  CHECK(c(1, 2) == 0.0);
  Eigen::MatrixXd neg(2, 2);
  neg << 1, 0, -1, 0;
  CHECK(cosine_similarity(neg, neg)(0, 1) == 0.0);
  Eigen::MatrixXd zero = Eigen::MatrixXd::Zero(1, 2);
  CHECK(cosine_similarity(zero, zero)(0, 0) == 0.0);
}

TEST_CASE("JS divergence against a direct evaluation") {
  Eigen::RowVectorXd p(2), q(2);
  p << 0.5, 0.5;
  q << 1.0, 0.0;
  CHECK(jensen_shannon_divergence(p, q) == doctest::Approx(0.31128).epsilon(1e-4));
  CHECK(1.0 - jensen_shannon_divergence(p, q) == doctest::Approx(0.68872).epsilon(1e-4));
  CHECK(jensen_shannon_divergence(p, q) == doctest::Approx(oracle_jsd({0.5, 0.5}, {1.0, 0.0})).epsilon(1e-12));
  CHECK(jensen_shannon_divergence(p, p) == doctest::Approx(0.0));
  Eigen::RowVectorXd r(2);
  r << 0.0, 1.0;
  CHECK(jensen_shannon_divergence(q, r) == doctest::Approx(1.0));

  Rng rng(3);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> a(6), b(6);
    double sa = 0, sb = 0;
    for (int i = 0; i < 6; ++i) {
      a[static_cast<std::size_t>(i)] = uniform01(rng) < 0.3 ? 0.0 : uniform01(rng);
      b[static_cast<std::size_t>(i)] = uniform01(rng) < 0.3 ? 0.0 : uniform01(rng);
      sa += a[static_cast<std::size_t>(i)];
      sb += b[static_cast<std::size_t>(i)];
    }
    if (sa == 0 || sb == 0) continue;
    Eigen::RowVectorXd pa(6), pb(6);
    for (int i = 0; i < 6; ++i) {
      a[static_cast<std::size_t>(i)] /= sa;
      b[static_cast<std::size_t>(i)] /= sb;
      pa(i) = a[static_cast<std::size_t>(i)];
      pb(i) = b[static_cast<std::size_t>(i)];
    }
    CHECK(jensen_shannon_divergence(pa, pb) == doctest::Approx(oracle_jsd(a, b)).epsilon(1e-12));
  }
}

TEST_CASE("LSI document space matches a Jacobi SVD oracle") {
  Eigen::MatrixXd x(3, 6);
  x << 2, 0, 1, 0, 3, 0,  //
      0, 1, 1, 2, 0, 0,   //
      1, 0, 0, 0, 2, 4;
  for (int rank = 1; rank <= 3; ++rank) {
    const Eigen::MatrixXd space = lsi_document_space(x, rank);
    const Eigen::MatrixXd gram = space * space.transpose();
    const Eigen::MatrixXd oracle = oracle_latent_gram(x, rank);
    CAPTURE(rank);
    CHECK((gram - oracle).cwiseAbs().maxCoeff() < 1e-9);
  }
  CHECK_THROWS_AS(lsi_document_space(x, 4), Error);
  CHECK_THROWS_AS(lsi_document_space(x, 0), Error);
}

TEST_CASE("full-rank LSI equals VSM") {
  const auto corpus = make_corpus(kReqs, kCode);
  const auto streams = tokenize(corpus);
  const auto tfidf = build_term_weights(streams, WeightScheme::kTfidf);
  const int full = static_cast<int>(std::min(tfidf.weights.rows(), tfidf.weights.cols()));
  const auto vsm = vsm_similarity(tfidf, corpus);
  const auto lsi = lsi_similarity(tfidf, full, corpus);
  CHECK((vsm.values - lsi.values).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("identical copies score 1 and placement is symmetric") {
  // Every document appears in both roles under a different id.
  std::vector<std::string> docs = kReqs;
  docs.insert(docs.end(), kCode.begin(), kCode.end());
  const auto corpus = make_corpus(docs, docs);
  const auto streams = tokenize(corpus);
  TechniqueConfig cfg;
  cfg.lda_iterations = 100;
  const auto set = compute_all(corpus, streams, cfg);
  for (Technique t : {Technique::kVsm, Technique::kJs, Technique::kLsi, Technique::kNmf}) {
    const auto& m = set.at(t).values;
    CAPTURE(to_string(t));
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      CHECK(m(i, i) == doctest::Approx(1.0).epsilon(1e-9));
      for (Eigen::Index j = 0; j < m.cols(); ++j) CHECK(std::abs(m(i, j) - m(j, i)) < 1e-9);
    }
  }
}

TEST_CASE("compute_all yields the ten tagged matrices in range") {
  const auto corpus = make_corpus(kReqs, kCode);
  const auto streams = tokenize(corpus);
  TechniqueConfig cfg;
  cfg.lda_iterations = 200;
  const auto set = compute_all(corpus, streams, cfg);
  REQUIRE(set.matrices.size() == kTechniqueCount);
  const char* tags[] = {"VSM", "LSI", "JS", "LDA", "NMF", "VSM+LDA", "JS+LDA", "VSM+NMF", "JS+NMF", "VSM+JS"};
  for (std::size_t i = 0; i < kTechniqueCount; ++i) {
    const auto& m = set.matrices[i];
    CHECK(to_string(m.technique) == tags[i]);
    CHECK(m.values.rows() == 4);
    CHECK(m.values.cols() == 5);
    CHECK(m.values.allFinite());
    CHECK(m.values.minCoeff() >= 0.0);
    CHECK(m.values.maxCoeff() <= 1.0);
  }
  const auto expected = combine(set.at(Technique::kVsm), set.at(Technique::kLda), 0.5, Technique::kVsmLda);
  CHECK((expected.values.array() == set.at(Technique::kVsmLda).values.array()).all());

  const auto again = compute_all(corpus, streams, cfg);
  for (std::size_t i = 0; i < kTechniqueCount; ++i) {
    CHECK((again.matrices[i].values.array() == set.matrices[i].values.array()).all());
  }
}

TEST_CASE("LDA separates two disjoint vocabularies") {
  const std::vector<std::string> a = {"apple", "banana", "cherry", "grape", "lemon", "mango"};
  const std::vector<std::string> b = {"engine", "piston", "turbine", "gearbox", "clutch", "axle"};
  Rng rng(9);
  std::vector<TokenStream> streams;
  for (int d = 0; d < 20; ++d) {
    const auto& vocab = d % 2 == 0 ? a : b;
    TokenStream s{"d" + std::to_string(d), {}};
    for (int k = 0; k < 30; ++k) s.tokens.push_back(vocab[uniform_index(rng, vocab.size())]);
    streams.push_back(std::move(s));
  }
  LdaOptions opts;
  opts.topics = 2;
  opts.iterations = 300;
  opts.seed = 4;
  const auto theta = lda_topic_distributions(streams, opts);
  const auto sims = cosine_similarity(theta, theta);
  int ok = 0, total = 0;
  for (int i = 0; i < 20; ++i) {
    for (int j = 0; j < 20; ++j) {
      if (i == j || (i % 2) != (j % 2)) continue;
      for (int k = 0; k < 20; ++k) {
        if ((k % 2) == (i % 2)) continue;
        ++total;
        ok += sims(i, j) > sims(i, k);
      }
    }
  }
  CHECK(static_cast<double>(ok) / total >= 0.9);
  CHECK((lda_topic_distributions(streams, opts).array() == theta.array()).all());
  for (int d = 0; d < 20; ++d) CHECK(sims(d, d) == doctest::Approx(1.0));
}

TEST_CASE("NMF objective never increases") {
  Rng rng(21);
  Eigen::MatrixXd x(12, 30);
  for (Eigen::Index i = 0; i < x.rows(); ++i)
    for (Eigen::Index j = 0; j < x.cols(); ++j) x(i, j) = uniform01(rng) < 0.3 ? 3.0 * uniform01(rng) : 0.0;
  NmfOptions opts;
  opts.rank = 4;
  opts.iterations = 300;
  std::vector<double> objective;
  opts.on_objective = [&](int, double v) { objective.push_back(v); };
  nmf_factorize(x, opts);
  REQUIRE(objective.size() == 301);
  for (std::size_t i = 1; i < objective.size(); ++i) {
    CAPTURE(i);
    CHECK(objective[i] <= objective[i - 1]);
  }
}

TEST_CASE("rank-1 NMF reconstructs an outer product") {
  Eigen::VectorXd u(5);
  Eigen::RowVectorXd v(7);
  u << 1, 2, 0.5, 3, 1.5;
  v << 0.2, 1, 2, 0.1, 0.7, 1.3, 0.4;
  const Eigen::MatrixXd x = u * v;
  NmfOptions opts;
  opts.rank = 1;
  opts.iterations = 500;
  const auto f = nmf_factorize(x, opts);
  CHECK((x - f.w * f.h).norm() < 1e-6);
}

TEST_CASE("combine normalizes then weights") {
  SimilarityMatrix a, b;
  a.source_ids = b.source_ids = {"s0", "s1"};
  a.target_ids = b.target_ids = {"t0", "t1"};
  a.values.resize(2, 2);
  b.values.resize(2, 2);
  a.values << 0, 1, 2, 3;
  b.values << 4, 4, 8, 6;
  const auto c = combine(a, b, 0.5, Technique::kVsmJs);
  CHECK(c.technique == Technique::kVsmJs);
  CHECK(c.values(0, 0) == doctest::Approx(0.0));
  CHECK(c.values(0, 1) == doctest::Approx(1.0 / 6.0));
  CHECK(c.values(1, 0) == doctest::Approx(5.0 / 6.0));
  CHECK(c.values(1, 1) == doctest::Approx(0.75));

  const auto only_a = combine(a, b, 1.0, Technique::kVsmJs);
  CHECK(only_a.values(1, 0) == doctest::Approx(2.0 / 3.0));

  SimilarityMatrix flat = a;
  flat.values.setConstant(0.3);
  CHECK(combine(flat, flat, 0.5, Technique::kVsmJs).values(0, 1) == doctest::Approx(0.5));

  SimilarityMatrix other = a;
  other.target_ids = {"t0", "x"};
  CHECK_THROWS_AS(combine(a, other, 0.5, Technique::kVsmJs), Error);
}

TEST_CASE("rank defaults and validation") {
  const auto r = resolve_ranks(TechniqueConfig{}, 30, 500);
  CHECK(r.lsi_rank == 29);
  CHECK(r.nmf_rank == 29);
  const auto big = resolve_ranks(TechniqueConfig{}, 400, 5000);
  CHECK(big.lsi_rank == 100);
  CHECK(big.nmf_rank == 50);
  TechniqueConfig bad;
  bad.lsi_rank = 31;
  CHECK_THROWS_AS(resolve_ranks(bad, 30, 500), Error);
}

TEST_CASE("similarity table round-trips at six decimals") {
  const auto corpus = make_corpus(kReqs, kCode);
  const auto streams = tokenize(corpus);
  TechniqueConfig cfg;
  cfg.lda_iterations = 50;
  const auto set = compute_all(corpus, streams, cfg);
  std::stringstream buf;
  write_similarity_table(buf, set.matrices);
  std::string header;
  std::getline(std::stringstream(buf.str()), header);
  CHECK(header == "source_id\ttarget_id\tVSM\tLSI\tJS\tLDA\tNMF\tVSM+LDA\tJS+LDA\tVSM+NMF\tJS+NMF\tVSM+JS");
  const auto back = read_similarity_table(buf);
  REQUIRE(back.size() == kTechniqueCount);
  for (std::size_t i = 0; i < kTechniqueCount; ++i) {
    CHECK(back[i].source_ids == set.matrices[i].source_ids);
    CHECK((back[i].values - set.matrices[i].values).cwiseAbs().maxCoeff() <= 5e-7);
  }
}
