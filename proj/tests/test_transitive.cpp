// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The tracebayes Authors

#include <filesystem>
#include <fstream>
#include <numeric>

#include "doctest.h"
#include "synthetic.hpp"
#include "tracebayes/corpus.hpp"
#include "tracebayes/error.hpp"
#include "tracebayes/rng.hpp"
#include "tracebayes/transitive.hpp"

using namespace tracebayes;
namespace fs = std::filesystem;

namespace {

SquareSimilarity square(const std::vector<std::string>& ids, const std::vector<double>& values) {
  SquareSimilarity s;
  s.ids = ids;
  const auto n = static_cast<Eigen::Index>(ids.size());
  s.values.resize(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) s.values(i, j) = values[static_cast<std::size_t>(i * n + j)];
  return s;
}

SquareSimilarity random_square(Rng& rng, int n) {
  std::vector<std::string> ids;
  for (int i = 0; i < n; ++i) ids.push_back("S" + std::to_string(i));
  SquareSimilarity s;
  s.ids = ids;
  s.values = Eigen::MatrixXd::Identity(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) s.values(i, j) = s.values(j, i) = std::round(uniform01(rng) * 20) / 20;
  return s;
}

fs::path write_file(const fs::path& dir, const std::string& name, const std::string& text) {
  fs::create_directories(dir);
  std::ofstream(dir / name, std::ios::binary) << text;
  return dir / name;
}

}  // namespace

TEST_CASE("related sources are cut at tau") {
  const auto s = square({"A", "B", "C"}, {1.0, 0.7, 0.6, 0.7, 1.0, 0.1, 0.6, 0.1, 1.0});
  const auto ctx = derive_related_sources(s, "A", 0.65, 5);
  REQUIRE(ctx.related.size() == 1);
  CHECK(ctx.related[0].first == "B");
  CHECK(ctx.related[0].second == doctest::Approx(0.7));
  CHECK(derive_related_sources(s, "C", 0.65, 5).related.empty());
  CHECK_THROWS_AS(derive_related_sources(s, "Z", 0.65, 5), Error);
  CHECK_THROWS_AS(derive_related_sources(s, "A", 0.65, -1), Error);
}

TEST_CASE("related sources keep the top pi") {
  const auto s = square({"X", "a", "b", "c", "d", "e"},
                        {1.0, 0.70, 0.95, 0.80, 0.66, 0.90,  //
                         0.70, 1, 0, 0, 0, 0,                //
                         0.95, 0, 1, 0, 0, 0,                //
                         0.80, 0, 0, 1, 0, 0,                //
                         0.66, 0, 0, 0, 1, 0,                //
                         0.90, 0, 0, 0, 0, 1});
  const auto ctx = derive_related_sources(s, "X", 0.65, 3);
  REQUIRE(ctx.related.size() == 3);
  CHECK(ctx.related[0].first == "b");
  CHECK(ctx.related[1].first == "e");
  CHECK(ctx.related[2].first == "c");
}

TEST_CASE("ties break by id") {
  const auto s = square({"X", "c", "a", "b"}, {1, 0.8, 0.8, 0.8, 0.8, 1, 0, 0, 0.8, 0, 1, 0, 0.8, 0, 0, 1});
  const auto ctx = derive_related_sources(s, "X", 0.5, 2);
  REQUIRE(ctx.related.size() == 2);
  CHECK(ctx.related[0].first == "a");
  CHECK(ctx.related[1].first == "b");
}

TEST_CASE("mixture weights") {
  TransitiveContext ctx;
  ctx.related = {{"a", 0.8}, {"b", 0.8}};
  CHECK(mixture_weights(ctx) == std::vector<double>{0.5, 0.5});
  ctx.related = {{"a", 0.9}, {"b", 0.6}};
  const auto w = mixture_weights(ctx);
  CHECK(w[0] == doctest::Approx(0.6));
  CHECK(w[1] == doctest::Approx(0.4));
  ctx.related = {{"a", 0.7}};
  CHECK(mixture_weights(ctx) == std::vector<double>{1.0});
  ctx.related.clear();
  CHECK_THROWS_AS(mixture_weights(ctx), Error);
}

TEST_CASE("property: contexts are antitone in tau and weights are an ordered simplex") {
  Rng rng(31);
  int violations = 0;
  for (int trial = 0; trial < 300; ++trial) {
    const auto s = random_square(rng, 8);
    const std::string& x = s.ids[uniform_index(rng, s.ids.size())];
    const double lo = uniform01(rng);
    const double hi = lo + (1 - lo) * uniform01(rng);
    const int pi = 1 + static_cast<int>(uniform_index(rng, 7));
    const auto small = derive_related_sources(s, x, hi, pi);
    const auto big = derive_related_sources(s, x, lo, pi);
    if (small.related.size() > big.related.size()) ++violations;
    if (static_cast<int>(big.related.size()) > pi) ++violations;
    for (const auto& [id, sim] : big.related) {
      if (id == x || sim < lo) ++violations;
    }
    if (big.related.empty()) continue;
    const auto w = mixture_weights(big);
    if (std::abs(std::accumulate(w.begin(), w.end(), 0.0) - 1.0) > 1e-9) ++violations;
    for (std::size_t j = 1; j < w.size(); ++j) {
      if (w[j] > w[j - 1]) ++violations;
    }
  }
  CHECK(violations == 0);
}

TEST_CASE("source-source similarity over a corpus is symmetric with a unit diagonal") {
  const auto dir = testing::scratch_dir("transitive_corpus");
  testing::SyntheticSpec spec;
  testing::write_synthetic_project(dir, spec);
  ProjectConfig cfg;
  cfg.source_dir = dir / "sources";
  cfg.target_dir = dir / "targets";
  const auto corpus = load_corpus(cfg);
  const auto streams = tokenize(corpus);
  const auto tfidf = build_term_weights(streams, WeightScheme::kTfidf);
  const auto s = source_source_similarity(tfidf, corpus);
  REQUIRE(s.ids.size() == corpus.sources.size());
  CHECK((s.values - s.values.transpose()).cwiseAbs().maxCoeff() < 1e-12);
  for (Eigen::Index i = 0; i < s.values.rows(); ++i) CHECK(s.values(i, i) == doctest::Approx(1.0));
}

TEST_CASE("coverage file parsing") {
  const auto dir = testing::scratch_dir("coverage");
  const std::set<std::string> tests = {"TC1", "TC2"};
  const std::set<std::string> targets = {"src/foo.c", "src/bar.c"};

  const auto one = load_execution_relations(write_file(dir, "one.tsv", "TC1\tsrc/foo.c\n"), tests, targets);
  REQUIRE(one.relations().size() == 1);
  CHECK(one.strength("TC1", "src/foo.c") == ExecutionStrength::kStrong);
  CHECK(one.strength("TC2", "src/foo.c") == ExecutionStrength::kWeak);

  CHECK(load_execution_relations(write_file(dir, "empty.tsv", ""), tests, targets).empty());

  const auto dup = load_execution_relations(
      write_file(dir, "dup.tsv", "TC1\tsrc/foo.c\n\nTC1\tsrc/foo.c\nTC2\tsrc/foo.c\n"), tests, targets);
  CHECK(dup.relations().size() == 2);
  CHECK(dup.tests_executing("src/foo.c") == std::vector<std::string>{"TC1", "TC2"});
  CHECK(dup.tests_executing("src/bar.c").empty());

  CHECK_THROWS_AS(load_execution_relations(write_file(dir, "bad.tsv", "TC1 src/foo.c\n"), tests, targets), Error);
  CHECK_THROWS_AS(load_execution_relations(write_file(dir, "unk.tsv", "TC9\tsrc/foo.c\n"), tests, targets), Error);
  CHECK_THROWS_AS(load_execution_relations(write_file(dir, "unk2.tsv", "TC1\tsrc/x.c\n"), tests, targets), Error);
  CHECK_THROWS_AS(load_execution_relations(dir / "missing.tsv", tests, targets), Error);
}
