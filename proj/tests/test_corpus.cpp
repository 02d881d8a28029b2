// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The tracebayes Authors

#include <cmath>
#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "synthetic.hpp"
#include "tracebayes/corpus.hpp"
#include "tracebayes/error.hpp"

using namespace tracebayes;
namespace fs = std::filesystem;

namespace {

void put(const fs::path& p, const std::string& text) {
  fs::create_directories(p.parent_path());
  std::ofstream(p, std::ios::binary) << text;
}

ProjectConfig config_for(const fs::path& dir) {
  ProjectConfig cfg;
  cfg.source_dir = dir / "src_req";
  cfg.target_dir = dir / "code";
  return cfg;
}

TermWeightMatrix weights_of(const std::vector<std::vector<std::string>>& docs, WeightScheme scheme) {
  std::vector<TokenStream> streams;
  for (std::size_t i = 0; i < docs.size(); ++i) streams.push_back({"d" + std::to_string(i), docs[i]});
  return build_term_weights(streams, scheme);
}

double weight(const TermWeightMatrix& m, const std::string& doc, const std::string& term) {
  return m.weights(m.row_of(doc), m.vocabulary.at(term));
}

}  // namespace

TEST_CASE("sources load in lexicographic id order") {
  const auto dir = testing::scratch_dir("corpus");
  put(dir / "src_req" / "RQ2.txt", "second requirement");
  put(dir / "src_req" / "RQ1.txt", "first requirement");
  put(dir / "code" / "pkg" / "Main.java", "class Main {}");
  put(dir / "code" / ".hidden", "ignored");
  const auto corpus = load_corpus(config_for(dir));
  REQUIRE(corpus.sources.size() == 2);
  CHECK(corpus.sources[0].id == "RQ1.txt");
  CHECK(corpus.sources[1].id == "RQ2.txt");
  REQUIRE(corpus.targets.size() == 1);
  CHECK(corpus.targets[0].id == "pkg/Main.java");
  CHECK(corpus.targets[0].kind == ArtifactKind::kSourceCode);
  CHECK(corpus.sources[0].raw_text == "first requirement");
  CHECK(corpus.find("pkg/Main.java") == &corpus.targets[0]);
  CHECK(corpus.find("nope") == nullptr);

  const auto again = load_corpus(config_for(dir));
  CHECK(again.sources[0].id == corpus.sources[0].id);
  CHECK(again.targets[0].id == corpus.targets[0].id);
}

TEST_CASE("loading rejects broken trees") {
  const auto dir = testing::scratch_dir("corpus-bad");
  put(dir / "src_req" / "RQ1.txt", "a requirement");
  SUBCASE("empty target directory") {
    fs::create_directories(dir / "code");
    CHECK_THROWS_WITH_AS(load_corpus(config_for(dir)), doctest::Contains("empty artifact set"), Error);
  }
  SUBCASE("missing directory") {
    CHECK_THROWS_AS(load_corpus(config_for(dir)), Error);
  }
  SUBCASE("duplicate id across roles") {
    put(dir / "code" / "RQ1.txt", "same name");
    CHECK_THROWS_WITH_AS(load_corpus(config_for(dir)), doctest::Contains("duplicate id"), Error);
  }
  SUBCASE("invalid UTF-8") {
    put(dir / "code" / "bad.c", std::string("int x; \xff\xfe"));
    CHECK_THROWS_AS(load_corpus(config_for(dir)), Error);
  }
  SUBCASE("empty file") {
    put(dir / "code" / "empty.c", "");
    CHECK_THROWS_AS(load_corpus(config_for(dir)), Error);
  }
}

TEST_CASE("tf-idf uses raw counts and ln(N/df)") {
  const auto m = weights_of({{"alpha", "alpha", "shared"}, {"shared", "beta"}, {"gamma", "shared"}},
                            WeightScheme::kTfidf);
  CHECK(weight(m, "d0", "shared") == 0.0);
  CHECK(weight(m, "d0", "alpha") == doctest::Approx(2.0 * std::log(3.0)).epsilon(1e-12));
  CHECK(weight(m, "d1", "alpha") == 0.0);
  CHECK(m.terms == std::vector<std::string>{"alpha", "beta", "gamma", "shared"});
}

TEST_CASE("a term in every document weighs zero") {
  const auto m = weights_of({{"both", "one"}, {"both", "two"}}, WeightScheme::kTfidf);
  CHECK(weight(m, "d0", "both") == 0.0);
  CHECK(weight(m, "d1", "both") == 0.0);
}

TEST_CASE("term probabilities are normalized counts") {
  const auto m = weights_of({{"aa", "aa", "bb"}}, WeightScheme::kTermProbability);
  CHECK(weight(m, "d0", "aa") == doctest::Approx(2.0 / 3.0));
  CHECK(weight(m, "d0", "bb") == doctest::Approx(1.0 / 3.0));
}

TEST_CASE("term-weight invariants on a generated corpus") {
  const auto dir = testing::scratch_dir("corpus-gen");
  testing::SyntheticSpec spec;
  spec.sources = 8;
  spec.targets = 9;
  spec.links = 12;
  const auto project = dir / "p";
  testing::write_synthetic_project(project, spec);
  ProjectConfig cfg;
  cfg.source_dir = project / "sources";
  cfg.target_dir = project / "targets";
  const auto corpus = load_corpus(cfg);
  const auto streams = tokenize(corpus);
  REQUIRE(streams.size() == 17);
  CHECK(streams.front().artifact_id == corpus.sources.front().id);
  CHECK(streams.back().artifact_id == corpus.targets.back().id);

  const auto probs = build_term_weights(streams, WeightScheme::kTermProbability);
  for (Eigen::Index r = 0; r < probs.weights.rows(); ++r) {
    CHECK(probs.weights.row(r).sum() == doctest::Approx(1.0).epsilon(1e-9));
  }
  const auto tfidf = build_term_weights(streams, WeightScheme::kTfidf);
  CHECK(tfidf.weights.allFinite());
  CHECK(tfidf.weights.minCoeff() >= 0.0);
}

TEST_CASE("all-empty streams are rejected") {
  CHECK_THROWS_AS(weights_of({{}, {}}, WeightScheme::kTfidf), Error);
}
