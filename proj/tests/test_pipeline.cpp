// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The tracebayes Authors

#include <atomic>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <stdexcept>

#include "doctest.h"
#include "synthetic.hpp"
#include "tracebayes/error.hpp"
#include "tracebayes/pipeline.hpp"

using namespace tracebayes;
namespace fs = std::filesystem;

namespace {

ProjectConfig small_project(const std::string& tag, std::uint64_t seed = 3) {
  testing::SyntheticSpec spec;
  spec.sources = 8;
  spec.targets = 10;
  spec.links = 12;
  spec.seed = seed;
  return load_project(testing::write_synthetic_project(testing::scratch_dir(tag), spec));
}

std::vector<std::string> lines_of(const std::vector<ResultRecord>& recs) {
  std::vector<std::string> out;
  for (const auto& r : recs) out.push_back(result_to_line(r));
  return out;
}

}  // namespace

TEST_CASE("parallel_for visits every index once and rethrows") {
  for (int workers : {1, 3, 16}) {
    std::vector<std::atomic<int>> hits(257);
    parallel_for(hits.size(), workers, [&](std::size_t i) { hits[i]++; });
    for (auto& h : hits) CHECK(h.load() == 1);
  }
  CHECK_THROWS_AS(parallel_for(50, 4,
                               [](std::size_t i) {
                                 if (i == 17) throw std::runtime_error("x");
                               }),
                  std::runtime_error);
  parallel_for(0, 4, [](std::size_t) { FAIL("no work expected"); });
}

TEST_CASE("prepared project covers every technique") {
  const auto project = prepare_project(small_project("pipe_prep"));
  CHECK(project.corpus.sources.size() == 8);
  CHECK(project.corpus.targets.size() == 10);
  CHECK(project.thresholds.size() == kTechniqueCount);
  CHECK(project.source_sims.ids.size() == 8);
  const auto& vsm = project.techniques.at(Technique::kVsm).values;
  for (std::size_t i = 0; i < kTechniqueCount; ++i) {
    const auto& m = project.techniques.matrices[i].values;
    CHECK(project.medians[i] >= m.minCoeff());
    CHECK(project.medians[i] <= m.maxCoeff());
  }
  const auto sims = pair_similarities(project.techniques, 2, 3);
  CHECK(sims[0] == vsm(2, 3));
  const auto obs = pair_observations(project, 2, 3);
  CHECK(obs.n() == 10);
  CHECK(project.source_index(project.corpus.sources[5].id) == 5);
  CHECK_THROWS_AS(project.target_index("missing.java"), Error);
}

TEST_CASE("inference is identical for any worker count") {
  auto cfg = small_project("pipe_det");
  cfg.model.sampler = SamplerKind::kMcmc;
  cfg.model.mcmc_samples = 1000;
  cfg.model.burn_in = 200;
  cfg.transitive.tau = 0.2;
  const auto project = prepare_project(cfg);
  const auto keys = all_pair_keys(project.corpus);
  const auto answers = load_answers(*cfg.answer_file);
  const auto feedback = simulate_feedback(answers, keys, 0.2, 0.25, 5);

  InferenceOptions one{4, 1, std::nullopt};
  InferenceOptions many{4, 7, std::nullopt};
  const auto a = run_inference(project, one, feedback);
  const auto b = run_inference(project, many, feedback);
  CHECK(a.size() == keys.size());
  CHECK(lines_of(a) == lines_of(b));
  for (const auto& r : a) {
    CHECK(r.estimate.mean >= 0.0);
    CHECK(r.estimate.mean <= 1.0);
    CHECK(r.estimate.stage == 4);
  }
}

TEST_CASE("Stage 3 without transitive contexts tracks Stage 1") {
  auto cfg = small_project("pipe_stage3");
  cfg.transitive.tau = 1.01;
  const auto project = prepare_project(cfg);
  const auto s1 = run_inference(project, {1, 2, std::nullopt}, {});
  const auto s3 = run_inference(project, {3, 2, std::nullopt}, {});
  REQUIRE(s1.size() == s3.size());
  for (std::size_t i = 0; i < s1.size(); ++i) {
    CHECK(s3[i].mu_trans == s1[i].fit_mu);
    CHECK(std::abs(s3[i].estimate.mean - s1[i].estimate.mean) <= 0.02);
  }
}

TEST_CASE("Stage 2 moves only pairs with feedback, in the feedback direction") {
  const auto project = prepare_project(small_project("pipe_stage2"));
  const auto& c = project.corpus;
  FeedbackRecord up{c.sources[0].id, c.targets[0].id, 1.0, "r", 1};
  FeedbackRecord down{c.sources[1].id, c.targets[1].id, 0.0, "r", 2};
  const auto s1 = run_inference(project, {1, 1, std::nullopt}, {});
  const auto s2 = run_inference(project, {2, 1, std::nullopt}, {up, down});
  const std::size_t nt = c.targets.size();
  CHECK(s2[0].estimate.mean > s1[0].estimate.mean);
  CHECK(s2[nt + 1].estimate.mean < s1[nt + 1].estimate.mean);
  // Pairs without feedback keep the Stage 1 prior mean; the prior shape differs.
  CHECK(std::abs(s2[5].estimate.mean - s1[5].estimate.mean) <= 0.02);
}

TEST_CASE("explicit pair lists keep their order") {
  const auto project = prepare_project(small_project("pipe_pairs"));
  const std::vector<PairRef> pairs = {{3, 4}, {0, 0}, {7, 9}};
  const auto recs = run_inference(project, {1, 2, pairs}, {});
  REQUIRE(recs.size() == 3);
  CHECK(recs[0].estimate.source_id == project.corpus.sources[3].id);
  CHECK(recs[2].estimate.target_id == project.corpus.targets[9].id);
  CHECK_THROWS_AS(run_inference(project, {5, 1, std::nullopt}, {}), Error);
}

TEST_CASE("execution relations add test components to the transitive mixture") {
  auto cfg = small_project("pipe_exec");
  const fs::path root = cfg.source_dir.parent_path();
  fs::create_directories(root / "tests");
  std::ofstream cov(root / "coverage.tsv");
  for (const auto& e : fs::directory_iterator(cfg.target_dir)) {
    const auto name = e.path().stem().string() + "Test.java";
    fs::copy_file(e.path(), root / "tests" / name);
    cov << name << '\t' << e.path().filename().string() << '\n';
  }
  cov.close();
  cfg.test_dir = root / "tests";
  cfg.coverage_file = root / "coverage.tsv";
  cfg.transitive.use_execution = true;
  cfg.transitive.tau = 1.01;

  const auto project = prepare_project(cfg);
  REQUIRE(project.execution);
  CHECK(project.execution->index.relations().size() == 10);
  const auto fits = all_pair_fits(project, 2);
  std::vector<TransitiveContext> contexts;
  for (const auto& s : project.corpus.sources) {
    contexts.push_back(derive_related_sources(project.source_sims, s.id, cfg.transitive.tau, cfg.transitive.pi));
  }
  const auto summary = transitive_summary(project, fits, 0, 0, contexts);
  REQUIRE(summary.contributing_ids.size() == 1);
  CHECK(summary.contributing_ids[0] == project.corpus.targets[0].id.substr(0, project.corpus.targets[0].id.size() - 5) +
                                           "Test.java");
  CHECK(std::accumulate(summary.weights.begin(), summary.weights.end(), 0.0) == doctest::Approx(1.0));

  cfg.test_dir.reset();
  CHECK_THROWS_AS(prepare_project(cfg), Error);
}
