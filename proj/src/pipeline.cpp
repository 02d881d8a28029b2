// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The tracebayes Authors

#include "tracebayes/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <set>
#include <thread>

#include <spdlog/spdlog.h>

#include "tracebayes/bands.hpp"
#include "tracebayes/error.hpp"

namespace tracebayes {

void parallel_for(std::size_t n, int workers, const std::function<void(std::size_t)>& body) {
  if (n == 0) return;
  const auto threads = static_cast<std::size_t>(std::clamp<long long>(workers, 1, static_cast<long long>(n)));
  if (threads == 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::atomic<bool> stop{false};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto run = [&] {
    while (!stop.load(std::memory_order_relaxed)) {
      const std::size_t i = next.fetch_add(1, std::memory_order_relaxed);
      if (i >= n) return;
      try {
        body(i);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
        stop = true;
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(threads - 1);
  for (std::size_t t = 1; t < threads; ++t) pool.emplace_back(run);
  run();
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

namespace {

std::array<double, kTechniqueCount> technique_medians(const TechniqueSet& set) {
  std::array<double, kTechniqueCount> out{};
  for (std::size_t t = 0; t < kTechniqueCount; ++t) {
    const auto& v = set.matrices[t].values;
    out[t] = median_of(std::vector<double>(v.data(), v.data() + v.size()));
  }
  return out;
}

std::size_t index_of(const std::vector<Artifact>& set, const std::string& id, const char* role) {
  const auto it = std::lower_bound(set.begin(), set.end(), id,
                                   [](const Artifact& a, const std::string& key) { return a.id < key; });
  if (it == set.end() || it->id != id) fail(ErrorKind::kNotFound, std::string("unknown ") + role + " " + id);
  return static_cast<std::size_t>(it - set.begin());
}

}  // namespace

std::size_t PreparedProject::source_index(const std::string& id) const {
  return index_of(corpus.sources, id, "source");
}

std::size_t PreparedProject::target_index(const std::string& id) const {
  return index_of(corpus.targets, id, "target");
}

PreparedProject prepare_project(const ProjectConfig& config) {
  PreparedProject p;
  p.config = config;
  p.corpus = load_corpus(config);
  const auto streams = tokenize(p.corpus);
  p.techniques = compute_all(p.corpus, streams, config.techniques);
  p.thresholds = estimate_thresholds(p.techniques.matrices, config.thresholds);
  p.medians = technique_medians(p.techniques);
  p.source_sims = source_source_similarity(p.techniques.tfidf, p.corpus);

  if (config.transitive.use_execution) {
    if (!config.coverage_file || !config.test_dir) {
      fail(ErrorKind::kInvalidArgument, "execution transitivity needs coverage_file and test_dir");
    }
    ExecutionSupport ex;
    ex.corpus.sources = p.corpus.sources;
    ex.corpus.targets = load_artifacts(*config.test_dir, ArtifactKind::kTest);
    ex.corpus.pair_kind = PairKind::kReqTest;
    const auto ex_streams = tokenize(ex.corpus);
    ex.techniques = compute_all(ex.corpus, ex_streams, config.techniques);
    ex.medians = technique_medians(ex.techniques);
    std::set<std::string> tests;
    std::set<std::string> targets;
    for (const auto& a : ex.corpus.targets) tests.insert(a.id);
    for (const auto& a : p.corpus.targets) targets.insert(a.id);
    ex.index = load_execution_relations(*config.coverage_file, tests, targets);
    p.execution = std::move(ex);
  }
  return p;
}

std::array<double, kTechniqueCount> pair_similarities(const TechniqueSet& set, std::size_t source,
                                                      std::size_t target) {
  std::array<double, kTechniqueCount> raw{};
  for (std::size_t t = 0; t < kTechniqueCount; ++t) {
    raw[t] = set.matrices[t].values(static_cast<Eigen::Index>(source), static_cast<Eigen::Index>(target));
  }
  return raw;
}

Stage1Fit pair_fit(const TechniqueSet& set, const std::array<double, kTechniqueCount>& medians,
                   std::size_t source, std::size_t target, const ModelHyperParams& params) {
  const auto raw = pair_similarities(set, source, target);
  const auto normalized = normalize_similarities(raw, medians, params.sigmoid_slope);
  return fit_theta_ir(normalized, params.epsilon_clamp);
}

ObservationSet pair_observations(const PreparedProject& project, std::size_t source, std::size_t target) {
  const auto raw = pair_similarities(project.techniques, source, target);
  return make_observations(raw, kAllTechniques, project.thresholds);
}

std::vector<Stage1Fit> all_pair_fits(const PreparedProject& project, int workers) {
  const std::size_t nt = project.corpus.targets.size();
  std::vector<Stage1Fit> fits(project.corpus.pair_count());
  parallel_for(fits.size(), workers, [&](std::size_t i) {
    fits[i] = pair_fit(project.techniques, project.medians, i / nt, i % nt, project.config.model);
  });
  return fits;
}

TransitiveSummary transitive_summary(const PreparedProject& project, const std::vector<Stage1Fit>& fits,
                                     std::size_t source, std::size_t target,
                                     const std::vector<TransitiveContext>& contexts) {
  const std::size_t nt = project.corpus.targets.size();
  const auto& ctx = contexts[source];
  TransitiveSummary summary;
  summary.rho = project.config.model.rho;

  std::vector<Stage1Fit> components;
  if (!ctx.related.empty()) {
    summary.weights = mixture_weights(ctx);
    for (const auto& [id, sim] : ctx.related) {
      summary.contributing_ids.push_back(id);
      components.push_back(fits[project.source_index(id) * nt + target]);
    }
  }

  if (project.execution) {
    const auto& ex = *project.execution;
    auto tests = ex.index.tests_executing(project.corpus.targets[target].id);
    if (tests.size() > static_cast<std::size_t>(project.config.transitive.pi)) {
      tests.resize(static_cast<std::size_t>(project.config.transitive.pi));
    }
    if (!tests.empty()) {
      double share = 1.0;
      if (!summary.weights.empty()) {
        share = 0.0;
        for (double w : summary.weights) share += w;
        share /= static_cast<double>(summary.weights.size());
      }
      for (const auto& test_id : tests) {
        const auto ti = index_of(ex.corpus.targets, test_id, "test");
        components.push_back(pair_fit(ex.techniques, ex.medians, source, ti, project.config.model));
        summary.contributing_ids.push_back(test_id);
        summary.weights.push_back(share);
      }
      double total = 0.0;
      for (double w : summary.weights) total += w;
      for (double& w : summary.weights) w /= total;
    }
  }

  summary.mu_trans = transitive_mixture_mean(components, summary.weights, fits[source * nt + target].mu,
                                             summary.rho);
  return summary;
}

std::vector<ResultRecord> run_inference(const PreparedProject& project, const InferenceOptions& options,
                                        const std::vector<FeedbackRecord>& feedback) {
  const int stage = options.stage;
  if (stage < 1 || stage > 4) fail(ErrorKind::kInvalidArgument, "stage must be 1-4");
  const auto& corpus = project.corpus;
  const std::size_t nt = corpus.targets.size();
  const bool transitive = stage >= 3;
  const bool with_feedback = stage == 2 || stage == 4;

  std::vector<PairRef> pairs;
  if (options.pairs) {
    pairs = *options.pairs;
  } else {
    pairs.reserve(corpus.pair_count());
    for (std::size_t s = 0; s < corpus.sources.size(); ++s) {
      for (std::size_t t = 0; t < nt; ++t) pairs.push_back({s, t});
    }
  }
  for (const auto& p : pairs) {
    if (p.source >= corpus.sources.size() || p.target >= nt) fail(ErrorKind::kInvalidArgument, "pair out of range");
  }

  std::map<LinkKey, std::vector<FeedbackRecord>> by_pair;
  if (with_feedback) {
    for (const auto& r : feedback) by_pair[{r.source_id, r.target_id}].push_back(r);
  }

  std::vector<Stage1Fit> fits;
  std::vector<TransitiveContext> contexts;
  if (transitive) {
    fits = all_pair_fits(project, options.workers);
    contexts.resize(corpus.sources.size());
    parallel_for(contexts.size(), options.workers, [&](std::size_t s) {
      contexts[s] = derive_related_sources(project.source_sims, corpus.sources[s].id, project.config.transitive.tau,
                                           project.config.transitive.pi);
    });
  }

  const auto& model = project.config.model;
  std::vector<ResultRecord> out(pairs.size());
  parallel_for(pairs.size(), options.workers, [&](std::size_t i) {
    const auto [s, t] = pairs[i];
    const auto& source_id = corpus.sources[s].id;
    const auto& target_id = corpus.targets[t].id;
    LinkInputs inputs;
    inputs.fit = transitive ? fits[s * nt + t] : pair_fit(project.techniques, project.medians, s, t, model);
    inputs.observations = pair_observations(project, s, t);
    if (with_feedback) {
      const auto it = by_pair.find({source_id, target_id});
      inputs.feedback = it == by_pair.end() ? std::vector<FeedbackRecord>{} : it->second;
    }
    if (transitive) inputs.transitive = transitive_summary(project, fits, s, t, contexts);

    ResultRecord& r = out[i];
    r.estimate = infer_link(source_id, target_id, stage, inputs, model);
    r.observations = inputs.observations.bits;
    r.thresholds = inputs.observations.thresholds;
    r.fit_mu = inputs.fit.mu;
    r.fit_nu = inputs.fit.nu;
    r.mu_trans = transitive ? inputs.transitive->mu_trans : inputs.fit.mu;
  });
  return out;
}

RunManifest make_manifest(const PreparedProject& project, const std::string& run_id, int stage,
                          std::size_t pair_count, std::size_t feedback_records) {
  RunManifest m;
  m.run_id = run_id;
  m.created_at = utc_timestamp();
  m.stage = stage;
  m.pair_count = pair_count;
  m.feedback_records = feedback_records;
  m.thresholds = project.thresholds;
  m.medians.assign(project.medians.begin(), project.medians.end());
  m.resolved_techniques = project.techniques.resolved;
  m.config = project_to_json(project.config);
  return m;
}

std::vector<ScoredPair> scored_pairs(const std::vector<ResultRecord>& records) {
  std::vector<ScoredPair> out;
  out.reserve(records.size());
  for (const auto& r : records) out.push_back({r.estimate.source_id, r.estimate.target_id, r.estimate.mean});
  return out;
}

std::vector<LinkKey> all_pair_keys(const Corpus& corpus) {
  std::vector<LinkKey> keys;
  keys.reserve(corpus.pair_count());
  for (const auto& s : corpus.sources) {
    for (const auto& t : corpus.targets) keys.emplace_back(s.id, t.id);
  }
  return keys;
}

std::array<std::size_t, 3> band_counts(const std::vector<ResultRecord>& records) {
  std::array<std::size_t, 3> counts{};
  for (const auto& r : records) ++counts[static_cast<std::size_t>(band_of(r.estimate.mean))];
  return counts;
}

}  // namespace tracebayes
