// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The tracebayes Authors

#include "tracebayes/evalkit.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <ostream>
#include <random>

#include "json.hpp"

#include "tracebayes/error.hpp"
#include "tracebayes/rng.hpp"

namespace tracebayes {

AnswerSet load_answers(const std::filesystem::path& path, const Corpus* corpus) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::kIo, "cannot read answer file " + path.string());
  std::set<std::string> sources;
  std::set<std::string> targets;
  if (corpus) {
    for (const auto& a : corpus->sources) sources.insert(a.id);
    for (const auto& a : corpus->targets) targets.insert(a.id);
  }
  AnswerSet answers;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos || tab == 0 || tab + 1 == line.size() ||
        line.find('\t', tab + 1) != std::string::npos) {
      fail(ErrorKind::kParse, path.string() + ":" + std::to_string(line_no) + ": expected source_id<TAB>target_id");
    }
    LinkKey key{line.substr(0, tab), line.substr(tab + 1)};
    if (corpus && (!sources.contains(key.first) || !targets.contains(key.second))) {
      fail(ErrorKind::kNotFound, path.string() + ":" + std::to_string(line_no) + ": unknown artifact in link " +
                                     key.first + " -> " + key.second);
    }
    answers.insert(std::move(key));
  }
  return answers;
}

double precision_of(std::size_t relevant_retrieved, std::size_t retrieved) {
  return retrieved == 0 ? 1.0 : static_cast<double>(relevant_retrieved) / static_cast<double>(retrieved);
}

PrCurve precision_recall_curve(std::span<const ScoredPair> scores, const AnswerSet& answers) {
  if (answers.empty()) fail(ErrorKind::kInvalidArgument, "precision_recall_curve: empty answer set");
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a].score > scores[b].score; });

  PrCurve curve;
  curve.total_relevant = answers.size();
  std::size_t retrieved = 0;
  std::size_t hits = 0;
  std::size_t i = 0;
  while (i < order.size()) {
    const double threshold = scores[order[i]].score;
    while (i < order.size() && scores[order[i]].score == threshold) {
      const auto& p = scores[order[i]];
      if (answers.contains({p.source_id, p.target_id})) ++hits;
      ++retrieved;
      ++i;
    }
    curve.points.push_back({threshold, precision_of(hits, retrieved),
                            static_cast<double>(hits) / static_cast<double>(answers.size()), retrieved, hits});
  }
  return curve;
}

double average_precision(const PrCurve& curve) {
  double ap = 0.0;
  double prev_recall = 0.0;
  for (const auto& p : curve.points) {
    ap += (p.recall - prev_recall) * p.precision;
    prev_recall = p.recall;
  }
  return ap;
}

std::vector<double> bootstrap_stderr(std::span<const OutcomeCounts> per_threshold, int resamples,
                                     std::uint64_t seed) {
  if (resamples < 100) fail(ErrorKind::kInvalidArgument, "bootstrap needs at least 100 resamples");
  std::vector<double> out;
  out.reserve(per_threshold.size());
  for (std::size_t t = 0; t < per_threshold.size(); ++t) {
    const auto [n, k] = per_threshold[t];
    if (n == 0 || k == 0 || k == n) {
      out.push_back(0.0);
      continue;
    }
    Rng rng(derive_seed(seed, t));
    std::binomial_distribution<std::size_t> draw(n, static_cast<double>(k) / static_cast<double>(n));
    double mean = 0.0;
    double m2 = 0.0;
    for (int r = 0; r < resamples; ++r) {
      const double p = static_cast<double>(draw(rng)) / static_cast<double>(n);
      const double delta = p - mean;
      mean += delta / (r + 1);
      m2 += delta * (p - mean);
    }
    out.push_back(std::sqrt(m2 / (resamples - 1)));
  }
  return out;
}

EvalReport evaluate(const std::string& tag, std::span<const ScoredPair> scores, const AnswerSet& answers,
                    int resamples, std::uint64_t seed) {
  EvalReport r;
  r.tag = tag;
  r.curve = precision_recall_curve(scores, answers);
  r.ap = average_precision(r.curve);
  std::vector<OutcomeCounts> counts;
  counts.reserve(r.curve.points.size());
  for (const auto& p : r.curve.points) counts.push_back({p.retrieved, p.relevant_retrieved});
  r.std_err = bootstrap_stderr(counts, resamples, seed);
  double prev_recall = 0.0;
  for (std::size_t i = 0; i < r.curve.points.size(); ++i) {
    r.ap_std_err += (r.curve.points[i].recall - prev_recall) * r.std_err[i];
    prev_recall = r.curve.points[i].recall;
  }
  return r;
}

nlohmann::json report_to_json(const EvalReport& r) {
  nlohmann::json curve = nlohmann::json::array();
  for (std::size_t i = 0; i < r.curve.points.size(); ++i) {
    const auto& p = r.curve.points[i];
    curve.push_back({{"threshold", p.threshold},
                     {"precision", p.precision},
                     {"recall", p.recall},
                     {"retrieved", p.retrieved},
                     {"std_err", r.std_err.empty() ? 0.0 : r.std_err[i]}});
  }
  return {{"tag", r.tag},
          {"ap", r.ap},
          {"ap_std_err", r.ap_std_err},
          {"relevant", r.curve.total_relevant},
          {"curve", std::move(curve)}};
}

void write_pr_table(std::ostream& out, const std::vector<EvalReport>& reports) {
  out << "tag\tthreshold\tprecision\trecall\tstd_err\n";
  char buf[128];
  for (const auto& r : reports) {
    for (std::size_t i = 0; i < r.curve.points.size(); ++i) {
      const auto& p = r.curve.points[i];
      std::snprintf(buf, sizeof buf, "%.6f\t%.6f\t%.6f\t%.6f", p.threshold, p.precision, p.recall,
                    r.std_err.empty() ? 0.0 : r.std_err[i]);
      out << r.tag << '\t' << buf << '\n';
    }
  }
}

std::vector<FeedbackRecord> simulate_feedback(const AnswerSet& answers, std::span<const LinkKey> all_pairs,
                                              double sample_rate, double error_rate, std::uint64_t seed) {
  if (!(sample_rate >= 0.0 && sample_rate <= 1.0) || !(error_rate >= 0.0 && error_rate <= 1.0)) {
    fail(ErrorKind::kInvalidArgument, "simulate_feedback: rates must lie in [0,1]");
  }
  const std::size_t n = all_pairs.size();
  // The small offset absorbs representation error (0.1 * 1000 is 100.00000000000001).
  const auto sampled = std::min<std::size_t>(
      n, static_cast<std::size_t>(std::ceil(sample_rate * static_cast<double>(n) - 1e-9)));

  Rng rng(seed);
  std::vector<std::size_t> index(n);
  std::iota(index.begin(), index.end(), 0);
  for (std::size_t i = 0; i < sampled; ++i) {
    const auto j = i + static_cast<std::size_t>(uniform_index(rng, n - i));
    std::swap(index[i], index[j]);
  }
  index.resize(sampled);

  const auto flips = std::min<std::size_t>(
      sampled, static_cast<std::size_t>(std::llround(error_rate * static_cast<double>(sampled))));
  std::vector<std::size_t> positions(sampled);
  std::iota(positions.begin(), positions.end(), 0);
  for (std::size_t i = 0; i < flips; ++i) {
    const auto j = i + static_cast<std::size_t>(uniform_index(rng, sampled - i));
    std::swap(positions[i], positions[j]);
  }
  std::vector<bool> flipped(sampled, false);
  for (std::size_t i = 0; i < flips; ++i) flipped[positions[i]] = true;

  std::vector<FeedbackRecord> records;
  records.reserve(sampled);
  for (std::size_t i = 0; i < sampled; ++i) {
    const auto& pair = all_pairs[index[i]];
    double c = answers.contains(pair) ? 0.9 : 0.1;
    if (flipped[i]) c = 1.0 - c;
    records.push_back({pair.first, pair.second, c, "simulated", 0});
  }
  std::sort(records.begin(), records.end(), [](const FeedbackRecord& a, const FeedbackRecord& b) {
    return std::tie(a.source_id, a.target_id) < std::tie(b.source_id, b.target_id);
  });
  for (std::size_t i = 0; i < records.size(); ++i) records[i].timestamp = static_cast<std::int64_t>(i + 1);
  return records;
}

}  // namespace tracebayes
