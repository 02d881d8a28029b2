// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The tracebayes Authors

#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "tracebayes/corpus.hpp"
#include "tracebayes/hbn.hpp"

namespace tracebayes {

using LinkKey = std::pair<std::string, std::string>;  // (source_id, target_id)
using AnswerSet = std::set<LinkKey>;

/// "source_id<TAB>target_id" per line. With a corpus, every id must resolve
/// to a source and a target respectively.
AnswerSet load_answers(const std::filesystem::path& path, const Corpus* corpus = nullptr);

struct ScoredPair {
  std::string source_id;
  std::string target_id;
  double score = 0.0;
};

struct PrPoint {
  double threshold = 0.0;
  double precision = 1.0;
  double recall = 0.0;
  std::size_t retrieved = 0;
  std::size_t relevant_retrieved = 0;
};

/// One point per distinct score, highest first; tied scores are retrieved
/// together.
struct PrCurve {
  std::vector<PrPoint> points;
  std::size_t total_relevant = 0;
};

/// Precision with nothing retrieved is 1.
double precision_of(std::size_t relevant_retrieved, std::size_t retrieved);

PrCurve precision_recall_curve(std::span<const ScoredPair> scores, const AnswerSet& answers);

/// sum_n (R_n - R_{n-1}) P_n with R_0 = 0.
double average_precision(const PrCurve& curve);

struct OutcomeCounts {
  std::size_t retrieved = 0;
  std::size_t relevant = 0;
};

/// Bootstrap standard error of precision at each threshold. Resampling n
/// binary outcomes with replacement yields Binomial(n, k / n) relevant items,
/// so each resample is drawn from that distribution directly.
std::vector<double> bootstrap_stderr(std::span<const OutcomeCounts> per_threshold, int resamples,
                                     std::uint64_t seed);

struct EvalReport {
  std::string tag;
  double ap = 0.0;
  PrCurve curve;
  std::vector<double> std_err;  // per curve point
  double ap_std_err = 0.0;      // sum_n (R_n - R_{n-1}) se_n
};

EvalReport evaluate(const std::string& tag, std::span<const ScoredPair> scores, const AnswerSet& answers,
                    int resamples = 200, std::uint64_t seed = 1);

nlohmann::json report_to_json(const EvalReport& report);
/// Tab-separated: tag, threshold, precision, recall, std_err.
void write_pr_table(std::ostream& out, const std::vector<EvalReport>& reports);

/// Samples ceil(sample_rate * |pairs|) pairs uniformly without replacement,
/// assigns confidence 0.9 to true links and 0.1 otherwise, then inverts the
/// confidence on round(error_rate * sampled) of them. Records come back
/// ordered by (source, target) with increasing timestamps.
std::vector<FeedbackRecord> simulate_feedback(const AnswerSet& answers, std::span<const LinkKey> all_pairs,
                                              double sample_rate, double error_rate, std::uint64_t seed);

}  // namespace tracebayes
