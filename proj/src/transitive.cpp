// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The tracebayes Authors

#include "tracebayes/transitive.hpp"

#include <algorithm>
#include <fstream>

#include "tracebayes/error.hpp"

namespace tracebayes {

SquareSimilarity source_source_similarity(const TermWeightMatrix& tfidf, const Corpus& corpus) {
  Eigen::MatrixXd rows(static_cast<Eigen::Index>(corpus.sources.size()), tfidf.weights.cols());
  SquareSimilarity out;
  for (std::size_t i = 0; i < corpus.sources.size(); ++i) {
    rows.row(static_cast<Eigen::Index>(i)) = tfidf.weights.row(tfidf.row_of(corpus.sources[i].id));
    out.ids.push_back(corpus.sources[i].id);
  }
  out.values = cosine_similarity(rows, rows);
  return out;
}

TransitiveContext derive_related_sources(const SquareSimilarity& sims, const std::string& source_id,
                                         double tau, int pi) {
  const auto it = std::find(sims.ids.begin(), sims.ids.end(), source_id);
  if (it == sims.ids.end()) fail(ErrorKind::kNotFound, "unknown source " + source_id);
  if (pi < 0) fail(ErrorKind::kInvalidArgument, "pi must be non-negative");
  const auto row = static_cast<Eigen::Index>(it - sims.ids.begin());

  TransitiveContext ctx;
  ctx.source_id = source_id;
  ctx.tau = tau;
  ctx.pi = pi;
  for (std::size_t j = 0; j < sims.ids.size(); ++j) {
    if (static_cast<Eigen::Index>(j) == row) continue;
    const double s = sims.values(row, static_cast<Eigen::Index>(j));
    if (s >= tau) ctx.related.emplace_back(sims.ids[j], s);
  }
  std::sort(ctx.related.begin(), ctx.related.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  if (ctx.related.size() > static_cast<std::size_t>(pi)) ctx.related.resize(static_cast<std::size_t>(pi));
  return ctx;
}

std::vector<double> mixture_weights(const TransitiveContext& context) {
  if (context.related.empty()) fail(ErrorKind::kInvalidArgument, "mixture_weights: empty context");
  double total = 0.0;
  for (const auto& [id, s] : context.related) total += s;
  std::vector<double> w;
  w.reserve(context.related.size());
  if (total <= 0.0) {
    w.assign(context.related.size(), 1.0 / static_cast<double>(context.related.size()));
    return w;
  }
  for (const auto& [id, s] : context.related) w.push_back(s / total);
  return w;
}

ExecutionIndex::ExecutionIndex(std::vector<ExecutionRelation> relations) {
  for (auto& r : relations) {
    if (r.strength != ExecutionStrength::kStrong) continue;
    if (strong_.emplace(r.test_id, r.target_id).second) relations_.push_back(std::move(r));
  }
}

ExecutionStrength ExecutionIndex::strength(const std::string& test_id, const std::string& target_id) const {
  return strong_.contains({test_id, target_id}) ? ExecutionStrength::kStrong : ExecutionStrength::kWeak;
}

std::vector<std::string> ExecutionIndex::tests_executing(const std::string& target_id) const {
  std::vector<std::string> out;
  for (const auto& [test, target] : strong_) {
    if (target == target_id) out.push_back(test);
  }
  std::sort(out.begin(), out.end());
  return out;
}

ExecutionIndex load_execution_relations(const std::filesystem::path& coverage_file,
                                        const std::set<std::string>& test_ids,
                                        const std::set<std::string>& target_ids) {
  std::ifstream in(coverage_file);
  if (!in) fail(ErrorKind::kIo, "cannot read coverage file " + coverage_file.string());
  std::vector<ExecutionRelation> relations;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos || line.find('\t', tab + 1) != std::string::npos || tab == 0 ||
        tab + 1 == line.size()) {
      fail(ErrorKind::kParse, coverage_file.string() + ":" + std::to_string(line_no) +
                                  ": expected test_id<TAB>target_id");
    }
    ExecutionRelation r{line.substr(0, tab), line.substr(tab + 1), ExecutionStrength::kStrong};
    if (!test_ids.contains(r.test_id)) {
      fail(ErrorKind::kNotFound, coverage_file.string() + ":" + std::to_string(line_no) +
                                     ": unknown test artifact " + r.test_id);
    }
    if (!target_ids.contains(r.target_id)) {
      fail(ErrorKind::kNotFound, coverage_file.string() + ":" + std::to_string(line_no) +
                                     ": unknown target artifact " + r.target_id);
    }
    relations.push_back(std::move(r));
  }
  return ExecutionIndex(std::move(relations));
}

}  // namespace tracebayes
