// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The tracebayes Authors

#include <map>

#include "tracebayes/error.hpp"
#include "tracebayes/rng.hpp"
#include "tracebayes/similarity.hpp"

namespace tracebayes {

Eigen::MatrixXd lda_topic_distributions(const std::vector<TokenStream>& streams,
                                        const LdaOptions& options) {
  const int topics = options.topics;
  if (topics < 2) fail(ErrorKind::kInvalidArgument, "LDA needs at least 2 topics");
  if (options.iterations < 1) fail(ErrorKind::kInvalidArgument, "LDA needs at least one iteration");
  const double alpha = options.alpha > 0 ? options.alpha : 50.0 / topics;
  const double beta = options.beta;

  std::map<std::string, int> vocab;
  for (const auto& s : streams) {
    for (const auto& t : s.tokens) vocab.emplace(t, 0);
  }
  if (vocab.empty()) fail(ErrorKind::kInvalidArgument, "LDA: empty vocabulary");
  int next_id = 0;
  for (auto& [term, id] : vocab) id = next_id++;
  const int n_words = next_id;

  const auto n_docs = static_cast<Eigen::Index>(streams.size());
  std::vector<std::vector<int>> words(streams.size());
  std::vector<std::vector<int>> assignment(streams.size());
  Eigen::MatrixXi doc_topic = Eigen::MatrixXi::Zero(n_docs, topics);
  Eigen::MatrixXi topic_word = Eigen::MatrixXi::Zero(topics, n_words);
  Eigen::VectorXi topic_total = Eigen::VectorXi::Zero(topics);

  Rng rng(options.seed);
  for (std::size_t d = 0; d < streams.size(); ++d) {
    for (const auto& t : streams[d].tokens) {
      const int w = vocab.at(t);
      const int z = static_cast<int>(uniform_index(rng, static_cast<std::uint64_t>(topics)));
      words[d].push_back(w);
      assignment[d].push_back(z);
      ++doc_topic(static_cast<Eigen::Index>(d), z);
      ++topic_word(z, w);
      ++topic_total(z);
    }
  }

  // Average theta over a few well-separated late sweeps rather than trusting
  // the last sample alone.
  const int sample_every = 10;
  const int averaged_sweeps = std::min(10, options.iterations / sample_every);
  const int first_sample = options.iterations - averaged_sweeps * sample_every;

  Eigen::MatrixXd theta = Eigen::MatrixXd::Zero(n_docs, topics);
  int samples = 0;
  std::vector<double> cumulative(static_cast<std::size_t>(topics));
  const double v_beta = n_words * beta;
  for (int iter = 0; iter < options.iterations; ++iter) {
    for (std::size_t d = 0; d < streams.size(); ++d) {
      const auto di = static_cast<Eigen::Index>(d);
      for (std::size_t n = 0; n < words[d].size(); ++n) {
        const int w = words[d][n];
        int z = assignment[d][n];
        --doc_topic(di, z);
        --topic_word(z, w);
        --topic_total(z);

        double total = 0.0;
        for (int k = 0; k < topics; ++k) {
          total += (doc_topic(di, k) + alpha) * (topic_word(k, w) + beta) / (topic_total(k) + v_beta);
          cumulative[static_cast<std::size_t>(k)] = total;
        }
        const double u = uniform01(rng) * total;
        z = 0;
        while (z < topics - 1 && cumulative[static_cast<std::size_t>(z)] <= u) ++z;

        assignment[d][n] = z;
        ++doc_topic(di, z);
        ++topic_word(z, w);
        ++topic_total(z);
      }
    }
    if (iter + 1 > first_sample && (iter + 1 - first_sample) % sample_every == 0) {
      for (Eigen::Index d = 0; d < n_docs; ++d) {
        const double len = static_cast<double>(words[static_cast<std::size_t>(d)].size());
        if (len == 0) continue;
        for (int k = 0; k < topics; ++k) {
          theta(d, k) += (doc_topic(d, k) + alpha) / (len + topics * alpha);
        }
      }
      ++samples;
    }
  }
  if (samples > 0) {
    theta /= samples;
  } else {
    for (Eigen::Index d = 0; d < n_docs; ++d) {
      const double len = static_cast<double>(words[static_cast<std::size_t>(d)].size());
      if (len == 0) continue;
      for (int k = 0; k < topics; ++k) theta(d, k) = (doc_topic(d, k) + alpha) / (len + topics * alpha);
    }
  }
  return theta;
}

SimilarityMatrix lda_similarity(const std::vector<TokenStream>& streams, const LdaOptions& options,
                                const Corpus& corpus) {
  const Eigen::MatrixXd theta = lda_topic_distributions(streams, options);
  TermWeightMatrix index;
  for (std::size_t d = 0; d < streams.size(); ++d) {
    index.rows.emplace(streams[d].artifact_id, static_cast<Eigen::Index>(d));
    index.doc_ids.push_back(streams[d].artifact_id);
  }
  return cosine_engine(Technique::kLda, theta, index, corpus);
}

}  // namespace tracebayes
