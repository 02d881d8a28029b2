// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The tracebayes Authors

#include "tracebayes/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <unordered_set>

#include "tracebayes/error.hpp"
#include "tracebayes/text.hpp"

namespace tracebayes {
namespace fs = std::filesystem;

const Artifact* Corpus::find(std::string_view id) const {
  for (const auto* list : {&sources, &targets}) {
    for (const auto& a : *list) {
      if (a.id == id) return &a;
    }
  }
  return nullptr;
}

Eigen::Index TermWeightMatrix::row_of(const std::string& artifact_id) const {
  auto it = rows.find(artifact_id);
  if (it == rows.end()) fail(ErrorKind::kNotFound, "no term-weight row for artifact " + artifact_id);
  return it->second;
}

namespace {

bool valid_utf8(std::string_view s) {
  std::size_t i = 0;
  while (i < s.size()) {
    const auto c = static_cast<unsigned char>(s[i]);
    std::size_t extra;
    if (c < 0x80) {
      extra = 0;
    } else if ((c >> 5) == 0x6) {
      extra = 1;
    } else if ((c >> 4) == 0xe) {
      extra = 2;
    } else if ((c >> 3) == 0x1e) {
      extra = 3;
    } else {
      return false;
    }
    if (i + extra >= s.size()) return false;
    for (std::size_t k = 1; k <= extra; ++k) {
      if ((static_cast<unsigned char>(s[i + k]) >> 6) != 0x2) return false;
    }
    i += extra + 1;
  }
  return true;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::kIo, "cannot read " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

}  // namespace

std::vector<Artifact> load_artifacts(const fs::path& dir, ArtifactKind kind) {
  std::error_code ec;
  if (!fs::is_directory(dir, ec)) fail(ErrorKind::kNotFound, "missing directory: " + dir.string());

  std::vector<Artifact> artifacts;
  for (auto it = fs::recursive_directory_iterator(dir, ec); it != fs::recursive_directory_iterator();
       it.increment(ec)) {
    if (ec) fail(ErrorKind::kIo, "cannot list " + dir.string() + ": " + ec.message());
    if (!it->is_regular_file()) continue;
    const auto& path = it->path();
    if (path.filename().string().starts_with('.')) continue;
    Artifact a;
    a.id = path.lexically_relative(dir).generic_string();
    a.kind = kind;
    a.path = path;
    a.raw_text = read_file(path);
    if (!valid_utf8(a.raw_text)) fail(ErrorKind::kParse, "not valid UTF-8: " + path.string());
    if (a.raw_text.empty()) fail(ErrorKind::kInvalidArgument, "empty artifact: " + path.string());
    artifacts.push_back(std::move(a));
  }
  if (artifacts.empty()) fail(ErrorKind::kInvalidArgument, "empty artifact set: " + dir.string());
  std::sort(artifacts.begin(), artifacts.end(),
            [](const Artifact& x, const Artifact& y) { return x.id < y.id; });
  return artifacts;
}

Corpus load_corpus(const ProjectConfig& config) {
  Corpus corpus;
  corpus.pair_kind = config.pair_kind;
  corpus.sources = load_artifacts(config.source_dir, source_kind(config.pair_kind));
  corpus.targets = load_artifacts(config.target_dir, target_kind(config.pair_kind));

  std::unordered_set<std::string> ids;
  for (const auto* list : {&corpus.sources, &corpus.targets}) {
    for (const auto& a : *list) {
      if (!ids.insert(a.id).second) fail(ErrorKind::kInvalidArgument, "duplicate id: " + a.id);
    }
  }
  return corpus;
}

std::vector<TokenStream> tokenize(const Corpus& corpus) {
  std::vector<TokenStream> streams;
  streams.reserve(corpus.sources.size() + corpus.targets.size());
  for (const auto* list : {&corpus.sources, &corpus.targets}) {
    for (const auto& a : *list) streams.push_back({a.id, preprocess_text(a.raw_text)});
  }
  return streams;
}

TermWeightMatrix build_term_weights(const std::vector<TokenStream>& streams, WeightScheme scheme) {
  const bool any_tokens = std::any_of(streams.begin(), streams.end(),
                                      [](const TokenStream& s) { return !s.tokens.empty(); });
  if (!any_tokens) fail(ErrorKind::kInvalidArgument, "all token streams are empty");

  TermWeightMatrix m;
  m.scheme = scheme;
  std::map<std::string, Eigen::Index> sorted_terms;
  for (const auto& s : streams) {
    for (const auto& t : s.tokens) sorted_terms.emplace(t, 0);
  }
  m.terms.reserve(sorted_terms.size());
  for (auto& [term, index] : sorted_terms) {
    index = static_cast<Eigen::Index>(m.terms.size());
    m.terms.push_back(term);
    m.vocabulary.emplace(term, index);
  }

  const auto n_docs = static_cast<Eigen::Index>(streams.size());
  const auto n_terms = static_cast<Eigen::Index>(m.terms.size());
  Eigen::MatrixXd counts = Eigen::MatrixXd::Zero(n_docs, n_terms);
  for (Eigen::Index d = 0; d < n_docs; ++d) {
    const auto& s = streams[static_cast<std::size_t>(d)];
    if (!m.rows.emplace(s.artifact_id, d).second) {
      fail(ErrorKind::kInvalidArgument, "duplicate token stream for " + s.artifact_id);
    }
    m.doc_ids.push_back(s.artifact_id);
    for (const auto& t : s.tokens) counts(d, m.vocabulary.at(t)) += 1.0;
  }

  if (scheme == WeightScheme::kTermProbability) {
    // Empty documents stay all-zero; engines treat them as matching nothing.
    for (Eigen::Index d = 0; d < n_docs; ++d) {
      const double total = counts.row(d).sum();
      if (total > 0) counts.row(d) /= total;
    }
    m.weights = std::move(counts);
    return m;
  }

  Eigen::VectorXd idf(n_terms);
  for (Eigen::Index t = 0; t < n_terms; ++t) {
    const double df = static_cast<double>((counts.col(t).array() > 0).count());
    idf(t) = std::log(static_cast<double>(n_docs) / df);
  }
  m.weights = counts * idf.asDiagonal();
  return m;
}

}  // namespace tracebayes
