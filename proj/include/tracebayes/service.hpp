// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The tracebayes Authors

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "tracebayes/bands.hpp"
#include "tracebayes/config.hpp"
#include "tracebayes/corpus.hpp"
#include "tracebayes/evalkit.hpp"
#include "tracebayes/store.hpp"

namespace httplib {
class Server;
}

namespace tracebayes {

/// strongly_agree 1.0, agree 0.75, unsure 0.5, disagree 0.25,
/// strongly_disagree 0.0.
std::optional<double> likert_confidence(std::string_view option);

struct LinkRow {
  std::string source_id;
  std::string target_id;
  double probability = 0.0;
  ProbabilityBand band = ProbabilityBand::kProbablyNotLinked;
  std::size_t feedback_count = 0;
};

struct LinkQuery {
  std::optional<std::string> type;  // req_src, req_test, uc_src, src_test
  std::optional<ProbabilityBand> band;
  int page = 1;  // 1-based
  int page_size = 50;
};

struct LinkPage {
  std::vector<LinkRow> rows;
  std::size_t total = 0;
  int page = 1;
  int page_size = 50;
};

struct UnlinkedArtifact {
  std::string id;
  std::string role;  // "source" or "target"
};

/// Serves one completed run. A pair's probability is the run's posterior
/// mean until the feedback log holds records for it; from then on it is the
/// MAP estimate of the feedback stage (2, or 4 for transitive runs) over all
/// of that pair's records. Served values are therefore a pure function of
/// the run and the log.
class LinkService {
 public:
  LinkService(ProjectConfig config, Corpus corpus, LoadedRun run);

  static std::unique_ptr<LinkService> open(const ProjectConfig& config, const std::filesystem::path& run_dir);

  LinkPage list_links(const LinkQuery& query) const;
  /// Appends to the log, recomputes the pair, and returns its new row.
  LinkRow submit_feedback(const std::string& source_id, const std::string& target_id, std::string_view likert,
                          const std::string& reviewer);
  LinkRow submit_confidence(const std::string& source_id, const std::string& target_id, double confidence,
                            const std::string& reviewer);
  std::vector<UnlinkedArtifact> list_unlinked(double threshold = 0.4) const;
  const Artifact& artifact(const std::string& id) const;
  LinkRow link(const std::string& source_id, const std::string& target_id) const;
  nlohmann::json run_summary() const;

  const RunManifest& manifest() const { return run_.manifest; }
  int feedback_stage() const { return run_.manifest.stage >= 3 ? 4 : 2; }

 private:
  std::size_t index_of(const std::string& source_id, const std::string& target_id) const;
  double recompute(std::size_t index) const;
  LinkRow row(std::size_t index) const;

  ProjectConfig config_;
  Corpus corpus_;
  LoadedRun run_;
  FeedbackLog log_;
  std::map<LinkKey, std::size_t> index_;
  std::vector<double> probability_;
  std::vector<std::vector<FeedbackRecord>> feedback_;
  std::size_t feedback_total_ = 0;
  std::int64_t last_timestamp_ = 0;
  mutable std::shared_mutex mutex_;
};

/// Installs the JSON API on `server`; when `static_dir` is given its files
/// are served under /.
void register_routes(httplib::Server& server, LinkService& service,
                     const std::optional<std::filesystem::path>& static_dir = std::nullopt);

}  // namespace tracebayes
