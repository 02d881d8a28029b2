// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The tracebayes Authors

#include "tracebayes/service.hpp"

#include <algorithm>
#include <mutex>
#include <numeric>

#include "tracebayes/error.hpp"
#include "tracebayes/hbn.hpp"
// Last: it pulls in <resolv.h>, whose _res macro breaks Eigen headers.
#include "httplib.h"

namespace tracebayes {

using nlohmann::json;

std::optional<double> likert_confidence(std::string_view option) {
  if (option == "strongly_agree") return 1.0;
  if (option == "agree") return 0.75;
  if (option == "unsure") return 0.5;
  if (option == "disagree") return 0.25;
  if (option == "strongly_disagree") return 0.0;
  return std::nullopt;
}

LinkService::LinkService(ProjectConfig config, Corpus corpus, LoadedRun run)
    : config_(std::move(config)), corpus_(std::move(corpus)), run_(std::move(run)), log_(config_.feedback_file) {
  const auto& records = run_.records;
  probability_.resize(records.size());
  feedback_.resize(records.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& e = records[i].estimate;
    if (!corpus_.find(e.source_id) || !corpus_.find(e.target_id)) {
      fail(ErrorKind::kNotFound, "run refers to unknown pair " + e.source_id + " -> " + e.target_id);
    }
    index_[{e.source_id, e.target_id}] = i;
    probability_[i] = e.mean;
  }
  for (auto& r : log_.load(&corpus_)) {
    last_timestamp_ = std::max(last_timestamp_, r.timestamp);
    const auto it = index_.find({r.source_id, r.target_id});
    if (it == index_.end()) continue;
    feedback_[it->second].push_back(std::move(r));
    ++feedback_total_;
  }
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (!feedback_[i].empty()) probability_[i] = recompute(i);
  }
}

std::unique_ptr<LinkService> LinkService::open(const ProjectConfig& config, const std::filesystem::path& run_dir) {
  return std::make_unique<LinkService>(config, load_corpus(config), load_results(run_dir));
}

double LinkService::recompute(std::size_t index) const {
  const auto& rec = run_.records[index];
  LinkInputs inputs;
  inputs.fit.mu = rec.fit_mu;
  inputs.fit.nu = rec.fit_nu;
  inputs.observations.bits = rec.observations;
  inputs.observations.thresholds = rec.thresholds;
  inputs.observations.techniques.assign(std::begin(kAllTechniques), std::end(kAllTechniques));
  inputs.feedback = feedback_[index];
  const int stage = feedback_stage();
  if (stage == 4) {
    TransitiveSummary t;
    t.mu_trans = rec.mu_trans;
    t.rho = config_.model.rho;
    inputs.transitive = t;
  }
  ModelHyperParams params = config_.model;
  params.sampler = SamplerKind::kMap;
  return infer_link(rec.estimate.source_id, rec.estimate.target_id, stage, inputs, params).mean;
}

std::size_t LinkService::index_of(const std::string& source_id, const std::string& target_id) const {
  const auto it = index_.find({source_id, target_id});
  if (it == index_.end()) fail(ErrorKind::kNotFound, "unknown pair " + source_id + " -> " + target_id);
  return it->second;
}

LinkRow LinkService::row(std::size_t i) const {
  const auto& e = run_.records[i].estimate;
  return {e.source_id, e.target_id, probability_[i], band_of(probability_[i]), feedback_[i].size()};
}

LinkRow LinkService::link(const std::string& source_id, const std::string& target_id) const {
  std::shared_lock lock(mutex_);
  return row(index_of(source_id, target_id));
}

LinkPage LinkService::list_links(const LinkQuery& query) const {
  if (query.page < 1) fail(ErrorKind::kInvalidArgument, "page must be at least 1");
  if (query.page_size < 1 || query.page_size > 1000) {
    fail(ErrorKind::kInvalidArgument, "page_size must be in [1, 1000]");
  }
  bool type_matches = true;
  if (query.type) {
    const auto& t = *query.type;
    if (t != "req_src" && t != "req_test" && t != "uc_src" && t != "src_test") {
      fail(ErrorKind::kInvalidArgument, "unknown type filter '" + t + "'");
    }
    type_matches = t == to_string(corpus_.pair_kind);
  }

  std::shared_lock lock(mutex_);
  LinkPage page;
  page.page = query.page;
  page.page_size = query.page_size;
  if (!type_matches) return page;

  std::vector<std::size_t> order;
  order.reserve(probability_.size());
  for (std::size_t i = 0; i < probability_.size(); ++i) {
    if (!query.band || band_of(probability_[i]) == *query.band) order.push_back(i);
  }
  const auto& recs = run_.records;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (probability_[a] != probability_[b]) return probability_[a] > probability_[b];
    const auto& ea = recs[a].estimate;
    const auto& eb = recs[b].estimate;
    return std::tie(ea.source_id, ea.target_id) < std::tie(eb.source_id, eb.target_id);
  });
  page.total = order.size();
  const std::size_t begin = static_cast<std::size_t>(query.page - 1) * static_cast<std::size_t>(query.page_size);
  const std::size_t end = std::min(order.size(), begin + static_cast<std::size_t>(query.page_size));
  for (std::size_t k = begin; k < end; ++k) page.rows.push_back(row(order[k]));
  return page;
}

LinkRow LinkService::submit_feedback(const std::string& source_id, const std::string& target_id,
                                     std::string_view likert, const std::string& reviewer) {
  const auto c = likert_confidence(likert);
  if (!c) fail(ErrorKind::kInvalidArgument, "unknown likert option '" + std::string(likert) + "'");
  return submit_confidence(source_id, target_id, *c, reviewer);
}

LinkRow LinkService::submit_confidence(const std::string& source_id, const std::string& target_id,
                                       double confidence, const std::string& reviewer) {
  if (!(confidence >= 0.0 && confidence <= 1.0)) fail(ErrorKind::kInvalidArgument, "confidence outside [0,1]");
  std::unique_lock lock(mutex_);
  const std::size_t i = index_of(source_id, target_id);
  FeedbackRecord r{source_id, target_id, confidence, reviewer, std::max(now_micros(), last_timestamp_ + 1)};
  log_.append(r, &corpus_);
  last_timestamp_ = r.timestamp;
  feedback_[i].push_back(std::move(r));
  ++feedback_total_;
  probability_[i] = recompute(i);
  return row(i);
}

std::vector<UnlinkedArtifact> LinkService::list_unlinked(double threshold) const {
  std::shared_lock lock(mutex_);
  std::map<std::string, bool> sources;  // id -> some pairing reaches threshold
  std::map<std::string, bool> targets;
  for (std::size_t i = 0; i < probability_.size(); ++i) {
    const auto& e = run_.records[i].estimate;
    const bool linked = probability_[i] >= threshold;
    sources[e.source_id] |= linked;
    targets[e.target_id] |= linked;
  }
  std::vector<UnlinkedArtifact> out;
  for (const auto& [id, linked] : sources) {
    if (!linked) out.push_back({id, "source"});
  }
  for (const auto& [id, linked] : targets) {
    if (!linked) out.push_back({id, "target"});
  }
  return out;
}

const Artifact& LinkService::artifact(const std::string& id) const {
  const Artifact* a = corpus_.find(id);
  if (!a) fail(ErrorKind::kNotFound, "unknown artifact " + id);
  return *a;
}

json LinkService::run_summary() const {
  std::shared_lock lock(mutex_);
  const auto& m = run_.manifest;
  json thresholds = json::object();
  for (const auto& [t, k] : m.thresholds) thresholds[std::string(to_string(t))] = k;
  std::array<std::size_t, 3> bands{};
  for (double p : probability_) ++bands[static_cast<std::size_t>(band_of(p))];
  return {{"run_id", m.run_id},
          {"created_at", m.created_at},
          {"project", config_.name},
          {"pair_kind", std::string(to_string(corpus_.pair_kind))},
          {"stage", m.stage},
          {"feedback_stage", feedback_stage()},
          {"pair_count", probability_.size()},
          {"sources", corpus_.sources.size()},
          {"targets", corpus_.targets.size()},
          {"feedback_records", feedback_total_},
          {"thresholds", thresholds},
          {"bands",
           {{"probably_linked", bands[0]}, {"unsure", bands[1]}, {"probably_not_linked", bands[2]}}}};
}

// ---------------------------------------------------------------------------
// HTTP
// ---------------------------------------------------------------------------

namespace {

json row_json(const LinkRow& r) {
  return {{"source_id", r.source_id},
          {"target_id", r.target_id},
          {"probability", r.probability},
          {"band", std::string(to_string(r.band))},
          {"feedback_count", r.feedback_count}};
}

void send_json(httplib::Response& res, const json& body, int status = 200) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, int status, const std::string& code, const std::string& message) {
  send_json(res, {{"code", code}, {"message", message}}, status);
}

int parse_int(const httplib::Request& req, const char* key, int fallback) {
  if (!req.has_param(key)) return fallback;
  const std::string v = req.get_param_value(key);
  std::size_t used = 0;
  int x = 0;
  try {
    x = std::stoi(v, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != v.size()) fail(ErrorKind::kInvalidArgument, std::string(key) + " must be an integer");
  return x;
}

double parse_double(const httplib::Request& req, const char* key, double fallback) {
  if (!req.has_param(key)) return fallback;
  const std::string v = req.get_param_value(key);
  std::size_t used = 0;
  double x = 0.0;
  try {
    x = std::stod(v, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != v.size()) fail(ErrorKind::kInvalidArgument, std::string(key) + " must be a number");
  return x;
}

template <typename F>
httplib::Server::Handler guarded(F f) {
  return [f](const httplib::Request& req, httplib::Response& res) {
    try {
      f(req, res);
    } catch (const Error& e) {
      switch (e.kind()) {
        case ErrorKind::kNotFound: send_error(res, 404, "not_found", e.what()); break;
        case ErrorKind::kInvalidArgument:
        case ErrorKind::kParse: send_error(res, 400, "invalid_request", e.what()); break;
        default: send_error(res, 500, "internal", e.what()); break;
      }
    } catch (const std::exception& e) {
      send_error(res, 500, "internal", e.what());
    }
  };
}

}  // namespace

void register_routes(httplib::Server& server, LinkService& service,
                     const std::optional<std::filesystem::path>& static_dir) {
  server.Get("/api/links", guarded([&service](const httplib::Request& req, httplib::Response& res) {
               LinkQuery q;
               if (req.has_param("type") && !req.get_param_value("type").empty()) q.type = req.get_param_value("type");
               if (req.has_param("band") && !req.get_param_value("band").empty()) {
                 const auto band = parse_band(req.get_param_value("band"));
                 if (!band) fail(ErrorKind::kInvalidArgument, "unknown band '" + req.get_param_value("band") + "'");
                 q.band = band;
               }
               q.page = parse_int(req, "page", 1);
               q.page_size = parse_int(req, "page_size", 50);
               const auto page = service.list_links(q);
               json rows = json::array();
               for (const auto& r : page.rows) rows.push_back(row_json(r));
               send_json(res, {{"rows", rows}, {"total", page.total}, {"page", page.page}, {"page_size", page.page_size}});
             }));

  server.Post("/api/feedback", guarded([&service](const httplib::Request& req, httplib::Response& res) {
                json body;
                try {
                  body = json::parse(req.body);
                } catch (const json::parse_error& e) {
                  fail(ErrorKind::kInvalidArgument, std::string("malformed JSON body: ") + e.what());
                }
                if (!body.is_object()) fail(ErrorKind::kInvalidArgument, "body must be a JSON object");
                auto field = [&](const char* key, bool required) -> std::string {
                  const auto it = body.find(key);
                  if (it == body.end() || it->is_null()) {
                    if (required) fail(ErrorKind::kInvalidArgument, std::string("missing field ") + key);
                    return {};
                  }
                  if (!it->is_string()) fail(ErrorKind::kInvalidArgument, std::string(key) + " must be a string");
                  return it->get<std::string>();
                };
                const auto source = field("source_id", true);
                const auto target = field("target_id", true);
                const auto likert = field("likert", true);
                const auto reviewer = field("reviewer", false);
                send_json(res, row_json(service.submit_feedback(source, target, likert, reviewer)));
              }));

  server.Get("/api/artifacts/unlinked", guarded([&service](const httplib::Request& req, httplib::Response& res) {
               const double threshold = parse_double(req, "threshold", 0.4);
               if (!(threshold >= 0.0 && threshold <= 1.0)) fail(ErrorKind::kInvalidArgument, "threshold outside [0,1]");
               json items = json::array();
               for (const auto& a : service.list_unlinked(threshold)) items.push_back({{"id", a.id}, {"role", a.role}});
               send_json(res, {{"threshold", threshold}, {"artifacts", items}});
             }));

  server.Get(R"(/api/artifacts/(.+))", guarded([&service](const httplib::Request& req, httplib::Response& res) {
               const auto& a = service.artifact(req.matches[1].str());
               send_json(res, {{"id", a.id}, {"kind", std::string(to_string(a.kind))}, {"text", a.raw_text}});
             }));

  server.Get("/api/run", guarded([&service](const httplib::Request&, httplib::Response& res) {
               send_json(res, service.run_summary());
             }));

  if (static_dir) {
    if (!server.set_mount_point("/", static_dir->string())) {
      fail(ErrorKind::kNotFound, "static directory " + static_dir->string() + " does not exist");
    }
  }
}

}  // namespace tracebayes
