// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The tracebayes Authors

#include "tracebayes/store.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>

#include "tracebayes/error.hpp"

namespace tracebayes {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Walks one JSON object, tracking the dotted path for diagnostics and
// rejecting keys nobody asked for.
class Section {
 public:
  Section(const json& j, std::string path, const std::string& origin)
      : j_(j), path_(std::move(path)), origin_(origin) {
    if (!j_.is_object()) bad(path_.empty() ? "<root>" : path_, "expected an object");
  }

  [[noreturn]] void bad(const std::string& field, const std::string& msg) const {
    fail(ErrorKind::kInvalidArgument, origin_ + ": " + field + ": " + msg);
  }

  std::string field(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  const json* get(const std::string& key) {
    seen_.insert(key);
    const auto it = j_.find(key);
    return it == j_.end() || it->is_null() ? nullptr : &*it;
  }

  std::string string(const std::string& key, std::optional<std::string> fallback = std::nullopt) {
    const json* v = get(key);
    if (!v) {
      if (!fallback) bad(field(key), "required");
      return *fallback;
    }
    if (!v->is_string()) bad(field(key), "expected a string");
    return v->get<std::string>();
  }

  std::optional<std::string> optional_string(const std::string& key) {
    const json* v = get(key);
    if (!v) return std::nullopt;
    if (!v->is_string()) bad(field(key), "expected a string");
    return v->get<std::string>();
  }

  double number(const std::string& key, double fallback, double lo, double hi) {
    const json* v = get(key);
    if (!v) return fallback;
    if (!v->is_number()) bad(field(key), "expected a number");
    const double x = v->get<double>();
    if (!(x >= lo && x <= hi)) {
      std::ostringstream msg;
      msg << "value " << x << " outside [" << lo << ", " << hi << "]";
      bad(field(key), msg.str());
    }
    return x;
  }

  long long integer(const std::string& key, long long fallback, long long lo, long long hi) {
    const json* v = get(key);
    if (!v) return fallback;
    if (!v->is_number_integer()) bad(field(key), "expected an integer");
    const auto x = v->get<long long>();
    if (x < lo || x > hi) {
      bad(field(key), "value " + std::to_string(x) + " outside [" + std::to_string(lo) + ", " +
                          std::to_string(hi) + "]");
    }
    return x;
  }

  std::uint64_t seed(const std::string& key, std::uint64_t fallback) {
    const json* v = get(key);
    if (!v) return fallback;
    if (!v->is_number_unsigned() && !(v->is_number_integer() && v->get<long long>() >= 0)) {
      bad(field(key), "expected a non-negative integer");
    }
    return v->get<std::uint64_t>();
  }

  bool boolean(const std::string& key, bool fallback) {
    const json* v = get(key);
    if (!v) return fallback;
    if (!v->is_boolean()) bad(field(key), "expected true or false");
    return v->get<bool>();
  }

  std::optional<Section> child(const std::string& key) {
    const json* v = get(key);
    if (!v) return std::nullopt;
    return Section(*v, field(key), origin_);
  }

  const json& raw() const { return j_; }

  void finish() const {
    for (const auto& [key, value] : j_.items()) {
      if (!seen_.contains(key)) bad(field(key), "unknown setting");
    }
  }

 private:
  const json& j_;
  std::string path_;
  const std::string& origin_;
  std::set<std::string> seen_;
};

fs::path resolve(const fs::path& base, const std::string& p) {
  const fs::path path(p);
  return (path.is_absolute() ? path : base / path).lexically_normal();
}

Technique technique_key(const Section& s, const std::string& name) {
  const auto t = parse_technique(name);
  if (!t) s.bad(s.field(name), "unknown technique");
  return *t;
}

}  // namespace

ProjectConfig parse_project(const std::string& text, const fs::path& base_dir, const std::string& origin) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    fail(ErrorKind::kParse, origin + ": " + e.what());
  }

  ProjectConfig cfg;
  Section root(doc, "", origin);
  cfg.name = root.string("name", std::string("project"));
  cfg.source_dir = resolve(base_dir, root.string("source_dir"));
  cfg.target_dir = resolve(base_dir, root.string("target_dir"));
  const auto kind_text = root.string("pair_kind");
  const auto kind = parse_pair_kind(kind_text);
  if (!kind) root.bad("pair_kind", "expected req_src, req_test or uc_src, got '" + kind_text + "'");
  cfg.pair_kind = *kind;
  if (auto p = root.optional_string("answer_file")) cfg.answer_file = resolve(base_dir, *p);
  if (auto p = root.optional_string("coverage_file")) cfg.coverage_file = resolve(base_dir, *p);
  if (auto p = root.optional_string("test_dir")) cfg.test_dir = resolve(base_dir, *p);
  cfg.feedback_file = resolve(base_dir, root.string("feedback_file", std::string("feedback.jsonl")));

  if (auto s = root.child("techniques")) {
    auto& t = cfg.techniques;
    t.lsi_rank = static_cast<int>(s->integer("lsi_rank", t.lsi_rank, 0, 100000));
    t.lda_topics = static_cast<int>(s->integer("lda_topics", t.lda_topics, 1, 10000));
    t.nmf_rank = static_cast<int>(s->integer("nmf_rank", t.nmf_rank, 0, 100000));
    t.lambda = s->number("lambda", t.lambda, 0.0, 1.0);
    t.seed = s->seed("seed", t.seed);
    t.lda_iterations = static_cast<int>(s->integer("lda_iterations", t.lda_iterations, 10, 1000000));
    t.lda_alpha = s->number("lda_alpha", t.lda_alpha, 0.0, 1e6);
    t.lda_beta = s->number("lda_beta", t.lda_beta, 1e-12, 1e6);
    t.nmf_iterations = static_cast<int>(s->integer("nmf_iterations", t.nmf_iterations, 1, 1000000));
    s->finish();
  }

  if (auto s = root.child("thresholds")) {
    auto& t = cfg.thresholds;
    t.min_max_fraction = s->number("min_max_fraction", t.min_max_fraction, 0.0, 1.0);
    t.link_count_factor = s->number("link_count_factor", t.link_count_factor, 1e-9, 1e9);
    if (auto m = s->child("methods")) {
      for (const auto& [name, value] : m->raw().items()) {
        const Technique tech = technique_key(*m, name);
        const auto method = value.is_string() ? parse_threshold_method(value.get<std::string>()) : std::nullopt;
        if (!method) m->bad(m->field(name), "expected mean, median, min_max, sigmoid_est or link_est");
        t.method_overrides[tech] = *method;
        m->get(name);
      }
      m->finish();
    }
    if (auto v = s->child("values")) {
      for (const auto& [name, value] : v->raw().items()) {
        const Technique tech = technique_key(*v, name);
        t.value_overrides[tech] = v->number(name, 0.0, 0.0, 1.0);
      }
      v->finish();
    }
    s->finish();
  }

  if (auto s = root.child("model")) {
    auto& m = cfg.model;
    m.sigma_feedback = s->number("sigma", m.sigma_feedback, 0.0, 1.0);
    m.rho = s->number("rho", m.rho, 0.0, 1.0);
    m.prior_sd = s->number("prior_sd", m.prior_sd, 1e-9, 1.0);
    m.epsilon_clamp = s->number("epsilon", m.epsilon_clamp, 1e-12, 0.1);
    m.sigmoid_slope = s->number("sigmoid_slope", m.sigmoid_slope, 1e-9, 1e6);
    if (auto name = s->optional_string("sampler")) {
      const auto kind = parse_sampler(*name);
      if (!kind) s->bad(s->field("sampler"), "expected map or mcmc");
      m.sampler = *kind;
    }
    m.mcmc_samples = static_cast<int>(s->integer("mcmc_samples", m.mcmc_samples, 1000, 100000000));
    m.burn_in = static_cast<int>(s->integer("burn_in", m.burn_in, 0, 100000000));
    m.seed = s->seed("seed", m.seed);
    m.literal_stage3_rewards = s->boolean("literal_stage3_rewards", m.literal_stage3_rewards);
    s->finish();
  }

  if (auto s = root.child("transitive")) {
    auto& t = cfg.transitive;
    t.tau = s->number("tau", t.tau, 0.0, 1.0);
    t.pi = static_cast<int>(s->integer("pi", t.pi, 0, 100000));
    t.use_execution = s->boolean("use_execution", t.use_execution);
    s->finish();
  }
  root.finish();

  auto must_exist = [&](const fs::path& p, const char* field, bool dir) {
    std::error_code ec;
    const bool ok = dir ? fs::is_directory(p, ec) : fs::is_regular_file(p, ec);
    if (!ok) fail(ErrorKind::kNotFound, origin + ": " + field + ": " + p.string() + " does not exist");
  };
  must_exist(cfg.source_dir, "source_dir", true);
  must_exist(cfg.target_dir, "target_dir", true);
  if (cfg.answer_file) must_exist(*cfg.answer_file, "answer_file", false);
  if (cfg.coverage_file) must_exist(*cfg.coverage_file, "coverage_file", false);
  if (cfg.test_dir) must_exist(*cfg.test_dir, "test_dir", true);
  if (cfg.transitive.use_execution && !cfg.coverage_file) {
    fail(ErrorKind::kInvalidArgument, origin + ": transitive.use_execution: needs coverage_file");
  }
  return cfg;
}

ProjectConfig load_project(const fs::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::kIo, "cannot read project file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_project(buf.str(), fs::absolute(path).parent_path(), path.string());
}

json project_to_json(const ProjectConfig& c) {
  json j;
  j["name"] = c.name;
  j["source_dir"] = c.source_dir.generic_string();
  j["target_dir"] = c.target_dir.generic_string();
  j["pair_kind"] = std::string(to_string(c.pair_kind));
  if (c.answer_file) j["answer_file"] = c.answer_file->generic_string();
  if (c.coverage_file) j["coverage_file"] = c.coverage_file->generic_string();
  if (c.test_dir) j["test_dir"] = c.test_dir->generic_string();
  j["feedback_file"] = c.feedback_file.generic_string();
  const auto& t = c.techniques;
  j["techniques"] = {{"lsi_rank", t.lsi_rank},       {"lda_topics", t.lda_topics},
                     {"nmf_rank", t.nmf_rank},       {"lambda", t.lambda},
                     {"seed", t.seed},               {"lda_iterations", t.lda_iterations},
                     {"lda_alpha", t.lda_alpha},     {"lda_beta", t.lda_beta},
                     {"nmf_iterations", t.nmf_iterations}};
  json methods = json::object();
  for (const auto& [tech, m] : c.thresholds.method_overrides) methods[std::string(to_string(tech))] = to_string(m);
  json values = json::object();
  for (const auto& [tech, v] : c.thresholds.value_overrides) values[std::string(to_string(tech))] = v;
  j["thresholds"] = {{"min_max_fraction", c.thresholds.min_max_fraction},
                     {"link_count_factor", c.thresholds.link_count_factor},
                     {"methods", methods},
                     {"values", values}};
  const auto& m = c.model;
  j["model"] = {{"sigma", m.sigma_feedback},
                {"rho", m.rho},
                {"prior_sd", m.prior_sd},
                {"epsilon", m.epsilon_clamp},
                {"sigmoid_slope", m.sigmoid_slope},
                {"sampler", std::string(to_string(m.sampler))},
                {"mcmc_samples", m.mcmc_samples},
                {"burn_in", m.burn_in},
                {"seed", m.seed},
                {"literal_stage3_rewards", m.literal_stage3_rewards}};
  j["transitive"] = {{"tau", c.transitive.tau}, {"pi", c.transitive.pi}, {"use_execution", c.transitive.use_execution}};
  return j;
}

// ---------------------------------------------------------------------------

json feedback_to_json(const FeedbackRecord& r) {
  return {{"source_id", r.source_id},
          {"target_id", r.target_id},
          {"confidence", r.confidence},
          {"reviewer", r.reviewer},
          {"timestamp", r.timestamp}};
}

FeedbackRecord feedback_from_json(const json& j) {
  if (!j.is_object()) fail(ErrorKind::kParse, "feedback record must be an object");
  FeedbackRecord r;
  try {
    r.source_id = j.at("source_id").get<std::string>();
    r.target_id = j.at("target_id").get<std::string>();
    r.confidence = j.at("confidence").get<double>();
    r.reviewer = j.value("reviewer", std::string());
    r.timestamp = j.at("timestamp").get<std::int64_t>();
  } catch (const json::exception& e) {
    fail(ErrorKind::kParse, std::string("feedback record: ") + e.what());
  }
  if (!(r.confidence >= 0.0 && r.confidence <= 1.0)) {
    fail(ErrorKind::kParse, "feedback record: confidence outside [0,1]");
  }
  return r;
}

namespace {

void check_pair(const FeedbackRecord& r, const Corpus& corpus) {
  const auto has = [](const std::vector<Artifact>& set, const std::string& id) {
    return std::any_of(set.begin(), set.end(), [&](const Artifact& a) { return a.id == id; });
  };
  if (!has(corpus.sources, r.source_id) || !has(corpus.targets, r.target_id)) {
    fail(ErrorKind::kNotFound, "unknown pair " + r.source_id + " -> " + r.target_id);
  }
}

}  // namespace

FeedbackLog::FeedbackLog(fs::path path) : path_(std::move(path)) {}

void FeedbackLog::append(const FeedbackRecord& record, const Corpus* corpus) {
  if (corpus) check_pair(record, *corpus);
  if (!(record.confidence >= 0.0 && record.confidence <= 1.0)) {
    fail(ErrorKind::kInvalidArgument, "feedback confidence outside [0,1]");
  }
  const std::string line = feedback_to_json(record).dump() + "\n";
  std::lock_guard lock(mutex_);
  if (path_.has_parent_path()) fs::create_directories(path_.parent_path());
  std::ofstream out(path_, std::ios::app | std::ios::binary);
  out << line;
  out.flush();
  if (!out) fail(ErrorKind::kIo, "cannot append to " + path_.string());
}

std::vector<FeedbackRecord> FeedbackLog::load(const Corpus* corpus) const {
  std::lock_guard lock(mutex_);
  std::vector<FeedbackRecord> out;
  std::ifstream in(path_, std::ios::binary);
  if (!in) {
    if (fs::exists(path_)) fail(ErrorKind::kIo, "cannot read " + path_.string());
    return out;
  }
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = path_.string() + ":" + std::to_string(line_no);
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      fail(ErrorKind::kParse, where + ": " + e.what());
    }
    try {
      out.push_back(feedback_from_json(j));
      if (corpus) check_pair(out.back(), *corpus);
    } catch (const Error& e) {
      fail(e.kind(), where + ": " + e.what());
    }
  }
  return out;
}

void FeedbackLog::write_all(const std::vector<FeedbackRecord>& records) {
  std::lock_guard lock(mutex_);
  if (path_.has_parent_path()) fs::create_directories(path_.parent_path());
  write_file_atomically(path_, [&](std::ostream& out) {
    for (const auto& r : records) out << feedback_to_json(r).dump() << '\n';
  });
}

// ---------------------------------------------------------------------------

json manifest_to_json(const RunManifest& m) {
  json thresholds = json::object();
  for (const auto& [t, k] : m.thresholds) thresholds[std::string(to_string(t))] = k;
  json medians = json::object();
  for (std::size_t i = 0; i < m.medians.size() && i < kTechniqueCount; ++i) {
    medians[std::string(to_string(kAllTechniques[i]))] = m.medians[i];
  }
  const auto& r = m.resolved_techniques;
  return {{"run_id", m.run_id},
          {"created_at", m.created_at},
          {"stage", m.stage},
          {"pair_count", m.pair_count},
          {"feedback_records", m.feedback_records},
          {"thresholds", thresholds},
          {"medians", medians},
          {"resolved_techniques",
           {{"lsi_rank", r.lsi_rank},
            {"lda_topics", r.lda_topics},
            {"nmf_rank", r.nmf_rank},
            {"seed", r.seed}}},
          {"config", m.config}};
}

RunManifest manifest_from_json(const json& j) {
  RunManifest m;
  try {
    m.run_id = j.at("run_id").get<std::string>();
    m.created_at = j.at("created_at").get<std::string>();
    m.stage = j.at("stage").get<int>();
    m.pair_count = j.at("pair_count").get<std::size_t>();
    m.feedback_records = j.value("feedback_records", std::size_t{0});
    for (const auto& [name, k] : j.at("thresholds").items()) {
      const auto t = parse_technique(name);
      if (!t) fail(ErrorKind::kParse, "manifest: unknown technique " + name);
      m.thresholds[*t] = k.get<double>();
    }
    const auto& med = j.at("medians");
    for (Technique t : kAllTechniques) {
      const auto it = med.find(std::string(to_string(t)));
      if (it != med.end()) m.medians.push_back(it->get<double>());
    }
    const auto& r = j.at("resolved_techniques");
    m.resolved_techniques.lsi_rank = r.at("lsi_rank").get<int>();
    m.resolved_techniques.lda_topics = r.at("lda_topics").get<int>();
    m.resolved_techniques.nmf_rank = r.at("nmf_rank").get<int>();
    m.resolved_techniques.seed = r.at("seed").get<std::uint64_t>();
    m.config = j.at("config");
  } catch (const json::exception& e) {
    fail(ErrorKind::kParse, std::string("manifest: ") + e.what());
  }
  return m;
}

std::string result_to_line(const ResultRecord& r) {
  json obs = json::array();
  for (auto b : r.observations) obs.push_back(static_cast<int>(b));
  const auto& e = r.estimate;
  // Field order is fixed by ordered_json so lines are byte-stable.
  nlohmann::ordered_json j;
  j["source_id"] = e.source_id;
  j["target_id"] = e.target_id;
  j["stage"] = e.stage;
  j["mean"] = e.mean;
  j["variance"] = e.variance;
  j["method"] = std::string(to_string(e.method));
  j["observations"] = obs;
  j["thresholds"] = r.thresholds;
  j["fit_mu"] = r.fit_mu;
  j["fit_nu"] = r.fit_nu;
  j["mu_trans"] = r.mu_trans;
  return j.dump();
}

ResultRecord result_from_json(const json& j) {
  ResultRecord r;
  try {
    auto& e = r.estimate;
    e.source_id = j.at("source_id").get<std::string>();
    e.target_id = j.at("target_id").get<std::string>();
    e.stage = j.at("stage").get<int>();
    e.mean = j.at("mean").get<double>();
    e.variance = j.at("variance").get<double>();
    const auto method = parse_sampler(j.at("method").get<std::string>());
    if (!method) fail(ErrorKind::kParse, "result: unknown method");
    e.method = *method;
    for (const auto& b : j.at("observations")) r.observations.push_back(static_cast<std::uint8_t>(b.get<int>()));
    r.thresholds = j.at("thresholds").get<std::vector<double>>();
    r.fit_mu = j.at("fit_mu").get<double>();
    r.fit_nu = j.at("fit_nu").get<double>();
    r.mu_trans = j.at("mu_trans").get<double>();
  } catch (const json::exception& e) {
    fail(ErrorKind::kParse, std::string("result: ") + e.what());
  }
  return r;
}

void write_file_atomically(const fs::path& path, const std::function<void(std::ostream&)>& writer) {
  fs::path tmp = path;
  tmp += ".tmp";
  try {
    {
      std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
      if (!out) fail(ErrorKind::kIo, "cannot write " + tmp.string());
      writer(out);
      out.flush();
      if (!out) fail(ErrorKind::kIo, "write failed for " + tmp.string());
    }
    fs::rename(tmp, path);
  } catch (...) {
    std::error_code ec;
    fs::remove(tmp, ec);
    throw;
  }
}

fs::path persist_results(const fs::path& runs_root, const RunManifest& manifest,
                         const std::vector<ResultRecord>& records) {
  if (manifest.run_id.empty() || manifest.run_id.find('/') != std::string::npos) {
    fail(ErrorKind::kInvalidArgument, "invalid run id '" + manifest.run_id + "'");
  }
  const fs::path dir = runs_root / manifest.run_id;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) fail(ErrorKind::kIo, "cannot create " + dir.string() + ": " + ec.message());
  write_file_atomically(dir / "results.jsonl", [&](std::ostream& out) {
    for (const auto& r : records) out << result_to_line(r) << '\n';
  });
  write_file_atomically(dir / "manifest.json",
                        [&](std::ostream& out) { out << manifest_to_json(manifest).dump(2) << '\n'; });
  return dir;
}

LoadedRun load_results(const fs::path& run_dir) {
  LoadedRun run;
  {
    std::ifstream in(run_dir / "manifest.json");
    if (!in) fail(ErrorKind::kNotFound, "no manifest in " + run_dir.string());
    json j;
    try {
      j = json::parse(in);
    } catch (const json::parse_error& e) {
      fail(ErrorKind::kParse, (run_dir / "manifest.json").string() + ": " + e.what());
    }
    run.manifest = manifest_from_json(j);
  }
  std::ifstream in(run_dir / "results.jsonl");
  if (!in) fail(ErrorKind::kNotFound, "no results in " + run_dir.string());
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      run.records.push_back(result_from_json(json::parse(line)));
    } catch (const json::parse_error& e) {
      fail(ErrorKind::kParse, (run_dir / "results.jsonl").string() + ":" + std::to_string(line_no) + ": " + e.what());
    } catch (const Error& e) {
      fail(e.kind(), (run_dir / "results.jsonl").string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return run;
}

std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::int64_t now_micros() {
  return std::chrono::duration_cast<std::chrono::microseconds>(
             std::chrono::system_clock::now().time_since_epoch())
      .count();
}

}  // namespace tracebayes
