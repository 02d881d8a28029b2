// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The tracebayes Authors

#include <chrono>
#include <filesystem>
#include <fstream>
#include <thread>

#include "doctest.h"
#include "synthetic.hpp"
#include "tracebayes/error.hpp"
#include "tracebayes/service.hpp"
// Last: it pulls in <resolv.h>, whose _res macro breaks Eigen headers.
#include "httplib.h"

using namespace tracebayes;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Sources R1..R3, targets A.java..C.java; probabilities chosen per pair.
struct Fixture {
  fs::path dir;
  ProjectConfig config;
  Corpus corpus;
  LoadedRun run;

  explicit Fixture(const std::string& tag, const std::vector<double>& means, int stage = 1) {
    dir = testing::scratch_dir(tag);
    config.feedback_file = dir / "feedback.jsonl";
    for (int i = 1; i <= 3; ++i) {
      corpus.sources.push_back({"R" + std::to_string(i) + ".txt", ArtifactKind::kRequirement, {}, "req " + std::to_string(i)});
    }
    for (char c : {'A', 'B', 'C'}) {
      corpus.targets.push_back({std::string(1, c) + ".java", ArtifactKind::kSourceCode, {}, "class " + std::string(1, c)});
    }
    run.manifest.run_id = "fixture";
    run.manifest.stage = stage;
    std::size_t k = 0;
    for (const auto& s : corpus.sources) {
      for (const auto& t : corpus.targets) {
        ResultRecord r;
        r.estimate.source_id = s.id;
        r.estimate.target_id = t.id;
        r.estimate.mean = means[k++];
        r.estimate.stage = stage;
        r.fit_mu = r.estimate.mean;
        r.fit_nu = 1e-4;
        r.mu_trans = r.estimate.mean;
        run.records.push_back(r);
      }
    }
    run.manifest.pair_count = run.records.size();
  }

  LinkService service() const { return LinkService(config, corpus, run); }
};

const std::vector<double> kMeans = {0.9, 0.5, 0.1,   //
                                    0.75, 0.2, 0.05,  //
                                    0.3, 0.35, 0.1};

// The served value for a pair with no observations and these records.
double expected_stage2(double base, const std::vector<double>& confidences) {
  LinkInputs in;
  in.fit.mu = base;
  in.fit.nu = 1e-4;
  std::vector<FeedbackRecord> recs;
  for (std::size_t i = 0; i < confidences.size(); ++i) recs.push_back({"s", "t", confidences[i], "", static_cast<std::int64_t>(i)});
  in.feedback = recs;
  return infer_link("s", "t", 2, in, ModelHyperParams{}).mean;
}

}  // namespace

TEST_CASE("likert options map to confidences") {
  CHECK(likert_confidence("strongly_agree") == 1.0);
  CHECK(likert_confidence("agree") == 0.75);
  CHECK(likert_confidence("unsure") == 0.5);
  CHECK(likert_confidence("disagree") == 0.25);
  CHECK(likert_confidence("strongly_disagree") == 0.0);
  CHECK(!likert_confidence("maybe"));
}

TEST_CASE("bands partition the unit interval") {
  CHECK(band_of(0.0) == ProbabilityBand::kProbablyNotLinked);
  CHECK(band_of(0.3999) == ProbabilityBand::kProbablyNotLinked);
  CHECK(band_of(0.4) == ProbabilityBand::kUnsure);
  CHECK(band_of(0.6999) == ProbabilityBand::kUnsure);
  CHECK(band_of(0.7) == ProbabilityBand::kProbablyLinked);
  CHECK(band_of(1.0) == ProbabilityBand::kProbablyLinked);
  for (auto b : {ProbabilityBand::kProbablyLinked, ProbabilityBand::kUnsure, ProbabilityBand::kProbablyNotLinked}) {
    CHECK(parse_band(to_string(b)) == b);
  }
}

TEST_CASE("list_links filters, sorts and pages") {
  Fixture f("svc_list", kMeans);
  const auto svc = f.service();
  const auto all = svc.list_links({});
  CHECK(all.total == 9);
  REQUIRE(all.rows.size() == 9);
  for (std::size_t i = 1; i < all.rows.size(); ++i) CHECK(all.rows[i - 1].probability >= all.rows[i].probability);
  // Ties break by (source, target).
  CHECK(all.rows[6].source_id == "R1.txt");
  CHECK(all.rows[7].source_id == "R3.txt");

  const auto linked = svc.list_links({std::nullopt, ProbabilityBand::kProbablyLinked, 1, 50});
  CHECK(linked.total == 2);
  for (const auto& r : linked.rows) CHECK(r.probability >= 0.7);

  const auto p2 = svc.list_links({std::nullopt, std::nullopt, 2, 4});
  CHECK(p2.total == 9);
  REQUIRE(p2.rows.size() == 4);
  CHECK(p2.rows[0].target_id == all.rows[4].target_id);
  CHECK(svc.list_links({std::nullopt, std::nullopt, 4, 4}).rows.empty());

  CHECK(svc.list_links({"req_src", std::nullopt, 1, 50}).total == 9);
  const auto other = svc.list_links({"uc_src", std::nullopt, 1, 50});
  CHECK(other.total == 0);
  CHECK(other.rows.empty());
  CHECK_THROWS_AS(svc.list_links({"bogus", std::nullopt, 1, 50}), Error);
  CHECK_THROWS_AS(svc.list_links({std::nullopt, std::nullopt, 0, 50}), Error);
  CHECK_THROWS_AS(svc.list_links({std::nullopt, std::nullopt, 1, 1001}), Error);
}

TEST_CASE("feedback recomputes the pair and survives a restart") {
  Fixture f("svc_feedback", kMeans);
  auto svc = f.service();
  const auto before = svc.link("R1.txt", "B.java");
  CHECK(before.probability == 0.5);
  CHECK(before.band == ProbabilityBand::kUnsure);

  const auto up = svc.submit_feedback("R1.txt", "B.java", "strongly_agree", "alice");
  CHECK(up.probability > 0.5);
  CHECK(up.feedback_count == 1);
  CHECK(up.probability == doctest::Approx(expected_stage2(0.5, {1.0})).epsilon(1e-12));
  CHECK(std::abs(up.probability - 0.75) <= 0.01);
  CHECK(up.band == ProbabilityBand::kProbablyLinked);

  // A second record applies to the already adjusted mean.
  const auto down1 = svc.submit_feedback("R2.txt", "A.java", "strongly_disagree", "bob");
  const auto down2 = svc.submit_feedback("R2.txt", "A.java", "strongly_disagree", "bob");
  CHECK(down2.probability < down1.probability);
  CHECK(down2.probability == doctest::Approx(expected_stage2(0.75, {0.0, 0.0})).epsilon(1e-12));

  CHECK_THROWS_AS(svc.submit_feedback("R1.txt", "Z.java", "agree", "x"), Error);
  CHECK_THROWS_AS(svc.submit_feedback("R1.txt", "A.java", "sort_of", "x"), Error);

  const auto replayed = f.service();
  CHECK(replayed.link("R1.txt", "B.java").probability == up.probability);
  CHECK(replayed.link("R2.txt", "A.java").probability == down2.probability);
  CHECK(replayed.link("R2.txt", "A.java").feedback_count == 2);
  CHECK(replayed.list_links({}).total == 9);
}

TEST_CASE("unsure feedback keeps the prior mean") {
  Fixture f("svc_unsure", kMeans);
  auto svc = f.service();
  const auto r = svc.submit_feedback("R1.txt", "B.java", "unsure", "carol");
  CHECK(adjust_mean_with_feedback(0.5, 0.5, 0.5) == doctest::Approx(0.5));
  CHECK(std::abs(r.probability - 0.5) <= 0.01);
}

TEST_CASE("transitive runs recompute at Stage 4") {
  Fixture f("svc_stage4", kMeans, 3);
  auto svc = f.service();
  CHECK(svc.feedback_stage() == 4);
  CHECK(svc.submit_feedback("R3.txt", "B.java", "agree", "d").probability > 0.35);
}

TEST_CASE("unlinked artifacts") {
  Fixture f("svc_unlinked", kMeans);
  const auto svc = f.service();
  const auto items = svc.list_unlinked(0.4);
  // R3 peaks at 0.35; C.java peaks at 0.1.
  REQUIRE(items.size() == 2);
  CHECK(items[0].id == "R3.txt");
  CHECK(items[0].role == "source");
  CHECK(items[1].id == "C.java");
  CHECK(items[1].role == "target");
  CHECK(svc.list_unlinked(0.0).empty());
}

TEST_CASE("HTTP API") {
  Fixture f("svc_http", kMeans);
  auto svc = f.service();
  const auto ui = f.dir / "ui";
  fs::create_directories(ui);
  std::ofstream(ui / "index.html") << "<html>review</html>";

  httplib::Server server;
  register_routes(server, svc, ui);
  const int port = server.bind_to_any_port("127.0.0.1");
  REQUIRE(port > 0);
  std::thread thread([&] { server.listen_after_bind(); });
  server.wait_until_ready();

  httplib::Client client("127.0.0.1", port);
  {
    auto res = client.Get("/api/links?band=probably_linked");
    REQUIRE(res);
    CHECK(res->status == 200);
    const auto body = json::parse(res->body);
    CHECK(body["total"] == 2);
    CHECK(body["rows"][0]["source_id"] == "R1.txt");
    CHECK(body["rows"][0]["band"] == "probably_linked");
  }
  {
    auto res = client.Get("/api/links?page=2&page_size=5");
    REQUIRE(res);
    CHECK(json::parse(res->body)["rows"].size() == 4);
    CHECK(client.Get("/api/links?band=maybe")->status == 400);
    CHECK(client.Get("/api/links?type=nope")->status == 400);
    CHECK(client.Get("/api/links?page=x")->status == 400);
    CHECK(json::parse(client.Get("/api/links?type=req_test")->body)["total"] == 0);
  }
  {
    const auto t0 = std::chrono::steady_clock::now();
    auto res = client.Post("/api/feedback",
                           R"({"source_id": "R1.txt", "target_id": "B.java", "likert": "strongly_agree", "reviewer": "ui"})",
                           "application/json");
    const auto ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    REQUIRE(res);
    CHECK(res->status == 200);
    const auto body = json::parse(res->body);
    CHECK(body["probability"].get<double>() > 0.5);
    CHECK(body["feedback_count"] == 1);
    CHECK(ms < 200.0);

    auto missing = client.Post("/api/feedback", R"({"source_id": "R1.txt", "target_id": "Q.java", "likert": "agree"})",
                               "application/json");
    CHECK(missing->status == 404);
    CHECK(json::parse(missing->body)["code"] == "not_found");
    CHECK(client.Post("/api/feedback", R"({"source_id": "R1.txt", "target_id": "B.java", "likert": "meh"})",
                      "application/json")
              ->status == 400);
    CHECK(client.Post("/api/feedback", "{not json", "application/json")->status == 400);
    CHECK(client.Post("/api/feedback", R"({"source_id": "R1.txt"})", "application/json")->status == 400);
  }
  {
    auto res = client.Get("/api/artifacts/unlinked?threshold=0.4");
    REQUIRE(res);
    CHECK(json::parse(res->body)["artifacts"].size() == 2);
    CHECK(client.Get("/api/artifacts/unlinked?threshold=2")->status == 400);
    auto art = client.Get("/api/artifacts/A.java");
    CHECK(art->status == 200);
    CHECK(json::parse(art->body)["text"] == "class A");
    CHECK(client.Get("/api/artifacts/Nope.java")->status == 404);
  }
  {
    auto res = client.Get("/api/run");
    REQUIRE(res);
    CHECK(res->status == 200);
    CHECK(json::parse(res->body)["run_id"] == "fixture");
    auto page = client.Get("/index.html");
    REQUIRE(page);
    CHECK(page->body == "<html>review</html>");
  }

  server.stop();
  thread.join();
}
