#include <filesystem>
#include <thread>

#include "shadowbl/pipeline.hpp"
#include "shadowbl/service.hpp"
#include "support.hpp"

// after Eigen: <resolv.h> defines _res
#include <httplib.h>
#include <json.hpp>

using namespace shadowbl;
using namespace shadowbl::testing;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

class ServiceTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("shadowbl_store_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    store_ = std::make_unique<ScenarioStore>(dir_.string());
    api_ = std::make_unique<ServiceApi>(*store_);
  }
  void TearDown() override {
    api_.reset();
    store_.reset();
    fs::remove_all(dir_);
  }

  HttpResponse call(const std::string& method, const std::string& path, const std::string& body = "",
                    std::map<std::string, std::string> headers = {}) {
    return api_->handle({method, path, std::move(headers), body});
  }

  std::string create_example() {
    const HttpResponse r = call("POST", "/scenarios", serialize_scenario(example()));
    EXPECT_EQ(r.status, 201) << r.body;
    return json::parse(r.body)["id"].get<std::string>();
  }

  json compute(const std::string& id, const json& params, int expect = 200) {
    const HttpResponse r = call("POST", "/scenarios/" + id + "/compute", params.dump());
    EXPECT_EQ(r.status, expect) << r.body;
    return json::parse(r.body);
  }

  fs::path dir_;
  std::unique_ptr<ScenarioStore> store_;
  std::unique_ptr<ServiceApi> api_;
};

Vector to_vec(const json& a) {
  Vector v(static_cast<Eigen::Index>(a.size()));
  for (std::size_t i = 0; i < a.size(); ++i) v(static_cast<Eigen::Index>(i)) = a[i].get<double>();
  return v;
}

}  // namespace

TEST_F(ServiceTest, Health) {
  EXPECT_EQ(call("GET", "/healthz").status, 200);
  EXPECT_EQ(call("POST", "/healthz").status, 405);
  EXPECT_EQ(call("GET", "/nowhere").status, 404);
}

TEST_F(ServiceTest, CreateReadRoundTrip) {
  const HttpResponse r = call("POST", "/scenarios", serialize_scenario(example()));
  ASSERT_EQ(r.status, 201);
  const json meta = json::parse(r.body);
  const std::string id = meta["id"];
  EXPECT_EQ(r.headers.at("location"), "/scenarios/" + id);
  EXPECT_EQ(r.headers.at(kRevisionHeader), "1");
  const HttpResponse g = call("GET", "/scenarios/" + id);
  ASSERT_EQ(g.status, 200);
  const json body = json::parse(g.body);
  EXPECT_TRUE(parse_scenario(body["scenario"].dump()) == example());
  EXPECT_EQ(body["revision"], 1);
  EXPECT_EQ(call("GET", "/scenarios/sc_0000000000000000").status, 404);
  EXPECT_EQ(call("PATCH", "/scenarios/" + id).status, 405);
}

TEST_F(ServiceTest, RejectsBadScenarios) {
  HttpResponse r = call("POST", "/scenarios", "{");
  EXPECT_EQ(r.status, 422);
  EXPECT_EQ(json::parse(r.body)["error"]["code"], "parse_error");

  json j = json::parse(serialize_scenario(example()));
  j["market"]["covariance"][0][1] = 0.5;
  r = call("POST", "/scenarios", j.dump());
  EXPECT_EQ(r.status, 422);
  const json e = json::parse(r.body)["error"];
  EXPECT_EQ(e["code"], "validation_failed");
  EXPECT_EQ(e["issues"][0]["path"], "market.covariance");

  j = json::parse(serialize_scenario(example()));
  j["shadow_costs"]["mean"].erase(0);
  r = call("POST", "/scenarios", j.dump());
  EXPECT_EQ(json::parse(r.body)["error"]["code"], "dimension_error");
}

TEST_F(ServiceTest, OptimisticConcurrency) {
  const std::string id = create_example();
  const std::string path = "/scenarios/" + id;
  ScenarioFile f = example();
  f.shadow_costs.tau = 0.3;
  const std::string body = serialize_scenario(f);
  EXPECT_EQ(call("PUT", path, body).status, 428);
  EXPECT_EQ(call("PUT", path, body, {{kRevisionHeader, "x1"}}).status, 400);
  HttpResponse r = call("PUT", path, body, {{kRevisionHeader, "1"}});
  ASSERT_EQ(r.status, 200);
  EXPECT_EQ(r.headers.at(kRevisionHeader), "2");
  r = call("PUT", path, body, {{kRevisionHeader, "1"}});
  EXPECT_EQ(r.status, 409);
  EXPECT_EQ(json::parse(r.body)["error"]["current_revision"], 2);
  EXPECT_EQ(call("PUT", "/scenarios/sc_nope", body, {{kRevisionHeader, "1"}}).status, 404);

  // earlier revisions stay readable
  EXPECT_EQ(store_->get(id, 1)->scenario->shadow_costs.tau, 0.5);
  EXPECT_EQ(store_->get(id)->scenario->shadow_costs.tau, 0.3);

  EXPECT_EQ(call("DELETE", path, "", {{kRevisionHeader, "1"}}).status, 409);
  EXPECT_EQ(call("DELETE", path, "", {{kRevisionHeader, "2"}}).status, 204);
  EXPECT_EQ(call("GET", path).status, 404);
  EXPECT_EQ(call("DELETE", path).status, 404);
}

TEST_F(ServiceTest, ConcurrentWritersSeeExactlyOneWinner) {
  const std::string id = create_example();
  const std::string body = serialize_scenario(example());
  std::atomic<int> ok{0}, conflict{0};
  std::vector<std::thread> threads;
  for (int t = 0; t < 8; ++t) {
    threads.emplace_back([&] {
      const HttpResponse r = call("PUT", "/scenarios/" + id, body, {{kRevisionHeader, "1"}});
      if (r.status == 200) ++ok;
      if (r.status == 409) ++conflict;
    });
  }
  for (auto& t : threads) t.join();
  EXPECT_EQ(ok.load(), 1);
  EXPECT_EQ(conflict.load(), 7);
  EXPECT_EQ(store_->get(id)->revision, 2);
}

TEST_F(ServiceTest, StoreSurvivesRestart) {
  const std::string id = create_example();
  ScenarioFile f = example();
  f.shadow_costs.tau = 0.7;
  store_->update(id, 1, f);
  ScenarioStore reopened(dir_.string());
  ASSERT_TRUE(reopened.get(id).has_value());
  EXPECT_EQ(reopened.get(id)->revision, 2);
  EXPECT_TRUE(*reopened.get(id)->scenario == f);
  EXPECT_TRUE(*reopened.get(id, 1)->scenario == example());
  EXPECT_THROW(reopened.update("sc_missing", std::nullopt, f), NotFound);
  EXPECT_THROW(reopened.update(id, 1, f), RevisionConflict);
}

TEST_F(ServiceTest, ComputeMatchesPipeline) {
  const std::string id = create_example();
  const json out = compute(id, json::object());
  const ReportBundle b = run_pipeline(example());
  const PosteriorRow& g1 = b.table7->rows[2];
  EXPECT_TRUE(near(to_vec(out["posterior"]["mean"]), g1.posterior.mean, 1e-15));
  EXPECT_TRUE(near(to_vec(out["allocation"]["weights"]), g1.allocation.weights, 1e-13));
  EXPECT_TRUE(near(to_vec(out["prior"]["pi"]), b.table4.pi, 1e-16));
  EXPECT_EQ(out["revision"], 1);
  EXPECT_EQ(out["params"]["gamma"], 1);
  EXPECT_EQ(out["params"]["tau"], 0.5);
  EXPECT_EQ(out["feasible"], true);
  // baseline has no views: prior mean
  EXPECT_TRUE(near(Vector(to_vec(out["posterior"]["mean"]) - to_vec(out["deltas"]["mean"])),
                   b.table4.pi, 1e-15));

  const json g0 = compute(id, {{"gamma", 0}});
  EXPECT_TRUE(near(to_vec(g0["posterior"]["mean"]), b.table7->rows[1].posterior.mean, 1e-15));
}

TEST_F(ServiceTest, ComputeOverridesAndCaching) {
  const std::string id = create_example();
  const json a = compute(id, {{"c", 0.99}});
  const json b = compute(id, {{"c", 0.01}});
  EXPECT_LT(a["posterior"]["view_gap"].get<double>(), b["posterior"]["view_gap"].get<double>());
  EXPECT_NE(a["params_hash"], b["params_hash"]);
  EXPECT_EQ(api_->cache_size(), 2u);
  EXPECT_EQ(compute(id, {{"c", 0.99}})["params_hash"], a["params_hash"]);
  EXPECT_EQ(api_->cache_size(), 2u);

  const json single = compute(id, {{"P_overrides", {{0, 0, 0, 0, 1}}}, {"q_overrides", {0.2}}});
  EXPECT_EQ(single["posterior"]["views"], 1);
  const json none = compute(id, {{"P_overrides", json::array()}, {"q_overrides", json::array()}});
  EXPECT_EQ(none["posterior"]["views"], 0);
  EXPECT_TRUE(near(to_vec(none["posterior"]["mean"]), to_vec(none["prior"]["pi"]), 0.0));

  const json budget = compute(id, {{"objective", "risk_budget"}, {"sigma_cap", 0.3}, {"info_set", {0, 1, 2, 4}}});
  const Vector w = to_vec(budget["allocation"]["weights"]);
  EXPECT_NEAR(w.sum(), 1.0, 1e-12);
  EXPECT_EQ(w(3), 0.0);
  EXPECT_NEAR(budget["allocation"]["metrics"]["risk"].get<double>(), 0.3, 1e-12);
  EXPECT_TRUE(budget["allocation"].contains("two_fund"));
}

TEST_F(ServiceTest, ComputeErrors) {
  const std::string id = create_example();
  const std::string path = "/scenarios/" + id + "/compute";
  const auto field = [&](const json& p) {
    const HttpResponse r = call("POST", path, p.dump());
    EXPECT_EQ(r.status, 422) << r.body;
    return json::parse(r.body)["error"];
  };
  EXPECT_EQ(field({{"gamma", 2}})["field"], "gamma");
  EXPECT_EQ(field({{"c", 1.0}})["field"], "c");
  EXPECT_EQ(field({{"tau", -1}})["field"], "tau");
  EXPECT_EQ(field({{"objective", "risk_budget"}})["field"], "sigma_cap");
  EXPECT_EQ(field({{"info_set", {7}}})["field"], "info_set");
  EXPECT_EQ(field({{"bogus", 1}})["field"], "bogus");
  EXPECT_EQ(field({{"q_overrides", {0.1}}})["field"], "q_overrides");
  EXPECT_EQ(field({{"P_overrides", {{0.5, 0, 0, 0, 0}}}, {"q_overrides", {0.1}}})["field"], "P_overrides");
  const json inf = field({{"objective", "risk_budget"}, {"sigma_cap", 1e-6}});
  EXPECT_EQ(inf["code"], "infeasible");
  EXPECT_GT(inf["min_risk"].get<double>(), 1e-6);

  EXPECT_EQ(call("POST", path, "{}", {{kRevisionHeader, "3"}}).status, 409);
  EXPECT_EQ(call("POST", "/scenarios/sc_nope/compute", "{}").status, 404);
  EXPECT_EQ(call("GET", path).status, 405);
}

TEST_F(ServiceTest, HttpRoundTrip) {
  HttpServer server(*api_);
  ASSERT_TRUE(server.bind("127.0.0.1", 0));
  ASSERT_GT(server.port(), 0);
  std::thread t([&] { server.listen(); });

  httplib::Client client("127.0.0.1", server.port());
  auto health = client.Get("/healthz");
  ASSERT_TRUE(health);
  EXPECT_EQ(health->status, 200);

  auto created = client.Post("/scenarios", serialize_scenario(example()), "application/json");
  ASSERT_TRUE(created);
  ASSERT_EQ(created->status, 201);
  EXPECT_EQ(created->get_header_value("X-Revision"), "1");
  const std::string id = json::parse(created->body)["id"];

  auto put = client.Put("/scenarios/" + id, serialize_scenario(example()), "application/json");
  ASSERT_TRUE(put);
  EXPECT_EQ(put->status, 428);
  httplib::Headers h{{"X-Revision", "1"}};
  put = client.Put("/scenarios/" + id, h, serialize_scenario(example()), "application/json");
  ASSERT_TRUE(put);
  EXPECT_EQ(put->status, 200);

  auto comp = client.Post("/scenarios/" + id + "/compute", R"({"gamma": 1, "tau": 0.5})", "application/json");
  ASSERT_TRUE(comp);
  ASSERT_EQ(comp->status, 200);
  const json body = json::parse(comp->body);
  EXPECT_TRUE(near(to_vec(body["posterior"]["mean"]), vec({0.0320, 0.0499, 0.0274, 0.0653, 0.0719}), 5e-5));

  auto missing = client.Get("/scenarios/sc_none");
  ASSERT_TRUE(missing);
  EXPECT_EQ(missing->status, 404);

  server.stop();
  t.join();
}
