#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "shadowbl/scenario_io.hpp"
#include "support.hpp"

using namespace shadowbl;
using namespace shadowbl::testing;
using nlohmann::json;

namespace {

std::string example_text() { return serialize_scenario(example()); }

json example_json() { return json::parse(example_text()); }

std::string parse_error_path(const json& j) {
  try {
    parse_scenario(j.dump());
  } catch (const ParseError& e) {
    return e.path();
  }
  return "<no error>";
}

std::string dimension_error(const json& j) {
  try {
    parse_scenario(j.dump());
  } catch (const DimensionError& e) {
    return e.what();
  }
  return "<no error>";
}

ScenarioFile random_file(std::mt19937_64& gen) {
  const auto rs = random_scenario(gen);
  const auto n = rs.market.n();
  ShadowCostSpec s = ShadowCostSpec::zeros(n, 0.3);
  s.lambda = rs.lambda;
  s.Lambda = random_spd(n, gen);
  s.cross_cov = random_spd(n, gen, 0.01);
  s.cross_cov(0, n - 1) += 0.001;
  if (n % 2 == 0) s.random_mean = RandomMean{random_vector(n, gen, 0, 0.02), 0.7};
  std::optional<ViewSpec> views;
  if (n % 3 != 0) {
    ViewSpec v;
    v.P = Matrix::Zero(2, n);
    v.P(0, 0) = 1.0;
    v.P(1, 0) = 1.0;
    v.P(1, 1) = -1.0;
    v.kinds = {ViewKind::absolute, ViewKind::relative};
    if (n % 2 == 0) {
      v.targets = random_vector(2, gen, -0.1, 0.1);
      v.uncertainty = Confidence{0.3};
    } else {
      v.targets = std::vector<Stance>{Stance::bearish, Stance::very_bullish};
      v.uncertainty = Matrix(random_spd(2, gen, 0.01));
    }
    views = v;
  }
  Sweeps sw;
  if (n > 4) sw = Sweeps{{0.1, 0.25}, {0.2}, {1}};
  return ScenarioFile{kSchemaVersion, rs.market, s, views, sw};
}

}  // namespace

TEST(ScenarioIo, ExampleRoundTripIsExact) {
  const ScenarioFile f = example();
  const std::string text = serialize_scenario(f);
  const ScenarioFile back = parse_scenario(text);
  EXPECT_TRUE(back == f);
  EXPECT_EQ(serialize_scenario(back), text);
  EXPECT_EQ(text.back(), '\n');
}

TEST(ScenarioIo, ShippedDataFileIsTheExampleScenario) {
  const ScenarioFile f = load_scenario_file(std::string(SHADOWBL_DATA_DIR) + "/example.scenario");
  EXPECT_TRUE(f == example());
  EXPECT_TRUE(validate(f).ok());
  EXPECT_EQ(validate(f).warnings().size(), 1u);
}

TEST(ScenarioIo, RandomRoundTrips) {
  std::mt19937_64 gen(4242);
  for (int t = 0; t < 200; ++t) {
    const ScenarioFile f = random_file(gen);
    const std::string text = serialize_scenario(f);
    const ScenarioFile back = parse_scenario(text);
    ASSERT_TRUE(back == f) << t << "\n" << text;
    EXPECT_EQ(serialize_scenario(back), text) << t;
  }
}

TEST(ScenarioIo, DecimalStringsAccepted) {
  json j = example_json();
  j["market"]["risk_free_rate"] = "0.02";
  j["market"]["covariance"][0][0] = "5e-2";
  const ScenarioFile f = parse_scenario(j.dump());
  EXPECT_EQ(f.market.r_f(), 0.02);
  EXPECT_EQ(f.market.sigma()(0, 0), 0.05);
  j["market"]["risk_free_rate"] = "2%";
  EXPECT_EQ(parse_error_path(j), "market.risk_free_rate");
}

TEST(ScenarioIo, ErrorsNameTheField) {
  json j = example_json();
  j["market"]["colour"] = 1;
  EXPECT_EQ(parse_error_path(j), "market.colour");

  j = example_json();
  j["shadow_costs"].erase("tau");
  EXPECT_EQ(parse_error_path(j), "shadow_costs.tau");

  j = example_json();
  j["views"]["kinds"][2] = "diagonal";
  EXPECT_EQ(parse_error_path(j), "views.kinds[2]");

  j = example_json();
  j["views"]["stances"] = json::array({"bullish", "bullish", "bullish", "bullish"});
  EXPECT_EQ(parse_error_path(j), "views");

  j = example_json();
  j["sweeps"]["gamma"] = json::array({0, 2});
  EXPECT_EQ(parse_error_path(j), "sweeps.gamma[1]");

  j = example_json();
  j["schema_version"] = 2;
  EXPECT_EQ(parse_error_path(j), "schema_version");

  EXPECT_EQ(parse_error_path(json::array()), "$");
  try {
    parse_scenario("{ not json");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.path(), "$");
  }
}

TEST(ScenarioIo, ShapeErrors) {
  json j = example_json();
  j["market"]["covariance"][1].erase(0);
  EXPECT_NE(dimension_error(j).find("market.covariance[1]"), std::string::npos);

  j = example_json();
  j["shadow_costs"]["mean"].erase(0);
  EXPECT_NE(dimension_error(j).find("shadow_costs.mean"), std::string::npos);

  j = example_json();
  j["views"]["q"].erase(0);
  EXPECT_NE(dimension_error(j).find("views.q"), std::string::npos);
}

TEST(ScenarioIo, StancesResolveAgainstPrior) {
  json j = example_json();
  j["views"].erase("q");
  j["views"]["stances"] = json::array({"bullish", "bearish", "very_bullish", "very_bearish"});
  const ScenarioFile f = parse_scenario(j.dump());
  ASSERT_TRUE(f.views->has_stances());
  const ViewSet v = f.views->resolve(f.market.pi_c(), f.market.sigma());
  EXPECT_NEAR(v.q(3), 0.035 - 2.0 * std::sqrt(0.06), 1e-15);
  EXPECT_TRUE(validate(f).ok());
  EXPECT_TRUE(parse_scenario(serialize_scenario(f)) == f);
}

TEST(ScenarioIo, ValidationFlagsBadNumbers) {
  json j = example_json();
  j["views"]["confidence"] = 1.5;
  const ValidationReport r = validate(parse_scenario(j.dump()));
  EXPECT_FALSE(r.ok());
  EXPECT_EQ(r.errors().front().path, "views.confidence");

  j = example_json();
  j["views"]["pick"][1][0] = 0.5;  // absolute row no longer sums to one
  const ValidationReport r2 = validate(parse_scenario(j.dump()));
  EXPECT_FALSE(r2.ok());
  EXPECT_EQ(r2.errors().front().path, "views.pick[1]");
}

TEST(ScenarioIo, FileErrors) {
  EXPECT_THROW(load_scenario_file("/nonexistent/dir/x.scenario"), IoError);
  EXPECT_THROW(save_scenario_file(example(), "/nonexistent/dir/x.scenario"), IoError);
  const auto path = std::filesystem::temp_directory_path() / "shadowbl_io_test.scenario";
  save_scenario_file(example(), path.string());
  EXPECT_TRUE(load_scenario_file(path.string()) == example());
  std::filesystem::remove(path);
}
