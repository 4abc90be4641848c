#include "shadowbl/allocation.hpp"
#include "shadowbl/views.hpp"
#include "support.hpp"

using namespace shadowbl;
using namespace shadowbl::testing;

namespace {

PosteriorDistribution random_posterior(Eigen::Index n, std::mt19937_64& gen) {
  PosteriorDistribution p;
  p.mean = random_vector(n, gen, -0.02, 0.08);
  p.covariance = random_spd(n, gen);
  return p;
}

PosteriorDistribution example_bl() { return bl_posterior(example().market, 0.5, example_views()); }

}  // namespace

TEST(InformationSet, RestrictsMomentsToKnownAssets) {
  const PosteriorDistribution p = example_bl();
  const PosteriorDistribution r = restrict_to_information_set(p, {"inv", {4, 0, 2}});
  ASSERT_EQ(r.mean.size(), 3);
  EXPECT_EQ(r.mean(0), p.mean(4));
  EXPECT_EQ(r.mean(1), p.mean(0));
  EXPECT_EQ(r.covariance(0, 1), p.covariance(4, 0));
  EXPECT_EQ(r.covariance(2, 2), p.covariance(2, 2));
  EXPECT_THROW(restrict_to_information_set(p, {"inv", {}}), DomainError);
  EXPECT_THROW(restrict_to_information_set(p, {"inv", {5}}), DomainError);
  EXPECT_THROW(restrict_to_information_set(p, {"inv", {1, 1}}), DomainError);
}

// Gradient suite: w^T pi* - delta/2 w^T Sigma* w is stationary at the allocation.
TEST(Unconstrained, GradientVanishes) {
  std::mt19937_64 gen(31);
  for (int t = 0; t < 100; ++t) {
    const Eigen::Index n = 2 + t % 7;
    const PosteriorDistribution p = random_posterior(n, gen);
    const double delta = 1.0 + (t % 9);
    const Vector w = unconstrained_allocation(p, delta);
    const Vector grad = p.mean - delta * p.covariance * w;
    EXPECT_LT(grad.cwiseAbs().maxCoeff(), 1e-12) << t;
    // strictly concave objective: any perturbation lowers it
    const auto u = [&](const Vector& x) { return x.dot(p.mean) - 0.5 * delta * x.dot(p.covariance * x); };
    const Vector e = random_vector(n, gen, -1e-3, 1e-3);
    EXPECT_LT(u(w + e), u(w)) << t;
  }
  EXPECT_THROW(unconstrained_allocation(example_bl(), 0.0), DomainError);
}

TEST(Unconstrained, MatchesTable7BlWeights) {
  const Vector w = unconstrained_allocation(example_bl(), 8.0);
  EXPECT_TRUE(near(w, vec({0.2203, -0.0558, -0.1489, 0.1625, 0.3679}), 1e-4));
}

TEST(RiskConstrained, HitsTheCapAlongTheUnconstrainedRay) {
  const PosteriorDistribution p = example_bl();
  const Vector wu = unconstrained_allocation(p, 8.0);
  for (double cap : {0.01, 0.0663, 0.2}) {
    const Vector w = risk_constrained_allocation(p, 8.0, cap);
    EXPECT_NEAR(std::sqrt(w.dot(p.covariance * w)), cap, 1e-14);
    const double k = w(0) / wu(0);
    EXPECT_GT(k, 0.0);
    EXPECT_TRUE(near(w, Vector(k * wu), 1e-14));
  }
  EXPECT_THROW(risk_constrained_allocation(p, 8.0, 0.0), DomainError);
}

TEST(MinVariance, BudgetAndOptimality) {
  std::mt19937_64 gen(8);
  for (int t = 0; t < 50; ++t) {
    const PosteriorDistribution p = random_posterior(2 + t % 6, gen);
    const Vector w = min_variance_allocation(p);
    EXPECT_NEAR(w.sum(), 1.0, 1e-13);
    const Vector g = p.covariance * w;
    EXPECT_LT((g.array() - g(0)).abs().maxCoeff(), 1e-14) << t;
  }
}

TEST(RiskBudget, FeasibleAndBeatsEveryOtherFeasiblePortfolio) {
  std::mt19937_64 gen(2024);
  for (int t = 0; t < 60; ++t) {
    const Eigen::Index n = 2 + t % 6;
    const PosteriorDistribution p = random_posterior(n, gen);
    const Vector wmv = min_variance_allocation(p);
    const double smv = std::sqrt(wmv.dot(p.covariance * wmv));
    const double cap = smv * (1.2 + 0.1 * (t % 5));
    const TwoFundAllocation tf = risk_budget_allocation(p, 4.0, cap);
    EXPECT_NEAR(tf.weights.sum(), 1.0, 1e-12) << t;
    EXPECT_NEAR(std::sqrt(tf.weights.dot(p.covariance * tf.weights)), cap, 1e-12) << t;
    EXPECT_GE(tf.a, 0.0);
    EXPECT_NEAR(tf.min_variance_risk, smv, 1e-14);
    // every budget portfolio is wmv + e with 1^T e = 0, and risk^2 = smv^2 + e^T Sigma e
    const double best = tf.weights.dot(p.mean);
    for (int k = 0; k < 200; ++k) {
      Vector e = random_vector(n, gen, -1, 1);
      e.array() -= e.mean();
      e *= std::sqrt((cap * cap - smv * smv) / e.dot(p.covariance * e));
      const Vector w = wmv + e;
      EXPECT_LE(w.dot(p.mean), best + 1e-12) << t;
    }
  }
}

TEST(RiskBudget, InfeasibleBelowMinimumRisk) {
  const PosteriorDistribution p = example_bl();
  const Vector wmv = min_variance_allocation(p);
  const double smv = std::sqrt(wmv.dot(p.covariance * wmv));
  try {
    risk_budget_allocation(p, 8.0, 0.5 * smv);
    FAIL() << "expected InfeasibleError";
  } catch (const InfeasibleError& e) {
    EXPECT_NEAR(e.min_risk(), smv, 1e-15);
  }
  // exactly at the minimum: the min-variance portfolio itself
  const TwoFundAllocation tf = risk_budget_allocation(p, 8.0, smv);
  EXPECT_TRUE(near(tf.weights, wmv, 1e-6));
}

TEST(Allocate, FullVectorHasZerosOutsideInformationSet) {
  const PosteriorDistribution p = example_bl();
  AllocationRequest req{p, {"inv", {1, 3, 4}}, Unconstrained{}, 8.0};
  const AllocationResult r = allocate(req);
  ASSERT_EQ(r.weights.size(), 5);
  EXPECT_EQ(r.weights(0), 0.0);
  EXPECT_EQ(r.weights(2), 0.0);
  const PosteriorDistribution sub = restrict_to_information_set(p, req.info_set);
  const Vector direct = (8.0 * sub.covariance).ldlt().solve(sub.mean);
  EXPECT_TRUE(near(r.restricted_weights, direct, 1e-13));
  EXPECT_EQ(r.weights(1), r.restricted_weights(0));
  EXPECT_EQ(r.weights(4), r.restricted_weights(2));
  EXPECT_NEAR(r.metrics.expected_return, direct.dot(sub.mean), 1e-15);
  EXPECT_FALSE(r.two_fund.has_value());
}

TEST(Allocate, Table7BlMetrics) {
  AllocationRequest req{example_bl(), InformationSet::all(5), Unconstrained{}, 8.0};
  const AllocationResult r = allocate(req);
  EXPECT_NEAR(r.metrics.expected_return, 0.0351, 1e-4);
  EXPECT_NEAR(r.metrics.risk, 0.0663, 1e-4);
}

TEST(Allocate, ObjectivesDispatch) {
  const PosteriorDistribution p = example_bl();
  AllocationRequest req{p, InformationSet::all(5), RiskBudgetConstrained{0.2}, 8.0};
  const AllocationResult r = allocate(req);
  ASSERT_TRUE(r.two_fund.has_value());
  EXPECT_NEAR(r.metrics.risk, 0.2, 1e-12);
  EXPECT_NEAR(r.weights.sum(), 1.0, 1e-12);
  req.objective = MinVariance{};
  EXPECT_NEAR(allocate(req).weights.sum(), 1.0, 1e-13);
  req.objective = RiskConstrained{0.05};
  EXPECT_NEAR(allocate(req).metrics.risk, 0.05, 1e-14);
  EXPECT_STREQ(objective_name(Unconstrained{}), "unconstrained");
  EXPECT_STREQ(objective_name(RiskConstrained{}), "risk_constrained");
  EXPECT_STREQ(objective_name(RiskBudgetConstrained{}), "risk_budget");
  EXPECT_STREQ(objective_name(MinVariance{}), "min_variance");
}
