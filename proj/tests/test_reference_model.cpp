#include <numbers>

#include "shadowbl/equilibrium.hpp"
#include "shadowbl/kernels.hpp"
#include "shadowbl/reference_model.hpp"
#include "shadowbl/solver.hpp"
#include "support.hpp"

using namespace shadowbl;
using namespace shadowbl::testing;

namespace {

// pi = pi_c + lambda - lambda_M beta at the first-order market portfolio, spelled out.
Vector table_pi(const ScenarioFile& f) {
  const auto& m = f.market;
  const Vector& l = f.shadow_costs.lambda;
  const Vector w = (m.delta() * m.sigma()).ldlt().solve(Vector(m.pi_c() - l));
  const Vector beta = m.sigma() * w / m.market_variance();
  return m.pi_c() + l - w.dot(l) * beta;
}

Matrix explained_oracle(const ShadowCostSpec& s) {
  // Lambda is diagonal in the example data
  Matrix inv = Matrix::Zero(5, 5);
  for (int i = 0; i < 5; ++i) inv(i, i) = 1.0 / s.Lambda(i, i);
  return s.cross_cov * inv * s.cross_cov.transpose();
}

}  // namespace

TEST(Gamma, OnlyZeroOrOne) {
  EXPECT_EQ(gamma_from_int(0), Gamma::conditional_expectation);
  EXPECT_EQ(gamma_from_int(1), Gamma::lambda_conditioned);
  EXPECT_THROW(gamma_from_int(2), DomainError);
  EXPECT_THROW(gamma_from_int(-1), DomainError);
  EXPECT_EQ(to_int(Gamma::conditional_expectation), 0);
}

TEST(SigmaGamma, BothModels) {
  const ScenarioFile f = example();
  const auto& s = f.shadow_costs;
  const Matrix g1 = sigma_gamma(Gamma::lambda_conditioned, 0.5, f.market.sigma(), s.cross_cov, s.Lambda);
  EXPECT_TRUE(near(g1, Matrix(0.5 * f.market.sigma()), 1e-16));
  const Matrix g0 = sigma_gamma(Gamma::conditional_expectation, 0.5, f.market.sigma(), s.cross_cov, s.Lambda);
  EXPECT_TRUE(near(g0, explained_oracle(s), 1e-14));
  EXPECT_TRUE(is_symmetric(g0, 0.0));
  EXPECT_THROW(sigma_gamma(Gamma::lambda_conditioned, 0.0, f.market.sigma(), s.cross_cov, s.Lambda),
               DomainError);
  EXPECT_THROW(sigma_gamma(Gamma::conditional_expectation, 0.5, f.market.sigma(), s.cross_cov,
                           Matrix::Zero(5, 5)),
               FactorizationError);
}

TEST(SigmaGamma, ZeroCrossCovarianceGivesZeroExplainedPart) {
  const ScenarioFile f = example();
  const Matrix g0 = sigma_gamma(Gamma::conditional_expectation, 0.5, f.market.sigma(),
                                Matrix::Zero(5, 5), Matrix::Identity(5, 5));
  EXPECT_EQ(g0.cwiseAbs().maxCoeff(), 0.0);
  ReferenceModel ref = reference_model(f.market, ShadowCostSpec::zeros(5), Gamma::conditional_expectation,
                                       f.market.pi_c(), 0.5);
  EXPECT_TRUE(ref.degenerate);
}

TEST(VarianceDecomposition, PartsSumToTauSigma) {
  const ScenarioFile f = example();
  const auto& s = f.shadow_costs;
  for (double tau : {0.1, 0.5, 0.9, 5.0}) {
    const auto d = total_variance_decomposition(tau, f.market.sigma(), s.cross_cov, s.Lambda);
    EXPECT_TRUE(near(Matrix(d.explained + d.unexplained), Matrix(tau * f.market.sigma()), 1e-15));
    const double min_eig =
        Eigen::SelfAdjointEigenSolver<Matrix>(Matrix(tau * f.market.sigma() - explained_oracle(s)))
            .eigenvalues()
            .minCoeff();
    EXPECT_EQ(d.unexplained_psd, min_eig >= -1e-12) << tau;
  }
}

TEST(ReferenceModel, Table6Portfolios) {
  const ScenarioFile f = example();
  const Vector pi = table_pi(f);
  EXPECT_TRUE(near(pi, vec({0.0200, 0.0548, 0.0352, 0.0541, 0.0648}), 5e-5));
  const double d = f.market.delta();
  const auto& s = f.shadow_costs;

  const Matrix s0 = explained_oracle(s);
  const Vector w0 = (d * s0).ldlt().solve(pi);
  const ReferenceModel r0 = reference_model(f.market, s, Gamma::conditional_expectation, pi, 0.5);
  EXPECT_TRUE(near(reference_model_portfolio(r0.mean, r0.covariance, d), w0, 1e-12));
  EXPECT_TRUE(near(w0, vec({-0.4966, 0.0903, -0.0260, -0.0219, 0.2679}), 2e-4));
  EXPECT_NEAR(w0.dot(pi), 0.0103, 5e-5);
  EXPECT_NEAR(std::sqrt(w0.dot(s0 * w0)), 0.0359, 5e-5);

  const ReferenceModel r1 = reference_model(f.market, s, Gamma::lambda_conditioned, pi, 0.5);
  const Vector w1 = reference_model_portfolio(r1.mean, r1.covariance, d);
  EXPECT_TRUE(near(w1, vec({-0.1532, 0.0624, 0.0847, 0.1999, 0.2029}), 5e-5));
  const PortfolioMetrics m1 = portfolio_metrics(w1, pi, r1.covariance, 0.0);
  EXPECT_NEAR(m1.expected_return, 0.0273, 5e-5);
  EXPECT_NEAR(m1.risk, 0.0584, 5e-5);
  EXPECT_FALSE(r1.degenerate);
}

TEST(ReferenceModel, Gamma1PortfolioScalesInverselyWithTau) {
  const ScenarioFile f = example();
  const Vector pi = table_pi(f);
  const auto w = [&](double tau) {
    const ReferenceModel r = reference_model(f.market, f.shadow_costs, Gamma::lambda_conditioned, pi, tau);
    return reference_model_portfolio(r.mean, r.covariance, f.market.delta());
  };
  EXPECT_TRUE(near(Vector(0.1 * w(0.1)), Vector(0.9 * w(0.9)), 1e-14));
}

TEST(RandomMean, ReducesToImpliedReturnsWhenMeansCoincide) {
  ScenarioFile f = example();
  f.shadow_costs.random_mean = RandomMean{f.shadow_costs.lambda, 1.0};
  const Vector w = first_order_equilibrium(f.market, f.shadow_costs.lambda).weights;
  const ReferenceModel r =
      random_mean_adjusted_model(f.market, f.shadow_costs, w, Gamma::lambda_conditioned, 0.5);
  EXPECT_TRUE(near(r.mean, implied_excess_returns(f.market, f.shadow_costs.lambda, w), 1e-15));
  EXPECT_TRUE(near(r.covariance, Matrix(0.5 * f.market.sigma()), 1e-16));
  // gamma = 0: Lambda is scaled by tau_1
  f.shadow_costs.random_mean->tau_1 = 2.0;
  const ReferenceModel r0 =
      random_mean_adjusted_model(f.market, f.shadow_costs, w, Gamma::conditional_expectation, 0.5);
  EXPECT_TRUE(near(r0.covariance, Matrix(0.5 * explained_oracle(f.shadow_costs)), 1e-14));
}

TEST(RandomMean, RequiresSpec) {
  const ScenarioFile f = example();
  EXPECT_THROW(random_mean_adjusted_model(f.market, f.shadow_costs, Vector::Zero(5),
                                          Gamma::lambda_conditioned, 0.5),
               DomainError);
}

TEST(Density, MatchesProductOfUnivariateNormals) {
  const Vector mean = vec({0.1, -0.2, 0.3});
  const Vector var = vec({0.04, 0.09, 0.25});
  const Vector x = vec({0.0, 0.1, 0.2});
  double oracle = 0.0;
  for (int i = 0; i < 3; ++i) {
    const double z = (x(i) - mean(i)) / std::sqrt(var(i));
    oracle += -0.5 * z * z - 0.5 * std::log(2 * std::numbers::pi * var(i));
  }
  EXPECT_NEAR(gaussian_log_density(x, mean, var.asDiagonal().toDenseMatrix()), oracle, 1e-13);
  EXPECT_THROW(gaussian_log_density(x, mean, Matrix::Zero(3, 3)), FactorizationError);
}

TEST(Sampler, DeterministicAndSchedulingIndependent) {
  const ScenarioFile f = example();
  const Matrix cov = 0.5 * f.market.sigma();
  const Matrix a = sample_posterior(f.market.pi_c(), cov, 5000, 7);
  const Matrix b = sample_posterior(f.market.pi_c(), cov, 5000, 7);
  EXPECT_EQ((a - b).cwiseAbs().maxCoeff(), 0.0);
  const Matrix factor = psd_factor(cov, "c");
  const Matrix s = kernels::serial::gaussian_draws(f.market.pi_c(), factor, 5000, 7);
  EXPECT_EQ((a - s).cwiseAbs().maxCoeff(), 0.0);
  const Matrix c = sample_posterior(f.market.pi_c(), cov, 5000, 8);
  EXPECT_GT((a - c).cwiseAbs().maxCoeff(), 0.0);
  // prefix property: blocks are seeded independently of the total count
  const Matrix shorter = sample_posterior(f.market.pi_c(), cov, 2048, 7);
  EXPECT_EQ((a.topRows(2048) - shorter).cwiseAbs().maxCoeff(), 0.0);
}

TEST(Sampler, MomentsConverge) {
  const ScenarioFile f = example();
  const Matrix cov = 0.5 * f.market.sigma();
  const Matrix draws = sample_posterior(f.market.pi_c(), cov, 100000, 42);
  // plain two-pass moments as oracle
  const Vector mean = draws.colwise().mean().transpose();
  const Matrix centered = draws.rowwise() - mean.transpose();
  const Matrix c = centered.transpose() * centered / (draws.rows() - 1.0);
  for (int i = 0; i < 5; ++i) {
    EXPECT_LT(std::abs(mean(i) - f.market.pi_c()(i)), 4.0 * std::sqrt(cov(i, i) / 1e5));
  }
  EXPECT_LT(((c - cov).cwiseAbs().array() / cov.diagonal().maxCoeff()).maxCoeff(), 0.05);
  Vector km;
  Matrix kc;
  kernels::sample_moments(draws, km, kc);
  EXPECT_TRUE(near(km, mean, 1e-14));
  EXPECT_TRUE(near(kc, c, 1e-12));
  Vector sm;
  Matrix sc;
  kernels::serial::sample_moments(draws, sm, sc);
  EXPECT_TRUE(near(sm, mean, 1e-14));
  EXPECT_TRUE(near(sc, c, 1e-12));
}

TEST(Sampler, SingularCovarianceStillSamples) {
  Matrix cov = Matrix::Zero(2, 2);
  cov(0, 0) = 1.0;
  const Matrix d = sample_posterior(vec({1.0, 2.0}), cov, 100, 3);
  EXPECT_EQ((d.col(1).array() - 2.0).abs().maxCoeff(), 0.0);
  EXPECT_THROW(sample_posterior(vec({1.0, 2.0}), cov, 0, 3), DomainError);
  EXPECT_THROW(sample_posterior(vec({1.0, 2.0}), Matrix(-cov), 10, 3), FactorizationError);
}

TEST(ParallelFor, RethrowsFirstFailureAfterFinishing) {
  std::vector<int> hit(100, 0);
  EXPECT_THROW(kernels::parallel_for(100,
                                     [&](std::size_t i) {
                                       hit[i] = 1;
                                       if (i == 37 || i == 80) throw DomainError("boom " + std::to_string(i));
                                     }),
               DomainError);
  EXPECT_EQ(std::count(hit.begin(), hit.end(), 1), 100);
  try {
    kernels::serial::parallel_for(10, [](std::size_t i) {
      if (i >= 3) throw DomainError("at " + std::to_string(i));
    });
  } catch (const DomainError& e) {
    EXPECT_STREQ(e.what(), "at 3");
  }
}
