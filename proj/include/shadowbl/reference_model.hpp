#pragma once

#include <cstdint>

#include "shadowbl/domain.hpp"

namespace shadowbl {

/// Reference model selector. 0: covariance of the conditional expectation
/// E[R | lambda]; 1: lambda-conditioned returns with covariance tau Sigma.
enum class Gamma { conditional_expectation = 0, lambda_conditioned = 1 };

/// Accepts 0 or 1 only.
Gamma gamma_from_int(int g);
int to_int(Gamma g);

struct ReferenceModel {
  Gamma gamma = Gamma::lambda_conditioned;
  Vector mean;
  Matrix covariance;
  /// Set when the covariance is singular or not PSD within tolerance.
  bool degenerate = false;
};

/// gamma tau Sigma + (1 - gamma) S_Rl Lambda^{-1} S_Rl^T, symmetrized.
Matrix sigma_gamma(Gamma gamma, double tau, const Matrix& sigma, const Matrix& cross_cov,
                   const Matrix& Lambda);

struct VarianceDecomposition {
  /// S_Rl Lambda^{-1} S_lR
  Matrix explained;
  /// tau Sigma - explained
  Matrix unexplained;
  bool unexplained_psd = false;
};

VarianceDecomposition total_variance_decomposition(double tau, const Matrix& sigma,
                                                   const Matrix& cross_cov, const Matrix& Lambda);

/// N(pi, Sigma_gamma) for the scenario's deterministic shadow-costs.
ReferenceModel reference_model(const MarketScenario& market, const ShadowCostSpec& shadow,
                               Gamma gamma, const Vector& pi, double tau);

/// Shadow-costs with random mean lambda_1 ~ N(., tau_1 Lambda):
/// pi_hat = (delta - lambda_M / sigma_M^2) Sigma w + lambda_1 with lambda_M = w^T lambda_1,
/// covariance from sigma_gamma with Lambda replaced by tau_1 Lambda.
ReferenceModel random_mean_adjusted_model(const MarketScenario& market,
                                          const ShadowCostSpec& shadow, const Vector& weights,
                                          Gamma gamma, double tau);

/// log N(x; mean, covariance). Throws FactorizationError for non-PD covariance.
double gaussian_log_density(const Vector& x, const Vector& mean, const Matrix& covariance);

/// count x n matrix of draws mean + F z, F F^T = covariance, z ~ N(0, I).
/// Deterministic for a fixed seed regardless of thread count.
Matrix sample_posterior(const Vector& mean, const Matrix& covariance, Eigen::Index count,
                        std::uint64_t seed);

}  // namespace shadowbl
