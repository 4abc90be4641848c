#pragma once

#include <vector>

#include "shadowbl/domain.hpp"

namespace shadowbl {

/// beta = Sigma w / sigma_M^2. Throws DomainError when sigma_m == 0.
Vector beta_vector(const Matrix& sigma, const Vector& weights, double sigma_m);

/// Extra excess return over CAPM: lambda - lambda_M * beta.
Vector extra_excess_returns(const Vector& lambda, double lambda_m, const Vector& beta);

/// delta * Sigma * w, the complete-information implied returns for weights w.
Vector capm_implied_returns(const MarketScenario& market, const Vector& weights);

/// Incomplete-information implied returns
///   pi = (delta - lambda_M / sigma_M^2) Sigma w + lambda,  lambda_M = w^T lambda.
Vector implied_excess_returns(const MarketScenario& market, const Vector& lambda,
                              const Vector& weights);

/// Own-derivative of the extra excess return w.r.t. the asset's shadow-cost: 1 - x_k beta_k.
Vector sensitivity_to_shadow_costs(const Vector& weights, const Vector& beta);

/// Own-derivative w.r.t. the asset's market weight: -lambda_k beta_k - delta_lambda sigma_k^2.
Vector sensitivity_to_weights(const Vector& lambda, const Vector& beta, double delta_lambda,
                              const Vector& sigma_diag);

enum class SensitivityRegime {
  beta_negative,
  beta_zero,
  beta_positive_low_weight,   // x_k < 1 / beta_k: extra return rises with lambda_k
  beta_positive_high_weight,  // x_k >= 1 / beta_k
};

const char* to_string(SensitivityRegime r);

struct SensitivityReport {
  Vector grad_lambda;
  Vector grad_weights;
  std::vector<SensitivityRegime> regime;
  /// For beta_k < 0: |beta_k| > delta_lambda sigma_k^2 / lambda_k, i.e. the
  /// extra return increases with the asset's weight. False otherwise.
  std::vector<bool> increases_with_weight;
};

/// |beta_k| at or below this counts as zero systematic risk.
inline constexpr double kBetaZeroTol = 1e-12;

SensitivityReport classify_sensitivity_regimes(const Vector& lambda, const Vector& beta,
                                               const Vector& weights, double delta_lambda,
                                               const Vector& sigma_diag);

/// U(w) = w^T (pi_c + lambda) - 1/2 (delta + 2 delta_lambda) w^T Sigma w.
double utility(const Vector& weights, const Vector& pi_c, const Vector& lambda,
               const Matrix& sigma, double delta, double delta_lambda);

/// Return w^T (excess + r_f 1) and risk sqrt(w^T Sigma w). Pass r_f = 0 for
/// excess-return reporting.
PortfolioMetrics portfolio_metrics(const Vector& weights, const Vector& excess_returns,
                                   const Matrix& sigma, double r_f);

}  // namespace shadowbl
