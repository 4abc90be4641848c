#include "shadowbl/equilibrium.hpp"

#include <cmath>

namespace shadowbl {

Vector beta_vector(const Matrix& sigma, const Vector& weights, double sigma_m) {
  require_shape(sigma, weights.size(), weights.size(), "beta_vector: sigma");
  if (sigma_m == 0.0) throw DomainError("beta_vector: degenerate market (sigma_M = 0)");
  return sigma * weights / (sigma_m * sigma_m);
}

Vector extra_excess_returns(const Vector& lambda, double lambda_m, const Vector& beta) {
  require_length(beta, lambda.size(), "extra_excess_returns: beta");
  return lambda - lambda_m * beta;
}

Vector capm_implied_returns(const MarketScenario& market, const Vector& weights) {
  require_length(weights, market.n(), "capm_implied_returns: weights");
  return market.delta() * (market.sigma() * weights);
}

Vector implied_excess_returns(const MarketScenario& market, const Vector& lambda,
                              const Vector& weights) {
  require_length(lambda, market.n(), "implied_excess_returns: lambda");
  require_length(weights, market.n(), "implied_excess_returns: weights");
  const double lambda_m = weights.dot(lambda);
  const double coeff = market.delta() - lambda_m / market.market_variance();
  return coeff * (market.sigma() * weights) + lambda;
}

Vector sensitivity_to_shadow_costs(const Vector& weights, const Vector& beta) {
  require_length(beta, weights.size(), "sensitivity_to_shadow_costs: beta");
  return Vector::Ones(weights.size()) - weights.cwiseProduct(beta);
}

Vector sensitivity_to_weights(const Vector& lambda, const Vector& beta, double delta_lambda,
                              const Vector& sigma_diag) {
  require_length(beta, lambda.size(), "sensitivity_to_weights: beta");
  require_length(sigma_diag, lambda.size(), "sensitivity_to_weights: sigma_diag");
  return -lambda.cwiseProduct(beta) - delta_lambda * sigma_diag;
}

const char* to_string(SensitivityRegime r) {
  switch (r) {
    case SensitivityRegime::beta_negative: return "beta_negative";
    case SensitivityRegime::beta_zero: return "beta_zero";
    case SensitivityRegime::beta_positive_low_weight: return "beta_positive_low_weight";
    case SensitivityRegime::beta_positive_high_weight: return "beta_positive_high_weight";
  }
  return "unknown";
}

SensitivityReport classify_sensitivity_regimes(const Vector& lambda, const Vector& beta,
                                               const Vector& weights, double delta_lambda,
                                               const Vector& sigma_diag) {
  SensitivityReport rep;
  rep.grad_lambda = sensitivity_to_shadow_costs(weights, beta);
  rep.grad_weights = sensitivity_to_weights(lambda, beta, delta_lambda, sigma_diag);
  const auto n = lambda.size();
  rep.regime.reserve(static_cast<std::size_t>(n));
  rep.increases_with_weight.reserve(static_cast<std::size_t>(n));
  for (Eigen::Index k = 0; k < n; ++k) {
    const double b = beta(k);
    if (std::abs(b) <= kBetaZeroTol) {
      rep.regime.push_back(SensitivityRegime::beta_zero);
      rep.increases_with_weight.push_back(false);
    } else if (b < 0.0) {
      rep.regime.push_back(SensitivityRegime::beta_negative);
      // |beta_k| > delta_lambda sigma_k^2 / lambda_k, multiplied through by lambda_k >= 0
      rep.increases_with_weight.push_back(std::abs(b) * lambda(k) > delta_lambda * sigma_diag(k));
    } else {
      rep.regime.push_back(weights(k) * b < 1.0 ? SensitivityRegime::beta_positive_low_weight
                                                : SensitivityRegime::beta_positive_high_weight);
      rep.increases_with_weight.push_back(false);
    }
  }
  return rep;
}

double utility(const Vector& weights, const Vector& pi_c, const Vector& lambda,
               const Matrix& sigma, double delta, double delta_lambda) {
  require_length(pi_c, weights.size(), "utility: pi_c");
  require_length(lambda, weights.size(), "utility: lambda");
  require_shape(sigma, weights.size(), weights.size(), "utility: sigma");
  return weights.dot(pi_c + lambda) -
         0.5 * (delta + 2.0 * delta_lambda) * weights.dot(sigma * weights);
}

PortfolioMetrics portfolio_metrics(const Vector& weights, const Vector& excess_returns,
                                   const Matrix& sigma, double r_f) {
  require_length(excess_returns, weights.size(), "portfolio_metrics: returns");
  require_shape(sigma, weights.size(), weights.size(), "portfolio_metrics: sigma");
  PortfolioMetrics m;
  m.expected_return = weights.dot(excess_returns) + r_f * weights.sum();
  m.risk = std::sqrt(std::max(weights.dot(sigma * weights), 0.0));
  return m;
}

}  // namespace shadowbl
