#include "shadowbl/reference_model.hpp"

#include <cmath>
#include <numbers>

#include "shadowbl/kernels.hpp"

namespace shadowbl {

Gamma gamma_from_int(int g) {
  if (g == 0) return Gamma::conditional_expectation;
  if (g == 1) return Gamma::lambda_conditioned;
  throw DomainError("gamma must be 0 or 1, got " + std::to_string(g));
}

int to_int(Gamma g) { return g == Gamma::conditional_expectation ? 0 : 1; }

namespace {

Matrix explained_covariance(const Matrix& cross_cov, const Matrix& Lambda) {
  require_shape(Lambda, cross_cov.cols(), cross_cov.cols(), "shadow-cost covariance");
  SpdFactor lam(Lambda, "shadow-cost covariance");
  return symmetrize(cross_cov * lam.solve(Matrix(cross_cov.transpose())));
}

bool degenerate(const Matrix& m) {
  if (m.size() == 0) return true;
  const Spectrum s = spectrum(m);
  return !s.psd || s.min <= kPsdRelTol * std::max(s.max, 0.0);
}

}  // namespace

Matrix sigma_gamma(Gamma gamma, double tau, const Matrix& sigma, const Matrix& cross_cov,
                   const Matrix& Lambda) {
  if (!(tau > 0.0)) throw DomainError("sigma_gamma: tau must be > 0");
  require_shape(cross_cov, sigma.rows(), sigma.cols(), "sigma_gamma: cross_cov");
  if (gamma == Gamma::lambda_conditioned) return symmetrize(tau * sigma);
  return explained_covariance(cross_cov, Lambda);
}

VarianceDecomposition total_variance_decomposition(double tau, const Matrix& sigma,
                                                   const Matrix& cross_cov,
                                                   const Matrix& Lambda) {
  if (!(tau > 0.0)) throw DomainError("total_variance_decomposition: tau must be > 0");
  require_shape(cross_cov, sigma.rows(), sigma.cols(), "total_variance_decomposition: cross_cov");
  VarianceDecomposition d;
  d.explained = explained_covariance(cross_cov, Lambda);
  d.unexplained = tau * sigma - d.explained;
  d.unexplained_psd = spectrum(d.unexplained).psd;
  return d;
}

ReferenceModel reference_model(const MarketScenario& market, const ShadowCostSpec& shadow,
                               Gamma gamma, const Vector& pi, double tau) {
  require_length(pi, market.n(), "reference_model: pi");
  ReferenceModel m;
  m.gamma = gamma;
  m.mean = pi;
  m.covariance = sigma_gamma(gamma, tau, market.sigma(), shadow.cross_cov, shadow.Lambda);
  m.degenerate = degenerate(m.covariance);
  return m;
}

ReferenceModel random_mean_adjusted_model(const MarketScenario& market,
                                          const ShadowCostSpec& shadow, const Vector& weights,
                                          Gamma gamma, double tau) {
  if (!shadow.random_mean) {
    throw DomainError("random_mean_adjusted_model: shadow-cost spec has no random mean");
  }
  const RandomMean& rm = *shadow.random_mean;
  require_length(rm.lambda_1, market.n(), "random_mean_adjusted_model: lambda_1");
  require_length(weights, market.n(), "random_mean_adjusted_model: weights");
  if (!(rm.tau_1 > 0.0)) throw DomainError("random_mean_adjusted_model: tau_1 must be > 0");
  const double lambda_m = weights.dot(rm.lambda_1);
  ReferenceModel m;
  m.gamma = gamma;
  m.mean = (market.delta() - lambda_m / market.market_variance()) * (market.sigma() * weights) +
           rm.lambda_1;
  m.covariance = sigma_gamma(gamma, tau, market.sigma(), shadow.cross_cov, rm.tau_1 * shadow.Lambda);
  m.degenerate = degenerate(m.covariance);
  return m;
}

double gaussian_log_density(const Vector& x, const Vector& mean, const Matrix& covariance) {
  require_length(x, mean.size(), "gaussian_log_density: x");
  require_shape(covariance, mean.size(), mean.size(), "gaussian_log_density: covariance");
  SpdFactor f(covariance, "density covariance");
  const Vector diff = x - mean;
  const double quad = diff.dot(f.solve(diff));
  const double n = static_cast<double>(mean.size());
  return -0.5 * (n * std::log(2.0 * std::numbers::pi) + f.log_det() + quad);
}

Matrix sample_posterior(const Vector& mean, const Matrix& covariance, Eigen::Index count,
                        std::uint64_t seed) {
  require_shape(covariance, mean.size(), mean.size(), "sample_posterior: covariance");
  if (count < 1) throw DomainError("sample_posterior: count must be >= 1");
  const Matrix factor = psd_factor(covariance, "sample_posterior: covariance");
  return kernels::gaussian_draws(mean, factor, count, seed);
}

}  // namespace shadowbl
