#include "shadowbl/solver.hpp"

#include <Eigen/LU>

#include <algorithm>
#include <cmath>

namespace shadowbl {

namespace {

double inf_norm(const Vector& v) { return v.size() == 0 ? 0.0 : v.cwiseAbs().maxCoeff(); }

void check_inputs(const MarketScenario& market, const Vector& lambda, const char* what) {
  require_length(lambda, market.n(), std::string(what) + ": lambda");
  if (!(market.sigma_m() > 0.0)) throw DomainError(std::string(what) + ": sigma_M must be > 0");
}

// Constant part (delta Sigma)^{-1} (pi - lambda) of F.
Vector affine_target(const MarketScenario& market, const Vector& lambda, const Vector& pi) {
  SpdFactor sigma(market.sigma(), "market covariance");
  return sigma.solve(Vector(pi - lambda)) / market.delta();
}

Vector residual_with_target(const Vector& w, const Vector& lambda, const Vector& target,
                            double scale) {
  return w - scale * nonlinear_term(w, lambda) - target;
}

SolveOutcome make_outcome(const MarketScenario& market, const Vector& lambda, Vector w) {
  SolveOutcome out;
  out.delta_lambda = w.dot(lambda) / market.market_variance();
  out.weights = std::move(w);
  return out;
}

}  // namespace

Vector nonlinear_term_literal(const Vector& weights, const Vector& lambda) {
  require_length(lambda, weights.size(), "nonlinear_term_literal: lambda");
  const auto n = weights.size();
  const Matrix d_lambda = lambda.asDiagonal();
  const Matrix m_lambda = Vector::Ones(n) * lambda.transpose();  // every row is lambda^T
  const Vector w_sq = weights.cwiseProduct(weights);
  return d_lambda * w_sq + weights.asDiagonal() * ((m_lambda - d_lambda) * weights);
}

Vector nonlinear_term(const Vector& weights, const Vector& lambda) {
  require_length(lambda, weights.size(), "nonlinear_term: lambda");
  return weights.dot(lambda) * weights;
}

Vector residual_F(const Vector& weights, const MarketScenario& market, const Vector& lambda,
                  const Vector& pi) {
  check_inputs(market, lambda, "residual_F");
  require_length(weights, market.n(), "residual_F: weights");
  require_length(pi, market.n(), "residual_F: pi");
  const double scale = 1.0 / (market.delta() * market.market_variance());
  return residual_with_target(weights, lambda, affine_target(market, lambda, pi), scale);
}

Matrix jacobian_F(const Vector& weights, const MarketScenario& market, const Vector& lambda) {
  check_inputs(market, lambda, "jacobian_F");
  require_length(weights, market.n(), "jacobian_F: weights");
  const auto n = market.n();
  const double scale = 1.0 / (market.delta() * market.market_variance());
  return (1.0 - scale * weights.dot(lambda)) * Matrix::Identity(n, n) -
         scale * weights * lambda.transpose();
}

Matrix finite_difference_jacobian(const Vector& weights, const MarketScenario& market,
                                  const Vector& lambda, const Vector& pi) {
  check_inputs(market, lambda, "finite_difference_jacobian");
  const auto n = market.n();
  const double scale = 1.0 / (market.delta() * market.market_variance());
  const Vector target = affine_target(market, lambda, pi);
  Matrix jac(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    const double h = 1e-7 * std::max(1.0, std::abs(weights(j)));
    Vector up = weights, down = weights;
    up(j) += h;
    down(j) -= h;
    jac.col(j) = (residual_with_target(up, lambda, target, scale) -
                  residual_with_target(down, lambda, target, scale)) /
                 (up(j) - down(j));
  }
  return jac;
}

Vector capm_weights(const MarketScenario& market) {
  SpdFactor sigma(market.sigma(), "market covariance");
  return sigma.solve(market.pi_c()) / market.delta();
}

SolveOutcome solve_given_pi(const MarketScenario& market, const Vector& lambda, const Vector& pi,
                            const SolverConfig& config) {
  check_inputs(market, lambda, "solve_given_pi");
  require_length(pi, market.n(), "solve_given_pi: pi");
  if (config.max_iterations < 1) throw DomainError("solve_given_pi: max_iterations must be >= 1");
  if (!(config.residual_tolerance > 0.0) || !(config.step_tolerance > 0.0)) {
    throw DomainError("solve_given_pi: tolerances must be > 0");
  }
  const auto n = market.n();
  const double scale = 1.0 / (market.delta() * market.market_variance());
  const Vector target = affine_target(market, lambda, pi);

  Vector w;
  if (const auto* guess = std::get_if<InitialGuess>(&config.initial_guess)) {
    w = *guess == InitialGuess::zeros ? Vector::Zero(n) : capm_weights(market);
  } else {
    w = std::get<Vector>(config.initial_guess);
    require_length(w, n, "solve_given_pi: initial guess");
  }

  SolveOutcome out;
  Vector f = residual_with_target(w, lambda, target, scale);
  out.residual_history.push_back(inf_norm(f));
  int it = 0;
  while (out.residual_history.back() > config.residual_tolerance && it < config.max_iterations) {
    Matrix jac = config.jacobian_mode == JacobianMode::analytic
                     ? jacobian_F(w, market, lambda)
                     : finite_difference_jacobian(w, market, lambda, pi);
    Eigen::FullPivLU<Matrix> lu(jac);
    if (!lu.isInvertible()) {
      jac += 1e-10 * Matrix::Identity(n, n);
      lu.compute(jac);
      out.regularized = true;
      if (!lu.isInvertible()) {
        throw SingularJacobianError("solve_given_pi: Jacobian singular at iteration " +
                                    std::to_string(it));
      }
    }
    const Vector step = lu.solve(f);
    w -= step;
    ++it;
    f = residual_with_target(w, lambda, target, scale);
    out.residual_history.push_back(inf_norm(f));
    if (inf_norm(step) <= config.step_tolerance * (1.0 + inf_norm(w))) break;
  }
  out.iterations = it;
  out.residual_norm = out.residual_history.back();
  out.converged = out.residual_norm <= config.residual_tolerance && w.allFinite();
  out.delta_lambda = w.dot(lambda) / market.market_variance();
  out.weights = std::move(w);
  return out;
}

SolveOutcome solve_self_consistent(const MarketScenario& market, const Vector& lambda) {
  check_inputs(market, lambda, "solve_self_consistent");
  SpdFactor sigma(market.sigma(), "market covariance");
  const Vector u = sigma.solve(Vector(market.pi_c() - lambda));
  const double a = u.dot(lambda) / market.market_variance();
  const double delta = market.delta();
  const double disc = delta * delta - 4.0 * a;
  if (disc < 0.0) {
    throw NoEquilibriumError("solve_self_consistent: delta^2 < 4a, no real equilibrium");
  }
  // smaller root; (delta - sqrt(disc)) / 2 written to avoid cancellation
  const double sq = std::sqrt(disc);
  const double delta_lambda = delta > 0.0 ? 2.0 * a / (delta + sq) : 0.5 * (delta - sq);
  SolveOutcome out = make_outcome(market, lambda, u / (delta - delta_lambda));
  out.delta_lambda = delta_lambda;
  out.residual_norm = inf_norm(residual_F(out.weights, market, lambda, market.pi_c()));
  out.residual_history = {out.residual_norm};
  out.converged = true;
  return out;
}

SolveOutcome solve_self_consistent_iterative(const MarketScenario& market, const Vector& lambda,
                                             double damping, int max_iterations,
                                             double tolerance) {
  check_inputs(market, lambda, "solve_self_consistent_iterative");
  if (!(damping > 0.0 && damping <= 1.0)) throw DomainError("damping must lie in (0, 1]");
  SpdFactor sigma(market.sigma(), "market covariance");
  const Vector u = sigma.solve(Vector(market.pi_c() - lambda));
  const double var_m = market.market_variance();
  Vector w = u / market.delta();  // delta_lambda = 0
  SolveOutcome out;
  int it = 0;
  for (; it < max_iterations; ++it) {
    const double denom = market.delta() - w.dot(lambda) / var_m;
    if (!(denom > 0.0)) break;
    const Vector next = (1.0 - damping) * w + damping * (u / denom);
    const double change = inf_norm(next - w);
    w = next;
    if (change <= tolerance * (1.0 + inf_norm(w))) {
      out.converged = true;
      ++it;
      break;
    }
  }
  out.iterations = it;
  out.delta_lambda = w.dot(lambda) / var_m;
  out.residual_norm = inf_norm(residual_F(w, market, lambda, market.pi_c()));
  out.residual_history = {out.residual_norm};
  out.weights = std::move(w);
  return out;
}

SolveOutcome first_order_equilibrium(const MarketScenario& market, const Vector& lambda) {
  check_inputs(market, lambda, "first_order_equilibrium");
  SolveOutcome out = make_outcome(market, lambda, affine_target(market, lambda, market.pi_c()));
  out.iterations = 1;
  out.residual_norm = inf_norm(residual_F(out.weights, market, lambda, market.pi_c()));
  out.residual_history = {out.residual_norm};
  out.converged = false;
  return out;
}

Vector investor_optimal_portfolio(const MarketScenario& market, const Vector& lambda,
                                  double delta_lambda) {
  require_length(lambda, market.n(), "investor_optimal_portfolio: lambda");
  const double coeff = market.delta() + 2.0 * delta_lambda;
  if (!(coeff > 0.0)) throw DomainError("investor_optimal_portfolio: delta + 2 delta_lambda <= 0");
  SpdFactor sigma(market.sigma(), "market covariance");
  return sigma.solve(Vector(market.pi_c() + lambda)) / coeff;
}

Vector reference_model_portfolio(const Vector& pi, const Matrix& sigma_gamma, double delta) {
  require_shape(sigma_gamma, pi.size(), pi.size(), "reference_model_portfolio: sigma_gamma");
  if (delta == 0.0) throw DomainError("reference_model_portfolio: delta must be non-zero");
  SpdFactor f(sigma_gamma, "reference covariance");
  return f.solve(pi) / delta;
}

}  // namespace shadowbl
