#pragma once

#include <variant>
#include <vector>

#include "shadowbl/domain.hpp"

namespace shadowbl {

enum class JacobianMode { analytic, finite_difference };
enum class InitialGuess { capm_weights, zeros };

struct SolverConfig {
  int max_iterations = 50;
  double residual_tolerance = 1e-12;
  double step_tolerance = 1e-15;
  JacobianMode jacobian_mode = JacobianMode::analytic;
  std::variant<InitialGuess, Vector> initial_guess = InitialGuess::capm_weights;
};

struct SolveOutcome {
  Vector weights;
  int iterations = 0;
  /// Infinity norm of F at the returned weights.
  double residual_norm = 0.0;
  bool converged = false;
  /// lambda_M / sigma_M^2 at the returned weights.
  double delta_lambda = 0.0;
  /// ||F||_inf at the initial guess and after every Newton step.
  std::vector<double> residual_history;
  /// True when the singular-Jacobian fallback (J + 1e-10 I) was used.
  bool regularized = false;
};

/// lambda_i x_i^2 + x_i sum_{j != i} lambda_j x_j, written with diagonal and
/// off-diagonal shadow-cost matrices exactly as the system is stated.
Vector nonlinear_term_literal(const Vector& weights, const Vector& lambda);

/// Same quantity in compact form: (W^T lambda) W.
Vector nonlinear_term(const Vector& weights, const Vector& lambda);

/// F(W) = W - (W^T lambda) W / (delta sigma_M^2) - (delta Sigma)^{-1} (pi - lambda).
Vector residual_F(const Vector& weights, const MarketScenario& market, const Vector& lambda,
                  const Vector& pi);

/// J(W) = (1 - W^T lambda / (delta sigma_M^2)) I - W lambda^T / (delta sigma_M^2).
Matrix jacobian_F(const Vector& weights, const MarketScenario& market, const Vector& lambda);

/// Central differences of residual_F with step 1e-7 * max(1, |W_i|).
Matrix finite_difference_jacobian(const Vector& weights, const MarketScenario& market,
                                  const Vector& lambda, const Vector& pi);

/// (delta Sigma)^{-1} pi_c.
Vector capm_weights(const MarketScenario& market);

/// Newton-Raphson on F(W) = 0 for a caller-supplied pi.
SolveOutcome solve_given_pi(const MarketScenario& market, const Vector& lambda, const Vector& pi,
                            const SolverConfig& config = {});

/// Fixed point of W = (delta - W^T lambda / sigma_M^2)^{-1} Sigma^{-1} (pi_c - lambda) in
/// closed form (smaller root of delta_lambda (delta - delta_lambda) = a). Throws
/// NoEquilibriumError when delta^2 < 4a.
SolveOutcome solve_self_consistent(const MarketScenario& market, const Vector& lambda);

/// The same fixed point by damped iteration on W, starting from delta_lambda = 0.
SolveOutcome solve_self_consistent_iterative(const MarketScenario& market, const Vector& lambda,
                                             double damping = 0.5, int max_iterations = 100000,
                                             double tolerance = 1e-15);

/// First-order market portfolio W = (delta Sigma)^{-1} (pi_c - lambda): the
/// first Newton iterate on F (with pi := pi_c) from W = 0. This is the
/// portfolio behind the reference incomplete-market tables.
SolveOutcome first_order_equilibrium(const MarketScenario& market, const Vector& lambda);

/// w* = (delta + 2 delta_lambda)^{-1} Sigma^{-1} (pi_c + lambda).
Vector investor_optimal_portfolio(const MarketScenario& market, const Vector& lambda,
                                  double delta_lambda);

/// w = (delta Sigma_gamma)^{-1} pi.
Vector reference_model_portfolio(const Vector& pi, const Matrix& sigma_gamma, double delta);

}  // namespace shadowbl
