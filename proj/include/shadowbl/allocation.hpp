#pragma once

#include <variant>

#include "shadowbl/domain.hpp"
#include "shadowbl/views.hpp"

namespace shadowbl {

/// Sub-vector and principal sub-matrix of the posterior on the investor's assets.
PosteriorDistribution restrict_to_information_set(const PosteriorDistribution& posterior,
                                                  const InformationSet& info_set);

/// argmax w^T pi* - delta/2 w^T Sigma* w = delta^{-1} Sigma*^{-1} pi*.
Vector unconstrained_allocation(const PosteriorDistribution& restricted, double delta);

/// Unconstrained allocation rescaled so that sqrt(w^T Sigma* w) == sigma_cap.
Vector risk_constrained_allocation(const PosteriorDistribution& restricted, double delta,
                                   double sigma_cap);

/// (1^T Sigma*^{-1} 1)^{-1} Sigma*^{-1} 1.
Vector min_variance_allocation(const PosteriorDistribution& restricted);

struct TwoFundAllocation {
  Vector weights;
  /// Coefficient on the unconstrained allocation.
  double a = 0.0;
  /// Coefficient on the minimum-variance allocation.
  double b = 0.0;
  double min_variance_risk = 0.0;
};

/// w = a w_u + b w_mv with 1^T w = 1 and w^T Sigma* w = sigma_cap^2, a >= 0
/// chosen to maximize expected return. Throws InfeasibleError when sigma_cap is
/// below the minimum-variance risk.
TwoFundAllocation risk_budget_allocation(const PosteriorDistribution& restricted, double delta,
                                         double sigma_cap);

struct Unconstrained {};
struct RiskConstrained {
  double sigma_cap = 0.0;
};
struct RiskBudgetConstrained {
  double sigma_cap = 0.0;
};
struct MinVariance {};

using Objective = std::variant<Unconstrained, RiskConstrained, RiskBudgetConstrained, MinVariance>;

const char* objective_name(const Objective& o);

struct AllocationRequest {
  PosteriorDistribution posterior;
  InformationSet info_set;
  Objective objective = Unconstrained{};
  double delta = 0.0;
};

struct AllocationResult {
  /// Full-length weights, zero outside the information set.
  Vector weights;
  /// Weights on the information set only.
  Vector restricted_weights;
  PortfolioMetrics metrics;
  /// Present for the risk+budget objective.
  std::optional<TwoFundAllocation> two_fund;
};

/// Metrics are w^T pi* (excess) and sqrt(w^T Sigma* w) on the restricted posterior.
AllocationResult allocate(const AllocationRequest& request);

}  // namespace shadowbl
