#pragma once

#include <string_view>
#include <vector>

#include "shadowbl/domain.hpp"
#include "shadowbl/reference_model.hpp"

namespace shadowbl {

enum class Stance { very_bearish, bearish, bullish, very_bullish };

/// eta in {-2, -1, +1, +2}.
double stance_multiplier(Stance s);
Stance stance_from_string(std::string_view s);
const char* to_string(Stance s);
const char* to_string(ViewKind k);
ViewKind view_kind_from_string(std::string_view s);

/// (1/c - 1) P Sigma P^T for c in (0, 1).
Matrix omega_from_confidence(double c, const Matrix& P, const Matrix& sigma);

/// Omega of a view set: the explicit matrix, or derived from the confidence scalar.
Matrix view_uncertainty(const ViewSet& views, const Matrix& sigma);

/// q_k = (P pi)_k + eta_k sqrt((P Sigma P^T)_kk).
Vector quantify_qualitative_views(const Matrix& P, const Vector& pi, const Matrix& sigma,
                                  const std::vector<Stance>& stances);

/// Gaussian law of excess returns after conditioning on shadow-costs and views.
struct PosteriorDistribution {
  Vector mean;
  Matrix covariance;
  /// Sigma_gamma^{-1}
  Matrix precision_prior;
  /// P^T Omega^{-1} P
  Matrix precision_views;
  /// False when P has linearly dependent rows.
  bool pick_full_row_rank = true;
};

/// Sigma* = [Sigma_gamma^{-1} + P^T Omega^{-1} P]^{-1},
/// pi* = Sigma* [Sigma_gamma^{-1} pi + P^T Omega^{-1} q].
/// The summed precision is factored once; both moments come from that factor.
PosteriorDistribution posterior(const ReferenceModel& prior, const Matrix& P, const Vector& q,
                                const Matrix& omega);

PosteriorDistribution posterior(const ReferenceModel& prior, const ViewSet& views,
                                const Matrix& market_sigma);

/// Prior placed on the equilibrium mean before views: N(pi, tau * Sigma_gamma).
/// With the complete-information covariance Sigma this is the classic tau Sigma.
ReferenceModel view_prior(const ReferenceModel& reference, double tau);

/// Complete-information special case: prior N(pi_c, tau Sigma).
PosteriorDistribution bl_posterior(const MarketScenario& market, double tau,
                                   const ViewSet& views);

struct PredictiveViews {
  Vector mean;
  Matrix covariance;
};

/// Marginal law of the view vector: N(P pi, P Sigma_gamma P^T + Omega).
PredictiveViews posterior_predictive_views(const ReferenceModel& prior, const Matrix& P,
                                           const Matrix& omega);
PredictiveViews posterior_predictive_views(const ReferenceModel& prior, const ViewSet& views,
                                           const Matrix& market_sigma);

}  // namespace shadowbl
