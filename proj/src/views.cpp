#include "shadowbl/views.hpp"

#include <cmath>
#include <string>

namespace shadowbl {

double stance_multiplier(Stance s) {
  switch (s) {
    case Stance::very_bearish: return -2.0;
    case Stance::bearish: return -1.0;
    case Stance::bullish: return 1.0;
    case Stance::very_bullish: return 2.0;
  }
  return 0.0;
}

Stance stance_from_string(std::string_view s) {
  if (s == "very_bearish") return Stance::very_bearish;
  if (s == "bearish") return Stance::bearish;
  if (s == "bullish") return Stance::bullish;
  if (s == "very_bullish") return Stance::very_bullish;
  throw DomainError("unknown stance '" + std::string(s) + "'");
}

const char* to_string(Stance s) {
  switch (s) {
    case Stance::very_bearish: return "very_bearish";
    case Stance::bearish: return "bearish";
    case Stance::bullish: return "bullish";
    case Stance::very_bullish: return "very_bullish";
  }
  return "unknown";
}

const char* to_string(ViewKind k) { return k == ViewKind::absolute ? "absolute" : "relative"; }

ViewKind view_kind_from_string(std::string_view s) {
  if (s == "absolute") return ViewKind::absolute;
  if (s == "relative") return ViewKind::relative;
  throw DomainError("unknown view kind '" + std::string(s) + "'");
}

Matrix omega_from_confidence(double c, const Matrix& P, const Matrix& sigma) {
  if (!(c > 0.0 && c < 1.0)) {
    throw DomainError("confidence c must lie in (0, 1), got " + std::to_string(c));
  }
  require_shape(sigma, P.cols(), P.cols(), "omega_from_confidence: sigma");
  return symmetrize((1.0 / c - 1.0) * P * sigma * P.transpose());
}

Matrix view_uncertainty(const ViewSet& views, const Matrix& sigma) {
  if (const auto* c = std::get_if<Confidence>(&views.uncertainty)) {
    return omega_from_confidence(c->c, views.P, sigma);
  }
  const Matrix& omega = std::get<Matrix>(views.uncertainty);
  require_shape(omega, views.P.rows(), views.P.rows(), "views.omega");
  return omega;
}

Vector quantify_qualitative_views(const Matrix& P, const Vector& pi, const Matrix& sigma,
                                  const std::vector<Stance>& stances) {
  require_length(pi, P.cols(), "quantify_qualitative_views: pi");
  require_shape(sigma, P.cols(), P.cols(), "quantify_qualitative_views: sigma");
  if (static_cast<Eigen::Index>(stances.size()) != P.rows()) {
    throw DimensionError("quantify_qualitative_views: one stance per view row required");
  }
  const Vector base = P * pi;
  const Vector var = (P * sigma * P.transpose()).diagonal();
  Vector q(P.rows());
  for (Eigen::Index k = 0; k < P.rows(); ++k) {
    q(k) = base(k) + stance_multiplier(stances[static_cast<std::size_t>(k)]) *
                         std::sqrt(std::max(var(k), 0.0));
  }
  return q;
}

PosteriorDistribution posterior(const ReferenceModel& prior, const Matrix& P, const Vector& q,
                                const Matrix& omega) {
  const auto n = prior.mean.size();
  const auto v = P.rows();
  require_shape(prior.covariance, n, n, "posterior: prior covariance");
  require_shape(P, v, n, "posterior: pick matrix");
  require_length(q, v, "posterior: q");
  require_shape(omega, v, v, "posterior: omega");

  SpdFactor prior_factor(prior.covariance, "prior covariance");
  PosteriorDistribution post;
  post.precision_prior = prior_factor.inverse();
  Vector rhs = post.precision_prior * prior.mean;
  if (v > 0) {
    SpdFactor omega_factor(omega, "view uncertainty omega");
    const Matrix omega_inv_p = omega_factor.solve(P);
    post.precision_views = symmetrize(P.transpose() * omega_inv_p);
    rhs += omega_inv_p.transpose() * q;
    post.pick_full_row_rank = Eigen::FullPivLU<Matrix>(P).rank() == v;
  } else {
    post.precision_views = Matrix::Zero(n, n);
    post.mean = prior.mean;
    post.covariance = prior.covariance;
    return post;
  }
  SpdFactor precision(post.precision_prior + post.precision_views, "posterior precision");
  post.covariance = precision.inverse();
  post.mean = precision.solve(rhs);
  return post;
}

PosteriorDistribution posterior(const ReferenceModel& prior, const ViewSet& views,
                                const Matrix& market_sigma) {
  return posterior(prior, views.P, views.q, view_uncertainty(views, market_sigma));
}

ReferenceModel view_prior(const ReferenceModel& reference, double tau) {
  if (!(tau > 0.0)) throw DomainError("view_prior: tau must be > 0");
  ReferenceModel m = reference;
  m.covariance = tau * reference.covariance;
  return m;
}

PosteriorDistribution bl_posterior(const MarketScenario& market, double tau,
                                   const ViewSet& views) {
  if (!(tau > 0.0)) throw DomainError("bl_posterior: tau must be > 0");
  ReferenceModel prior;
  prior.gamma = Gamma::lambda_conditioned;
  prior.mean = market.pi_c();
  prior.covariance = tau * market.sigma();
  return posterior(prior, views, market.sigma());
}

PredictiveViews posterior_predictive_views(const ReferenceModel& prior, const Matrix& P,
                                           const Matrix& omega) {
  require_shape(P, P.rows(), prior.mean.size(), "posterior_predictive_views: pick matrix");
  require_shape(omega, P.rows(), P.rows(), "posterior_predictive_views: omega");
  PredictiveViews out;
  out.mean = P * prior.mean;
  out.covariance = symmetrize(P * prior.covariance * P.transpose() + omega);
  return out;
}

PredictiveViews posterior_predictive_views(const ReferenceModel& prior, const ViewSet& views,
                                           const Matrix& market_sigma) {
  return posterior_predictive_views(prior, views.P, view_uncertainty(views, market_sigma));
}

}  // namespace shadowbl
