#include "shadowbl/domain.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

namespace shadowbl {

namespace {

bool matrices_equal(const Matrix& a, const Matrix& b) {
  return a.rows() == b.rows() && a.cols() == b.cols() && a == b;
}

bool vectors_equal(const Vector& a, const Vector& b) { return a.size() == b.size() && a == b; }

std::string fmt(double x) {
  std::ostringstream os;
  os.precision(10);
  os << x;
  return os.str();
}

}  // namespace

MarketScenario::MarketScenario(std::vector<std::string> asset_labels, Matrix sigma, Vector pi_c,
                               double r_f, double expected_market_return, double sigma_m)
    : labels_(std::move(asset_labels)),
      sigma_(std::move(sigma)),
      pi_c_(std::move(pi_c)),
      r_f_(r_f),
      expected_market_return_(expected_market_return),
      sigma_m_(sigma_m),
      delta_((expected_market_return - r_f) / (sigma_m * sigma_m)) {
  const auto n = pi_c_.size();
  if (n < 1) throw DimensionError("market: at least one asset required");
  require_shape(sigma_, n, n, "market.covariance");
  if (static_cast<Eigen::Index>(labels_.size()) != n) {
    throw DimensionError("market.assets: " + std::to_string(labels_.size()) +
                         " labels for " + std::to_string(n) + " assets");
  }
}

bool MarketScenario::operator==(const MarketScenario& o) const {
  return labels_ == o.labels_ && matrices_equal(sigma_, o.sigma_) &&
         vectors_equal(pi_c_, o.pi_c_) && r_f_ == o.r_f_ &&
         expected_market_return_ == o.expected_market_return_ && sigma_m_ == o.sigma_m_;
}

bool ShadowCostSpec::operator==(const ShadowCostSpec& o) const {
  const bool rm_equal =
      random_mean.has_value() == o.random_mean.has_value() &&
      (!random_mean || (vectors_equal(random_mean->lambda_1, o.random_mean->lambda_1) &&
                        random_mean->tau_1 == o.random_mean->tau_1));
  return vectors_equal(lambda, o.lambda) && matrices_equal(Lambda, o.Lambda) &&
         matrices_equal(cross_cov, o.cross_cov) && tau == o.tau && rm_equal;
}

ShadowCostSpec ShadowCostSpec::zeros(Eigen::Index n, double tau) {
  ShadowCostSpec s;
  s.lambda = Vector::Zero(n);
  s.Lambda = Matrix::Identity(n, n);
  s.cross_cov = Matrix::Zero(n, n);
  s.tau = tau;
  return s;
}

bool ViewSet::operator==(const ViewSet& o) const {
  if (!matrices_equal(P, o.P) || !vectors_equal(q, o.q) || kinds != o.kinds) return false;
  if (uncertainty.index() != o.uncertainty.index()) return false;
  if (const auto* c = std::get_if<Confidence>(&uncertainty)) {
    return *c == std::get<Confidence>(o.uncertainty);
  }
  return matrices_equal(std::get<Matrix>(uncertainty), std::get<Matrix>(o.uncertainty));
}

InformationSet InformationSet::all(Eigen::Index n, std::string investor_id) {
  InformationSet s{std::move(investor_id), {}};
  for (Eigen::Index i = 0; i < n; ++i) s.known_assets.push_back(static_cast<std::size_t>(i));
  return s;
}

bool ValidationReport::ok() const { return errors().empty(); }

std::vector<Issue> ValidationReport::errors() const {
  std::vector<Issue> out;
  std::copy_if(issues.begin(), issues.end(), std::back_inserter(out),
               [](const Issue& i) { return i.severity == Severity::error; });
  return out;
}

std::vector<Issue> ValidationReport::warnings() const {
  std::vector<Issue> out;
  std::copy_if(issues.begin(), issues.end(), std::back_inserter(out),
               [](const Issue& i) { return i.severity == Severity::warning; });
  return out;
}

ValidationReport validate_scenario(const MarketScenario& market, const ShadowCostSpec& shadow,
                                   const ViewSet* views, const InformationSet* info_set) {
  ValidationReport r;
  auto error = [&r](std::string path, std::string msg) {
    r.issues.push_back({Severity::error, std::move(path), std::move(msg)});
  };
  auto warn = [&r](std::string path, std::string msg) {
    r.issues.push_back({Severity::warning, std::move(path), std::move(msg)});
  };
  const auto n = market.n();
  const Matrix& sigma = market.sigma();

  // market
  if (!sigma.allFinite()) error("market.covariance", "non-finite entries");
  if (!is_symmetric(sigma, 1e-12)) {
    error("market.covariance", "not symmetric within 1e-12 (max asymmetry " +
                                   fmt((sigma - sigma.transpose()).cwiseAbs().maxCoeff()) + ")");
  } else if (Eigen::LLT<Matrix> llt(sigma); llt.info() != Eigen::Success ||
                                            !(llt.matrixLLT().diagonal().array() > 0.0).all()) {
    error("market.covariance", "not positive definite");
  }
  if (!(market.sigma_m() > 0.0)) error("market.market_volatility", "must be > 0");
  if (!std::isfinite(market.delta())) error("market", "risk-aversion delta is not finite");
  if (!market.pi_c().allFinite()) error("market.capm_excess_returns", "non-finite entries");

  // shadow costs
  bool shadow_shapes_ok = true;
  if (shadow.lambda.size() != n) {
    error("shadow_costs.mean", "length " + std::to_string(shadow.lambda.size()) +
                                   ", expected " + std::to_string(n));
    shadow_shapes_ok = false;
  } else {
    for (Eigen::Index k = 0; k < n; ++k) {
      if (!(shadow.lambda(k) >= 0.0)) {
        error("shadow_costs.mean[" + std::to_string(k) + "]", "shadow-cost must be >= 0");
      }
    }
  }
  if (shadow.Lambda.rows() != n || shadow.Lambda.cols() != n) {
    error("shadow_costs.covariance", "expected " + std::to_string(n) + "x" + std::to_string(n));
    shadow_shapes_ok = false;
  } else if (!is_symmetric(shadow.Lambda, 1e-12)) {
    error("shadow_costs.covariance", "not symmetric within 1e-12");
  } else if (!spectrum(shadow.Lambda).psd) {
    error("shadow_costs.covariance", "not positive semidefinite");
  }
  if (shadow.cross_cov.rows() != n || shadow.cross_cov.cols() != n) {
    error("shadow_costs.cross_covariance",
          "expected " + std::to_string(n) + "x" + std::to_string(n));
    shadow_shapes_ok = false;
  }
  if (!(shadow.tau > 0.0)) error("shadow_costs.tau", "must be > 0");
  if (shadow.random_mean) {
    if (shadow.random_mean->lambda_1.size() != n) {
      error("shadow_costs.random_mean.mean", "length mismatch");
    }
    if (!(shadow.random_mean->tau_1 > 0.0)) error("shadow_costs.random_mean.tau", "must be > 0");
  }
  if (shadow_shapes_ok && shadow.tau > 0.0 && sigma.allFinite()) {
    Matrix joint(2 * n, 2 * n);
    joint << shadow.tau * sigma, shadow.cross_cov, shadow.cross_cov.transpose(), shadow.Lambda;
    const Spectrum s = spectrum(joint);
    if (!s.psd) {
      warn("shadow_costs", "joint covariance of (returns, shadow-costs) is not PSD (min eigenvalue " +
                               fmt(s.min) + ")");
    }
  }

  // views
  if (views) {
    const auto v = views->P.rows();
    bool shapes_ok = true;
    if (views->P.cols() != n) {
      error("views.pick", "expected " + std::to_string(n) + " columns");
      shapes_ok = false;
    }
    if (views->q.size() != v) {
      error("views.q", "length " + std::to_string(views->q.size()) + ", expected " +
                           std::to_string(v));
      shapes_ok = false;
    }
    if (static_cast<Eigen::Index>(views->kinds.size()) != v) {
      error("views.kinds", "expected one kind per view row");
      shapes_ok = false;
    }
    if (shapes_ok) {
      for (Eigen::Index l = 0; l < v; ++l) {
        const std::string path = "views.pick[" + std::to_string(l) + "]";
        const double sum = views->P.row(l).sum();
        const bool absolute = views->kinds[static_cast<std::size_t>(l)] == ViewKind::absolute;
        const double target = absolute ? 1.0 : 0.0;
        if (std::abs(sum - target) > kViewRowSumTol) {
          error(path, std::string(absolute ? "absolute" : "relative") + " view row sums to " +
                          fmt(sum) + ", expected " + fmt(target));
        }
        if ((views->P.row(l).array().abs() > 1.0).any()) {
          error(path, "entries must lie in [-1, 1]");
        }
      }
      Matrix omega;
      bool omega_ok = true;
      if (const auto* c = std::get_if<Confidence>(&views->uncertainty)) {
        if (!(c->c > 0.0 && c->c < 1.0)) {
          error("views.confidence", "must lie in (0, 1)");
          omega_ok = false;
        } else {
          omega = (1.0 / c->c - 1.0) * views->P * sigma * views->P.transpose();
        }
      } else {
        omega = std::get<Matrix>(views->uncertainty);
        if (omega.rows() != v || omega.cols() != v) {
          error("views.omega", "expected " + std::to_string(v) + "x" + std::to_string(v));
          omega_ok = false;
        }
      }
      if (omega_ok) {
        if (!is_symmetric(omega, 1e-12)) {
          error("views.omega", "not symmetric");
        } else if (Eigen::LLT<Matrix> llt(omega);
                   v > 0 && (llt.info() != Eigen::Success ||
                             !(llt.matrixLLT().diagonal().array() > 0.0).all())) {
          error("views.omega", "not positive definite");
        }
      }
      if (info_set) {
        std::set<std::size_t> known(info_set->known_assets.begin(), info_set->known_assets.end());
        for (Eigen::Index k = 0; k < n; ++k) {
          if (known.count(static_cast<std::size_t>(k))) continue;
          if (views->P.col(k).cwiseAbs().maxCoeff() != 0.0) {
            error("views.pick", "column " + std::to_string(k) +
                                    " is outside the investor's information set but non-zero");
          }
        }
      }
    }
  }

  if (info_set) {
    std::set<std::size_t> seen;
    if (info_set->known_assets.empty()) error("info_set", "must not be empty");
    for (std::size_t idx : info_set->known_assets) {
      if (idx >= static_cast<std::size_t>(n)) {
        error("info_set", "asset index " + std::to_string(idx) + " out of range");
      }
      if (!seen.insert(idx).second) {
        error("info_set", "duplicate asset index " + std::to_string(idx));
      }
    }
  }
  return r;
}

}  // namespace shadowbl
