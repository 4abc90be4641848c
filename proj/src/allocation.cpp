#include "shadowbl/allocation.hpp"

#include <cmath>
#include <set>

#include "shadowbl/equilibrium.hpp"

namespace shadowbl {

namespace {

double risk_of(const Vector& w, const Matrix& cov) {
  return std::sqrt(std::max(w.dot(cov * w), 0.0));
}

}  // namespace

PosteriorDistribution restrict_to_information_set(const PosteriorDistribution& posterior,
                                                  const InformationSet& info_set) {
  const auto n = posterior.mean.size();
  const auto& idx = info_set.known_assets;
  if (idx.empty()) throw DomainError("restrict_to_information_set: empty information set");
  std::set<std::size_t> seen;
  for (std::size_t i : idx) {
    if (i >= static_cast<std::size_t>(n)) {
      throw DomainError("restrict_to_information_set: asset index " + std::to_string(i) +
                        " out of range");
    }
    if (!seen.insert(i).second) {
      throw DomainError("restrict_to_information_set: duplicate asset index " +
                        std::to_string(i));
    }
  }
  const auto m = static_cast<Eigen::Index>(idx.size());
  auto pick_matrix = [&](const Matrix& src) {
    if (src.rows() != n || src.cols() != n) return Matrix();
    Matrix out(m, m);
    for (Eigen::Index r = 0; r < m; ++r)
      for (Eigen::Index c = 0; c < m; ++c) out(r, c) = src(idx[r], idx[c]);
    return out;
  };
  PosteriorDistribution out;
  out.mean.resize(m);
  for (Eigen::Index r = 0; r < m; ++r) out.mean(r) = posterior.mean(idx[r]);
  out.covariance = pick_matrix(posterior.covariance);
  out.precision_prior = pick_matrix(posterior.precision_prior);
  out.precision_views = pick_matrix(posterior.precision_views);
  out.pick_full_row_rank = posterior.pick_full_row_rank;
  return out;
}

Vector unconstrained_allocation(const PosteriorDistribution& restricted, double delta) {
  if (!(delta > 0.0)) throw DomainError("unconstrained_allocation: delta must be > 0");
  SpdFactor f(restricted.covariance, "posterior covariance block");
  return f.solve(restricted.mean) / delta;
}

Vector risk_constrained_allocation(const PosteriorDistribution& restricted, double delta,
                                   double sigma_cap) {
  if (!(sigma_cap > 0.0)) throw DomainError("risk_constrained_allocation: sigma_cap must be > 0");
  const Vector wu = unconstrained_allocation(restricted, delta);
  const double risk = risk_of(wu, restricted.covariance);
  if (!(risk > 0.0)) {
    throw DomainError("risk_constrained_allocation: unconstrained allocation is zero");
  }
  return (sigma_cap / risk) * wu;
}

Vector min_variance_allocation(const PosteriorDistribution& restricted) {
  SpdFactor f(restricted.covariance, "posterior covariance block");
  const Vector inv_ones = f.solve(Vector(Vector::Ones(restricted.mean.size())));
  return inv_ones / inv_ones.sum();
}

TwoFundAllocation risk_budget_allocation(const PosteriorDistribution& restricted, double delta,
                                         double sigma_cap) {
  if (!(sigma_cap > 0.0)) throw DomainError("risk_budget_allocation: sigma_cap must be > 0");
  const Matrix& cov = restricted.covariance;
  const Vector wu = unconstrained_allocation(restricted, delta);
  const Vector wmv = min_variance_allocation(restricted);
  TwoFundAllocation out;
  out.min_variance_risk = risk_of(wmv, cov);
  if (sigma_cap < out.min_variance_risk * (1.0 - 1e-12)) {
    throw InfeasibleError("risk_budget_allocation: sigma_cap " + std::to_string(sigma_cap) +
                              " is below the minimum-variance risk " +
                              std::to_string(out.min_variance_risk),
                          out.min_variance_risk);
  }
  // w(a) = a wu + b(a) wmv with b(a) = (1 - a 1^T wu) / 1^T wmv. Since Sigma wmv is
  // proportional to 1, the direction d = wu - (1^T wu) wmv is Sigma-orthogonal to
  // wmv and risk^2(a) = risk_mv^2 + a^2 d^T Sigma d.
  const double s_u = wu.sum();
  const double s_mv = wmv.sum();
  const Vector d = wu - (s_u / s_mv) * wmv;
  const double d_var = d.dot(cov * d);
  const double slack = sigma_cap * sigma_cap - out.min_variance_risk * out.min_variance_risk;
  out.a = (d_var > 0.0 && slack > 0.0) ? std::sqrt(slack / d_var) : 0.0;
  // expected return increases with a (pi*^T d = delta d^T Sigma wu >= 0), so take the larger root
  out.b = (1.0 - out.a * s_u) / s_mv;
  out.weights = out.a * wu + out.b * wmv;
  return out;
}

const char* objective_name(const Objective& o) {
  return std::visit(
      [](const auto& obj) -> const char* {
        using T = std::decay_t<decltype(obj)>;
        if constexpr (std::is_same_v<T, Unconstrained>) return "unconstrained";
        else if constexpr (std::is_same_v<T, RiskConstrained>) return "risk_constrained";
        else if constexpr (std::is_same_v<T, RiskBudgetConstrained>) return "risk_budget";
        else return "min_variance";
      },
      o);
}

AllocationResult allocate(const AllocationRequest& request) {
  const auto n = request.posterior.mean.size();
  const PosteriorDistribution restricted =
      restrict_to_information_set(request.posterior, request.info_set);
  AllocationResult out;
  out.restricted_weights = std::visit(
      [&](const auto& obj) -> Vector {
        using T = std::decay_t<decltype(obj)>;
        if constexpr (std::is_same_v<T, Unconstrained>) {
          return unconstrained_allocation(restricted, request.delta);
        } else if constexpr (std::is_same_v<T, RiskConstrained>) {
          return risk_constrained_allocation(restricted, request.delta, obj.sigma_cap);
        } else if constexpr (std::is_same_v<T, RiskBudgetConstrained>) {
          out.two_fund = risk_budget_allocation(restricted, request.delta, obj.sigma_cap);
          return out.two_fund->weights;
        } else {
          return min_variance_allocation(restricted);
        }
      },
      request.objective);
  out.weights = Vector::Zero(n);
  for (std::size_t r = 0; r < request.info_set.known_assets.size(); ++r) {
    out.weights(static_cast<Eigen::Index>(request.info_set.known_assets[r])) =
        out.restricted_weights(static_cast<Eigen::Index>(r));
  }
  out.metrics = portfolio_metrics(out.restricted_weights, restricted.mean, restricted.covariance, 0.0);
  return out;
}

}  // namespace shadowbl
