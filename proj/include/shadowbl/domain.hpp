#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "shadowbl/linalg.hpp"

namespace shadowbl {

/// Asset universe with its covariance, CAPM-implied excess returns and market
/// parameters. The market price of risk delta = (E[R_M] - r_f) / sigma_M^2 is
/// derived at construction and never read from input.
class MarketScenario {
 public:
  MarketScenario(std::vector<std::string> asset_labels, Matrix sigma, Vector pi_c, double r_f,
                 double expected_market_return, double sigma_m);

  Eigen::Index n() const { return pi_c_.size(); }
  const std::vector<std::string>& asset_labels() const { return labels_; }
  const Matrix& sigma() const { return sigma_; }
  const Vector& pi_c() const { return pi_c_; }
  double r_f() const { return r_f_; }
  double expected_market_return() const { return expected_market_return_; }
  double sigma_m() const { return sigma_m_; }
  double market_variance() const { return sigma_m_ * sigma_m_; }
  double delta() const { return delta_; }

  bool operator==(const MarketScenario& other) const;

 private:
  std::vector<std::string> labels_;
  Matrix sigma_;
  Vector pi_c_;
  double r_f_;
  double expected_market_return_;
  double sigma_m_;
  double delta_;
};

struct RandomMean {
  Vector lambda_1;
  double tau_1 = 1.0;
  bool operator==(const RandomMean&) const = default;
};

/// Shadow-costs of information: mean, covariance, cross-covariance with returns.
struct ShadowCostSpec {
  Vector lambda;
  Matrix Lambda;
  /// Rows index returns, columns index shadow-costs. Not symmetric in general.
  Matrix cross_cov;
  double tau = 0.5;
  std::optional<RandomMean> random_mean;

  bool operator==(const ShadowCostSpec& other) const;

  static ShadowCostSpec zeros(Eigen::Index n, double tau = 0.5);
};

enum class ViewKind { absolute, relative };

/// Scalar confidence c in (0,1); Omega = (1/c - 1) P Sigma P^T.
struct Confidence {
  double c = 0.5;
  bool operator==(const Confidence&) const = default;
};

/// Investor views: pick-matrix P (v x n), pick-vector q, per-row kind and
/// either a confidence scalar or an explicit Omega.
struct ViewSet {
  Matrix P;
  Vector q;
  std::vector<ViewKind> kinds;
  std::variant<Confidence, Matrix> uncertainty = Confidence{};

  Eigen::Index count() const { return P.rows(); }
  bool operator==(const ViewSet& other) const;
};

struct InformationSet {
  std::string investor_id;
  /// Zero-based asset indices, ordered.
  std::vector<std::size_t> known_assets;

  static InformationSet all(Eigen::Index n, std::string investor_id = "all");
};

struct PortfolioMetrics {
  double expected_return = 0.0;
  double risk = 0.0;
};

struct EquilibriumDiagnostics {
  int iterations = 0;
  double residual_norm = 0.0;
  double delta_lambda = 0.0;
};

struct EquilibriumResult {
  Vector mean;
  Matrix covariance;
  Vector weights;
  PortfolioMetrics metrics;
  EquilibriumDiagnostics diagnostics;
};

enum class Severity { error, warning };

struct Issue {
  Severity severity = Severity::error;
  /// Dotted field path, e.g. "market.covariance" or "views.pick[2]".
  std::string path;
  std::string message;
};

struct ValidationReport {
  std::vector<Issue> issues;

  bool ok() const;
  std::vector<Issue> errors() const;
  std::vector<Issue> warnings() const;
};

/// Checks every invariant of the scenario, the shadow-cost spec and (when
/// given) the views. A non-PSD joint block [[tau Sigma, S_Rl], [S_lR, Lambda]]
/// is reported as a warning only.
ValidationReport validate_scenario(const MarketScenario& market, const ShadowCostSpec& shadow,
                                   const ViewSet* views = nullptr,
                                   const InformationSet* info_set = nullptr);

/// Row-sum tolerance for absolute (1) and relative (0) view rows.
inline constexpr double kViewRowSumTol = 1e-9;

}  // namespace shadowbl
