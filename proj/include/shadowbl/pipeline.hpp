#pragma once

#include <optional>
#include <string>
#include <vector>

#include "shadowbl/allocation.hpp"
#include "shadowbl/equilibrium.hpp"
#include "shadowbl/reference_model.hpp"
#include "shadowbl/scenario_io.hpp"
#include "shadowbl/solver.hpp"

namespace shadowbl {

/// How the incomplete-information market portfolio is obtained.
/// first_order: W = (delta Sigma)^{-1} (pi_c - lambda), which is what the
/// reference tables are computed from. exact: the self-consistent fixed point.
enum class EquilibriumMode { first_order, exact };

const char* to_string(EquilibriumMode m);
EquilibriumMode equilibrium_mode_from_string(std::string_view s);

/// A failure inside run_pipeline, tagged with the stage that raised it.
class PipelineError : public Error {
 public:
  enum class Cause { validation, convergence, infeasible, other };

  PipelineError(std::string stage, Cause cause, const std::string& message)
      : Error(stage + ": " + message), stage_(std::move(stage)), cause_(cause) {}
  const std::string& stage() const noexcept { return stage_; }
  Cause cause() const noexcept { return cause_; }

 private:
  std::string stage_;
  Cause cause_;
};

struct PipelineOptions {
  /// Defaults to the file's shadow_costs.tau.
  std::optional<double> tau;
  /// Overrides the file's view confidence (and replaces an explicit omega).
  std::optional<double> confidence;
  /// Reference models to evaluate; the file's sweeps.gamma, else {0, 1}, when absent.
  std::optional<std::vector<Gamma>> gammas;
  EquilibriumMode mode = EquilibriumMode::first_order;
  /// Information set for allocations; all assets when absent.
  std::optional<std::vector<std::size_t>> assets;
  Objective objective = Unconstrained{};
  /// Allocation risk aversion; the market delta when absent.
  std::optional<double> delta;
  /// Override the file's sweeps.
  std::optional<std::vector<double>> tau_sweep;
  std::optional<std::vector<double>> confidence_sweep;
  /// Evaluate sweep grid points concurrently.
  bool parallel = true;
};

/// Market rows: CAPM, incomplete-information market, investor.
struct Table4 {
  Vector pi_c;
  Vector lambda;
  Vector extra_excess;
  Vector pi;
  Vector w_capm;
  Vector w_market;
  Vector w_investor;
  PortfolioMetrics capm;
  PortfolioMetrics market;
  PortfolioMetrics investor;
};

struct Table5 {
  double delta = 0.0;
  double lambda_m = 0.0;
  double delta_lambda = 0.0;
  EquilibriumMode mode = EquilibriumMode::first_order;
  int iterations = 0;
  double residual_norm = 0.0;
};

struct ReferenceRow {
  Gamma gamma = Gamma::lambda_conditioned;
  Matrix sigma_gamma;
  Vector weights;
  /// Excess return w^T pi and risk under Sigma_gamma.
  PortfolioMetrics metrics;
};

struct Table6Block {
  double tau = 0.0;
  Vector pi;
  std::vector<ReferenceRow> rows;
};

struct PosteriorRow {
  /// "bl", "gamma0" or "gamma1".
  std::string model;
  PosteriorDistribution posterior;
  AllocationResult allocation;
  /// ||P pi* - q||_2
  double view_gap = 0.0;
};

struct Table7Block {
  double tau = 0.0;
  double confidence = 0.0;
  Matrix omega;
  Vector q;
  std::vector<PosteriorRow> rows;
};

struct ReportBundle {
  std::vector<std::string> asset_labels;
  Table4 table4;
  Table5 table5;
  Vector beta;
  SensitivityReport sensitivities;
  Table6Block table6;
  /// Present when the file holds views.
  std::optional<Table7Block> table7;
  std::optional<Table6Block> random_mean;
  std::vector<Table6Block> tau_sweep;
  std::vector<Table7Block> confidence_sweep;
};

ReportBundle run_pipeline(const ScenarioFile& file, const PipelineOptions& options = {});

/// Table-6-style block at one tau.
Table6Block reference_block(const ScenarioFile& file, const Vector& pi, double tau,
                            const std::vector<Gamma>& gammas);

/// Table-7-style block at one (tau, c). views must already be resolved.
Table7Block posterior_block(const ScenarioFile& file, const Vector& pi, const ViewSet& views,
                            double tau, const std::vector<Gamma>& gammas,
                            const PipelineOptions& options);

/// Text rendering of one table (3-7); 4 decimals unless full_precision.
std::string render_table(const ReportBundle& bundle, int table, bool full_precision = false);

/// Comma-separated series for figure 1-7, numbers at 10 significant digits.
/// Sweep-based figures (4, 5, 7) are header-only when the sweep is empty.
std::string export_figure_data(const ReportBundle& bundle, int figure_id);

}  // namespace shadowbl
