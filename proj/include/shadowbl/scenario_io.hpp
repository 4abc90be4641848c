#pragma once

#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "shadowbl/domain.hpp"
#include "shadowbl/views.hpp"

namespace shadowbl {

/// Raised for malformed scenario text. path() is a dotted location such as
/// "market.covariance[2]"; the root is "$".
class ParseError : public Error {
 public:
  ParseError(std::string path, const std::string& message)
      : Error(path + ": " + message), path_(std::move(path)) {}
  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

/// Views as written in a scenario: q may be given numerically or as stances
/// that are quantified against the prior mean at compute time.
struct ViewSpec {
  Matrix P;
  std::vector<ViewKind> kinds;
  std::variant<Vector, std::vector<Stance>> targets;
  std::variant<Confidence, Matrix> uncertainty = Confidence{};

  bool has_stances() const { return std::holds_alternative<std::vector<Stance>>(targets); }
  /// Concrete views; stances use q = P pi + eta sqrt(diag(P Sigma P^T)).
  ViewSet resolve(const Vector& pi, const Matrix& sigma) const;
  bool operator==(const ViewSpec& other) const;
};

struct Sweeps {
  std::vector<double> tau;
  std::vector<double> confidence;
  std::vector<int> gamma;
  bool empty() const { return tau.empty() && confidence.empty() && gamma.empty(); }
  bool operator==(const Sweeps&) const = default;
};

inline constexpr int kSchemaVersion = 1;

struct ScenarioFile {
  int schema_version = kSchemaVersion;
  MarketScenario market;
  ShadowCostSpec shadow_costs;
  std::optional<ViewSpec> views;
  Sweeps sweeps;

  bool operator==(const ScenarioFile& other) const;
};

/// Parses the JSON scenario format. Structural problems throw ParseError;
/// numeric invariants are left to validate().
ScenarioFile parse_scenario(const std::string& text);

/// Canonical text: fixed key order, two-space indent, shortest round-trip numbers.
std::string serialize_scenario(const ScenarioFile& file);

/// validate_scenario on the file contents; stance views are resolved against pi_c.
ValidationReport validate(const ScenarioFile& file);

ScenarioFile load_scenario_file(const std::string& path);
void save_scenario_file(const ScenarioFile& file, const std::string& path);

/// Bundled five-asset dataset with four views, tau = 0.5, c = 0.5.
ScenarioFile example_scenario();

}  // namespace shadowbl
