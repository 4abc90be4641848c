#pragma once

#include <gtest/gtest.h>

#include <random>
#include <string>

#include "shadowbl/scenario_io.hpp"

namespace shadowbl::testing {

inline ScenarioFile example() { return example_scenario(); }

inline ViewSet example_views() {
  const ScenarioFile f = example();
  return f.views->resolve(f.market.pi_c(), f.market.sigma());
}

inline Vector vec(std::initializer_list<double> xs) {
  Vector v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) v(i++) = x;
  return v;
}

inline ::testing::AssertionResult near(const Vector& actual, const Vector& expected, double tol) {
  if (actual.size() != expected.size()) {
    return ::testing::AssertionFailure()
           << "size " << actual.size() << " vs " << expected.size();
  }
  for (Eigen::Index i = 0; i < actual.size(); ++i) {
    if (!(std::abs(actual(i) - expected(i)) <= tol)) {
      return ::testing::AssertionFailure() << "entry " << i << ": " << actual(i) << " vs "
                                           << expected(i) << " (tol " << tol << ")";
    }
  }
  return ::testing::AssertionSuccess();
}

inline ::testing::AssertionResult near(const Matrix& actual, const Matrix& expected, double tol) {
  if (actual.rows() != expected.rows() || actual.cols() != expected.cols()) {
    return ::testing::AssertionFailure() << "shape mismatch";
  }
  const double err = (actual - expected).cwiseAbs().maxCoeff();
  if (err <= tol) return ::testing::AssertionSuccess();
  return ::testing::AssertionFailure() << "max abs error " << err << " (tol " << tol << ")";
}

inline double rel_err(double a, double b) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-300});
}

/// Random SPD matrix with condition number kept moderate.
inline Matrix random_spd(Eigen::Index n, std::mt19937_64& gen, double scale = 0.05) {
  std::normal_distribution<double> z(0.0, 1.0);
  Matrix a(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) a(i, j) = z(gen);
  Matrix s = a * a.transpose() / static_cast<double>(n) + 0.5 * Matrix::Identity(n, n);
  return scale * 0.5 * (s + s.transpose());
}

inline Vector random_vector(Eigen::Index n, std::mt19937_64& gen, double lo, double hi) {
  std::uniform_real_distribution<double> u(lo, hi);
  Vector v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = u(gen);
  return v;
}

/// Random valid market: n in [2, 8], delta in [1, 10], small nonnegative lambda.
struct RandomScenario {
  MarketScenario market;
  Vector lambda;
};

inline RandomScenario random_scenario(std::mt19937_64& gen) {
  std::uniform_int_distribution<int> dim(2, 8);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const Eigen::Index n = dim(gen);
  Matrix sigma = random_spd(n, gen);
  Vector pi_c = random_vector(n, gen, -0.01, 0.06);
  const double sigma_m = 0.03 + 0.15 * u(gen);
  const double delta = 1.0 + 9.0 * u(gen);
  const double r_f = 0.03 * u(gen);
  const double erm = r_f + delta * sigma_m * sigma_m;
  std::vector<std::string> labels;
  for (Eigen::Index i = 0; i < n; ++i) labels.push_back("a" + std::to_string(i));
  return {MarketScenario(labels, sigma, pi_c, r_f, erm, sigma_m),
          random_vector(n, gen, 0.0, 0.03)};
}

}  // namespace shadowbl::testing
