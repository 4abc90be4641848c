#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include <string>

#include "shadowbl/errors.hpp"

namespace shadowbl {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Relative tolerance for positive semidefiniteness: lambda_min >= -tol * lambda_max.
inline constexpr double kPsdRelTol = 1e-10;

bool is_square(const Matrix& m);
bool is_symmetric(const Matrix& m, double tol = 1e-12);
Matrix symmetrize(const Matrix& m);

struct Spectrum {
  double min = 0.0;
  double max = 0.0;
  /// min >= -kPsdRelTol * max(|max|, 0)
  bool psd = false;
};

/// Eigenvalue extremes of a symmetric matrix (the symmetric part is used).
Spectrum spectrum(const Matrix& m);

/// Cholesky factorization of a symmetric positive definite matrix.
/// Construction throws FactorizationError naming `what` if any pivot is not positive.
class SpdFactor {
 public:
  SpdFactor(const Matrix& m, const std::string& what);

  Vector solve(const Vector& b) const;
  Matrix solve(const Matrix& b) const;
  Matrix inverse() const;
  double log_det() const;
  Eigen::Index size() const { return llt_.rows(); }
  const Eigen::LLT<Matrix>& llt() const { return llt_; }

 private:
  Eigen::LLT<Matrix> llt_;
};

/// Factor F with F * F^T == m for symmetric PSD m. Uses pivoted LDL^T; pivots
/// in [-1e-12 * scale, 0) are clamped to zero, anything more negative throws
/// FactorizationError.
Matrix psd_factor(const Matrix& m, const std::string& what);

void require_length(const Vector& v, Eigen::Index n, const std::string& what);
void require_shape(const Matrix& m, Eigen::Index rows, Eigen::Index cols, const std::string& what);

}  // namespace shadowbl
