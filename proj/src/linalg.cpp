#include "shadowbl/linalg.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>

namespace shadowbl {

bool is_square(const Matrix& m) { return m.rows() == m.cols(); }

bool is_symmetric(const Matrix& m, double tol) {
  if (!is_square(m)) return false;
  return (m - m.transpose()).cwiseAbs().maxCoeff() <= tol;
}

Matrix symmetrize(const Matrix& m) { return 0.5 * (m + m.transpose()); }

Spectrum spectrum(const Matrix& m) {
  Spectrum s;
  if (m.size() == 0) {
    s.psd = true;
    return s;
  }
  Eigen::SelfAdjointEigenSolver<Matrix> eig(symmetrize(m), Eigen::EigenvaluesOnly);
  s.min = eig.eigenvalues().minCoeff();
  s.max = eig.eigenvalues().maxCoeff();
  s.psd = s.min >= -kPsdRelTol * std::max(s.max, 0.0);
  return s;
}

SpdFactor::SpdFactor(const Matrix& m, const std::string& what) {
  if (!is_square(m)) {
    throw DimensionError(what + ": matrix is " + std::to_string(m.rows()) + "x" +
                         std::to_string(m.cols()) + ", expected square");
  }
  llt_.compute(m);
  if (llt_.info() != Eigen::Success) {
    throw FactorizationError(what + ": matrix is not positive definite");
  }
  const auto d = llt_.matrixLLT().diagonal();
  for (Eigen::Index i = 0; i < d.size(); ++i) {
    if (!(d(i) > 0.0) || !std::isfinite(d(i))) {
      throw FactorizationError(what + ": non-positive Cholesky pivot at index " +
                               std::to_string(i));
    }
  }
}

Vector SpdFactor::solve(const Vector& b) const { return llt_.solve(b); }
Matrix SpdFactor::solve(const Matrix& b) const { return llt_.solve(b); }

Matrix SpdFactor::inverse() const {
  return symmetrize(llt_.solve(Matrix::Identity(size(), size())));
}

double SpdFactor::log_det() const {
  return 2.0 * llt_.matrixLLT().diagonal().array().log().sum();
}

Matrix psd_factor(const Matrix& m, const std::string& what) {
  if (!is_square(m)) throw DimensionError(what + ": expected square matrix");
  const Eigen::Index n = m.rows();
  if (n == 0) return Matrix(0, 0);
  Eigen::LDLT<Matrix> ldlt(symmetrize(m));
  if (ldlt.info() != Eigen::Success) {
    throw FactorizationError(what + ": LDL^T factorization failed");
  }
  Vector d = ldlt.vectorD();
  const double scale = std::max(d.cwiseAbs().maxCoeff(), 1e-300);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (d(i) < -1e-12 * scale) {
      throw FactorizationError(what + ": matrix is indefinite");
    }
    d(i) = d(i) < 1e-12 * scale ? std::max(d(i), 0.0) : d(i);
  }
  // P^T L D L^T P = m  ->  F = P^T L sqrt(D)
  Matrix l = ldlt.matrixL();
  Matrix f = l * d.cwiseSqrt().asDiagonal();
  return ldlt.transpositionsP().transpose() * f;
}

void require_length(const Vector& v, Eigen::Index n, const std::string& what) {
  if (v.size() != n) {
    throw DimensionError(what + ": length " + std::to_string(v.size()) + ", expected " +
                         std::to_string(n));
  }
}

void require_shape(const Matrix& m, Eigen::Index rows, Eigen::Index cols,
                   const std::string& what) {
  if (m.rows() != rows || m.cols() != cols) {
    throw DimensionError(what + ": shape " + std::to_string(m.rows()) + "x" +
                         std::to_string(m.cols()) + ", expected " + std::to_string(rows) +
                         "x" + std::to_string(cols));
  }
}

}  // namespace shadowbl
