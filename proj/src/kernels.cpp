#include "shadowbl/kernels.hpp"

#include <omp.h>

#include <algorithm>
#include <exception>
#include <random>
#include <vector>

namespace shadowbl::kernels {

namespace {

void fill_block(const Vector& mean, const Matrix& factor, Eigen::Index block,
                Eigen::Index count, std::uint64_t seed, Matrix& out) {
  const auto n = mean.size();
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(block)};
  std::mt19937_64 gen(seq);
  std::normal_distribution<double> normal(0.0, 1.0);
  Vector z(n);
  const Eigen::Index begin = block * kDrawBlock;
  const Eigen::Index end = std::min(begin + kDrawBlock, count);
  for (Eigen::Index i = begin; i < end; ++i) {
    for (Eigen::Index k = 0; k < n; ++k) z(k) = normal(gen);
    out.row(i) = (mean + factor * z).transpose();
  }
}

Eigen::Index block_count(Eigen::Index count) { return (count + kDrawBlock - 1) / kDrawBlock; }

void check(const Vector& mean, const Matrix& factor, Eigen::Index count) {
  require_shape(factor, mean.size(), mean.size(), "gaussian_draws: factor");
  if (count < 1) throw DomainError("gaussian_draws: count must be >= 1");
}

}  // namespace

int max_threads() { return omp_get_max_threads(); }

Matrix gaussian_draws(const Vector& mean, const Matrix& factor, Eigen::Index count,
                      std::uint64_t seed) {
  check(mean, factor, count);
  Matrix out(count, mean.size());
  const Eigen::Index blocks = block_count(count);
#pragma omp parallel for schedule(static)
  for (Eigen::Index b = 0; b < blocks; ++b) fill_block(mean, factor, b, count, seed, out);
  return out;
}

void sample_moments(const Matrix& draws, Vector& mean, Matrix& covariance) {
  const Eigen::Index rows = draws.rows();
  const Eigen::Index n = draws.cols();
  if (rows < 2) throw DomainError("sample_moments: need at least two draws");
  mean = draws.colwise().mean().transpose();
  // Per-thread partial sums combined in thread order: result is independent
  // of scheduling only up to floating-point reassociation across threads.
  const int threads = omp_get_max_threads();
  std::vector<Matrix> partial(static_cast<std::size_t>(threads), Matrix::Zero(n, n));
#pragma omp parallel
  {
    Matrix& acc = partial[static_cast<std::size_t>(omp_get_thread_num())];
    Vector centered(n);
#pragma omp for schedule(static)
    for (Eigen::Index i = 0; i < rows; ++i) {
      centered = draws.row(i).transpose() - mean;
      acc.selfadjointView<Eigen::Lower>().rankUpdate(centered);
    }
  }
  covariance = Matrix::Zero(n, n);
  for (const auto& p : partial) covariance += p;
  const Matrix full = covariance.selfadjointView<Eigen::Lower>();
  covariance = full;
  covariance /= static_cast<double>(rows - 1);
}

void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body) {
  std::vector<std::exception_ptr> failures(count);
  const auto n = static_cast<std::int64_t>(count);
#pragma omp parallel for schedule(dynamic)
  for (std::int64_t i = 0; i < n; ++i) {
    try {
      body(static_cast<std::size_t>(i));
    } catch (...) {
      failures[static_cast<std::size_t>(i)] = std::current_exception();
    }
  }
  for (const auto& f : failures)
    if (f) std::rethrow_exception(f);
}

namespace serial {

void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body) {
  for (std::size_t i = 0; i < count; ++i) body(i);
}

Matrix gaussian_draws(const Vector& mean, const Matrix& factor, Eigen::Index count,
                      std::uint64_t seed) {
  check(mean, factor, count);
  Matrix out(count, mean.size());
  for (Eigen::Index b = 0; b < block_count(count); ++b) {
    fill_block(mean, factor, b, count, seed, out);
  }
  return out;
}

void sample_moments(const Matrix& draws, Vector& mean, Matrix& covariance) {
  const Eigen::Index rows = draws.rows();
  if (rows < 2) throw DomainError("sample_moments: need at least two draws");
  mean = draws.colwise().mean().transpose();
  const Matrix centered = draws.rowwise() - mean.transpose();
  covariance = centered.transpose() * centered / static_cast<double>(rows - 1);
}

}  // namespace serial

}  // namespace shadowbl::kernels
