#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>

#include "shadowbl/linalg.hpp"

namespace shadowbl::kernels {

/// Draws are generated in fixed blocks; block b uses its own generator seeded
/// from (seed, b), so the output does not depend on scheduling.
inline constexpr Eigen::Index kDrawBlock = 1024;

/// Row i = mean^T + (factor * z_i)^T. OpenMP-parallel over blocks.
Matrix gaussian_draws(const Vector& mean, const Matrix& factor, Eigen::Index count,
                      std::uint64_t seed);

/// Column means and unbiased covariance of the rows of `draws`.
/// OpenMP-parallel reduction over rows.
void sample_moments(const Matrix& draws, Vector& mean, Matrix& covariance);

int max_threads();

/// Runs body(i) for i in [0, count) across threads. The first failing index's
/// exception is rethrown after all iterations finish.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body);

namespace serial {

Matrix gaussian_draws(const Vector& mean, const Matrix& factor, Eigen::Index count,
                      std::uint64_t seed);

void sample_moments(const Matrix& draws, Vector& mean, Matrix& covariance);

void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body);

}  // namespace serial

}  // namespace shadowbl::kernels
