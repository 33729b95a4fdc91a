#pragma once

#include <cstddef>

#include <Eigen/Dense>

#include "ofmpc/error.hpp"

namespace ofmpc {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

namespace numerics {

// Relative threshold on singular values, shared by rank and null-space queries.
inline constexpr double kRankTolerance = 1e-9;
// A pivot below this fraction of max|A| is treated as zero.
inline constexpr double kPivotTolerance = 1e-12;

/// Solves A x = b by LU with partial pivoting.
/// Throws SingularMatrix when a pivot falls below kPivotTolerance * max|A|.
[[nodiscard]] Vector solve_linear(const Matrix& a, const Vector& b);
[[nodiscard]] Matrix solve_linear(const Matrix& a, const Matrix& b);

/// Moore-Penrose pseudoinverse from an SVD; singular values at or below
/// tol * sigma_max are discarded.
[[nodiscard]] Matrix pseudoinverse(const Matrix& m, double tol = kRankTolerance);

/// Number of singular values strictly greater than tol * sigma_max.
[[nodiscard]] std::size_t matrix_rank(const Matrix& m, double tol = kRankTolerance);

/// max |lambda_i| over the full spectrum. Throws NoConvergence if the
/// Hessenberg-QR iteration fails.
[[nodiscard]] double spectral_radius(const Matrix& m);

/// Orthonormal basis of null(m) as columns (possibly zero columns).
[[nodiscard]] Matrix null_space(const Matrix& m, double tol = kRankTolerance);

/// Horizontal and vertical concatenation helpers for block assembly.
[[nodiscard]] Matrix hcat(const Matrix& left, const Matrix& right);
[[nodiscard]] Matrix vcat(const Matrix& top, const Matrix& bottom);
[[nodiscard]] Matrix block2x2(const Matrix& a11, const Matrix& a12, const Matrix& a21,
                              const Matrix& a22);

[[nodiscard]] bool all_finite(const Matrix& m) noexcept;

/// Stacks `count` copies of v (the 1_N (x) v operation).
[[nodiscard]] Vector repeat(const Vector& v, std::size_t count);

} // namespace numerics
} // namespace ofmpc
