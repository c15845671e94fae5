#pragma once

#include "smart/matrix.hpp"

namespace smart {

inline constexpr double kLeakySlope = 0.2;

/// Elementwise max(x, slope * x). slope must lie in (0, 1).
Matrix2D leaky_relu(const Matrix2D& x, double slope = kLeakySlope);

// Scalar helpers, overflow-free for any finite x.
double sigmoid(double x) noexcept;
double softplus(double x) noexcept;
/// log(sigmoid(x)) evaluated as -softplus(-x).
double log_sigmoid(double x) noexcept;

}  // namespace smart
