#include "smart/activations.hpp"

#include <cmath>
#include <stdexcept>

namespace smart {

Matrix2D leaky_relu(const Matrix2D& x, double slope) {
  if (!(slope > 0.0 && slope < 1.0)) {
    throw std::invalid_argument("leaky_relu: slope must lie in (0, 1), got " + std::to_string(slope));
  }
  Matrix2D out = x;
  for (double& v : out.data()) v = v > 0.0 ? v : slope * v;
  return out;
}

double sigmoid(double x) noexcept {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double softplus(double x) noexcept {
  return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x)));
}

double log_sigmoid(double x) noexcept { return -softplus(-x); }

}  // namespace smart
