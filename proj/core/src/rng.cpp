#include "smart/rng.hpp"

namespace smart {

Rng make_stream(std::uint64_t seed, std::string_view purpose) {
  // FNV-1a over the purpose tag keeps streams stable across builds.
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : purpose) {
    h ^= c;
    h *= 1099511628211ull;
  }
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(h), static_cast<std::uint32_t>(h >> 32)};
  return Rng(seq);
}

Matrix2D standard_normal(std::size_t rows, std::size_t cols, Rng& rng) {
  Matrix2D m(rows, cols);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (double& v : m.data()) v = normal(rng);
  return m;
}

Matrix2D uniform(std::size_t rows, std::size_t cols, double lo, double hi, Rng& rng) {
  Matrix2D m(rows, cols);
  std::uniform_real_distribution<double> dist(lo, hi);
  for (double& v : m.data()) v = dist(rng);
  return m;
}

}  // namespace smart
