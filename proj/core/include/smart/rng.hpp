#pragma once

#include <cstdint>
#include <random>
#include <string_view>

#include "smart/matrix.hpp"

namespace smart {

using Rng = std::mt19937_64;

/// Independent stream for one purpose ("data", "latent", ...) derived from a run seed.
Rng make_stream(std::uint64_t seed, std::string_view purpose);

Matrix2D standard_normal(std::size_t rows, std::size_t cols, Rng& rng);
Matrix2D uniform(std::size_t rows, std::size_t cols, double lo, double hi, Rng& rng);

}  // namespace smart
