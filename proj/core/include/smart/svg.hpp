#pragma once

#include <filesystem>
#include <string>

#include "smart/grid_mixture.hpp"
#include "smart/matrix.hpp"

namespace smart {

/// SVG 1.1 scatter over the fixed window [-4, 4]^2: axes, a cross at every center,
/// a radius-2 dot per sample row. Output depends only on the inputs.
std::string scatter_svg(const Matrix2D& samples, const GridMixture& mix);

/// Writes scatter_svg to path; throws std::runtime_error if the file cannot be written.
void render_scatter(const Matrix2D& samples, const GridMixture& mix,
                    const std::filesystem::path& path);

}  // namespace smart
