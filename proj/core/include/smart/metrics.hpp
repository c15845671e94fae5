#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "smart/grid_mixture.hpp"
#include "smart/matrix.hpp"

namespace smart {

struct SampleMetrics {
  std::size_t mode_coverage = 0;
  double hq_fraction = 0.0;
  double mean_dist = 0.0;
};

/// A sample is high-quality when it lies within tau of its nearest center. A mode is
/// covered when it owns at least max(1, n/4900) high-quality samples.
SampleMetrics compute_metrics(const Matrix2D& samples, const GridMixture& mix, double tau);

struct MetricsRow {
  std::size_t iter = 0;
  double d_loss = 0.0;
  double g_loss = 0.0;
  double score_loss = 0.0;
  std::size_t mode_coverage = 0;
  double hq_fraction = 0.0;
  double mean_dist = 0.0;
};

inline constexpr const char* kMetricsHeader =
    "iter,d_loss,g_loss,score_loss,mode_coverage,hq_fraction,mean_dist";

std::string format_metrics_row(const MetricsRow& row);
std::string metrics_csv(std::span<const MetricsRow> rows);
void write_metrics_csv(const std::filesystem::path& path, std::span<const MetricsRow> rows);

}  // namespace smart
