#include "smart/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include "smart/config.hpp"

namespace smart {

SampleMetrics compute_metrics(const Matrix2D& samples, const GridMixture& mix, double tau) {
  if (!(tau > 0.0)) throw std::invalid_argument("compute_metrics: tau must be positive");
  SampleMetrics m;
  const std::size_t n = samples.rows();
  if (n == 0) return m;
  std::vector<std::size_t> owned(mix.size(), 0);
  std::size_t hq = 0;
  double dist_sum = 0.0;
  for (std::size_t r = 0; r < n; ++r) {
    const Point2 p{samples(r, 0), samples(r, 1)};
    const std::size_t k = nearest_center(mix, p);
    const double d = std::hypot(p.x - mix.center(k).x, p.y - mix.center(k).y);
    dist_sum += d;
    if (d <= tau) {
      ++hq;
      ++owned[k];
    }
  }
  const double threshold = std::max(1.0, static_cast<double>(n) / 4900.0);
  m.mode_coverage = static_cast<std::size_t>(std::count_if(
      owned.begin(), owned.end(), [&](std::size_t c) { return static_cast<double>(c) >= threshold; }));
  m.hq_fraction = static_cast<double>(hq) / static_cast<double>(n);
  m.mean_dist = dist_sum / static_cast<double>(n);
  return m;
}

std::string format_metrics_row(const MetricsRow& r) {
  return std::to_string(r.iter) + ',' + format_double(r.d_loss) + ',' + format_double(r.g_loss) +
         ',' + format_double(r.score_loss) + ',' + std::to_string(r.mode_coverage) + ',' +
         format_double(r.hq_fraction) + ',' + format_double(r.mean_dist);
}

std::string metrics_csv(std::span<const MetricsRow> rows) {
  std::string out = std::string(kMetricsHeader) + '\n';
  for (const auto& r : rows) out += format_metrics_row(r) + '\n';
  return out;
}

void write_metrics_csv(const std::filesystem::path& path, std::span<const MetricsRow> rows) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open for writing: " + path.string());
  out << metrics_csv(rows);
}

}  // namespace smart
