#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <optional>
#include <vector>

#include "smart/matrix.hpp"
#include "smart/rng.hpp"
#include "smart/schedule.hpp"

namespace smart {

struct Point2 {
  double x = 0.0;
  double y = 0.0;
  friend bool operator==(const Point2&, const Point2&) = default;
};

/// Row-major 2x2 Jacobian d(out_i)/d(in_j).
using Jacobian2 = std::array<double, 4>;

/// Equal-weight isotropic Gaussian mixture in the plane. The standard instance is
/// the 7x7 unit grid; arbitrary center sets exist for tests and degenerate cases.
class GridMixture {
 public:
  static constexpr int kGridSide = 7;
  static constexpr double kSpacing = 1.0;

  /// Centers at (i, j), i, j in {-3..3}; the label of (i, j) is (i + 3) * 7 + (j + 3).
  static GridMixture standard(double sigma = 0.05);
  /// sigma may be 0 (point masses).
  static GridMixture from_centers(std::vector<Point2> centers, double sigma);

  std::size_t size() const noexcept { return centers_.size(); }
  const std::vector<Point2>& centers() const noexcept { return centers_; }
  const Point2& center(std::size_t i) const { return centers_.at(i); }
  double sigma() const noexcept { return sigma_; }
  double weight() const noexcept { return 1.0 / static_cast<double>(centers_.size()); }

 private:
  GridMixture(std::vector<Point2> centers, double sigma);

  std::vector<Point2> centers_;
  double sigma_ = 0.0;
};

struct LabeledBatch {
  Matrix2D points;          // n x 2
  std::vector<int> labels;  // empty, or one component index per row

  bool has_labels() const noexcept { return !labels.empty(); }
  std::size_t size() const noexcept { return points.rows(); }
};

/// Uniform component choice, then isotropic noise of scale sigma. The same rng draws
/// are made whether or not labels are kept.
LabeledBatch sample(const GridMixture& mix, std::size_t n, Rng& rng, bool with_labels);

std::size_t nearest_center(const GridMixture& mix, Point2 x);
double manifold_distance(const GridMixture& mix, Point2 x);

/// log q_t(x_t) for the mixture diffused to timestep t.
double log_density_t(const GridMixture& mix, Point2 x_t, int t, const NoiseSchedule& sched);

/// -sigma_t * grad log q_t(x_t). With a label, the single labelled component is used.
Point2 oracle_noise_predictor(const GridMixture& mix, Point2 x_t, int t,
                              const NoiseSchedule& sched, std::optional<int> label = {});

/// Jacobian of oracle_noise_predictor with respect to x_t.
Jacobian2 oracle_noise_jacobian(const GridMixture& mix, Point2 x_t, int t,
                                const NoiseSchedule& sched, std::optional<int> label = {});

/// CSV with header "x,y,label" (label column empty when the batch has no labels).
void write_samples_csv(const std::filesystem::path& path, const LabeledBatch& batch);

}  // namespace smart
