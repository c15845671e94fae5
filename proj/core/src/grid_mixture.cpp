#include "smart/grid_mixture.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

namespace smart {

GridMixture::GridMixture(std::vector<Point2> centers, double sigma)
    : centers_(std::move(centers)), sigma_(sigma) {
  if (centers_.empty()) throw std::invalid_argument("GridMixture: no centers");
  if (!(sigma_ >= 0.0) || !std::isfinite(sigma_)) {
    throw std::invalid_argument("GridMixture: sigma must be finite and >= 0");
  }
}

GridMixture GridMixture::standard(double sigma) {
  if (!(sigma > 0.0 && sigma <= kSpacing / 10.0)) {
    throw std::invalid_argument("GridMixture: grid sigma must lie in (0, spacing/10], got " +
                                std::to_string(sigma));
  }
  std::vector<Point2> centers;
  const int half = kGridSide / 2;
  for (int i = -half; i <= half; ++i) {
    for (int j = -half; j <= half; ++j) {
      centers.push_back({i * kSpacing, j * kSpacing});
    }
  }
  return GridMixture(std::move(centers), sigma);
}

GridMixture GridMixture::from_centers(std::vector<Point2> centers, double sigma) {
  return GridMixture(std::move(centers), sigma);
}

LabeledBatch sample(const GridMixture& mix, std::size_t n, Rng& rng, bool with_labels) {
  if (n < 1) throw std::invalid_argument("sample: n must be >= 1");
  std::uniform_int_distribution<std::size_t> pick(0, mix.size() - 1);
  std::normal_distribution<double> normal(0.0, 1.0);
  LabeledBatch batch{Matrix2D(n, 2), {}};
  if (with_labels) batch.labels.resize(n);
  for (std::size_t r = 0; r < n; ++r) {
    const std::size_t k = pick(rng);
    const double nx = normal(rng);
    const double ny = normal(rng);
    batch.points(r, 0) = mix.center(k).x + mix.sigma() * nx;
    batch.points(r, 1) = mix.center(k).y + mix.sigma() * ny;
    if (with_labels) batch.labels[r] = static_cast<int>(k);
  }
  return batch;
}

std::size_t nearest_center(const GridMixture& mix, Point2 x) {
  std::size_t best = 0;
  double best_d2 = std::numeric_limits<double>::infinity();
  const auto& cs = mix.centers();
  for (std::size_t i = 0; i < cs.size(); ++i) {
    const double dx = x.x - cs[i].x;
    const double dy = x.y - cs[i].y;
    const double d2 = dx * dx + dy * dy;
    if (d2 < best_d2) {
      best_d2 = d2;
      best = i;
    }
  }
  return best;
}

double manifold_distance(const GridMixture& mix, Point2 x) {
  const Point2 c = mix.center(nearest_center(mix, x));
  return std::hypot(x.x - c.x, x.y - c.y);
}

namespace {

double diffused_variance(const GridMixture& mix, int t, const NoiseSchedule& sched) {
  const double a = sched.alpha(t);
  const double s = sched.sigma(t);
  return a * a * mix.sigma() * mix.sigma() + s * s;
}

// Responsibility-weighted first and second moments of the diffused component means.
struct Posterior {
  double mean_x = 0.0;
  double mean_y = 0.0;
  double cxx = 0.0;
  double cxy = 0.0;
  double cyy = 0.0;
};

Posterior posterior(const GridMixture& mix, Point2 x_t, int t, const NoiseSchedule& sched,
                    std::optional<int> label) {
  const double a = sched.alpha(t);
  if (label) {
    if (*label < 0 || static_cast<std::size_t>(*label) >= mix.size()) {
      throw std::out_of_range("label " + std::to_string(*label) + " outside mixture");
    }
    const Point2 c = mix.center(static_cast<std::size_t>(*label));
    return {a * c.x, a * c.y, 0.0, 0.0, 0.0};
  }
  const double v = diffused_variance(mix, t, sched);
  const auto& cs = mix.centers();
  std::vector<double> logits(cs.size());
  double max_logit = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < cs.size(); ++i) {
    const double dx = x_t.x - a * cs[i].x;
    const double dy = x_t.y - a * cs[i].y;
    logits[i] = -(dx * dx + dy * dy) / (2.0 * v);
    max_logit = std::max(max_logit, logits[i]);
  }
  double z = 0.0;
  for (double& l : logits) {
    l = std::exp(l - max_logit);
    z += l;
  }
  Posterior p;
  for (std::size_t i = 0; i < cs.size(); ++i) {
    const double r = logits[i] / z;
    p.mean_x += r * a * cs[i].x;
    p.mean_y += r * a * cs[i].y;
  }
  for (std::size_t i = 0; i < cs.size(); ++i) {
    const double r = logits[i] / z;
    const double dx = a * cs[i].x - p.mean_x;
    const double dy = a * cs[i].y - p.mean_y;
    p.cxx += r * dx * dx;
    p.cxy += r * dx * dy;
    p.cyy += r * dy * dy;
  }
  return p;
}

void require_positive_t(int t, const NoiseSchedule& sched) {
  sched.check_timestep(t);
  if (t == 0) {
    throw std::invalid_argument("oracle noise predictor is singular at t = 0 (sigma_0 = 0)");
  }
}

}  // namespace

double log_density_t(const GridMixture& mix, Point2 x_t, int t, const NoiseSchedule& sched) {
  sched.check_timestep(t);
  const double a = sched.alpha(t);
  const double v = diffused_variance(mix, t, sched);
  const auto& cs = mix.centers();
  double max_logit = -std::numeric_limits<double>::infinity();
  std::vector<double> logits(cs.size());
  for (std::size_t i = 0; i < cs.size(); ++i) {
    const double dx = x_t.x - a * cs[i].x;
    const double dy = x_t.y - a * cs[i].y;
    logits[i] = -(dx * dx + dy * dy) / (2.0 * v);
    max_logit = std::max(max_logit, logits[i]);
  }
  double acc = 0.0;
  for (double l : logits) acc += std::exp(l - max_logit);
  return max_logit + std::log(acc) - std::log(static_cast<double>(cs.size())) -
         std::log(2.0 * std::numbers::pi * v);
}

Point2 oracle_noise_predictor(const GridMixture& mix, Point2 x_t, int t,
                              const NoiseSchedule& sched, std::optional<int> label) {
  require_positive_t(t, sched);
  const double v = diffused_variance(mix, t, sched);
  const double k = sched.sigma(t) / v;
  const Posterior p = posterior(mix, x_t, t, sched, label);
  return {k * (x_t.x - p.mean_x), k * (x_t.y - p.mean_y)};
}

Jacobian2 oracle_noise_jacobian(const GridMixture& mix, Point2 x_t, int t,
                                const NoiseSchedule& sched, std::optional<int> label) {
  require_positive_t(t, sched);
  const double v = diffused_variance(mix, t, sched);
  const double k = sched.sigma(t) / v;
  const Posterior p = posterior(mix, x_t, t, sched, label);
  // d eps/dx = (sigma/v) (I - Cov_r(alpha mu) / v)
  return {k * (1.0 - p.cxx / v), -k * p.cxy / v, -k * p.cxy / v, k * (1.0 - p.cyy / v)};
}

void write_samples_csv(const std::filesystem::path& path, const LabeledBatch& batch) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open for writing: " + path.string());
  out.precision(17);
  out << "x,y,label\n";
  for (std::size_t r = 0; r < batch.size(); ++r) {
    out << batch.points(r, 0) << ',' << batch.points(r, 1) << ',';
    if (batch.has_labels()) out << batch.labels[r];
    out << '\n';
  }
}

}  // namespace smart
