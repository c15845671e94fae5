#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>

#include <stdexcept>

#include "doctest.h"
#include "smart/grid_mixture.hpp"

using smart::GridMixture;
using smart::Point2;

namespace {

const smart::NoiseSchedule& sched() {
  static const auto s = smart::NoiseSchedule::linear(1000, 1e-4, 0.02);
  return s;
}

// Plain sum of the component densities, no stabilisation.
double direct_log_density(const GridMixture& mix, Point2 x, int t) {
  const double a = sched().alpha(t);
  const double s = sched().sigma(t);
  const double v = a * a * mix.sigma() * mix.sigma() + s * s;
  double total = 0.0;
  for (const Point2& c : mix.centers()) {
    const double dx = x.x - a * c.x;
    const double dy = x.y - a * c.y;
    total += mix.weight() * std::exp(-(dx * dx + dy * dy) / (2 * v)) / (2 * std::numbers::pi * v);
  }
  return std::log(total);
}

}  // namespace

TEST_SUITE("grid_mixture") {
  TEST_CASE("standard grid geometry and labels") {
    const auto mix = GridMixture::standard();
    REQUIRE(mix.size() == 49);
    CHECK(mix.sigma() == 0.05);
    for (int i = -3; i <= 3; ++i) {
      for (int j = -3; j <= 3; ++j) {
        CHECK(mix.center((i + 3) * 7 + (j + 3)) == Point2{double(i), double(j)});
      }
    }
    CHECK_THROWS_AS(GridMixture::standard(0.0), std::invalid_argument);
    CHECK_THROWS_AS(GridMixture::standard(0.2), std::invalid_argument);
    CHECK_THROWS_AS(GridMixture::from_centers({{0, 0}}, -1.0), std::invalid_argument);
  }

  TEST_CASE("degenerate mixture samples sit on their centers") {
    const auto mix = GridMixture::from_centers(GridMixture::standard().centers(), 0.0);
    smart::Rng rng(1);
    const auto b = smart::sample(mix, 500, rng, true);
    for (std::size_t r = 0; r < b.size(); ++r) {
      const Point2 c = mix.center(b.labels[r]);
      CHECK(b.points(r, 0) == c.x);
      CHECK(b.points(r, 1) == c.y);
    }
  }

  TEST_CASE("mode counts and second moment") {
    const auto mix = GridMixture::standard();
    smart::Rng rng = smart::make_stream(3, "test.sample");
    const std::size_t n = 100000;
    const auto b = smart::sample(mix, n, rng, true);
    std::vector<int> counts(49, 0);
    double m2 = 0.0;
    for (std::size_t r = 0; r < n; ++r) {
      ++counts[b.labels[r]];
      const Point2 c = mix.center(b.labels[r]);
      m2 += std::pow(b.points(r, 0) - c.x, 2) + std::pow(b.points(r, 1) - c.y, 2);
    }
    const double p = 1.0 / 49.0;
    const double sd = std::sqrt(n * p * (1 - p));
    for (int c : counts) CHECK(std::abs(c - n * p) <= 5 * sd);
    CHECK(m2 / n == doctest::Approx(2 * 0.05 * 0.05).epsilon(0.02));
  }

  TEST_CASE("labels do not change the points drawn") {
    const auto mix = GridMixture::standard();
    smart::Rng a(4), b(4);
    CHECK(smart::sample(mix, 100, a, true).points == smart::sample(mix, 100, b, false).points);
  }

  TEST_CASE("manifold distance") {
    const auto mix = GridMixture::standard();
    CHECK(smart::manifold_distance(mix, {2, -1}) == 0.0);
    CHECK(smart::manifold_distance(mix, {0.5, 0}) == doctest::Approx(0.5));
    CHECK(smart::manifold_distance(mix, {10, 10}) == doctest::Approx(std::sqrt(98.0)));
    CHECK(smart::nearest_center(mix, {2.9, -3.2}) == 6 * 7 + 0);
    // 1-Lipschitz
    smart::Rng rng(5);
    std::uniform_real_distribution<double> u(-5, 5);
    for (int i = 0; i < 1000; ++i) {
      const Point2 p{u(rng), u(rng)};
      const Point2 q{u(rng), u(rng)};
      const double dd = std::abs(smart::manifold_distance(mix, p) - smart::manifold_distance(mix, q));
      CHECK(dd <= std::hypot(p.x - q.x, p.y - q.y) + 1e-12);
    }
  }

  TEST_CASE("log density against direct summation and limits") {
    const auto mix = GridMixture::standard();
    for (int t : {0, 1, 40, 300}) {
      for (Point2 x : {Point2{0, 0}, Point2{1.02, -2.97}, Point2{0.4, 0.3}}) {
        CHECK(smart::log_density_t(mix, x, t, sched()) ==
              doctest::Approx(direct_log_density(mix, x, t)).epsilon(1e-10));
      }
    }
    CHECK(smart::log_density_t(mix, {0, 0}, 1000, sched()) ==
          doctest::Approx(-std::log(2 * std::numbers::pi)).epsilon(1e-3));
    const auto one = GridMixture::from_centers({{1.0, -1.0}}, 0.2);
    const double a = sched().alpha(50), s = sched().sigma(50);
    const double v = a * a * 0.04 + s * s;
    const double dx = 0.3 - a, dy = 0.1 + a;
    CHECK(smart::log_density_t(one, {0.3, 0.1}, 50, sched()) ==
          doctest::Approx(-(dx * dx + dy * dy) / (2 * v) - std::log(2 * std::numbers::pi * v)));
  }

  TEST_CASE("far from every center the log density stays finite") {
    const auto mix = GridMixture::standard();
    CHECK(std::isfinite(smart::log_density_t(mix, {50, 50}, 0, sched())));
  }

  TEST_CASE("oracle predictor closed forms") {
    const auto one = GridMixture::from_centers({{1.0, 2.0}}, 0.1);
    const int t = 60;
    const double a = sched().alpha(t), s = sched().sigma(t);
    const double v = a * a * 0.01 + s * s;
    const Point2 e = smart::oracle_noise_predictor(one, {0.7, 2.4}, t, sched());
    CHECK(e.x == doctest::Approx(s * (0.7 - a) / v));
    CHECK(e.y == doctest::Approx(s * (2.4 - 2 * a) / v));

    const auto pair = GridMixture::from_centers({{1.0, 0.5}, {-1.0, -0.5}}, 0.05);
    const Point2 z = smart::oracle_noise_predictor(pair, {0, 0}, 30, sched());
    CHECK(std::abs(z.x) < 1e-15);
    CHECK(std::abs(z.y) < 1e-15);

    CHECK_THROWS(smart::oracle_noise_predictor(one, {0, 0}, 0, sched()));
  }

  TEST_CASE("oracle predictor is -sigma times the finite-difference score") {
    const auto mix = GridMixture::standard();
    const double h = 1e-6;
    for (int t : {1, 10, 40, 60, 200, 900}) {
      for (Point2 x : {Point2{0.03, -0.02}, Point2{0.45, 1.5}, Point2{-2.7, 2.2}, Point2{3.5, 0.0}}) {
        const double s = sched().sigma(t);
        const double gx = (smart::log_density_t(mix, {x.x + h, x.y}, t, sched()) -
                           smart::log_density_t(mix, {x.x - h, x.y}, t, sched())) / (2 * h);
        const double gy = (smart::log_density_t(mix, {x.x, x.y + h}, t, sched()) -
                           smart::log_density_t(mix, {x.x, x.y - h}, t, sched())) / (2 * h);
        const Point2 e = smart::oracle_noise_predictor(mix, x, t, sched());
        CHECK(std::abs(e.x + s * gx) <= 1e-5 * std::max(1.0, std::abs(e.x)));
        CHECK(std::abs(e.y + s * gy) <= 1e-5 * std::max(1.0, std::abs(e.y)));
      }
    }
  }

  TEST_CASE("oracle jacobian matches finite differences of the predictor") {
    const auto mix = GridMixture::standard();
    const double h = 1e-6;
    for (int t : {20, 50}) {
      for (Point2 x : {Point2{0.5, 0.02}, Point2{1.1, -0.9}}) {
        for (std::optional<int> label : {std::optional<int>{}, std::optional<int>{24}}) {
          const auto J = smart::oracle_noise_jacobian(mix, x, t, sched(), label);
          const Point2 px = smart::oracle_noise_predictor(mix, {x.x + h, x.y}, t, sched(), label);
          const Point2 mx = smart::oracle_noise_predictor(mix, {x.x - h, x.y}, t, sched(), label);
          const Point2 py = smart::oracle_noise_predictor(mix, {x.x, x.y + h}, t, sched(), label);
          const Point2 my = smart::oracle_noise_predictor(mix, {x.x, x.y - h}, t, sched(), label);
          const double fd[4] = {(px.x - mx.x) / (2 * h), (py.x - my.x) / (2 * h),
                                (px.y - mx.y) / (2 * h), (py.y - my.y) / (2 * h)};
          for (int i = 0; i < 4; ++i) {
            CHECK(J[i] == doctest::Approx(fd[i]).epsilon(1e-5).scale(1.0));
          }
        }
      }
    }
  }

  TEST_CASE("conditional oracle uses only the labelled component") {
    const auto mix = GridMixture::standard();
    const int label = 10;
    const auto single = GridMixture::from_centers({mix.center(label)}, mix.sigma());
    const Point2 x{0.3, -0.8};
    const Point2 c = smart::oracle_noise_predictor(mix, x, 45, sched(), label);
    const Point2 u = smart::oracle_noise_predictor(single, x, 45, sched());
    CHECK(c.x == doctest::Approx(u.x).epsilon(1e-14));
    CHECK(c.y == doctest::Approx(u.y).epsilon(1e-14));
    CHECK(smart::oracle_noise_predictor(single, x, 45, sched(), 0).x == doctest::Approx(u.x));
    CHECK_THROWS(smart::oracle_noise_predictor(mix, x, 45, sched(), 49));
  }

  TEST_CASE("samples csv export") {
    const auto mix = GridMixture::standard();
    smart::Rng rng(2);
    const auto b = smart::sample(mix, 3, rng, true);
    const auto path = std::filesystem::temp_directory_path() / "smart_samples_test.csv";
    smart::write_samples_csv(path, b);
    std::ifstream f(path);
    std::string header;
    std::getline(f, header);
    CHECK(header == "x,y,label");
    int lines = 0;
    for (std::string l; std::getline(f, l);) ++lines;
    CHECK(lines == 3);
    std::filesystem::remove(path);
  }
}
