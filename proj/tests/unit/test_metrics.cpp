#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>

#include <stdexcept>

#include "doctest.h"
#include "smart/metrics.hpp"

using smart::GridMixture;
using smart::Matrix2D;

TEST_SUITE("metrics") {
  TEST_CASE("centers repeated") {
    const auto mix = GridMixture::standard();
    Matrix2D s(49 * 10, 2);
    for (std::size_t i = 0; i < s.rows(); ++i) {
      s(i, 0) = mix.center(i % 49).x;
      s(i, 1) = mix.center(i % 49).y;
    }
    const auto m = smart::compute_metrics(s, mix, 0.15);
    CHECK(m.mode_coverage == 49);
    CHECK(m.hq_fraction == 1.0);
    CHECK(m.mean_dist == 0.0);
  }

  TEST_CASE("uniform samples match the area ratio") {
    const auto mix = GridMixture::standard();
    smart::Rng rng = smart::make_stream(0, "test.metrics");
    const std::size_t n = 200000;
    const auto m = smart::compute_metrics(smart::uniform(n, 2, -4, 4, rng), mix, 0.15);
    const double p = 49 * std::numbers::pi * 0.15 * 0.15 / 64.0;
    CHECK(std::abs(m.hq_fraction - p) <= 4 * std::sqrt(p * (1 - p) / n));
  }

  TEST_CASE("mode collapse and threshold") {
    const auto mix = GridMixture::standard();
    const auto m = smart::compute_metrics(Matrix2D(1000, 2, 0.0), mix, 0.15);
    CHECK(m.mode_coverage == 1);
    CHECK(m.hq_fraction == 1.0);

    // n = 9800 needs two high-quality samples per mode.
    Matrix2D s(9800, 2, 10.0);
    s(0, 0) = 1.0;
    s(0, 1) = 1.0;
    CHECK(smart::compute_metrics(s, mix, 0.15).mode_coverage == 0);
    s(1, 0) = 1.0;
    s(1, 1) = 1.0;
    CHECK(smart::compute_metrics(s, mix, 0.15).mode_coverage == 1);
    CHECK_THROWS(smart::compute_metrics(s, mix, 0.0));
  }

  TEST_CASE("csv schema") {
    const smart::MetricsRow rows[] = {{100, 1.25, 0.75, 0.5, 49, 0.9, 0.05}};
    const std::string csv = smart::metrics_csv(rows);
    CHECK(csv.rfind("iter,d_loss,g_loss,score_loss,mode_coverage,hq_fraction,mean_dist\n", 0) == 0);
    CHECK(csv.find("100,1.25,0.75,0.5,49,0.9,0.05\n") != std::string::npos);
    const auto path = std::filesystem::temp_directory_path() / "smart_metrics_test.csv";
    smart::write_metrics_csv(path, rows);
    std::ifstream f(path);
    std::string all((std::istreambuf_iterator<char>(f)), {});
    CHECK(all == csv);
    std::filesystem::remove(path);
  }
}
