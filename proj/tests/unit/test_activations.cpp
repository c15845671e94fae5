#include <cmath>
#include <limits>

#include <stdexcept>

#include "doctest.h"
#include "smart/activations.hpp"

TEST_SUITE("activations") {
  TEST_CASE("leaky relu") {
    const smart::Matrix2D x{{1.0, -1.0, 0.0}};
    const smart::Matrix2D y = smart::leaky_relu(x);
    CHECK(y(0, 0) == 1.0);
    CHECK(y(0, 1) == doctest::Approx(-0.2));
    CHECK(y(0, 2) == 0.0);
    CHECK(smart::leaky_relu(x, 0.1)(0, 1) == doctest::Approx(-0.1));
    CHECK_THROWS_AS(smart::leaky_relu(x, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(smart::leaky_relu(x, 1.5), std::invalid_argument);
  }

  TEST_CASE("sigmoid and softplus at moderate inputs") {
    for (double x : {-5.0, -0.3, 0.0, 0.7, 4.0}) {
      CHECK(smart::sigmoid(x) == doctest::Approx(1.0 / (1.0 + std::exp(-x))).epsilon(1e-14));
      CHECK(smart::softplus(x) == doctest::Approx(std::log1p(std::exp(x))).epsilon(1e-14));
      CHECK(smart::log_sigmoid(x) ==
            doctest::Approx(std::log(1.0 / (1.0 + std::exp(-x)))).epsilon(1e-13));
    }
  }

  TEST_CASE("reference values") {
    CHECK(smart::sigmoid(0.0) == 0.5);
    CHECK(smart::log_sigmoid(0.0) == doctest::Approx(-0.693147180559945).epsilon(1e-14));
    CHECK(smart::log_sigmoid(50.0) == doctest::Approx(-1.9287498479639178e-22).epsilon(1e-12));
    CHECK(smart::log_sigmoid(-50.0) == doctest::Approx(-50.0).epsilon(1e-15));
  }

  TEST_CASE("stable at extreme logits") {
    CHECK(smart::log_sigmoid(-1000.0) == doctest::Approx(-1000.0));
    CHECK(smart::log_sigmoid(1000.0) == 0.0);
    CHECK(smart::softplus(1000.0) == doctest::Approx(1000.0));
    CHECK(smart::softplus(-1000.0) >= 0.0);
    CHECK(std::isfinite(smart::log_sigmoid(-1e308)));
    CHECK(smart::sigmoid(-1000.0) == 0.0);
    CHECK(smart::sigmoid(1000.0) == 1.0);
  }
}
