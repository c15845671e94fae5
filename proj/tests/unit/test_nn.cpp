#include <cmath>
#include <thread>

#include <stdexcept>

#include "doctest.h"
#include "oracles.hpp"
#include "smart/nn.hpp"
#include "smart/rng.hpp"

using smart::Matrix2D;
using smart::Mlp;

namespace {

// Loss = sum(c .* net(x)), so d loss / d out = c.
double weighted_output(const Mlp& net, const Matrix2D& x, const Matrix2D& c) {
  return smart::dot(net.infer(x), c);
}

}  // namespace

TEST_SUITE("nn") {
  TEST_CASE("initialisation bounds and parameter count") {
    smart::Rng rng(1);
    const Mlp net({4, 8, 3}, rng);
    CHECK(net.parameter_count() == 4 * 8 + 8 + 8 * 3 + 3);
    const double bound = std::sqrt(1.0 / 4.0);
    for (double w : net.layers()[0].weight.data()) CHECK(std::abs(w) <= bound);
    for (double b : net.layers()[1].bias) CHECK(b == 0.0);
  }

  TEST_CASE("bad chains are rejected") {
    std::vector<smart::LinearLayer> layers;
    layers.emplace_back(2, 3);
    layers.emplace_back(4, 1);
    CHECK_THROWS_AS(Mlp::from_layers(layers), std::invalid_argument);
    smart::Rng rng(1);
    CHECK_THROWS_AS(Mlp({3}, rng), std::invalid_argument);
    CHECK_THROWS_AS(Mlp({3, 2}, rng, 0.0), std::invalid_argument);
  }

  TEST_CASE("forward matches the loop oracle") {
    smart::Rng rng(2);
    Mlp net({3, 16, 16, 2}, rng);
    for (auto& l : net.layers()) {
      for (double& b : l.bias) b = 0.1;
    }
    const Matrix2D x = smart::standard_normal(9, 3, rng);
    CHECK(oracle::max_abs_diff(net.infer(x), oracle::naive_forward(net, x)) < 1e-12);
    CHECK(oracle::max_abs_diff(net.forward(x), net.infer(x)) == 0.0);
  }

  TEST_CASE("input dimension mismatch") {
    smart::Rng rng(2);
    const Mlp net({3, 4, 1}, rng);
    CHECK_THROWS_AS(net.infer(Matrix2D(2, 5)), std::invalid_argument);
  }

  TEST_CASE("affine network computes exactly W x + b") {
    smart::LinearLayer l(2, 2);
    l.weight = Matrix2D{{1, 2}, {3, 4}};
    l.bias = {0.5, -0.5};
    const Mlp net = Mlp::from_layers({l}, 1.0);
    const Matrix2D y = net.infer(Matrix2D{{1, 1}});
    CHECK(y(0, 0) == 3.5);
    CHECK(y(0, 1) == 6.5);
  }

  TEST_CASE("backward without a cached forward pass") {
    smart::Rng rng(2);
    Mlp net({2, 3, 1}, rng);
    CHECK_THROWS_AS(net.backward(Matrix2D(1, 1)), std::logic_error);
    (void)net.forward(Matrix2D(1, 2));
    (void)net.backward(Matrix2D(1, 1, 1.0));
    CHECK_THROWS_AS(net.backward(Matrix2D(1, 1)), std::logic_error);
  }

  TEST_CASE("parameter and input gradients match central differences") {
    smart::Rng rng(5);
    Mlp net({2, 128, 128, 2}, rng);
    for (auto& l : net.layers()) {
      for (double& b : l.bias) b = 0.05;
    }
    Matrix2D x = smart::standard_normal(6, 2, rng);
    const Matrix2D c = smart::standard_normal(6, 2, rng);

    (void)net.forward(x);
    const Matrix2D gx = net.backward(c);
    CHECK(oracle::max_abs_diff(gx, net.input_gradient(x, c)) < 1e-12);

    std::mt19937_64 pick(9);
    double worst = 0.0;
    for (std::size_t k = 0; k < net.layers().size(); ++k) {
      auto& layer = net.layers()[k];
      auto w = layer.weight.data();
      auto gw = layer.grad_weight.data();
      for (int trial = 0; trial < 25; ++trial) {
        const std::size_t i = pick() % w.size();
        const double num = oracle::central_difference(w[i], [&] { return weighted_output(net, x, c); });
        worst = std::max(worst, oracle::relative_error(gw[i], num));
      }
      for (std::size_t i = 0; i < layer.bias.size(); i += 17) {
        const double num =
            oracle::central_difference(layer.bias[i], [&] { return weighted_output(net, x, c); });
        worst = std::max(worst, oracle::relative_error(layer.grad_bias[i], num));
      }
    }
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double num =
          oracle::central_difference(x.data()[i], [&] { return weighted_output(net, x, c); });
      worst = std::max(worst, oracle::relative_error(gx.data()[i], num));
    }
    CHECK(worst <= 1e-4);
  }

  TEST_CASE("backward without parameter accumulation leaves gradients untouched") {
    smart::Rng rng(5);
    Mlp net({2, 8, 1}, rng);
    (void)net.forward(Matrix2D(3, 2, 0.5));
    (void)net.backward(Matrix2D(3, 1, 1.0), false);
    for (const auto& l : net.layers()) {
      for (double g : l.grad_weight.data()) CHECK(g == 0.0);
    }
  }

  TEST_CASE("gradients accumulate across backward calls") {
    smart::Rng rng(6);
    Mlp net({2, 4, 1}, rng);
    const Matrix2D x = smart::standard_normal(3, 2, rng);
    (void)net.forward(x);
    (void)net.backward(Matrix2D(3, 1, 1.0));
    const Matrix2D once = net.layers()[0].grad_weight;
    (void)net.forward(x);
    (void)net.backward(Matrix2D(3, 1, 1.0));
    Matrix2D twice = once;
    for (double& v : twice.data()) v *= 2.0;
    CHECK(oracle::max_abs_diff(net.layers()[0].grad_weight, twice) < 1e-12);
  }

  TEST_CASE("adam matches a hand-rolled reference over several steps") {
    smart::LinearLayer l(1, 1);
    l.weight(0, 0) = 1.0;
    l.bias = {-2.0};
    Mlp net = Mlp::from_layers({l}, 1.0);
    const smart::AdamConfig cfg{0.1, 0.9, 0.999, 1e-8};

    // Reference on f(w, b) = (w + b)^2 / 2 at input 1.
    double w = 1.0, b = -2.0, mw = 0, vw = 0, mb = 0, vb = 0;
    for (std::size_t t = 1; t <= 5; ++t) {
      const double gw = w + b;
      const double gb = w + b;
      mw = 0.9 * mw + 0.1 * gw;
      vw = 0.999 * vw + 0.001 * gw * gw;
      mb = 0.9 * mb + 0.1 * gb;
      vb = 0.999 * vb + 0.001 * gb * gb;
      const double c1 = 1 - std::pow(0.9, t);
      const double c2 = 1 - std::pow(0.999, t);
      w -= 0.1 * (mw / c1) / (std::sqrt(vw / c2) + 1e-8);
      b -= 0.1 * (mb / c1) / (std::sqrt(vb / c2) + 1e-8);

      const Matrix2D y = net.forward(Matrix2D{{1.0}});
      (void)net.backward(y);
      smart::adam_step(net, cfg, t);
      CHECK(net.layers()[0].weight(0, 0) == doctest::Approx(w).epsilon(1e-14));
      CHECK(net.layers()[0].bias[0] == doctest::Approx(b).epsilon(1e-14));
      CHECK(net.layers()[0].grad_weight(0, 0) == 0.0);
    }
  }

  TEST_CASE("adam first step moves each parameter by lr against its gradient sign") {
    smart::Rng rng(3);
    Mlp net({2, 3, 1}, rng);
    const Mlp before = net;
    (void)net.forward(smart::standard_normal(4, 2, rng));
    (void)net.backward(Matrix2D(4, 1, 1.0));
    const Matrix2D g = net.layers()[0].grad_weight;
    smart::adam_step(net, {1e-3, 0.9, 0.999, 1e-8}, 1);
    for (std::size_t i = 0; i < g.size(); ++i) {
      const double step = before.layers()[0].weight.data()[i] - net.layers()[0].weight.data()[i];
      if (std::abs(g.data()[i]) > 1e-6) CHECK(step == doctest::Approx(1e-3 * (g.data()[i] > 0 ? 1 : -1)).epsilon(1e-4));
    }
  }

  TEST_CASE("adam rejects bad input") {
    smart::Rng rng(3);
    Mlp net({2, 3, 1}, rng);
    CHECK_THROWS_AS(smart::adam_step(net, {}, 0), std::invalid_argument);
    net.layers()[1].grad_bias[0] = std::nan("");
    CHECK_THROWS_AS(smart::adam_step(net, {}, 1), std::runtime_error);
  }

  TEST_CASE("concurrent inference on a frozen net matches serial") {
    smart::Rng rng(8);
    const Mlp net({2, 64, 64, 2}, rng);
    const Matrix2D x = smart::standard_normal(200, 2, rng);
    const Matrix2D serial = net.infer(x);
    std::vector<Matrix2D> results(4);
    std::vector<std::thread> threads;
    for (std::size_t i = 0; i < results.size(); ++i) {
      threads.emplace_back([&, i] { results[i] = net.infer(x); });
    }
    for (auto& t : threads) t.join();
    for (const auto& r : results) CHECK(r == serial);
  }
}

TEST_SUITE("nn") {
  TEST_CASE("scheduled learning rate decays linearly to the final scale") {
    const smart::AdamConfig base{1e-3, 0.5, 0.999, 1e-8};
    CHECK(smart::scheduled_adam(base, 0.1, 0, 100).lr == doctest::Approx(1e-3));
    CHECK(smart::scheduled_adam(base, 0.1, 50, 100).lr == doctest::Approx(5.5e-4));
    CHECK(smart::scheduled_adam(base, 0.1, 100, 100).lr == doctest::Approx(1e-4));
    CHECK(smart::scheduled_adam(base, 0.1, 500, 100).lr == doctest::Approx(1e-4));
    CHECK(smart::scheduled_adam(base, 0.1, 50, 100).beta1 == 0.5);
    CHECK(smart::scheduled_adam(base, 1.0, 70, 100).lr == base.lr);
  }
}
