#include <cmath>
#include <limits>
#include <numbers>

#include <stdexcept>

#include "doctest.h"
#include "oracles.hpp"
#include "smart/diffusion.hpp"
#include "smart/gan.hpp"

using smart::GanPair;
using smart::GridMixture;
using smart::Matrix2D;

namespace {

const smart::NoiseSchedule& sched() {
  static const auto s = smart::NoiseSchedule::linear(1000, 1e-4, 0.02);
  return s;
}

GanPair small_pair(std::size_t labels = 0, std::uint64_t seed = 1) {
  smart::Rng rng(seed);
  GanPair p = GanPair::create(2, labels, rng);
  for (auto* net : {&p.generator, &p.discriminator}) {
    for (auto& l : net->layers()) {
      for (double& b : l.bias) b = 0.03;
    }
  }
  return p;
}

// Discriminator whose logit is 50 * x.
GanPair linear_discriminator_pair() {
  GanPair p = small_pair();
  smart::LinearLayer l(2, 1);
  l.weight = Matrix2D{{50.0, 0.0}};
  p.discriminator = smart::Mlp::from_layers({l}, 1.0);
  return p;
}

class NanModel final : public smart::NoiseModel {
 public:
  Matrix2D predict(const Matrix2D& x, std::span<const int>, std::span<const int>) const override {
    return Matrix2D(x.rows(), 2, std::numeric_limits<double>::quiet_NaN());
  }
  Matrix2D input_vjp(const Matrix2D& x, std::span<const int>, std::span<const int>,
                     const Matrix2D&) const override {
    return Matrix2D(x.rows(), 2);
  }
};

smart::TrainConfig tiny_config() {
  smart::TrainConfig cfg;
  cfg.gan.iters = 24;
  cfg.gan.batch = 32;
  cfg.eval.interval = 10;
  cfg.smart.freq = 8;
  cfg.eval.samples = 200;
  return cfg;
}

}  // namespace

TEST_SUITE("gan") {
  TEST_CASE("network shapes and conditional inputs") {
    const GanPair p = small_pair();
    CHECK(p.generator.in_dim() == 2);
    CHECK(p.generator.out_dim() == 2);
    CHECK(p.discriminator.in_dim() == 2);
    CHECK(p.discriminator.out_dim() == 1);
    const GanPair c = small_pair(49);
    CHECK(c.generator.in_dim() == 2 + 49);
    CHECK(c.discriminator.in_dim() == 2 + 49);
    const std::vector<int> labels{3, 48};
    const Matrix2D in = c.discriminator_input(Matrix2D(2, 2), labels);
    CHECK(in(0, 2 + 3) == 1.0);
    CHECK(in(1, 2 + 48) == 1.0);
    const std::vector<int> bad{49, 0};
    CHECK_THROWS(c.discriminator_input(Matrix2D(2, 2), bad));
    CHECK_THROWS(c.generator_input(Matrix2D(2, 2), {}));
  }

  TEST_CASE("losses at the symmetry point") {
    GanPair p = small_pair();
    auto& last = p.discriminator.layers().back();
    last.weight.fill(0.0);
    last.bias = {0.0};
    smart::Rng rng(2);
    const auto real = smart::sample(GridMixture::standard(), 16, rng, false);
    const Matrix2D z = smart::standard_normal(16, 2, rng);
    CHECK(smart::d_loss(p, real, z) == doctest::Approx(2 * std::numbers::ln2).epsilon(1e-12));
    CHECK(smart::g_loss(p, z) == doctest::Approx(std::numbers::ln2).epsilon(1e-12));
  }

  TEST_CASE("losses at saturated logits stay finite") {
    GanPair p = linear_discriminator_pair();
    smart::LabeledBatch real;
    real.points = Matrix2D(8, 2, 0.0);
    for (std::size_t r = 0; r < 8; ++r) real.points(r, 0) = 1.0;
    const Matrix2D fake(8, 2, -1.0);
    const double dl = smart::discriminator_loss(p, real, [&] {
      Matrix2D f(8, 2);
      for (std::size_t r = 0; r < 8; ++r) f(r, 0) = -1.0;
      return f;
    }());
    CHECK(dl == doctest::Approx(2 * std::log1p(std::exp(-50.0))).epsilon(1e-6));
    CHECK(dl < 1e-20);
    const auto adv = smart::adversarial_sample_gradient(p, fake);
    CHECK(adv.loss == doctest::Approx(50.0).epsilon(1e-12));
    CHECK(std::isfinite(adv.grad(0, 0)));
  }

  TEST_CASE("discriminator and generator gradients match central differences") {
    GanPair p = small_pair();
    smart::Rng rng(3);
    const auto real = smart::sample(GridMixture::standard(), 6, rng, false);
    const Matrix2D z = smart::standard_normal(6, 2, rng);

    (void)smart::d_loss(p, real, z);
    std::mt19937_64 pick(4);
    double worst = 0.0;
    auto d_value = [&] {
      GanPair q = p;
      return smart::d_loss(q, real, z);
    };
    for (auto& layer : p.discriminator.layers()) {
      for (int trial = 0; trial < 15; ++trial) {
        const std::size_t i = pick() % layer.weight.size();
        const double num = oracle::central_difference(layer.weight.data()[i], d_value, 1e-5);
        worst = std::max(worst, oracle::relative_error(layer.grad_weight.data()[i], num));
      }
    }
    for (const auto& layer : p.generator.layers()) {
      for (double g : layer.grad_weight.data()) CHECK(g == 0.0);
    }
    p.discriminator.zero_grad();

    (void)smart::g_loss(p, z);
    auto g_value = [&] {
      GanPair q = p;
      return smart::g_loss(q, z);
    };
    for (auto& layer : p.generator.layers()) {
      for (int trial = 0; trial < 15; ++trial) {
        const std::size_t i = pick() % layer.weight.size();
        const double num = oracle::central_difference(layer.weight.data()[i], g_value, 1e-5);
        worst = std::max(worst, oracle::relative_error(layer.grad_weight.data()[i], num));
      }
      for (std::size_t i = 0; i < layer.bias.size(); i += 31) {
        const double num = oracle::central_difference(layer.bias[i], g_value, 1e-5);
        worst = std::max(worst, oracle::relative_error(layer.grad_bias[i], num));
      }
    }
    for (const auto& layer : p.discriminator.layers()) {
      for (double g : layer.grad_weight.data()) CHECK(g == 0.0);
    }
    CHECK(worst <= 1e-4);
  }

  TEST_CASE("regularity vanishes for an exact predictor on its own point mass") {
    const smart::MixtureOracle point(GridMixture::from_centers({{0.5, -0.5}}, 0.0), sched());
    const Matrix2D g{{0.5, -0.5}, {0.5, -0.5}, {0.5, -0.5}};
    smart::Rng rng(5);
    const std::vector<int> t{40, 50, 60};
    const Matrix2D eps = smart::standard_normal(3, 2, rng);
    for (auto mode : {smart::JacobianMode::full, smart::JacobianMode::omit}) {
      const auto r = smart::score_regularity_at(point, sched(), g, t, eps, mode);
      CHECK(r.loss < 1e-20);
      for (double v : r.grad.data()) CHECK(std::abs(v) < 1e-9);
    }
  }

  TEST_CASE("regularity equals the scaled refinement gap per sample") {
    const smart::MixtureOracle o(GridMixture::standard(), sched());
    smart::Rng rng(6);
    const Matrix2D g = smart::uniform(200, 2, -4, 4, rng);
    smart::SmartConfig smart_cfg;
    smart_cfg.t_lo = 1;
    smart_cfg.t_hi = 1000;
    const auto r = smart::score_regularity(o, sched(), g, smart_cfg, rng);
    for (std::size_t i = 0; i < 200; ++i) {
      const double k = sched().alpha(r.t[i]) / sched().sigma(r.t[i]);
      CHECK(std::abs(k * k * r.refine_gap[i] - r.residual[i]) <= 1e-10 * std::max(1.0, r.residual[i]));
    }
  }

  TEST_CASE("omit mode passes the residual straight through") {
    const smart::MixtureOracle o(GridMixture::standard(), sched());
    smart::Rng rng(7);
    const Matrix2D g = smart::uniform(10, 2, -3, 3, rng);
    const Matrix2D eps = smart::standard_normal(10, 2, rng);
    const std::vector<int> t(10, 45);
    const auto r = smart::score_regularity_at(o, sched(), g, t, eps, smart::JacobianMode::omit);
    const Matrix2D e_hat = o.predict(smart::q_sample(sched(), g, 45, eps), t, {});
    for (std::size_t i = 0; i < 10; ++i) {
      for (std::size_t c = 0; c < 2; ++c) {
        CHECK(r.grad(i, c) ==
              doctest::Approx(2.0 * sched().alpha(45) / 10.0 * (e_hat(i, c) - eps(i, c))));
      }
    }
  }

  TEST_CASE("full-mode regularity gradient matches central differences") {
    smart::Rng rng(8);
    const smart::MixtureOracle o(GridMixture::standard(), sched());
    smart::NoisePredictor net_model(1000, 0, rng);
    const Matrix2D eps = smart::standard_normal(5, 2, rng);
    const std::vector<int> t{40, 45, 50, 55, 60};
    Matrix2D g = smart::uniform(5, 2, -2, 2, rng);
    for (const smart::NoiseModel* model : {static_cast<const smart::NoiseModel*>(&o),
                                           static_cast<const smart::NoiseModel*>(&net_model)}) {
      const auto r = smart::score_regularity_at(*model, sched(), g, t, eps, smart::JacobianMode::full);
      for (std::size_t i = 0; i < g.size(); ++i) {
        const double num = oracle::central_difference(g.data()[i], [&] {
          return smart::score_regularity_at(*model, sched(), g, t, eps, smart::JacobianMode::full).loss;
        }, 1e-6);
        CHECK(oracle::relative_error(r.grad.data()[i], num, 1e-4) <= 1e-4);
      }
    }
  }

  TEST_CASE("regularity rejects timesteps outside [1, T]") {
    const smart::MixtureOracle o(GridMixture::standard(), sched());
    const std::vector<int> t{0};
    CHECK_THROWS(smart::score_regularity_at(o, sched(), Matrix2D(1, 2), t, Matrix2D(1, 2),
                                            smart::JacobianMode::full));
    smart::SmartConfig bad;
    bad.t_hi = 1001;
    smart::Rng rng(1);
    CHECK_THROWS(smart::score_regularity(o, sched(), Matrix2D(1, 2), bad, rng));
  }

  TEST_CASE("lazy schedule applies the regularity on multiples of freq only") {
    const smart::MixtureOracle o(GridMixture::standard(), sched());
    smart::TrainConfig cfg = tiny_config();
    GanPair p = small_pair();
    auto streams = smart::GanStreams::from_seed(0);
    for (std::size_t it = 0; it < 20; ++it) {
      const auto s = smart::generator_step(p, &o, sched(), cfg, it, streams);
      CHECK(s.regularity_applied == (it % 8 == 0));
      if (s.regularity_applied) {
        CHECK(std::abs(s.refine_gap_scaled - s.score_loss) <= 1e-10 * s.score_loss);
      }
    }
    for (std::size_t n : {1u, 8u, 9u, 24u, 25u}) {
      cfg.gan.iters = n;
      const auto run = smart::train_gan(GridMixture::standard(), &o, cfg);
      CHECK(run.regularity_calls == (n + 7) / 8);
    }
  }

  TEST_CASE("zero weight reproduces the vanilla trajectory") {
    const smart::MixtureOracle o(GridMixture::standard(), sched());
    smart::TrainConfig with = tiny_config();
    with.smart.lambda = 0.0;
    smart::TrainConfig without = tiny_config();
    without.smart.enabled = false;
    const auto a = smart::train_gan(GridMixture::standard(), &o, with);
    const auto b = smart::train_gan(GridMixture::standard(), nullptr, without);
    CHECK(a.pair.export_tensors() == b.pair.export_tensors());
    CHECK(smart::metrics_csv(a.history) == smart::metrics_csv(b.history));
  }

  TEST_CASE("zero iterations return the initial networks") {
    smart::TrainConfig cfg = tiny_config();
    cfg.gan.iters = 0;
    cfg.smart.enabled = false;
    const auto run = smart::train_gan(GridMixture::standard(), nullptr, cfg);
    smart::Rng init = smart::make_stream(cfg.seed, "gan.init");
    CHECK(run.pair.export_tensors() == GanPair::create(2, 0, init).export_tensors());
    REQUIRE(run.history.size() == 1);
    CHECK(run.history[0].iter == 0);
  }

  TEST_CASE("training is reproducible and reports every interval") {
    const smart::MixtureOracle o(GridMixture::standard(), sched());
    const smart::TrainConfig cfg = tiny_config();
    const auto a = smart::train_gan(GridMixture::standard(), &o, cfg);
    const auto b = smart::train_gan(GridMixture::standard(), &o, cfg);
    CHECK(a.pair.export_tensors() == b.pair.export_tensors());
    REQUIRE(a.history.size() == 3);
    CHECK(a.history[0].iter == 10);
    CHECK(a.history[1].iter == 20);
    CHECK(a.history[2].iter == 24);
    CHECK(smart::metrics_csv(a.history) == smart::metrics_csv(b.history));
  }

  TEST_CASE("conditional training runs end to end") {
    const smart::MixtureOracle o(GridMixture::standard(), sched());
    smart::TrainConfig cfg = tiny_config();
    cfg.conditional = true;
    const auto run = smart::train_gan(GridMixture::standard(), &o, cfg);
    CHECK(run.pair.label_count == 49);
    smart::Rng rng(1);
    const auto s = smart::sample_generator(run.pair, 30, rng);
    CHECK(s.labels.size() == 30);
  }

  TEST_CASE("divergence surfaces the last good networks") {
    const NanModel nan_model;
    const smart::TrainConfig cfg = tiny_config();
    try {
      (void)smart::train_gan(GridMixture::standard(), &nan_model, cfg);
      FAIL("expected divergence");
    } catch (const smart::TrainingDiverged& e) {
      smart::Rng init = smart::make_stream(cfg.seed, "gan.init");
      CHECK(e.last_good().export_tensors() == GanPair::create(2, 0, init).export_tensors());
      CHECK(std::string(e.what()).find("iteration 0") != std::string::npos);
    }
  }

  TEST_CASE("generator sampling") {
    GanPair p = small_pair();
    for (auto& l : p.generator.layers()) {
      l.weight.fill(0.0);
      std::fill(l.bias.begin(), l.bias.end(), 0.0);
    }
    p.generator.layers().back().bias = {0.25, -0.75};
    smart::Rng rng(2);
    const auto s = smart::sample_generator(p, 7, rng);
    CHECK(s.points.rows() == 7);
    CHECK(s.points.cols() == 2);
    for (std::size_t r = 0; r < 7; ++r) {
      CHECK(s.points(r, 0) == 0.25);
      CHECK(s.points(r, 1) == -0.75);
    }
  }

  TEST_CASE("checkpoint tensors round trip") {
    const GanPair p = small_pair(49);
    const auto tensors = p.export_tensors();
    bool gen = false, disc = false;
    for (const auto& t : tensors) {
      gen = gen || t.name.rfind("gen.", 0) == 0;
      disc = disc || t.name.rfind("disc.", 0) == 0;
    }
    CHECK(gen);
    CHECK(disc);
    const GanPair back = GanPair::import_tensors(tensors);
    CHECK(back.label_count == 49);
    CHECK(back.export_tensors() == tensors);
  }
}
