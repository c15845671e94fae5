#include "smart/gan.hpp"

#include <cmath>
#include <string>

#include "smart/activations.hpp"

namespace smart {

namespace {

Matrix2D append_one_hot(const Matrix2D& x, std::span<const int> labels, std::size_t label_count,
                        const char* who) {
  if (label_count == 0) return x;
  if (labels.size() != x.rows()) {
    throw std::invalid_argument(std::string(who) + ": conditional pair needs one label per row");
  }
  Matrix2D out(x.rows(), x.cols() + label_count);
  for (std::size_t r = 0; r < x.rows(); ++r) {
    for (std::size_t c = 0; c < x.cols(); ++c) out(r, c) = x(r, c);
    const int k = labels[r];
    if (k < 0 || static_cast<std::size_t>(k) >= label_count) {
      throw std::out_of_range(std::string(who) + ": label " + std::to_string(k) + " out of range");
    }
    out(r, x.cols() + static_cast<std::size_t>(k)) = 1.0;
  }
  return out;
}

Matrix2D leading_columns(const Matrix2D& m, std::size_t cols) {
  if (m.cols() == cols) return m;
  Matrix2D out(m.rows(), cols);
  for (std::size_t r = 0; r < m.rows(); ++r) {
    for (std::size_t c = 0; c < cols; ++c) out(r, c) = m(r, c);
  }
  return out;
}

void require_finite(double v, const char* what) {
  if (!std::isfinite(v)) throw std::runtime_error(std::string(what) + ": non-finite loss");
}

}  // namespace

GanPair GanPair::create(std::size_t latent_dim, std::size_t label_count, Rng& rng) {
  GanPair p;
  p.latent_dim = latent_dim;
  p.label_count = label_count;
  p.generator = Mlp({latent_dim + label_count, kHidden, kHidden, 2}, rng);
  p.discriminator = Mlp({2 + label_count, kHidden, kHidden, 1}, rng);
  return p;
}

Matrix2D GanPair::generator_input(const Matrix2D& z, std::span<const int> labels) const {
  if (z.cols() != latent_dim) {
    throw std::invalid_argument("generator: latent batch " + z.shape_string() + " but latent_dim " +
                                std::to_string(latent_dim));
  }
  return append_one_hot(z, labels, label_count, "generator");
}

Matrix2D GanPair::discriminator_input(const Matrix2D& x, std::span<const int> labels) const {
  return append_one_hot(x, labels, label_count, "discriminator");
}

std::vector<NamedTensor> GanPair::export_tensors() const {
  auto out = export_mlp(generator, "gen.");
  auto disc = export_mlp(discriminator, "disc.");
  out.insert(out.end(), disc.begin(), disc.end());
  out.push_back({"gan.meta", {2}, {static_cast<double>(latent_dim), static_cast<double>(label_count)}});
  return out;
}

GanPair GanPair::import_tensors(std::span<const NamedTensor> tensors) {
  GanPair p;
  p.generator = import_mlp(tensors, "gen.");
  p.discriminator = import_mlp(tensors, "disc.");
  bool have_meta = false;
  for (const auto& t : tensors) {
    if (t.name == "gan.meta" && t.values.size() == 2) {
      p.latent_dim = static_cast<std::size_t>(t.values[0]);
      p.label_count = static_cast<std::size_t>(t.values[1]);
      have_meta = true;
    }
  }
  if (!have_meta) throw std::runtime_error("checkpoint: missing gan.meta tensor");
  return p;
}

double d_loss(GanPair& pair, const LabeledBatch& real, const Matrix2D& z,
              std::span<const int> fake_labels) {
  if (real.size() == 0 || z.rows() == 0) throw std::invalid_argument("d_loss: empty batch");
  const Matrix2D fake = pair.generator.infer(pair.generator_input(z, fake_labels));
  return discriminator_loss(pair, real, fake, fake_labels);
}

double discriminator_loss(GanPair& pair, const LabeledBatch& real, const Matrix2D& fake,
                          std::span<const int> fake_labels) {
  if (real.size() == 0 || fake.rows() == 0) {
    throw std::invalid_argument("discriminator_loss: empty batch");
  }

  const Matrix2D real_logit = pair.discriminator.forward(pair.discriminator_input(real.points, real.labels));
  const double nr = static_cast<double>(real.size());
  double loss_real = 0.0;
  Matrix2D grad_real(real_logit.rows(), 1);
  for (std::size_t r = 0; r < real_logit.rows(); ++r) {
    const double l = real_logit(r, 0);
    loss_real -= log_sigmoid(l);
    grad_real(r, 0) = -sigmoid(-l) / nr;
  }
  pair.discriminator.backward(grad_real);

  const Matrix2D fake_logit = pair.discriminator.forward(pair.discriminator_input(fake, fake_labels));
  const double nf = static_cast<double>(fake.rows());
  double loss_fake = 0.0;
  Matrix2D grad_fake(fake_logit.rows(), 1);
  for (std::size_t r = 0; r < fake_logit.rows(); ++r) {
    const double l = fake_logit(r, 0);
    loss_fake -= log_sigmoid(-l);
    grad_fake(r, 0) = sigmoid(l) / nf;
  }
  pair.discriminator.backward(grad_fake);

  const double loss = loss_real / nr + loss_fake / nf;
  require_finite(loss, "d_loss");
  return loss;
}

AdversarialGrad adversarial_sample_gradient(GanPair& pair, const Matrix2D& x,
                                            std::span<const int> labels) {
  const Matrix2D logit = pair.discriminator.forward(pair.discriminator_input(x, labels));
  const double n = static_cast<double>(x.rows());
  AdversarialGrad out;
  Matrix2D grad_logit(logit.rows(), 1);
  for (std::size_t r = 0; r < logit.rows(); ++r) {
    const double l = logit(r, 0);
    out.loss -= log_sigmoid(l);
    grad_logit(r, 0) = -sigmoid(-l) / n;
  }
  out.loss /= n;
  require_finite(out.loss, "g_loss");
  out.grad = leading_columns(pair.discriminator.backward(grad_logit, false), x.cols());
  return out;
}

double g_loss(GanPair& pair, const Matrix2D& z, std::span<const int> labels) {
  if (z.rows() == 0) throw std::invalid_argument("g_loss: empty batch");
  const Matrix2D g = pair.generator.forward(pair.generator_input(z, labels));
  const AdversarialGrad adv = adversarial_sample_gradient(pair, g, labels);
  pair.generator.backward(adv.grad);
  return adv.loss;
}

RegularityResult score_regularity_at(const NoiseModel& model, const NoiseSchedule& sched,
                                     const Matrix2D& gen_out, std::span<const int> t,
                                     const Matrix2D& eps, JacobianMode mode,
                                     std::span<const int> labels) {
  require_same_shape(gen_out, eps, "score_regularity");
  if (t.size() != gen_out.rows()) throw std::invalid_argument("score_regularity: one t per row");
  const std::size_t n = gen_out.rows();
  RegularityResult res;
  res.t.assign(t.begin(), t.end());
  res.eps = eps;
  const Matrix2D x_t = [&] {
    Matrix2D m(n, 2);
    for (std::size_t r = 0; r < n; ++r) {
      sched.check_timestep(t[r], 1);
      const double a = sched.alpha(t[r]);
      const double s = sched.sigma(t[r]);
      m(r, 0) = a * gen_out(r, 0) + s * eps(r, 0);
      m(r, 1) = a * gen_out(r, 1) + s * eps(r, 1);
    }
    return m;
  }();
  const Matrix2D e_hat = model.predict(x_t, t, labels);
  Matrix2D diff(n, 2);
  res.residual.resize(n);
  res.refine_gap.resize(n);
  for (std::size_t r = 0; r < n; ++r) {
    const double ratio = sched.sigma(t[r]) / sched.alpha(t[r]);
    double sq = 0.0;
    double gap = 0.0;
    for (std::size_t c = 0; c < 2; ++c) {
      diff(r, c) = e_hat(r, c) - eps(r, c);
      sq += diff(r, c) * diff(r, c);
      const double refined = gen_out(r, c) + ratio * (eps(r, c) - e_hat(r, c));
      gap += (refined - gen_out(r, c)) * (refined - gen_out(r, c));
    }
    res.residual[r] = sq;
    res.refine_gap[r] = gap;
    res.loss += sq;
  }
  res.loss /= static_cast<double>(n);

  // d/dg ||eps_hat(a g + s eps) - eps||^2 = 2 a J^T (eps_hat - eps); omit mode drops J.
  const Matrix2D back = mode == JacobianMode::full ? model.input_vjp(x_t, t, labels, diff) : diff;
  res.grad = Matrix2D(n, 2);
  for (std::size_t r = 0; r < n; ++r) {
    const double k = 2.0 * sched.alpha(t[r]) / static_cast<double>(n);
    res.grad(r, 0) = k * back(r, 0);
    res.grad(r, 1) = k * back(r, 1);
  }
  return res;
}

RegularityResult score_regularity(const NoiseModel& model, const NoiseSchedule& sched,
                                  const Matrix2D& gen_out, const SmartConfig& smart, Rng& rng,
                                  std::span<const int> labels) {
  smart.validate(sched.T());
  std::uniform_int_distribution<int> pick(smart.t_lo, smart.t_hi);
  std::vector<int> t(gen_out.rows());
  for (int& ti : t) ti = pick(rng);
  const Matrix2D eps = standard_normal(gen_out.rows(), 2, rng);
  return score_regularity_at(model, sched, gen_out, t, eps, smart.jacobian, labels);
}

GanStreams GanStreams::from_seed(std::uint64_t seed) {
  return {make_stream(seed, "gan.data"), make_stream(seed, "gan.latent"),
          make_stream(seed, "gan.labels"), make_stream(seed, "gan.regularity")};
}

namespace {

std::vector<int> draw_labels(std::size_t n, std::size_t label_count, Rng& rng) {
  if (label_count == 0) return {};
  std::uniform_int_distribution<int> pick(0, static_cast<int>(label_count) - 1);
  std::vector<int> labels(n);
  for (int& l : labels) l = pick(rng);
  return labels;
}

}  // namespace

double discriminator_step(GanPair& pair, const GridMixture& mix, const TrainConfig& cfg,
                          std::size_t iter_index, GanStreams& streams) {
  const std::size_t b = cfg.gan.batch;
  const LabeledBatch real = sample(mix, b, streams.data, pair.conditional());
  const Matrix2D z = standard_normal(b, pair.latent_dim, streams.latent);
  const std::vector<int> labels = draw_labels(b, pair.label_count, streams.labels);
  const double loss = d_loss(pair, real, z, labels);
  adam_step(pair.discriminator, scheduled_adam(cfg.gan.adam_d, cfg.gan.lr_final_scale, iter_index, cfg.gan.iters), iter_index + 1);
  return loss;
}

StepLosses generator_step(GanPair& pair, const NoiseModel* model, const NoiseSchedule& sched,
                          const TrainConfig& cfg, std::size_t iter_index, GanStreams& streams) {
  const SmartConfig& smart = cfg.smart;
  const std::size_t b = cfg.gan.batch;
  StepLosses out;

  const Matrix2D z = standard_normal(b, pair.latent_dim, streams.latent);
  const std::vector<int> labels = draw_labels(b, pair.label_count, streams.labels);
  const Matrix2D g = pair.generator.forward(pair.generator_input(z, labels));
  AdversarialGrad adv = adversarial_sample_gradient(pair, g, labels);
  out.g_loss = adv.loss;

  const bool apply = smart.enabled && smart.lambda > 0.0 && model != nullptr &&
                     iter_index % static_cast<std::size_t>(smart.freq) == 0;
  if (!apply) {
    pair.generator.backward(adv.grad);
  } else {
    out.regularity_applied = true;
    RegularityResult reg;
    if (smart.fresh_latents) {
      pair.generator.backward(adv.grad);
      const Matrix2D z2 = standard_normal(b, pair.latent_dim, streams.latent);
      const std::vector<int> labels2 = draw_labels(b, pair.label_count, streams.labels);
      const Matrix2D g2 = pair.generator.forward(pair.generator_input(z2, labels2));
      reg = score_regularity(*model, sched, g2, smart, streams.regularity, labels2);
      for (double& v : reg.grad.data()) v *= smart.lambda;
      pair.generator.backward(reg.grad);
    } else {
      reg = score_regularity(*model, sched, g, smart, streams.regularity, labels);
      for (std::size_t i = 0; i < adv.grad.size(); ++i) {
        adv.grad.data()[i] += smart.lambda * reg.grad.data()[i];
      }
      pair.generator.backward(adv.grad);
    }
    require_finite(reg.loss, "score_regularity");
    out.score_loss = reg.loss;
    double gap = 0.0;
    double scaled = 0.0;
    for (std::size_t r = 0; r < reg.refine_gap.size(); ++r) {
      const double ratio = sched.alpha(reg.t[r]) / sched.sigma(reg.t[r]);
      gap += reg.refine_gap[r];
      scaled += ratio * ratio * reg.refine_gap[r];
    }
    out.refine_gap = gap / static_cast<double>(reg.refine_gap.size());
    out.refine_gap_scaled = scaled / static_cast<double>(reg.refine_gap.size());
  }
  adam_step(pair.generator, scheduled_adam(cfg.gan.adam_g, cfg.gan.lr_final_scale, iter_index, cfg.gan.iters), iter_index + 1);
  return out;
}

LabeledBatch sample_generator(const GanPair& pair, std::size_t n, Rng& rng,
                              std::span<const int> labels) {
  const Matrix2D z = standard_normal(n, pair.latent_dim, rng);
  LabeledBatch out;
  if (pair.conditional()) {
    out.labels = labels.empty() ? draw_labels(n, pair.label_count, rng)
                                : std::vector<int>(labels.begin(), labels.end());
  }
  out.points = pair.generator.infer(pair.generator_input(z, out.labels));
  return out;
}

LabeledBatch evaluation_samples(const GanPair& pair, const TrainConfig& cfg) {
  Rng eval = make_stream(cfg.seed, "eval");
  return sample_generator(pair, cfg.eval.samples, eval);
}

SampleMetrics evaluate_generator(const GanPair& pair, const GridMixture& mix,
                                 const TrainConfig& cfg) {
  return compute_metrics(evaluation_samples(pair, cfg).points, mix, cfg.eval.tau);
}

GanRun train_gan(const GridMixture& mix, const NoiseModel* model, const TrainConfig& cfg,
                 const RowSink& sink) {
  cfg.validate();
  const NoiseSchedule sched = NoiseSchedule::linear(cfg.dpm.T, cfg.dpm.beta_start, cfg.dpm.beta_end);
  Rng init = make_stream(cfg.seed, "gan.init");
  GanRun run;
  run.pair = GanPair::create(cfg.gan.latent_dim, cfg.conditional ? mix.size() : 0, init);
  GanStreams streams = GanStreams::from_seed(cfg.seed);
  GanPair last_good = run.pair;

  double d_acc = 0.0;
  double g_acc = 0.0;
  double s_acc = 0.0;
  std::size_t steps = 0;
  std::size_t reg_steps = 0;

  auto evaluate = [&](std::size_t iter) {
    const SampleMetrics m = evaluate_generator(run.pair, mix, cfg);
    MetricsRow row{iter,
                   steps ? d_acc / static_cast<double>(steps) : 0.0,
                   steps ? g_acc / static_cast<double>(steps) : 0.0,
                   reg_steps ? s_acc / static_cast<double>(reg_steps) : 0.0,
                   m.mode_coverage,
                   m.hq_fraction,
                   m.mean_dist};
    run.history.push_back(row);
    if (sink) sink(row);
    d_acc = g_acc = s_acc = 0.0;
    steps = reg_steps = 0;
    last_good = run.pair;
  };

  for (std::size_t it = 0; it < cfg.gan.iters; ++it) {
    try {
      const double dl = discriminator_step(run.pair, mix, cfg, it, streams);
      const StepLosses gl = generator_step(run.pair, model, sched, cfg, it, streams);
      d_acc += dl;
      g_acc += gl.g_loss;
      ++steps;
      if (gl.regularity_applied) {
        s_acc += gl.score_loss;
        ++reg_steps;
        ++run.regularity_calls;
      }
    } catch (const std::runtime_error& e) {
      throw TrainingDiverged("train_gan: diverged at iteration " + std::to_string(it) + ": " +
                                 e.what(),
                             last_good);
    }
    if ((it + 1) % cfg.eval.interval == 0) evaluate(it + 1);
  }
  if (cfg.gan.iters == 0 || cfg.gan.iters % cfg.eval.interval != 0) evaluate(cfg.gan.iters);
  return run;
}

}  // namespace smart
