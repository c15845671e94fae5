#include "smart/diffusion.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace smart {

Matrix2D q_sample(const NoiseSchedule& sched, const Matrix2D& x0, int t, const Matrix2D& eps) {
  sched.check_timestep(t);
  require_same_shape(x0, eps, "q_sample");
  const double a = sched.alpha(t);
  const double s = sched.sigma(t);
  Matrix2D out(x0.rows(), x0.cols());
  const auto x = x0.data();
  const auto e = eps.data();
  auto o = out.data();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] = a * x[i] + s * e[i];
  return out;
}

Matrix2D q_sample(const NoiseSchedule& sched, const Matrix2D& x0, std::span<const int> t,
                  const Matrix2D& eps) {
  require_same_shape(x0, eps, "q_sample");
  if (t.size() != x0.rows()) throw std::invalid_argument("q_sample: one timestep per row");
  Matrix2D out(x0.rows(), x0.cols());
  for (std::size_t r = 0; r < x0.rows(); ++r) {
    sched.check_timestep(t[r]);
    const double a = sched.alpha(t[r]);
    const double s = sched.sigma(t[r]);
    for (std::size_t c = 0; c < x0.cols(); ++c) out(r, c) = a * x0(r, c) + s * eps(r, c);
  }
  return out;
}

namespace {

double mean_sq_residual(const Matrix2D& pred, const Matrix2D& eps) {
  double acc = 0.0;
  const auto p = pred.data();
  const auto e = eps.data();
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double d = p[i] - e[i];
    acc += d * d;
  }
  return acc / static_cast<double>(pred.rows());
}

}  // namespace

double dsm_loss_value(const NoiseModel& model, const NoiseSchedule& sched, const Matrix2D& x0,
                      std::span<const int> t, const Matrix2D& eps, std::span<const int> labels) {
  const Matrix2D x_t = q_sample(sched, x0, t, eps);
  return mean_sq_residual(model.predict(x_t, t, labels), eps);
}

double dsm_loss(NoisePredictor& pred, const NoiseSchedule& sched, const Matrix2D& x0,
                std::span<const int> t, const Matrix2D& eps, std::span<const int> labels) {
  const Matrix2D x_t = q_sample(sched, x0, t, eps);
  const Matrix2D out = pred.forward(x_t, t, labels);
  const double loss = mean_sq_residual(out, eps);
  Matrix2D grad(out.rows(), out.cols());
  const double scale = 2.0 / static_cast<double>(out.rows());
  for (std::size_t i = 0; i < grad.size(); ++i) {
    grad.data()[i] = scale * (out.data()[i] - eps.data()[i]);
  }
  pred.backward(grad);
  return loss;
}

NoisePredictor train_dpm(const GridMixture& mix, const TrainConfig& cfg, const LossSink& sink) {
  const DpmConfig& d = cfg.dpm;
  const NoiseSchedule sched = NoiseSchedule::linear(d.T, d.beta_start, d.beta_end);
  Rng init = make_stream(cfg.seed, "dpm.init");
  NoisePredictor pred(d.T, cfg.conditional ? mix.size() : 0, init);
  Rng data = make_stream(cfg.seed, "dpm.data");
  Rng noise = make_stream(cfg.seed, "dpm.noise");
  std::uniform_int_distribution<int> pick_t(1, d.T);
  std::vector<int> t(d.batch);
  for (std::size_t it = 0; it < d.iters; ++it) {
    const LabeledBatch batch = sample(mix, d.batch, data, cfg.conditional);
    for (int& ti : t) ti = pick_t(noise);
    const Matrix2D eps = standard_normal(d.batch, 2, noise);
    const double loss = dsm_loss(pred, sched, batch.points, t, eps, batch.labels);
    if (!std::isfinite(loss)) {
      throw std::runtime_error("train_dpm: non-finite loss at iteration " + std::to_string(it));
    }
    adam_step(pred.net(), scheduled_adam(d.adam, d.lr_final_scale, it, d.iters), it + 1);
    if (sink) sink(it, loss);
  }
  return pred;
}

Matrix2D refine_step(const NoiseModel& model, const NoiseSchedule& sched, const Matrix2D& x, int t,
                     const Matrix2D& eps, std::span<const int> labels) {
  sched.check_timestep(t);
  if (t == 0) throw std::invalid_argument("refine_step: t must be >= 1");
  const double a = sched.alpha(t);
  const double s = sched.sigma(t);
  const Matrix2D x_t = q_sample(sched, x, t, eps);
  const std::vector<int> ts(x.rows(), t);
  const Matrix2D e_hat = model.predict(x_t, ts, labels);
  Matrix2D out = x;
  const double k = s / a;
  for (std::size_t i = 0; i < out.size(); ++i) {
    out.data()[i] += k * (eps.data()[i] - e_hat.data()[i]);
  }
  return out;
}

namespace {

double mean_manifold_distance(const GridMixture& mix, const Matrix2D& x) {
  double acc = 0.0;
  for (std::size_t r = 0; r < x.rows(); ++r) acc += manifold_distance(mix, {x(r, 0), x(r, 1)});
  return acc / static_cast<double>(x.rows());
}

}  // namespace

RefinementTrace refinement_sequence(const NoiseModel& model, const NoiseSchedule& sched,
                                    const GridMixture& mix, const Matrix2D& y0, int t,
                                    std::size_t k, Rng& rng, std::span<const int> labels) {
  if (t < 1) throw std::invalid_argument("refinement_sequence: t must be >= 1");
  RefinementTrace trace;
  trace.states.reserve(k + 1);
  trace.states.push_back(y0);
  trace.mean_distance.push_back(mean_manifold_distance(mix, y0));
  for (std::size_t i = 0; i < k; ++i) {
    const Matrix2D eps = standard_normal(y0.rows(), y0.cols(), rng);
    Matrix2D next = refine_step(model, sched, trace.states.back(), t, eps, labels);
    trace.mean_distance.push_back(mean_manifold_distance(mix, next));
    trace.states.push_back(std::move(next));
  }
  return trace;
}

std::vector<int> ddim_timesteps(int T, std::size_t steps) {
  if (steps < 1 || steps > static_cast<std::size_t>(T)) {
    throw std::invalid_argument("ddim: steps must lie in [1, T]");
  }
  std::vector<int> ts(steps + 1);
  for (std::size_t i = 0; i <= steps; ++i) {
    ts[i] = static_cast<int>((static_cast<long long>(T) * static_cast<long long>(steps - i)) /
                             static_cast<long long>(steps));
  }
  return ts;
}

Matrix2D ddim_from(const NoiseModel& model, const NoiseSchedule& sched, Matrix2D x,
                   std::size_t steps, std::span<const int> labels) {
  const std::vector<int> ts = ddim_timesteps(sched.T(), steps);
  std::vector<int> row_t(x.rows());
  for (std::size_t i = 0; i + 1 < ts.size(); ++i) {
    const int t = ts[i];
    const int next = ts[i + 1];
    std::fill(row_t.begin(), row_t.end(), t);
    const Matrix2D e_hat = model.predict(x, row_t, labels);
    const double a = sched.alpha(t);
    const double s = sched.sigma(t);
    const double a_next = sched.alpha(next);
    const double s_next = sched.sigma(next);
    for (std::size_t j = 0; j < x.size(); ++j) {
      const double x0_hat = (x.data()[j] - s * e_hat.data()[j]) / a;
      x.data()[j] = a_next * x0_hat + s_next * e_hat.data()[j];
    }
  }
  return x;
}

Matrix2D ddim_sample(const NoiseModel& model, const NoiseSchedule& sched, std::size_t n,
                     std::size_t steps, Rng& rng, std::span<const int> labels) {
  return ddim_from(model, sched, standard_normal(n, 2, rng), steps, labels);
}

}  // namespace smart
