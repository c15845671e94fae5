#include "smart/noise_model.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace smart {

namespace {

void check_rows(const Matrix2D& x, std::span<const int> t, std::span<const int> labels,
                const char* who) {
  if (x.cols() != 2) {
    throw std::invalid_argument(std::string(who) + ": expected n x 2 points, got " +
                                x.shape_string());
  }
  if (t.size() != x.rows()) {
    throw std::invalid_argument(std::string(who) + ": " + std::to_string(t.size()) +
                                " timesteps for " + std::to_string(x.rows()) + " rows");
  }
  if (!labels.empty() && labels.size() != x.rows()) {
    throw std::invalid_argument(std::string(who) + ": label count does not match rows");
  }
}

}  // namespace

void time_features(int t, int T, std::span<double> out) {
  const double s = static_cast<double>(t) / static_cast<double>(T);
  for (std::size_t k = 0; k < NoisePredictor::kTimeFeatures / 2; ++k) {
    const double w = std::ldexp(1.0, static_cast<int>(k));
    out[2 * k] = std::sin(w * s);
    out[2 * k + 1] = std::cos(w * s);
  }
}

MixtureOracle::MixtureOracle(GridMixture mix, NoiseSchedule sched)
    : mix_(std::move(mix)), sched_(std::move(sched)) {}

Matrix2D MixtureOracle::predict(const Matrix2D& x_t, std::span<const int> t,
                                std::span<const int> labels) const {
  check_rows(x_t, t, labels, "MixtureOracle::predict");
  Matrix2D out(x_t.rows(), 2);
  for (std::size_t r = 0; r < x_t.rows(); ++r) {
    std::optional<int> label;
    if (!labels.empty()) label = labels[r];
    const Point2 e = oracle_noise_predictor(mix_, {x_t(r, 0), x_t(r, 1)}, t[r], sched_, label);
    out(r, 0) = e.x;
    out(r, 1) = e.y;
  }
  return out;
}

Matrix2D MixtureOracle::input_vjp(const Matrix2D& x_t, std::span<const int> t,
                                  std::span<const int> labels, const Matrix2D& cotangent) const {
  check_rows(x_t, t, labels, "MixtureOracle::input_vjp");
  require_same_shape(x_t, cotangent, "MixtureOracle::input_vjp");
  Matrix2D out(x_t.rows(), 2);
  for (std::size_t r = 0; r < x_t.rows(); ++r) {
    std::optional<int> label;
    if (!labels.empty()) label = labels[r];
    const Jacobian2 j = oracle_noise_jacobian(mix_, {x_t(r, 0), x_t(r, 1)}, t[r], sched_, label);
    out(r, 0) = j[0] * cotangent(r, 0) + j[2] * cotangent(r, 1);
    out(r, 1) = j[1] * cotangent(r, 0) + j[3] * cotangent(r, 1);
  }
  return out;
}

NoisePredictor::NoisePredictor(int T, std::size_t label_count, Rng& rng)
    : T_(T), label_count_(label_count) {
  if (T < 1) throw std::invalid_argument("NoisePredictor: T must be >= 1");
  const std::size_t in = 2 + kTimeFeatures + label_count;
  net_ = Mlp({in, kHidden, kHidden, 2}, rng);
}

NoisePredictor::NoisePredictor(Mlp net, int T, std::size_t label_count)
    : net_(std::move(net)), T_(T), label_count_(label_count) {
  if (net_.in_dim() != 2 + kTimeFeatures + label_count || net_.out_dim() != 2) {
    throw std::invalid_argument("NoisePredictor: network shape does not fit the input layout");
  }
}

Matrix2D NoisePredictor::features(const Matrix2D& x_t, std::span<const int> t,
                                  std::span<const int> labels) const {
  check_rows(x_t, t, labels, "NoisePredictor");
  if (conditional() && labels.empty()) {
    throw std::invalid_argument("NoisePredictor: conditional predictor needs labels");
  }
  const std::size_t cols = 2 + kTimeFeatures + label_count_;
  Matrix2D in(x_t.rows(), cols);
  for (std::size_t r = 0; r < x_t.rows(); ++r) {
    if (t[r] < 1 || t[r] > T_) {
      throw std::out_of_range("NoisePredictor: timestep " + std::to_string(t[r]) +
                              " outside [1, " + std::to_string(T_) + "]");
    }
    auto row = in.row(r);
    row[0] = x_t(r, 0);
    row[1] = x_t(r, 1);
    time_features(t[r], T_, row.subspan(2, kTimeFeatures));
    if (conditional()) {
      const int c = labels[r];
      if (c < 0 || static_cast<std::size_t>(c) >= label_count_) {
        throw std::out_of_range("NoisePredictor: label " + std::to_string(c) + " out of range");
      }
      row[2 + kTimeFeatures + static_cast<std::size_t>(c)] = 1.0;
    }
  }
  return in;
}

Matrix2D NoisePredictor::predict(const Matrix2D& x_t, std::span<const int> t,
                                 std::span<const int> labels) const {
  return net_.infer(features(x_t, t, labels));
}

Matrix2D NoisePredictor::input_vjp(const Matrix2D& x_t, std::span<const int> t,
                                   std::span<const int> labels, const Matrix2D& cotangent) const {
  const Matrix2D full = net_.input_gradient(features(x_t, t, labels), cotangent);
  Matrix2D out(x_t.rows(), 2);
  for (std::size_t r = 0; r < x_t.rows(); ++r) {
    out(r, 0) = full(r, 0);
    out(r, 1) = full(r, 1);
  }
  return out;
}

Matrix2D NoisePredictor::forward(const Matrix2D& x_t, std::span<const int> t,
                                 std::span<const int> labels) {
  return net_.forward(features(x_t, t, labels));
}

void NoisePredictor::backward(const Matrix2D& grad_out) { net_.backward(grad_out, true); }

std::vector<NamedTensor> NoisePredictor::export_tensors() const {
  auto tensors = export_mlp(net_, "dpm.");
  tensors.push_back({"dpm.meta", {2}, {static_cast<double>(T_), static_cast<double>(label_count_)}});
  return tensors;
}

NoisePredictor NoisePredictor::import_tensors(std::span<const NamedTensor> tensors) {
  const NamedTensor* meta = nullptr;
  for (const auto& t : tensors) {
    if (t.name == "dpm.meta") meta = &t;
  }
  if (!meta || meta->values.size() != 2) {
    throw std::runtime_error("checkpoint: missing dpm.meta tensor");
  }
  return NoisePredictor(import_mlp(tensors, "dpm."), static_cast<int>(meta->values[0]),
                        static_cast<std::size_t>(meta->values[1]));
}

}  // namespace smart
