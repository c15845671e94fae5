#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "smart/checkpoint.hpp"
#include "smart/grid_mixture.hpp"
#include "smart/matrix.hpp"
#include "smart/nn.hpp"
#include "smart/rng.hpp"
#include "smart/schedule.hpp"

namespace smart {

/// A frozen noise predictor eps(x_t, t[, c]) evaluated row by row. `t` carries one
/// timestep per row; `labels` is empty for unconditional use.
class NoiseModel {
 public:
  virtual ~NoiseModel() = default;

  virtual Matrix2D predict(const Matrix2D& x_t, std::span<const int> t,
                           std::span<const int> labels) const = 0;

  /// Row-wise (d eps / d x_t)^T cotangent.
  virtual Matrix2D input_vjp(const Matrix2D& x_t, std::span<const int> t,
                             std::span<const int> labels, const Matrix2D& cotangent) const = 0;
};

/// Closed-form -sigma_t grad log q_t for a GridMixture. A label switches to the
/// single labelled component.
class MixtureOracle final : public NoiseModel {
 public:
  MixtureOracle(GridMixture mix, NoiseSchedule sched);

  Matrix2D predict(const Matrix2D& x_t, std::span<const int> t,
                   std::span<const int> labels) const override;
  Matrix2D input_vjp(const Matrix2D& x_t, std::span<const int> t, std::span<const int> labels,
                     const Matrix2D& cotangent) const override;

  const GridMixture& mixture() const noexcept { return mix_; }

 private:
  GridMixture mix_;
  NoiseSchedule sched_;
};

/// MLP noise predictor. Input row: (x, y, 16 time features[, one-hot label]).
/// An unconditional predictor ignores labels.
class NoisePredictor final : public NoiseModel {
 public:
  static constexpr std::size_t kTimeFeatures = 16;
  static constexpr std::size_t kHidden = 128;

  /// label_count = 0 builds an unconditional predictor.
  NoisePredictor(int T, std::size_t label_count, Rng& rng);
  NoisePredictor(Mlp net, int T, std::size_t label_count);

  int T() const noexcept { return T_; }
  std::size_t label_count() const noexcept { return label_count_; }
  bool conditional() const noexcept { return label_count_ > 0; }
  Mlp& net() noexcept { return net_; }
  const Mlp& net() const noexcept { return net_; }

  Matrix2D features(const Matrix2D& x_t, std::span<const int> t,
                    std::span<const int> labels) const;

  Matrix2D predict(const Matrix2D& x_t, std::span<const int> t,
                   std::span<const int> labels) const override;
  Matrix2D input_vjp(const Matrix2D& x_t, std::span<const int> t, std::span<const int> labels,
                     const Matrix2D& cotangent) const override;

  // Training path (caches activations on the net).
  Matrix2D forward(const Matrix2D& x_t, std::span<const int> t, std::span<const int> labels);
  void backward(const Matrix2D& grad_out);

  /// Tensors "dpm.layer<k>.*" plus "dpm.meta" = {T, label_count}.
  std::vector<NamedTensor> export_tensors() const;
  static NoisePredictor import_tensors(std::span<const NamedTensor> tensors);

 private:
  Mlp net_;
  int T_ = 0;
  std::size_t label_count_ = 0;
};

/// sin/cos of (t/T) * 2^k for k = 0..7.
void time_features(int t, int T, std::span<double> out);

}  // namespace smart
