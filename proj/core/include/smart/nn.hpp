#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "smart/activations.hpp"
#include "smart/matrix.hpp"

namespace smart {

/// Affine map y = x W^T + b with gradient buffers and Adam moments.
struct LinearLayer {
  LinearLayer() = default;
  LinearLayer(std::size_t in_dim, std::size_t out_dim);

  std::size_t in_dim() const noexcept { return weight.cols(); }
  std::size_t out_dim() const noexcept { return weight.rows(); }

  void zero_grad();

  Matrix2D weight;  // out x in
  std::vector<double> bias;
  Matrix2D grad_weight;
  std::vector<double> grad_bias;
  Matrix2D m_weight;
  Matrix2D v_weight;
  std::vector<double> m_bias;
  std::vector<double> v_bias;
};

Matrix2D linear_forward(const LinearLayer& layer, const Matrix2D& x);

/// Fully connected network: affine layers with Leaky-ReLU between them and no
/// activation after the last layer.
///
/// forward()/backward() are the training path and keep an activation cache on the
/// object. infer() and input_gradient() are const, keep no state and may be called
/// concurrently on a frozen network.
class Mlp {
 public:
  Mlp() = default;

  /// dims = {in, hidden..., out}. Weights uniform in +-sqrt(1/in_dim), biases zero.
  Mlp(std::span<const std::size_t> dims, std::mt19937_64& rng, double slope = kLeakySlope);
  Mlp(std::initializer_list<std::size_t> dims, std::mt19937_64& rng, double slope = kLeakySlope);

  /// Takes ownership of explicit layers; dimensions must chain.
  /// slope == 1 gives a purely affine network.
  static Mlp from_layers(std::vector<LinearLayer> layers, double slope = kLeakySlope);

  std::size_t in_dim() const;
  std::size_t out_dim() const;
  std::size_t parameter_count() const;
  double slope() const noexcept { return slope_; }

  std::span<LinearLayer> layers() noexcept { return layers_; }
  std::span<const LinearLayer> layers() const noexcept { return layers_; }

  Matrix2D forward(const Matrix2D& x);

  /// Consumes the cache left by forward(). When accumulate_params is false only the
  /// input gradient is produced and parameter gradients are left untouched.
  Matrix2D backward(const Matrix2D& grad_out, bool accumulate_params = true);

  Matrix2D infer(const Matrix2D& x) const;

  /// Vector-Jacobian product with respect to the input rows.
  Matrix2D input_gradient(const Matrix2D& x, const Matrix2D& grad_out) const;

  void zero_grad();
  bool has_cache() const noexcept { return cache_.has_value(); }

 private:
  struct Cache {
    std::vector<Matrix2D> inputs;       // input to each layer
    std::vector<Matrix2D> preactivate;  // output of each hidden layer before the activation
  };

  Matrix2D run_forward(const Matrix2D& x, Cache* cache) const;
  Matrix2D run_backward(const Cache& cache, Matrix2D grad, std::vector<LinearLayer>* params) const;
  void check_chain() const;

  std::vector<LinearLayer> layers_;
  double slope_ = kLeakySlope;
  std::optional<Cache> cache_;
};

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// base with lr scaled linearly from 1 at iteration 0 to final_scale at iters.
AdamConfig scheduled_adam(const AdamConfig& base, double final_scale, std::size_t iter_index,
                          std::size_t iters);

/// Bias-corrected Adam update on every parameter of net, then zeroes the gradients.
/// step_index counts from 1. Throws std::runtime_error naming the layer on a
/// non-finite gradient.
void adam_step(Mlp& net, const AdamConfig& cfg, std::size_t step_index);

}  // namespace smart
