#include "smart/nn.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace smart {

LinearLayer::LinearLayer(std::size_t in, std::size_t out)
    : weight(out, in),
      bias(out, 0.0),
      grad_weight(out, in),
      grad_bias(out, 0.0),
      m_weight(out, in),
      v_weight(out, in),
      m_bias(out, 0.0),
      v_bias(out, 0.0) {}

void LinearLayer::zero_grad() {
  grad_weight.fill(0.0);
  std::fill(grad_bias.begin(), grad_bias.end(), 0.0);
}

Matrix2D linear_forward(const LinearLayer& layer, const Matrix2D& x) {
  if (x.cols() != layer.in_dim()) {
    throw std::invalid_argument("linear_forward: input " + x.shape_string() +
                                " does not match weight " + layer.weight.shape_string());
  }
  Matrix2D y = matmul_abt(x, layer.weight);
  for (std::size_t r = 0; r < y.rows(); ++r) {
    auto row = y.row(r);
    for (std::size_t c = 0; c < row.size(); ++c) row[c] += layer.bias[c];
  }
  return y;
}

Mlp::Mlp(std::span<const std::size_t> dims, std::mt19937_64& rng, double slope) : slope_(slope) {
  if (dims.size() < 2) throw std::invalid_argument("Mlp: need at least input and output dims");
  for (std::size_t k = 0; k + 1 < dims.size(); ++k) {
    LinearLayer layer(dims[k], dims[k + 1]);
    const double bound = std::sqrt(1.0 / static_cast<double>(dims[k]));
    std::uniform_real_distribution<double> init(-bound, bound);
    for (double& w : layer.weight.data()) w = init(rng);
    layers_.push_back(std::move(layer));
  }
  check_chain();
}

Mlp::Mlp(std::initializer_list<std::size_t> dims, std::mt19937_64& rng, double slope)
    : Mlp(std::span<const std::size_t>(dims.begin(), dims.size()), rng, slope) {}

Mlp Mlp::from_layers(std::vector<LinearLayer> layers, double slope) {
  Mlp net;
  net.layers_ = std::move(layers);
  net.slope_ = slope;
  net.check_chain();
  return net;
}

void Mlp::check_chain() const {
  if (layers_.empty()) throw std::invalid_argument("Mlp: no layers");
  if (!(slope_ > 0.0 && slope_ <= 1.0)) {
    throw std::invalid_argument("Mlp: activation slope must lie in (0, 1]");
  }
  for (std::size_t k = 0; k < layers_.size(); ++k) {
    const auto& l = layers_[k];
    if (l.bias.size() != l.out_dim()) {
      throw std::invalid_argument("Mlp: layer " + std::to_string(k) + " bias length mismatch");
    }
    if (k + 1 < layers_.size() && l.out_dim() != layers_[k + 1].in_dim()) {
      throw std::invalid_argument("Mlp: layer " + std::to_string(k) + " outputs " +
                                  std::to_string(l.out_dim()) + " but layer " +
                                  std::to_string(k + 1) + " expects " +
                                  std::to_string(layers_[k + 1].in_dim()));
    }
  }
}

std::size_t Mlp::in_dim() const { return layers_.front().in_dim(); }
std::size_t Mlp::out_dim() const { return layers_.back().out_dim(); }

std::size_t Mlp::parameter_count() const {
  std::size_t n = 0;
  for (const auto& l : layers_) n += l.weight.size() + l.bias.size();
  return n;
}

Matrix2D Mlp::run_forward(const Matrix2D& x, Cache* cache) const {
  if (x.cols() != in_dim()) {
    throw std::invalid_argument("Mlp::forward: input " + x.shape_string() + " but network expects " +
                                std::to_string(in_dim()) + " columns");
  }
  Matrix2D h = x;
  for (std::size_t k = 0; k < layers_.size(); ++k) {
    Matrix2D y = linear_forward(layers_[k], h);
    if (cache) cache->inputs.push_back(std::move(h));
    if (k + 1 < layers_.size()) {
      if (cache) cache->preactivate.push_back(y);
      if (slope_ != 1.0) {
        for (double& v : y.data()) v = v > 0.0 ? v : slope_ * v;
      }
    }
    h = std::move(y);
  }
  return h;
}

Matrix2D Mlp::run_backward(const Cache& cache, Matrix2D grad,
                           std::vector<LinearLayer>* params) const {
  for (std::size_t k = layers_.size(); k-- > 0;) {
    if (k + 1 < layers_.size() && slope_ != 1.0) {
      const auto pre = cache.preactivate[k].data();
      auto g = grad.data();
      for (std::size_t i = 0; i < g.size(); ++i) {
        if (pre[i] <= 0.0) g[i] *= slope_;
      }
    }
    if (params) {
      LinearLayer& layer = (*params)[k];
      matmul_atb(grad, cache.inputs[k], layer.grad_weight, true);
      for (std::size_t r = 0; r < grad.rows(); ++r) {
        const auto row = grad.row(r);
        for (std::size_t c = 0; c < row.size(); ++c) layer.grad_bias[c] += row[c];
      }
    }
    grad = matmul(grad, layers_[k].weight);
  }
  return grad;
}

Matrix2D Mlp::forward(const Matrix2D& x) {
  Cache cache;
  cache.inputs.reserve(layers_.size());
  Matrix2D out = run_forward(x, &cache);
  cache_ = std::move(cache);
  return out;
}

Matrix2D Mlp::backward(const Matrix2D& grad_out, bool accumulate_params) {
  if (!cache_) throw std::logic_error("Mlp::backward called without a cached forward pass");
  const std::size_t batch = cache_->inputs.front().rows();
  if (grad_out.rows() != batch || grad_out.cols() != out_dim()) {
    throw std::invalid_argument("Mlp::backward: gradient " + grad_out.shape_string() +
                                " does not match output " + std::to_string(batch) + "x" +
                                std::to_string(out_dim()));
  }
  Cache cache = std::move(*cache_);
  cache_.reset();
  return run_backward(cache, grad_out, accumulate_params ? &layers_ : nullptr);
}

Matrix2D Mlp::infer(const Matrix2D& x) const { return run_forward(x, nullptr); }

Matrix2D Mlp::input_gradient(const Matrix2D& x, const Matrix2D& grad_out) const {
  Cache cache;
  run_forward(x, &cache);
  if (grad_out.rows() != x.rows() || grad_out.cols() != out_dim()) {
    throw std::invalid_argument("Mlp::input_gradient: gradient " + grad_out.shape_string() +
                                " does not match output");
  }
  return run_backward(cache, grad_out, nullptr);
}

void Mlp::zero_grad() {
  for (auto& l : layers_) l.zero_grad();
}

namespace {

void adam_update(std::span<double> param, std::span<double> grad, std::span<double> m,
                 std::span<double> v, const AdamConfig& cfg, double c1, double c2) {
  for (std::size_t i = 0; i < param.size(); ++i) {
    const double g = grad[i];
    m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g;
    v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g * g;
    const double m_hat = m[i] / c1;
    const double v_hat = v[i] / c2;
    param[i] -= cfg.lr * m_hat / (std::sqrt(v_hat) + cfg.eps);
    grad[i] = 0.0;
  }
}

bool finite(std::span<const double> xs) {
  for (double x : xs) {
    if (!std::isfinite(x)) return false;
  }
  return true;
}

}  // namespace

AdamConfig scheduled_adam(const AdamConfig& base, double final_scale, std::size_t iter_index,
                          std::size_t iters) {
  AdamConfig out = base;
  const double progress =
      iters ? std::min(1.0, static_cast<double>(iter_index) / static_cast<double>(iters)) : 0.0;
  out.lr = base.lr * (1.0 - (1.0 - final_scale) * progress);
  return out;
}

void adam_step(Mlp& net, const AdamConfig& cfg, std::size_t step_index) {
  if (step_index < 1) throw std::invalid_argument("adam_step: step_index counts from 1");
  auto layers = net.layers();
  for (std::size_t k = 0; k < layers.size(); ++k) {
    if (!finite(layers[k].grad_weight.data()) || !finite(layers[k].grad_bias)) {
      throw std::runtime_error("adam_step: non-finite gradient in layer " + std::to_string(k));
    }
  }
  const double t = static_cast<double>(step_index);
  const double c1 = 1.0 - std::pow(cfg.beta1, t);
  const double c2 = 1.0 - std::pow(cfg.beta2, t);
  for (auto& l : layers) {
    adam_update(l.weight.data(), l.grad_weight.data(), l.m_weight.data(), l.v_weight.data(), cfg,
                c1, c2);
    adam_update(l.bias, l.grad_bias, l.m_bias, l.v_bias, cfg, c1, c2);
  }
}

}  // namespace smart
