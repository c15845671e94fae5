#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>

#include "smart/nn.hpp"

namespace smart {

enum class JacobianMode { full, omit };

/// Score-matching regularity knobs. lambda and the timestep interval follow the
/// large-scale settings; the toy grid trains best with the regularity every iteration
/// (large-scale runs use freq 8).
struct SmartConfig {
  bool enabled = true;
  double lambda = 0.1;
  int t_lo = 40;
  int t_hi = 60;
  int freq = 1;
  JacobianMode jacobian = JacobianMode::full;
  bool fresh_latents = true;  // regularity batch draws its own z

  void validate(int T) const;
};

struct DpmConfig {
  int T = 1000;
  double beta_start = 1e-4;
  double beta_end = 0.02;
  std::size_t iters = 75000;
  std::size_t batch = 1024;
  AdamConfig adam{3e-3, 0.9, 0.999, 1e-8};
  double lr_final_scale = 0.02;
};

struct GanConfig {
  std::size_t latent_dim = 2;
  std::size_t batch = 128;
  std::size_t iters = 120000;
  AdamConfig adam_g{1e-3, 0.5, 0.999, 1e-8};
  AdamConfig adam_d{1e-3, 0.5, 0.999, 1e-8};
  double lr_final_scale = 0.02;  // both rates decay linearly to this fraction
};

struct EvalConfig {
  std::size_t interval = 1000;
  std::size_t samples = 10000;
  double tau = 0.15;
};

struct TrainConfig {
  std::uint64_t seed = 0;
  double data_sigma = 0.05;
  DpmConfig dpm;
  GanConfig gan;
  SmartConfig smart;
  EvalConfig eval;
  bool conditional = false;

  void validate() const;
};

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Flat `key = value` lines, `#` comments. Unknown keys and bad values throw
/// ConfigError naming the line; absent keys keep their defaults.
TrainConfig parse_config_text(std::string_view text);
TrainConfig parse_config(const std::filesystem::path& path);

/// Every key with its effective value; parse_config_text(format_config(c)) == c.
std::string format_config(const TrainConfig& cfg);

std::string format_double(double v);

}  // namespace smart
