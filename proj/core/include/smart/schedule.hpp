#pragma once

#include <vector>

namespace smart {

/// Discrete variance-preserving schedule (alpha_t, sigma_t), t = 0..T.
class NoiseSchedule {
 public:
  /// Linear beta from beta_start to beta_end over t = 1..T; alpha_t = sqrt(prod(1 - beta)).
  static NoiseSchedule linear(int T, double beta_start, double beta_end);

  int T() const noexcept { return static_cast<int>(alpha_.size()) - 1; }
  double alpha(int t) const { return alpha_.at(static_cast<std::size_t>(t)); }
  double sigma(int t) const { return sigma_.at(static_cast<std::size_t>(t)); }
  double snr(int t) const;

  /// Throws std::out_of_range unless lo <= t <= T.
  void check_timestep(int t, int lo = 0) const;

 private:
  std::vector<double> alpha_;
  std::vector<double> sigma_;
};

inline NoiseSchedule build_schedule(int T, double beta_start, double beta_end) {
  return NoiseSchedule::linear(T, beta_start, beta_end);
}

}  // namespace smart
