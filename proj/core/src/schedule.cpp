#include "smart/schedule.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace smart {

NoiseSchedule NoiseSchedule::linear(int T, double beta_start, double beta_end) {
  if (T < 1) throw std::invalid_argument("schedule: T must be >= 1");
  if (!(beta_start > 0.0 && beta_start <= beta_end && beta_end < 1.0)) {
    throw std::invalid_argument("schedule: need 0 < beta_start <= beta_end < 1");
  }
  NoiseSchedule s;
  s.alpha_.resize(static_cast<std::size_t>(T) + 1);
  s.sigma_.resize(static_cast<std::size_t>(T) + 1);
  s.alpha_[0] = 1.0;
  s.sigma_[0] = 0.0;
  double alpha_bar = 1.0;
  for (int t = 1; t <= T; ++t) {
    const double frac = T == 1 ? 0.0 : static_cast<double>(t - 1) / static_cast<double>(T - 1);
    const double beta = beta_start + (beta_end - beta_start) * frac;
    alpha_bar *= 1.0 - beta;
    s.alpha_[t] = std::sqrt(alpha_bar);
    s.sigma_[t] = std::sqrt(1.0 - alpha_bar);
  }
  return s;
}

double NoiseSchedule::snr(int t) const {
  const double a = alpha(t);
  const double s = sigma(t);
  return a * a / (s * s);
}

void NoiseSchedule::check_timestep(int t, int lo) const {
  if (t < lo || t > T()) {
    throw std::out_of_range("timestep " + std::to_string(t) + " outside [" + std::to_string(lo) +
                            ", " + std::to_string(T()) + "]");
  }
}

}  // namespace smart
