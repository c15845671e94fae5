#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "smart/config.hpp"
#include "smart/grid_mixture.hpp"
#include "smart/matrix.hpp"
#include "smart/noise_model.hpp"
#include "smart/rng.hpp"
#include "smart/schedule.hpp"

namespace smart {

/// alpha_t x0 + sigma_t eps.
Matrix2D q_sample(const NoiseSchedule& sched, const Matrix2D& x0, int t, const Matrix2D& eps);
/// Per-row timesteps.
Matrix2D q_sample(const NoiseSchedule& sched, const Matrix2D& x0, std::span<const int> t,
                  const Matrix2D& eps);

/// Mean over rows of ||eps_theta(x_t, t) - eps||^2 (value only).
double dsm_loss_value(const NoiseModel& model, const NoiseSchedule& sched, const Matrix2D& x0,
                      std::span<const int> t, const Matrix2D& eps, std::span<const int> labels);

/// Same loss; accumulates its gradient into the predictor's parameter buffers.
double dsm_loss(NoisePredictor& pred, const NoiseSchedule& sched, const Matrix2D& x0,
                std::span<const int> t, const Matrix2D& eps, std::span<const int> labels);

using LossSink = std::function<void(std::size_t iter, double loss)>;

/// Adam-trained predictor on samples of mix. Deterministic in cfg.seed. Throws
/// std::runtime_error on a non-finite loss.
NoisePredictor train_dpm(const GridMixture& mix, const TrainConfig& cfg,
                         const LossSink& sink = {});

/// x + (sigma_t / alpha_t) (eps - eps_theta(alpha_t x + sigma_t eps, t)).
Matrix2D refine_step(const NoiseModel& model, const NoiseSchedule& sched, const Matrix2D& x, int t,
                     const Matrix2D& eps, std::span<const int> labels = {});

struct RefinementTrace {
  std::vector<Matrix2D> states;        // y_0 .. y_k
  std::vector<double> mean_distance;   // mean manifold distance of each state
};

/// y_{k+1} = R(y_k, eps_k, t) with fresh eps_k from rng.
RefinementTrace refinement_sequence(const NoiseModel& model, const NoiseSchedule& sched,
                                    const GridMixture& mix, const Matrix2D& y0, int t,
                                    std::size_t k, Rng& rng, std::span<const int> labels = {});

/// Evenly spaced descending timesteps T = t_0 > ... > t_steps = 0.
std::vector<int> ddim_timesteps(int T, std::size_t steps);

/// Deterministic DDIM (eta = 0) from x_T ~ N(0, I).
Matrix2D ddim_sample(const NoiseModel& model, const NoiseSchedule& sched, std::size_t n,
                     std::size_t steps, Rng& rng, std::span<const int> labels = {});

/// Same sampler started from a given x_T.
Matrix2D ddim_from(const NoiseModel& model, const NoiseSchedule& sched, Matrix2D x,
                   std::size_t steps, std::span<const int> labels = {});

}  // namespace smart
