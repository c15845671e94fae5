#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "smart/config.hpp"
#include "smart/gan.hpp"
#include "smart/grid_mixture.hpp"
#include "smart/noise_model.hpp"
#include "smart/schedule.hpp"

namespace smart {

/// Finite distribution over integer atoms. Zero-mass atoms are allowed.
struct DiscreteDist {
  std::vector<int> support;
  std::vector<double> mass;

  static DiscreteDist uniform(std::size_t n);
  /// Throws std::invalid_argument unless masses are nonnegative, sum to 1 within
  /// 1e-12 and atoms are distinct.
  void validate() const;
  double mass_at(int atom) const;
};

enum class SupportRelation { equal, overlapping, a_minus_b_positive };
const char* to_string(SupportRelation r);

struct DivergenceReport {
  double value = 0.0;
  double floor = 0.0;
  SupportRelation support_relation = SupportRelation::equal;
  bool divergent = false;  // floor == 0 and some qA atom has no qB mass
};

/// -sum_x qA(x) log(q~B(x) / (qA(x) + q~B(x))) with q~B = max(qB, floor), summed over
/// the atoms where qA > 0. This is the optimal-discriminator generator loss.
DivergenceReport generator_loss_integral(const DiscreteDist& qA, const DiscreteDist& qB,
                                         double floor);

/// Least-squares slope of value against -log(floor).
double divergence_slope(const DiscreteDist& qA, const DiscreteDist& qB,
                        const std::vector<double>& floors);

/// qA with `escaped` mass on atoms outside qB's support (shared atoms 0..n-1, escaped
/// atoms n..). Used by the divergence-rate check.
std::pair<DiscreteDist, DiscreteDist> escaped_mass_pair(double escaped, std::size_t shared,
                                                        std::size_t outside);

struct LowerBoundReport {
  std::size_t trials = 0;
  std::size_t bound_violations = 0;     // value < log 2 - 1e-9
  std::size_t equality_violations = 0;  // |value(q, q) - log 2| > 1e-9
  std::size_t strictness_violations = 0;  // distinct pair but value within 1e-9 of log 2
  std::size_t perturbation_violations = 0;  // moving mass eps off qA did not raise the value
  double min_value = 0.0;
  double max_equality_error = 0.0;
  bool passed() const {
    return bound_violations == 0 && equality_violations == 0 && strictness_violations == 0 &&
           perturbation_violations == 0;
  }
};

/// Random distribution pairs on a shared support of size support_size.
LowerBoundReport lower_bound_scan(std::size_t trials, std::size_t support_size, std::uint64_t seed);

struct RefinementRun {
  int t = 0;
  std::vector<double> mean_distance;  // per refinement step, including y_0
  std::vector<double> window_mean;    // 10-step window averages
  std::vector<double> window_tolerance;  // Monte-Carlo slack allowed between windows
  double terminal_distance = 0.0;     // mean distance of the final state
  double terminal_window = 0.0;       // last window average
  bool window_non_increasing = true;
  // Conditional runs only.
  double own_label_fraction = 0.0;    // points whose nearest center is their label
  double min_foreign_distance = 0.0;  // over points, distance to the closest other-label center
};

struct RefinementSuiteReport {
  std::vector<RefinementRun> runs;  // in t_list order
  bool terminal_decreasing = true;  // strictly, along t_list
  bool passed() const;
};

/// Oracle refinement from uniform points on [-4, 4]^2 for each t in t_list.
RefinementSuiteReport refinement_convergence_suite(const GridMixture& mix,
                                                   const NoiseSchedule& sched,
                                                   const std::vector<int>& t_list, std::size_t k,
                                                   std::size_t n, std::uint64_t seed,
                                                   bool conditional);

struct ProbeOptions {
  std::size_t batch = 512;
  std::size_t stages = 5;
  std::size_t first_stage_steps = 100;  // stage s trains first_stage_steps * 2^s more steps
  double lambda = 0.1;
  int t = 40;
  double lr = 1e-3;
  std::uint64_t seed = 0;
};

struct ProbeCheckpoint {
  std::size_t disc_steps = 0;
  double d_loss = 0.0;
  double fake_logit_mean = 0.0;
  double adversarial_grad_norm = 0.0;  // mean per-sample ||d(-log D(x))/dx||
  double regularity_grad_norm = 0.0;   // mean per-sample ||d ||eps_theta - eps||^2 / dx||
  double combined_grad_norm = 0.0;     // adversarial + lambda * regularity, per sample
  double saturating_grad_norm = 0.0;   // mean per-sample ||d log(1 - D(x))/dx||, for contrast
};

struct ProbeReport {
  std::vector<ProbeCheckpoint> checkpoints;
  double closed_form_adversarial_norm = 0.0;  // with D* = q0 / (q0 + p_g) for the displaced mixture
  bool adversarial_decreasing = false;
  bool regularity_bounded = false;  // every checkpoint > 0.1
  bool passed() const { return adversarial_decreasing && regularity_bounded; }
};

/// Trains pair.discriminator on real samples versus mixture samples displaced by
/// offset, and at each stage compares adversarial and regularity gradients on the
/// displaced batch.
ProbeReport gradient_vanishing_probe(GanPair& pair, const GridMixture& mix, const NoiseModel& model,
                                     const NoiseSchedule& sched, Point2 offset,
                                     const ProbeOptions& opts = {});

}  // namespace smart
