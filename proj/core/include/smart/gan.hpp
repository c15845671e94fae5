#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <stdexcept>
#include <vector>

#include "smart/checkpoint.hpp"
#include "smart/config.hpp"
#include "smart/grid_mixture.hpp"
#include "smart/metrics.hpp"
#include "smart/nn.hpp"
#include "smart/noise_model.hpp"
#include "smart/rng.hpp"
#include "smart/schedule.hpp"

namespace smart {

/// Generator (latent [+ one-hot] -> 2) and discriminator (2 [+ one-hot] -> 1 logit),
/// both with two 128-unit hidden layers.
struct GanPair {
  static constexpr std::size_t kHidden = 128;

  static GanPair create(std::size_t latent_dim, std::size_t label_count, Rng& rng);

  bool conditional() const noexcept { return label_count > 0; }
  Matrix2D generator_input(const Matrix2D& z, std::span<const int> labels) const;
  Matrix2D discriminator_input(const Matrix2D& x, std::span<const int> labels) const;

  /// "gen.*", "disc.*" and "gan.meta" = {latent_dim, label_count}.
  std::vector<NamedTensor> export_tensors() const;
  static GanPair import_tensors(std::span<const NamedTensor> tensors);

  Mlp generator;
  Mlp discriminator;
  std::size_t latent_dim = 0;
  std::size_t label_count = 0;
};

/// -E log D(x) - E log(1 - D(G(z))). Accumulates discriminator gradients only.
double d_loss(GanPair& pair, const LabeledBatch& real, const Matrix2D& z,
              std::span<const int> fake_labels = {});

/// d_loss with explicit fake samples.
double discriminator_loss(GanPair& pair, const LabeledBatch& real, const Matrix2D& fake,
                          std::span<const int> fake_labels = {});

/// -E log D(G(z)). Accumulates generator gradients; discriminator buffers untouched.
double g_loss(GanPair& pair, const Matrix2D& z, std::span<const int> labels = {});

struct AdversarialGrad {
  double loss = 0.0;
  Matrix2D grad;  // d loss / d x, rows of x
};

/// -E log D(x) and its gradient with respect to the sample positions x.
AdversarialGrad adversarial_sample_gradient(GanPair& pair, const Matrix2D& x,
                                            std::span<const int> labels = {});

struct RegularityResult {
  double loss = 0.0;               // mean ||eps_theta - eps||^2
  Matrix2D grad;                   // d loss / d gen_out under the chosen Jacobian mode
  std::vector<int> t;
  Matrix2D eps;
  std::vector<double> residual;    // per-sample ||eps_theta - eps||^2
  std::vector<double> refine_gap;  // per-sample ||R(g, eps, t) - g||^2
};

/// Score-matching regularity on generator outputs: t uniform on [t_lo, t_hi] and a
/// fresh eps for each row, predictor frozen.
RegularityResult score_regularity(const NoiseModel& model, const NoiseSchedule& sched,
                                  const Matrix2D& gen_out, const SmartConfig& smart, Rng& rng,
                                  std::span<const int> labels = {});

/// Same quantity at explicit (t, eps).
RegularityResult score_regularity_at(const NoiseModel& model, const NoiseSchedule& sched,
                                     const Matrix2D& gen_out, std::span<const int> t,
                                     const Matrix2D& eps, JacobianMode mode,
                                     std::span<const int> labels = {});

/// Independent rng streams of one GAN run.
struct GanStreams {
  static GanStreams from_seed(std::uint64_t seed);
  Rng data;
  Rng latent;
  Rng labels;
  Rng regularity;
};

struct StepLosses {
  double d_loss = 0.0;
  double g_loss = 0.0;
  bool regularity_applied = false;
  double score_loss = 0.0;
  double refine_gap = 0.0;       // mean ||R - g||^2 of the regularity batch
  double refine_gap_scaled = 0.0;  // mean (alpha_t/sigma_t)^2 ||R - g||^2
};

/// Adversarial loss always; lambda * regularity added iff the regularity is enabled
/// and iter_index % freq == 0. One Adam step on the generator (step number
/// iter_index + 1).
StepLosses generator_step(GanPair& pair, const NoiseModel* model, const NoiseSchedule& sched,
                          const TrainConfig& cfg, std::size_t iter_index, GanStreams& streams);

/// One discriminator Adam step on a fresh real/fake batch.
double discriminator_step(GanPair& pair, const GridMixture& mix, const TrainConfig& cfg,
                          std::size_t iter_index, GanStreams& streams);

struct GanRun {
  GanPair pair;
  std::vector<MetricsRow> history;
  std::size_t regularity_calls = 0;
};

class TrainingDiverged : public std::runtime_error {
 public:
  TrainingDiverged(const std::string& what, GanPair last_good)
      : std::runtime_error(what), last_good_(std::move(last_good)) {}
  const GanPair& last_good() const noexcept { return last_good_; }

 private:
  GanPair last_good_;
};

using RowSink = std::function<void(const MetricsRow&)>;

/// Alternating 1:1 discriminator/generator training with periodic evaluation.
/// model may be null when the regularity is disabled.
GanRun train_gan(const GridMixture& mix, const NoiseModel* model, const TrainConfig& cfg,
                 const RowSink& sink = {});

/// z ~ N(0, I); conditional pairs draw uniform labels when none are given.
LabeledBatch sample_generator(const GanPair& pair, std::size_t n, Rng& rng,
                              std::span<const int> labels = {});

/// The eval.samples draws used for every metrics row (stream "eval", re-seeded per call).
LabeledBatch evaluation_samples(const GanPair& pair, const TrainConfig& cfg);
SampleMetrics evaluate_generator(const GanPair& pair, const GridMixture& mix,
                                 const TrainConfig& cfg);

}  // namespace smart
