#include "smart/theorem_lab.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <set>
#include <stdexcept>

#include "smart/activations.hpp"
#include "smart/diffusion.hpp"

namespace smart {

DiscreteDist DiscreteDist::uniform(std::size_t n) {
  DiscreteDist d;
  for (std::size_t i = 0; i < n; ++i) {
    d.support.push_back(static_cast<int>(i));
    d.mass.push_back(1.0 / static_cast<double>(n));
  }
  return d;
}

void DiscreteDist::validate() const {
  if (support.size() != mass.size()) throw std::invalid_argument("DiscreteDist: size mismatch");
  double total = 0.0;
  for (double m : mass) {
    if (!(m >= 0.0) || !std::isfinite(m)) throw std::invalid_argument("DiscreteDist: bad mass");
    total += m;
  }
  if (std::abs(total - 1.0) > 1e-12) {
    throw std::invalid_argument("DiscreteDist: masses sum to " + std::to_string(total));
  }
  if (std::set<int>(support.begin(), support.end()).size() != support.size()) {
    throw std::invalid_argument("DiscreteDist: repeated atom");
  }
}

double DiscreteDist::mass_at(int atom) const {
  for (std::size_t i = 0; i < support.size(); ++i) {
    if (support[i] == atom) return mass[i];
  }
  return 0.0;
}

const char* to_string(SupportRelation r) {
  switch (r) {
    case SupportRelation::equal: return "equal";
    case SupportRelation::overlapping: return "overlapping";
    case SupportRelation::a_minus_b_positive: return "A-minus-B-positive";
  }
  return "?";
}

DivergenceReport generator_loss_integral(const DiscreteDist& qA, const DiscreteDist& qB,
                                         double floor) {
  qA.validate();
  qB.validate();
  if (!(floor >= 0.0)) throw std::invalid_argument("generator_loss_integral: floor must be >= 0");
  DivergenceReport rep;
  rep.floor = floor;

  bool a_minus_b = false;
  bool b_minus_a = false;
  for (std::size_t i = 0; i < qA.support.size(); ++i) {
    if (qA.mass[i] > 0.0 && qB.mass_at(qA.support[i]) == 0.0) a_minus_b = true;
  }
  for (std::size_t i = 0; i < qB.support.size(); ++i) {
    if (qB.mass[i] > 0.0 && qA.mass_at(qB.support[i]) == 0.0) b_minus_a = true;
  }
  rep.support_relation = a_minus_b ? SupportRelation::a_minus_b_positive
                         : b_minus_a ? SupportRelation::overlapping
                                     : SupportRelation::equal;

  double value = 0.0;
  for (std::size_t i = 0; i < qA.support.size(); ++i) {
    const double a = qA.mass[i];
    if (a == 0.0) continue;
    const double b = std::max(qB.mass_at(qA.support[i]), floor);
    if (b == 0.0) {
      rep.divergent = true;
      rep.value = std::numeric_limits<double>::infinity();
      return rep;
    }
    // -a log(b / (a + b)) = a log1p(a / b)
    value += a * std::log1p(a / b);
  }
  rep.value = value;
  return rep;
}

double divergence_slope(const DiscreteDist& qA, const DiscreteDist& qB,
                        const std::vector<double>& floors) {
  if (floors.size() < 2) throw std::invalid_argument("divergence_slope: need >= 2 floors");
  std::vector<double> xs;
  std::vector<double> ys;
  for (double f : floors) {
    xs.push_back(-std::log(f));
    ys.push_back(generator_loss_integral(qA, qB, f).value);
  }
  const double n = static_cast<double>(xs.size());
  const double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
  const double my = std::accumulate(ys.begin(), ys.end(), 0.0) / n;
  double sxy = 0.0;
  double sxx = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxy += (xs[i] - mx) * (ys[i] - my);
    sxx += (xs[i] - mx) * (xs[i] - mx);
  }
  return sxy / sxx;
}

std::pair<DiscreteDist, DiscreteDist> escaped_mass_pair(double escaped, std::size_t shared,
                                                        std::size_t outside) {
  if (!(escaped > 0.0 && escaped < 1.0) || shared == 0 || outside == 0) {
    throw std::invalid_argument("escaped_mass_pair: need 0 < escaped < 1 and nonempty parts");
  }
  DiscreteDist a;
  DiscreteDist b = DiscreteDist::uniform(shared);
  for (std::size_t i = 0; i < shared; ++i) {
    a.support.push_back(static_cast<int>(i));
    a.mass.push_back((1.0 - escaped) / static_cast<double>(shared));
  }
  for (std::size_t i = 0; i < outside; ++i) {
    a.support.push_back(static_cast<int>(shared + i));
    a.mass.push_back(escaped / static_cast<double>(outside));
  }
  return {a, b};
}

namespace {

DiscreteDist random_dist(std::size_t n, Rng& rng) {
  std::exponential_distribution<double> expo(1.0);
  DiscreteDist d;
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    d.support.push_back(static_cast<int>(i));
    d.mass.push_back(expo(rng) + 1e-3);
    total += d.mass.back();
  }
  for (double& m : d.mass) m /= total;
  // Push the rounding residue onto the largest atom so the sum check holds tightly.
  const double sum = std::accumulate(d.mass.begin(), d.mass.end(), 0.0);
  *std::max_element(d.mass.begin(), d.mass.end()) += 1.0 - sum;
  return d;
}

double l1_distance(const DiscreteDist& a, const DiscreteDist& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.mass.size(); ++i) s += std::abs(a.mass[i] - b.mass[i]);
  return s;
}

}  // namespace

LowerBoundReport lower_bound_scan(std::size_t trials, std::size_t support_size, std::uint64_t seed) {
  if (support_size < 1) throw std::invalid_argument("lower_bound_scan: support_size must be >= 1");
  const double log2 = std::numbers::ln2;
  Rng rng = make_stream(seed, "theorem.lower_bound");
  LowerBoundReport rep;
  rep.trials = trials;
  rep.min_value = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < trials; ++i) {
    const DiscreteDist a = random_dist(support_size, rng);
    const DiscreteDist b = random_dist(support_size, rng);

    const double v = generator_loss_integral(a, b, 0.0).value;
    rep.min_value = std::min(rep.min_value, v);
    if (v < log2 - 1e-9) ++rep.bound_violations;
    if (l1_distance(a, b) > 1e-3 && v <= log2 + 1e-9) ++rep.strictness_violations;

    const double same = generator_loss_integral(a, a, 0.0).value;
    rep.max_equality_error = std::max(rep.max_equality_error, std::abs(same - log2));
    if (std::abs(same - log2) > 1e-9) ++rep.equality_violations;

    if (support_size >= 2) {
      // Move a small mass between two atoms of a copy of a.
      DiscreteDist moved = a;
      const double eps = 0.25 * std::min(moved.mass[0], moved.mass[1]);
      moved.mass[0] -= eps;
      moved.mass[1] += eps;
      if (!(generator_loss_integral(a, moved, 0.0).value > log2)) ++rep.perturbation_violations;
    }
  }
  return rep;
}

bool RefinementSuiteReport::passed() const {
  if (!terminal_decreasing) return false;
  return std::all_of(runs.begin(), runs.end(),
                     [](const RefinementRun& r) { return r.window_non_increasing; });
}

namespace {

constexpr std::size_t kWindow = 10;

struct StepStats {
  double mean = 0.0;
  double stddev = 0.0;
};

StepStats distance_stats(const GridMixture& mix, const Matrix2D& x) {
  double s = 0.0;
  double s2 = 0.0;
  for (std::size_t r = 0; r < x.rows(); ++r) {
    const double d = manifold_distance(mix, {x(r, 0), x(r, 1)});
    s += d;
    s2 += d * d;
  }
  const double n = static_cast<double>(x.rows());
  const double mean = s / n;
  return {mean, std::sqrt(std::max(0.0, s2 / n - mean * mean))};
}

}  // namespace

RefinementSuiteReport refinement_convergence_suite(const GridMixture& mix,
                                                   const NoiseSchedule& sched,
                                                   const std::vector<int>& t_list, std::size_t k,
                                                   std::size_t n, std::uint64_t seed,
                                                   bool conditional) {
  if (t_list.empty()) throw std::invalid_argument("refinement suite: empty t_list");
  const MixtureOracle oracle(mix, sched);
  RefinementSuiteReport rep;
  for (int t : t_list) {
    if (t < 1) throw std::invalid_argument("refinement suite: t must be >= 1");
    Rng rng = make_stream(seed, "theorem.refine." + std::to_string(t));
    const Matrix2D y0 = uniform(n, 2, -4.0, 4.0, rng);
    std::vector<int> labels;
    if (conditional) {
      std::uniform_int_distribution<int> pick(0, static_cast<int>(mix.size()) - 1);
      labels.resize(n);
      for (int& l : labels) l = pick(rng);
    }
    const RefinementTrace trace = refinement_sequence(oracle, sched, mix, y0, t, k, rng, labels);

    RefinementRun run;
    run.t = t;
    run.mean_distance = trace.mean_distance;
    run.terminal_distance = trace.mean_distance.back();

    // Window averages compared up to four standard errors of their difference.
    std::vector<StepStats> stats;
    stats.reserve(trace.states.size());
    for (const auto& s : trace.states) stats.push_back(distance_stats(mix, s));
    std::vector<double> window_se;
    for (std::size_t w = 0; w + kWindow <= stats.size(); w += kWindow) {
      double m = 0.0;
      double sd = 0.0;
      for (std::size_t i = w; i < w + kWindow; ++i) {
        m += stats[i].mean;
        sd += stats[i].stddev;
      }
      run.window_mean.push_back(m / kWindow);
      window_se.push_back((sd / kWindow) / std::sqrt(static_cast<double>(kWindow * n)));
    }
    for (std::size_t w = 0; w + 1 < run.window_mean.size(); ++w) {
      const double tol = 4.0 * std::hypot(window_se[w], window_se[w + 1]);
      run.window_tolerance.push_back(tol);
      if (run.window_mean[w + 1] > run.window_mean[w] + tol) run.window_non_increasing = false;
    }
    run.terminal_window = run.window_mean.empty() ? run.terminal_distance : run.window_mean.back();

    if (conditional) {
      const Matrix2D& y = trace.states.back();
      std::size_t own = 0;
      run.min_foreign_distance = std::numeric_limits<double>::infinity();
      for (std::size_t r = 0; r < n; ++r) {
        const Point2 p{y(r, 0), y(r, 1)};
        if (static_cast<int>(nearest_center(mix, p)) == labels[r]) ++own;
        for (std::size_t c = 0; c < mix.size(); ++c) {
          if (static_cast<int>(c) == labels[r]) continue;
          run.min_foreign_distance = std::min(
              run.min_foreign_distance, std::hypot(p.x - mix.center(c).x, p.y - mix.center(c).y));
        }
      }
      run.own_label_fraction = static_cast<double>(own) / static_cast<double>(n);
    }
    rep.runs.push_back(std::move(run));
  }
  for (std::size_t i = 0; i + 1 < rep.runs.size(); ++i) {
    if (!(rep.runs[i + 1].terminal_window < rep.runs[i].terminal_window)) {
      rep.terminal_decreasing = false;
    }
  }
  return rep;
}

namespace {

// grad log q(x) for an equal-weight isotropic mixture with the given centers.
Point2 mixture_score(const std::vector<Point2>& centers, double sigma, Point2 x) {
  std::vector<double> logits(centers.size());
  double max_logit = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < centers.size(); ++i) {
    const double dx = x.x - centers[i].x;
    const double dy = x.y - centers[i].y;
    logits[i] = -(dx * dx + dy * dy) / (2.0 * sigma * sigma);
    max_logit = std::max(max_logit, logits[i]);
  }
  double z = 0.0;
  for (double& l : logits) {
    l = std::exp(l - max_logit);
    z += l;
  }
  Point2 g;
  for (std::size_t i = 0; i < centers.size(); ++i) {
    const double r = logits[i] / z;
    g.x += r * (centers[i].x - x.x) / (sigma * sigma);
    g.y += r * (centers[i].y - x.y) / (sigma * sigma);
  }
  return g;
}

double log_mixture(const std::vector<Point2>& centers, double sigma, Point2 x) {
  double max_logit = -std::numeric_limits<double>::infinity();
  std::vector<double> logits(centers.size());
  for (std::size_t i = 0; i < centers.size(); ++i) {
    const double dx = x.x - centers[i].x;
    const double dy = x.y - centers[i].y;
    logits[i] = -(dx * dx + dy * dy) / (2.0 * sigma * sigma);
    max_logit = std::max(max_logit, logits[i]);
  }
  double acc = 0.0;
  for (double l : logits) acc += std::exp(l - max_logit);
  return max_logit + std::log(acc);  // constants cancel in the logit difference
}

double mean_row_norm(const Matrix2D& g, double scale) {
  double s = 0.0;
  for (std::size_t r = 0; r < g.rows(); ++r) s += std::hypot(g(r, 0), g(r, 1)) * scale;
  return s / static_cast<double>(g.rows());
}

}  // namespace

ProbeReport gradient_vanishing_probe(GanPair& pair, const GridMixture& mix, const NoiseModel& model,
                                     const NoiseSchedule& sched, Point2 offset,
                                     const ProbeOptions& opts) {
  Rng rng = make_stream(opts.seed, "theorem.probe");
  LabeledBatch fakes = sample(mix, opts.batch, rng, pair.conditional());
  for (std::size_t r = 0; r < fakes.size(); ++r) {
    fakes.points(r, 0) += offset.x;
    fakes.points(r, 1) += offset.y;
  }
  const double n = static_cast<double>(opts.batch);

  ProbeReport rep;

  // Regularity gradient does not depend on the discriminator; per-sample scale is n.
  const std::vector<int> ts(opts.batch, opts.t);
  const Matrix2D eps = standard_normal(opts.batch, 2, rng);
  const RegularityResult reg =
      score_regularity_at(model, sched, fakes.points, ts, eps, JacobianMode::full, fakes.labels);

  // Closed-form optimal discriminator for the displaced mixture.
  std::vector<Point2> shifted = mix.centers();
  for (auto& c : shifted) {
    c.x += offset.x;
    c.y += offset.y;
  }
  double closed = 0.0;
  for (std::size_t r = 0; r < fakes.size(); ++r) {
    const Point2 x{fakes.points(r, 0), fakes.points(r, 1)};
    const double logit = log_mixture(mix.centers(), mix.sigma(), x) -
                         log_mixture(shifted, mix.sigma(), x);
    const Point2 s0 = mixture_score(mix.centers(), mix.sigma(), x);
    const Point2 sg = mixture_score(shifted, mix.sigma(), x);
    // d(-log sigmoid(l))/dx = -sigmoid(-l) grad l
    const double w = sigmoid(-logit);
    closed += w * std::hypot(s0.x - sg.x, s0.y - sg.y);
  }
  rep.closed_form_adversarial_norm = closed / n;

  const AdamConfig adam{opts.lr, 0.5, 0.999, 1e-8};
  std::size_t steps = 0;
  std::size_t stage_steps = opts.first_stage_steps;
  for (std::size_t s = 0; s < opts.stages; ++s) {
    ProbeCheckpoint cp;
    for (std::size_t i = 0; i < stage_steps; ++i) {
      const LabeledBatch real = sample(mix, opts.batch, rng, pair.conditional());
      cp.d_loss = discriminator_loss(pair, real, fakes.points, fakes.labels);
      adam_step(pair.discriminator, adam, ++steps);
    }
    stage_steps *= 2;
    cp.disc_steps = steps;
    const Matrix2D logits = pair.discriminator.infer(pair.discriminator_input(fakes.points, fakes.labels));
    for (std::size_t r = 0; r < logits.rows(); ++r) cp.fake_logit_mean += logits(r, 0) / n;
    const AdversarialGrad adv = adversarial_sample_gradient(pair, fakes.points, fakes.labels);
    cp.adversarial_grad_norm = mean_row_norm(adv.grad, n);
    // sigmoid(l) / sigmoid(-l) = exp(l) converts the non-saturating gradient.
    for (std::size_t r = 0; r < logits.rows(); ++r) {
      cp.saturating_grad_norm +=
          std::exp(logits(r, 0)) * std::hypot(adv.grad(r, 0), adv.grad(r, 1));
    }
    cp.regularity_grad_norm = mean_row_norm(reg.grad, n);
    Matrix2D combined = adv.grad;
    for (std::size_t i = 0; i < combined.size(); ++i) {
      combined.data()[i] += opts.lambda * reg.grad.data()[i];
    }
    cp.combined_grad_norm = mean_row_norm(combined, n);
    rep.checkpoints.push_back(cp);
  }
  rep.adversarial_decreasing = true;
  rep.regularity_bounded = true;
  for (std::size_t i = 0; i < rep.checkpoints.size(); ++i) {
    if (!(rep.checkpoints[i].regularity_grad_norm > 0.1)) rep.regularity_bounded = false;
    if (i > 0 && !(rep.checkpoints[i].adversarial_grad_norm <
                   rep.checkpoints[i - 1].adversarial_grad_norm)) {
      rep.adversarial_decreasing = false;
    }
  }
  return rep;
}

}  // namespace smart
