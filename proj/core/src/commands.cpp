#include "smart/commands.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "smart/checkpoint.hpp"
#include "smart/diffusion.hpp"
#include "smart/gan.hpp"
#include "smart/grid_mixture.hpp"
#include "smart/metrics.hpp"
#include "smart/svg.hpp"
#include "smart/theorem_lab.hpp"

namespace smart {

namespace fs = std::filesystem;

SmartMode parse_smart_mode(std::string_view text) {
  if (text == "off") return SmartMode::off;
  if (text == "on") return SmartMode::on;
  if (text == "oracle") return SmartMode::oracle;
  throw std::invalid_argument("--smart expects on|off|oracle, got '" + std::string(text) + "'");
}

const char* to_string(SmartMode mode) {
  switch (mode) {
    case SmartMode::off: return "off";
    case SmartMode::on: return "on";
    case SmartMode::oracle: return "oracle";
  }
  return "?";
}

std::string RunManifest::to_text() const {
  std::ostringstream os;
  os << "# smartlab run manifest\n"
     << "# command = " << command << '\n'
     << "# run_id = " << run_id << '\n'
     << "# output_dir = " << output_dir.generic_string() << '\n';
  for (const auto& [name, path] : checkpoints) {
    os << "# checkpoint." << name << " = " << path.generic_string() << '\n';
  }
  for (const auto& [key, value] : notes) os << "# " << key << " = " << value << '\n';
  os << format_config(config);
  return os.str();
}

void RunManifest::write() const {
  const fs::path path = output_dir / "manifest.txt";
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("cannot write " + path.string());
  f << to_text();
}

std::string make_run_id(std::string_view command, const TrainConfig& cfg) {
  std::uint64_t h = 1469598103934665603ULL;
  auto mix = [&h](std::string_view s) {
    for (unsigned char c : s) {
      h ^= c;
      h *= 1099511628211ULL;
    }
  };
  mix(command);
  mix("\n");
  mix(format_config(cfg));
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return std::string(buf, 12);
}

fs::path prepare_run_dir(const fs::path& requested, std::string_view run_id) {
  const fs::path dir = requested.empty() ? fs::path("runs") / std::string(run_id) : requested;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw std::runtime_error("cannot create output directory " + dir.string());
  return dir;
}

namespace {

GridMixture mixture_for(const TrainConfig& cfg) { return GridMixture::standard(cfg.data_sigma); }

NoiseSchedule schedule_for(const TrainConfig& cfg) {
  return NoiseSchedule::linear(cfg.dpm.T, cfg.dpm.beta_start, cfg.dpm.beta_end);
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("cannot write " + path.string());
  f << text;
}

NoisePredictor load_predictor(const fs::path& path, const TrainConfig& cfg) {
  if (!fs::exists(path)) throw std::runtime_error("missing DPM checkpoint " + path.string());
  NoisePredictor pred = NoisePredictor::import_tensors(read_checkpoint(path));
  if (pred.T() != cfg.dpm.T) {
    throw std::runtime_error("DPM checkpoint was trained with T = " + std::to_string(pred.T()) +
                             " but config has dpm.T = " + std::to_string(cfg.dpm.T));
  }
  if (pred.conditional() != cfg.conditional) {
    throw std::runtime_error("DPM checkpoint conditioning does not match cond.enabled");
  }
  return pred;
}

GanPair load_gan(const fs::path& path) {
  if (!fs::exists(path)) throw std::runtime_error("missing GAN checkpoint " + path.string());
  return GanPair::import_tensors(read_checkpoint(path));
}

std::vector<int> cycled_labels(std::size_t n, std::size_t label_count) {
  std::vector<int> labels;
  if (label_count == 0) return labels;
  labels.resize(n);
  for (std::size_t i = 0; i < n; ++i) labels[i] = static_cast<int>(i % label_count);
  return labels;
}

std::string metrics_line(const SampleMetrics& m) {
  return "mode_coverage=" + std::to_string(m.mode_coverage) +
         " hq_fraction=" + format_double(m.hq_fraction) + " mean_dist=" + format_double(m.mean_dist);
}

}  // namespace

int cmd_train_dpm(const TrainDpmArgs& args, std::ostream& out) {
  const TrainConfig& cfg = args.config;
  cfg.validate();
  RunManifest manifest;
  manifest.command = "train-dpm";
  manifest.config = cfg;
  manifest.run_id = make_run_id(manifest.command, cfg);
  manifest.output_dir = prepare_run_dir(args.out_dir, manifest.run_id);

  const GridMixture mix = mixture_for(cfg);
  const NoiseSchedule sched = schedule_for(cfg);

  std::string loss_csv = "iter,loss\n";
  double acc = 0.0;
  std::size_t count = 0;
  const NoisePredictor pred = train_dpm(mix, cfg, [&](std::size_t it, double loss) {
    acc += loss;
    ++count;
    if ((it + 1) % cfg.eval.interval == 0 || it + 1 == cfg.dpm.iters) {
      loss_csv += std::to_string(it + 1) + ',' + format_double(acc / static_cast<double>(count)) + '\n';
      out << "dpm iter " << it + 1 << " loss " << format_double(acc / static_cast<double>(count))
          << '\n';
      acc = 0.0;
      count = 0;
    }
  });

  const fs::path ckpt = manifest.output_dir / "dpm.ckpt";
  write_checkpoint(ckpt, pred.export_tensors());
  write_text(manifest.output_dir / "dpm_loss.csv", loss_csv);

  Rng eval = make_stream(cfg.seed, "eval");
  const std::vector<int> labels = cycled_labels(cfg.eval.samples, pred.label_count());
  const Matrix2D samples = ddim_sample(pred, sched, cfg.eval.samples, 50, eval, labels);
  const SampleMetrics m = compute_metrics(samples, mix, cfg.eval.tau);
  render_scatter(samples, mix, manifest.output_dir / "ddim_samples.svg");

  manifest.checkpoints.emplace_back("dpm", ckpt);
  manifest.notes.emplace_back("ddim50", metrics_line(m));
  manifest.write();
  out << "ddim50 " << metrics_line(m) << '\n' << "wrote " << manifest.output_dir.string() << '\n';
  return 0;
}

int cmd_train_gan(const TrainGanArgs& args, std::ostream& out) {
  TrainConfig cfg = args.config;
  if (args.smart == SmartMode::off) cfg.smart.enabled = false;
  if (args.smart != SmartMode::off && !cfg.smart.enabled) {
    throw std::invalid_argument("--smart " + std::string(to_string(args.smart)) +
                                " conflicts with smart.enabled = false");
  }
  cfg.validate();
  if (args.smart == SmartMode::on && args.dpm_checkpoint.empty()) {
    throw std::invalid_argument("--smart on needs --dpm <checkpoint>");
  }

  RunManifest manifest;
  manifest.command = std::string("train-gan --smart ") + to_string(args.smart);
  manifest.config = cfg;
  manifest.run_id = make_run_id(manifest.command, cfg);
  manifest.output_dir = prepare_run_dir(args.out_dir, manifest.run_id);

  const GridMixture mix = mixture_for(cfg);
  const NoiseSchedule sched = schedule_for(cfg);
  std::optional<NoisePredictor> pred;
  std::optional<MixtureOracle> oracle;
  const NoiseModel* model = nullptr;
  if (args.smart == SmartMode::on) {
    pred.emplace(load_predictor(args.dpm_checkpoint, cfg));
    model = &*pred;
    manifest.checkpoints.emplace_back("dpm", args.dpm_checkpoint);
  } else if (args.smart == SmartMode::oracle) {
    oracle.emplace(mix, sched);
    model = &*oracle;
  }

  std::vector<MetricsRow> rows;
  const auto sink = [&](const MetricsRow& r) {
    rows.push_back(r);
    out << format_metrics_row(r) << '\n';
  };
  const fs::path metrics = manifest.output_dir / "metrics.csv";
  const fs::path ckpt = manifest.output_dir / "gan.ckpt";
  try {
    const GanRun run = train_gan(mix, model, cfg, sink);
    write_metrics_csv(metrics, run.history);
    write_checkpoint(ckpt, run.pair.export_tensors());
    const LabeledBatch samples = evaluation_samples(run.pair, cfg);
    render_scatter(samples.points, mix, manifest.output_dir / "samples.svg");
    manifest.checkpoints.emplace_back("gan", ckpt);
    manifest.notes.emplace_back("regularity_calls", std::to_string(run.regularity_calls));
    manifest.write();
  } catch (const TrainingDiverged& e) {
    write_metrics_csv(metrics, rows);
    const fs::path last = manifest.output_dir / "gan_last_good.ckpt";
    write_checkpoint(last, e.last_good().export_tensors());
    manifest.checkpoints.emplace_back("gan_last_good", last);
    manifest.notes.emplace_back("failure", e.what());
    manifest.write();
    out << "error: " << e.what() << '\n';
    return 2;
  }
  out << "wrote " << manifest.output_dir.string() << '\n';
  return 0;
}

int cmd_eval(const EvalArgs& args, std::ostream& out) {
  const TrainConfig& cfg = args.config;
  cfg.validate();
  GanPair pair = load_gan(args.checkpoint);
  if (pair.conditional() != cfg.conditional) {
    throw std::runtime_error("GAN checkpoint conditioning does not match cond.enabled");
  }
  const GridMixture mix = mixture_for(cfg);
  const NoiseSchedule sched = schedule_for(cfg);
  const MixtureOracle oracle(mix, sched);

  const LabeledBatch samples = evaluation_samples(pair, cfg);
  const SampleMetrics m = compute_metrics(samples.points, mix, cfg.eval.tau);

  // Losses on one fresh batch; score_loss is the regularity under the analytic oracle.
  Rng rng = make_stream(cfg.seed, "eval.losses");
  const std::size_t b = cfg.gan.batch;
  const LabeledBatch real = sample(mix, b, rng, pair.conditional());
  const LabeledBatch fake = sample_generator(pair, b, rng, real.labels);
  MetricsRow row;
  row.iter = cfg.gan.iters;
  row.d_loss = discriminator_loss(pair, real, fake.points, fake.labels);
  row.g_loss = adversarial_sample_gradient(pair, fake.points, fake.labels).loss;
  row.score_loss = score_regularity(oracle, sched, fake.points, cfg.smart, rng, fake.labels).loss;
  row.mode_coverage = m.mode_coverage;
  row.hq_fraction = m.hq_fraction;
  row.mean_dist = m.mean_dist;

  const MetricsRow rows[] = {row};
  if (!args.out_csv.empty()) write_metrics_csv(args.out_csv, rows);
  out << metrics_csv(rows);
  return 0;
}

int cmd_refine_demo(const RefineDemoArgs& args, std::ostream& out) {
  const TrainConfig& cfg = args.config;
  cfg.validate();
  if (args.n == 0) throw std::invalid_argument("refine-demo: n must be positive");

  RunManifest manifest;
  manifest.command = "refine-demo --t " + std::to_string(args.t) + " --k " +
                     std::to_string(args.k) + " --n " + std::to_string(args.n) +
                     (args.dpm_checkpoint.empty() ? "" : " --dpm");
  manifest.config = cfg;
  manifest.run_id = make_run_id(manifest.command, cfg);
  manifest.output_dir = prepare_run_dir(args.out_dir, manifest.run_id);

  const GridMixture mix = mixture_for(cfg);
  const NoiseSchedule sched = schedule_for(cfg);
  sched.check_timestep(args.t, 1);
  std::optional<NoisePredictor> pred;
  std::optional<MixtureOracle> oracle;
  const NoiseModel* model = nullptr;
  if (!args.dpm_checkpoint.empty()) {
    pred.emplace(load_predictor(args.dpm_checkpoint, cfg));
    model = &*pred;
    manifest.checkpoints.emplace_back("dpm", args.dpm_checkpoint);
  } else {
    oracle.emplace(mix, sched);
    model = &*oracle;
  }

  Rng rng = make_stream(cfg.seed, "refine-demo");
  const Matrix2D y0 = uniform(args.n, 2, -4.0, 4.0, rng);
  const std::vector<int> labels = cycled_labels(args.n, cfg.conditional ? mix.size() : 0);
  const RefinementTrace trace = refinement_sequence(*model, sched, mix, y0, args.t, args.k, rng, labels);

  std::string csv = "step,mean_distance\n";
  for (std::size_t i = 0; i < trace.mean_distance.size(); ++i) {
    csv += std::to_string(i) + ',' + format_double(trace.mean_distance[i]) + '\n';
  }
  write_text(manifest.output_dir / "trace.csv", csv);
  render_scatter(trace.states.back(), mix, manifest.output_dir / "refined.svg");
  manifest.notes.emplace_back("terminal_distance", format_double(trace.mean_distance.back()));
  manifest.write();
  out << "terminal mean distance " << format_double(trace.mean_distance.back()) << '\n'
      << "wrote " << manifest.output_dir.string() << '\n';
  return 0;
}

namespace {

struct CheckLine {
  std::string name;
  double value;
  std::string requirement;
  bool passed;
};

}  // namespace

int cmd_verify(const VerifyArgs& args, std::ostream& out) {
  std::vector<CheckLine> checks;
  const double log2 = std::numbers::ln2;

  {
    const DivergenceReport r =
        generator_loss_integral(DiscreteDist::uniform(2), DiscreteDist::uniform(2), 0.0);
    checks.push_back({"equal_distributions_value", r.value, "|v - log 2| <= 1e-9",
                      std::abs(r.value - log2) <= 1e-9});
  }
  {
    const DiscreteDist a{{0}, {1.0}};
    const DiscreteDist b{{1}, {1.0}};
    const DivergenceReport r = generator_loss_integral(a, b, 1e-9);
    const double expected = -std::log(1e-9 / (1.0 + 1e-9));
    checks.push_back({"disjoint_atoms_floor_1e-9", r.value, "|v - 20.7233| <= 1e-4",
                      std::abs(r.value - expected) <= 1e-4});
  }
  {
    const LowerBoundReport r = lower_bound_scan(args.scan_trials, 8, args.seed);
    checks.push_back({"lower_bound_scan_violations",
                      static_cast<double>(r.bound_violations + r.equality_violations +
                                          r.strictness_violations + r.perturbation_violations),
                      "== 0", r.passed()});
  }
  {
    std::vector<double> floors;
    for (int e = 3; e <= 12; ++e) floors.push_back(std::pow(10.0, -e));
    for (double p : {0.1, 0.3, 0.7}) {
      const auto [a, b] = escaped_mass_pair(p, 4, 3);
      const double slope = divergence_slope(a, b, floors);
      checks.push_back({"divergence_slope_p" + format_double(p), slope, "|s/p - 1| <= 0.01",
                        std::abs(slope / p - 1.0) <= 0.01});
    }
  }
  const GridMixture mix = GridMixture::standard();
  const NoiseSchedule sched = NoiseSchedule::linear(1000, 1e-4, 0.02);
  {
    const RefinementSuiteReport r =
        refinement_convergence_suite(mix, sched, {160, 80, 40}, 200, 4096, args.seed, false);
    checks.push_back({"refinement_terminal_distances_decrease", r.runs.back().terminal_window,
                      "strictly decreasing over t = 160, 80, 40", r.terminal_decreasing});
    bool windows = true;
    for (const auto& run : r.runs) windows = windows && run.window_non_increasing;
    checks.push_back({"refinement_window_means_non_increasing", windows ? 1.0 : 0.0,
                      "every run", windows});
    checks.push_back({"refinement_terminal_distance_t40", r.runs.back().terminal_distance,
                      "<= 0.05", r.runs.back().terminal_distance <= 0.05});
  }
  {
    const RefinementSuiteReport r =
        refinement_convergence_suite(mix, sched, {40}, 200, 1024, args.seed, true);
    const RefinementRun& run = r.runs.front();
    checks.push_back({"conditional_refinement_own_label", run.own_label_fraction, "== 1",
                      run.own_label_fraction == 1.0});
    checks.push_back({"conditional_refinement_foreign_distance", run.min_foreign_distance,
                      ">= 0.5", run.min_foreign_distance >= 0.5});
  }
  {
    Rng init = make_stream(args.seed, "verify.probe");
    GanPair pair = GanPair::create(2, 0, init);
    const MixtureOracle oracle(mix, sched);
    ProbeOptions opts;
    opts.seed = args.seed;
    const ProbeReport r = gradient_vanishing_probe(pair, mix, oracle, sched, {0.5, 0.5}, opts);
    checks.push_back({"probe_adversarial_gradient_decreasing",
                      r.checkpoints.back().adversarial_grad_norm, "decreasing over checkpoints",
                      r.adversarial_decreasing});
    double min_reg = r.checkpoints.front().regularity_grad_norm;
    for (const auto& c : r.checkpoints) min_reg = std::min(min_reg, c.regularity_grad_norm);
    checks.push_back({"probe_regularity_gradient_floor", min_reg, "> 0.1", r.regularity_bounded});
  }

  std::string csv = "check,value,requirement,passed\n";
  bool all = true;
  for (const auto& c : checks) {
    all = all && c.passed;
    csv += c.name + ',' + format_double(c.value) + ',' + c.requirement + ',' +
           (c.passed ? "1" : "0") + '\n';
    out << (c.passed ? "PASS " : "FAIL ") << c.name << "  value=" << format_double(c.value)
        << "  (" << c.requirement << ")\n";
  }
  if (!args.out_dir.empty()) {
    fs::create_directories(args.out_dir);
    write_text(args.out_dir / "verify.csv", csv);
  }
  out << (all ? "all theorem checks passed\n" : "theorem checks FAILED\n");
  return all ? 0 : 1;
}

Matrix2D read_samples_csv(const fs::path& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot read " + path.string());
  std::string line;
  if (!std::getline(f, line) || line.rfind("x,y", 0) != 0) {
    throw std::runtime_error(path.string() + ": expected header starting with x,y");
  }
  std::vector<double> values;
  std::size_t lineno = 1;
  while (std::getline(f, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto comma = line.find(',');
    const auto comma2 = line.find(',', comma + 1);
    const std::string xs = line.substr(0, comma);
    const std::string ys =
        comma == std::string::npos ? "" : line.substr(comma + 1, comma2 - comma - 1);
    double x = 0.0;
    double y = 0.0;
    const auto rx = std::from_chars(xs.data(), xs.data() + xs.size(), x);
    const auto ry = std::from_chars(ys.data(), ys.data() + ys.size(), y);
    if (comma == std::string::npos || rx.ec != std::errc{} || ry.ec != std::errc{}) {
      throw std::runtime_error(path.string() + ":" + std::to_string(lineno) + ": bad sample row");
    }
    values.push_back(x);
    values.push_back(y);
  }
  const std::size_t rows = values.size() / 2;
  return Matrix2D(rows, 2, std::move(values));
}

int cmd_render(const RenderArgs& args, std::ostream& out) {
  const GridMixture mix = mixture_for(args.config);
  Matrix2D points;
  if (args.input.extension() == ".csv") {
    points = read_samples_csv(args.input);
  } else {
    const GanPair pair = load_gan(args.input);
    points = evaluation_samples(pair, args.config).points;
  }
  render_scatter(points, mix, args.out_svg);
  out << "wrote " << args.out_svg.string() << " (" << points.rows() << " points)\n";
  return 0;
}

}  // namespace smart
