#include <exception>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "smart/commands.hpp"
#include "smart/config.hpp"

namespace {

smart::TrainConfig load_config(const std::string& path, const std::string& seed_override) {
  smart::TrainConfig cfg = path.empty() ? smart::TrainConfig{} : smart::parse_config(path);
  if (!seed_override.empty()) cfg.seed = std::stoull(seed_override);
  cfg.validate();
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"smartlab: GANs with a score-matching regularity on a 7x7 Gaussian grid"};
  app.require_subcommand(1);

  std::string config_path;
  std::string seed;
  std::string out_dir;
  app.add_option("--config", config_path, "flat key = value config file (a run manifest works)")
      ->check(CLI::ExistingFile);
  app.add_option("--seed", seed, "overrides the config seed");

  auto* train_dpm = app.add_subcommand("train-dpm", "train and checkpoint the noise predictor");
  train_dpm->add_option("--out", out_dir, "run directory (default runs/<run id>)");

  std::string smart_mode = "oracle";
  std::string dpm_ckpt;
  auto* train_gan = app.add_subcommand("train-gan", "train a GAN with or without the regularity");
  train_gan->add_option("--smart", smart_mode, "off | on (trained predictor) | oracle")
      ->check(CLI::IsMember({"off", "on", "oracle"}));
  train_gan->add_option("--dpm", dpm_ckpt, "predictor checkpoint for --smart on");
  train_gan->add_option("--out", out_dir, "run directory (default runs/<run id>)");

  std::string checkpoint;
  std::string csv_out;
  auto* eval = app.add_subcommand("eval", "metrics row for a GAN checkpoint");
  eval->add_option("--checkpoint", checkpoint, "GAN checkpoint")->required();
  eval->add_option("--csv", csv_out, "write the metrics row here");

  smart::RefineDemoArgs refine;
  auto* refine_demo = app.add_subcommand("refine-demo", "repeated one-step refinement trace");
  refine_demo->add_option("--t", refine.t, "refinement timestep");
  refine_demo->add_option("--k", refine.k, "number of refinement steps");
  refine_demo->add_option("--n", refine.n, "number of points");
  refine_demo->add_option("--dpm", dpm_ckpt, "use a trained predictor instead of the oracle");
  refine_demo->add_option("--out", out_dir, "run directory (default runs/<run id>)");

  smart::VerifyArgs verify_args;
  auto* verify = app.add_subcommand("verify", "numerical theorem checks");
  verify->add_option("--out", out_dir, "directory for verify.csv");
  verify->add_option("--trials", verify_args.scan_trials, "random pairs in the lower-bound scan");

  std::string input;
  std::string svg_out;
  auto* render = app.add_subcommand("render", "SVG scatter of a GAN checkpoint or samples CSV");
  render->add_option("--input", input, "GAN checkpoint or x,y[,label] CSV")->required();
  render->add_option("--out", svg_out, "output SVG path")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    const smart::TrainConfig cfg = load_config(config_path, seed);
    if (*train_dpm) return smart::cmd_train_dpm({cfg, out_dir}, std::cout);
    if (*train_gan) {
      return smart::cmd_train_gan({cfg, out_dir, smart::parse_smart_mode(smart_mode), dpm_ckpt},
                                  std::cout);
    }
    if (*eval) return smart::cmd_eval({cfg, checkpoint, csv_out}, std::cout);
    if (*refine_demo) {
      refine.config = cfg;
      refine.out_dir = out_dir;
      refine.dpm_checkpoint = dpm_ckpt;
      return smart::cmd_refine_demo(refine, std::cout);
    }
    if (*verify) {
      verify_args.out_dir = out_dir;
      verify_args.seed = cfg.seed;
      return smart::cmd_verify(verify_args, std::cout);
    }
    if (*render) return smart::cmd_render({cfg, input, svg_out}, std::cout);
  } catch (const std::exception& e) {
    std::cerr << "smartlab: error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
