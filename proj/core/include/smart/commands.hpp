#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "smart/config.hpp"
#include "smart/matrix.hpp"

namespace smart {

/// off: no regularity. on: trained predictor from a checkpoint. oracle: analytic mixture score.
enum class SmartMode { off, on, oracle };

SmartMode parse_smart_mode(std::string_view text);
const char* to_string(SmartMode mode);

/// Plain-text record of one run. The config block is valid config-file syntax and every
/// other line is a `#` comment, so the manifest can be fed back through --config.
struct RunManifest {
  std::string command;
  std::string run_id;
  std::filesystem::path output_dir;
  std::vector<std::pair<std::string, std::filesystem::path>> checkpoints;
  std::vector<std::pair<std::string, std::string>> notes;
  TrainConfig config;

  std::string to_text() const;
  void write() const;  // <output_dir>/manifest.txt
};

/// 12 hex digits of a hash over the command line and the effective config.
std::string make_run_id(std::string_view command, const TrainConfig& cfg);

/// Empty requested path -> runs/<run_id>. The directory is created.
std::filesystem::path prepare_run_dir(const std::filesystem::path& requested,
                                      std::string_view run_id);

struct TrainDpmArgs {
  TrainConfig config;
  std::filesystem::path out_dir;
};

struct TrainGanArgs {
  TrainConfig config;
  std::filesystem::path out_dir;
  SmartMode smart = SmartMode::oracle;
  std::filesystem::path dpm_checkpoint;  // required for SmartMode::on
};

struct EvalArgs {
  TrainConfig config;
  std::filesystem::path checkpoint;
  std::filesystem::path out_csv;  // empty -> metrics row on stdout only
};

struct RefineDemoArgs {
  TrainConfig config;
  std::filesystem::path out_dir;
  int t = 40;
  std::size_t k = 200;
  std::size_t n = 4096;
  std::filesystem::path dpm_checkpoint;  // empty -> analytic oracle
};

struct VerifyArgs {
  std::filesystem::path out_dir;  // empty -> summary on stdout only
  std::uint64_t seed = 0;
  std::size_t scan_trials = 10000;
};

struct RenderArgs {
  TrainConfig config;
  std::filesystem::path input;  // GAN checkpoint or x,y[,label] CSV
  std::filesystem::path out_svg;
};

// Each command returns its exit status; bad input and I/O failures throw.
int cmd_train_dpm(const TrainDpmArgs& args, std::ostream& out);
int cmd_train_gan(const TrainGanArgs& args, std::ostream& out);
int cmd_eval(const EvalArgs& args, std::ostream& out);
int cmd_refine_demo(const RefineDemoArgs& args, std::ostream& out);
int cmd_verify(const VerifyArgs& args, std::ostream& out);
int cmd_render(const RenderArgs& args, std::ostream& out);

/// Reads a samples CSV (header "x,y" or "x,y,label").
Matrix2D read_samples_csv(const std::filesystem::path& path);

}  // namespace smart
