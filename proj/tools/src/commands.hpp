#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "experiment.hpp"

namespace rada::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitRuntime = 3;

struct RunManifest {
  std::string command;
  std::string config_text;
  std::uint64_t seed = 0;
  std::string version;
  std::optional<double> duration_seconds;
  std::vector<std::string> outputs;  // relative to the output directory
};

std::string code_version();
/// Throws rada::Error when the file cannot be written.
void write_manifest(const std::filesystem::path& path, const RunManifest& manifest);

/// One training run of an ablation arm.
struct AblationRun {
  std::string arm;
  std::uint64_t seed = 0;
  bool ok = false;
  double target_accuracy = 0.0;
  double source_accuracy = 0.0;
  std::optional<double> kl_dy;
  std::optional<double> kl_yd;
  double pad = 0.0;
  std::string error;
};

struct AblationSummary {
  std::string arm;
  std::size_t runs = 0;
  std::size_t failures = 0;
  double mean_target_accuracy = 0.0;
  double sd_target_accuracy = 0.0;
  std::optional<double> mean_kl_dy;
  std::optional<double> mean_kl_yd;
  double mean_pad = 0.0;
};

struct AblationResult {
  std::vector<AblationRun> runs;  // sorted by arm order, then seed
  std::vector<AblationSummary> summary;

  const AblationSummary& arm(std::string_view name) const;
};

/// source_only, dann_single, multiclass_only, rada_d2y, rada_y2d
const std::vector<std::string>& ablation_arms();

/// Runs every arm on every seed; the seed drives data generation, model
/// initialisation and training. Per-run errors are recorded, not thrown.
/// Throws ConfigError when fewer than three seeds are given.
AblationResult run_ablation(const ExperimentConfig& cfg, const std::vector<std::uint64_t>& seeds,
                            std::size_t jobs = 0);

void write_ablation_csv(const std::filesystem::path& dir, const AblationResult& result);

/// Parses arguments and dispatches; returns the process exit code.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace rada::cli
