#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "rada/adversarial.hpp"
#include "rada/datagen.hpp"
#include "rada/structure.hpp"

namespace rada {

struct TrainConfig {
  std::size_t epochs = 100;
  std::size_t batch_size = 32;
  /// Base learning rate of the feature extractor G_f.
  double lr_backbone = 0.001;
  /// Base learning rate of G_y and G_d (10x the backbone).
  double lr_heads = 0.01;
  double momentum = 0.9;
  double weight_decay = 0.0005;
  double alpha = 10.0;
  double beta = 0.75;
  /// Base adversarial weight; the schedule multiplies it by (1-e^{-10p})/(1+e^{-10p}).
  double lambda_adv = 1.0;
  double lambda_r = 0.01;
  StructureDirection direction = StructureDirection::d_to_y;
  bool balanced_sampling = true;
  bool detach_target_weights = true;
  std::uint64_t seed = 1;
  double eps0 = kDefaultShrinkEps;

  /// Throws ConfigError naming the offending field.
  void validate() const;

  /// Flat key/value view, used by checkpoints and the CLI config files.
  std::map<std::string, std::string> to_key_values() const;
  /// Applies known keys on top of `base`; throws ConfigError on unknown keys or bad values.
  static TrainConfig from_key_values(const std::map<std::string, std::string>& kv,
                                     TrainConfig base);
  static TrainConfig from_key_values(const std::map<std::string, std::string>& kv);

  bool operator==(const TrainConfig&) const = default;
};

struct EpochRecord {
  std::size_t epoch = 0;
  double label_loss = 0.0;   // mean over the epoch's steps
  double domain_loss = 0.0;  // mean over the epoch's steps
  /// End-of-epoch regulariser and exact KLs; empty for a single-branch discriminator.
  std::optional<double> structure_loss;
  std::optional<double> kl_dy;  // D_KL(Ω_y || Ω_d)
  std::optional<double> kl_yd;  // D_KL(Ω_d || Ω_y)
  double lambda_adv = 0.0;
  double lr_backbone = 0.0;
  double lr_heads = 0.0;
  double source_accuracy = 0.0;
  std::optional<double> target_accuracy;
  std::size_t shrink_events = 0;

  bool operator==(const EpochRecord&) const = default;
};

struct TrainReport {
  std::vector<EpochRecord> epochs;

  bool operator==(const TrainReport&) const = default;
};

/// Parameters plus optimiser state; enough to resume training bit-exactly.
struct TrainState {
  RadaModel model;
  ModelGradients velocity;
  std::size_t epochs_completed = 0;

  static TrainState fresh(RadaModel model);
  bool operator==(const TrainState&) const = default;
};

struct FitResult {
  TrainState state;
  TrainReport report;
};

/// Minibatch SGD with heavy-ball momentum on the full objective. Learning rates
/// and λ_adv are updated at epoch boundaries from p = epoch / epochs. Target
/// labels are never used for training, only for the report. Throws
/// DivergenceError on a non-finite loss or gradient. Training stops after
/// epoch `stop_at_epoch` (capped at cfg.epochs) without changing the schedule,
/// so an interrupted run can be resumed from its state.
FitResult fit(TrainState state, const LabeledDataset& source, const LabeledDataset& target,
              const TrainConfig& cfg, std::optional<std::size_t> stop_at_epoch = std::nullopt);
FitResult fit(const RadaModel& model, const LabeledDataset& source, const LabeledDataset& target,
              const TrainConfig& cfg);

/// Source indices for one epoch. Balanced mode deals classes round-robin from
/// per-class shuffles, so class counts differ by at most one.
std::vector<std::size_t> epoch_order(const LabeledDataset& source, bool balanced,
                                     std::mt19937_64& rng);

/// θ ← θ - lr (m v + g + wd θ), updating v in place.
void sgd_momentum_step(NetworkParams& params, Gradients& velocity, const Gradients& grad,
                       double lr, double momentum, double weight_decay);

struct GradCheckReport {
  double feature_error = 0.0;
  double label_error = 0.0;
  double discriminator_error = 0.0;

  double worst() const;
};

/// ‖a - b‖∞ / max(1, ‖b‖∞)
double relative_error(const Gradients& analytic, const Gradients& numeric);

/// Compares the analytic gradient of the full objective with central
/// differences, per subnetwork. Target class weights are frozen at the
/// unperturbed model when settings.detach_target_weights is set.
GradCheckReport grad_check(const RadaModel& model, const SourceBatch& source,
                           const TargetBatch& target, const ObjectiveSettings& settings,
                           double h = 1e-5);

/// Versioned text checkpoint; doubles are written with 17 significant digits so
/// a save/load cycle is bit-exact.
void save_checkpoint(const std::filesystem::path& path, const TrainState& state,
                     const TrainConfig& cfg);
struct Checkpoint {
  TrainState state;
  TrainConfig config;
};
/// Throws FormatError.
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace rada
