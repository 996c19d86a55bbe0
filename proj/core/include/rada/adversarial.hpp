#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "rada/autonet.hpp"
#include "rada/linalg.hpp"
#include "rada/structure.hpp"

namespace rada {

/// Layer widths of the three subnetworks.
struct ModelShape {
  std::size_t input_dim = 16;
  std::vector<std::size_t> feature_hidden{32};
  std::size_t feature_dim = 16;
  std::vector<std::size_t> label_hidden{32};
  std::size_t discriminator_hidden = 64;
  std::size_t classes = 6;
  /// K for the multi-branch discriminator, 1 for a plain DANN discriminator.
  std::size_t discriminator_branches = 6;
};

/// Feature extractor G_f, label predictor G_y and multi-branch discriminator G_d.
struct RadaModel {
  NetworkParams g_f;
  NetworkParams g_y;
  NetworkParams g_d;

  std::size_t classes() const { return g_y.output_width(); }
  std::size_t branches() const { return g_d.output_width(); }
  /// Throws DimensionError when the subnetworks do not fit together.
  void validate() const;

  bool operator==(const RadaModel&) const = default;
};

RadaModel make_model(const ModelShape& shape, std::uint64_t seed);

struct ModelGradients {
  Gradients f;
  Gradients y;
  Gradients d;

  static ModelGradients zeros_like(const RadaModel& model);
  bool all_finite() const;
  bool operator==(const ModelGradients&) const = default;
};

enum class DomainLabel : int { target = 0, source = 1 };

/// Per-sample domain label and class weights ỹ_m for the discriminator branches.
struct BatchAssignment {
  std::vector<DomainLabel> domain;
  Matrix weights;  // batch x branches

  /// Source rows must be one-hot; target rows must lie in [0, 1] and sum to 1
  /// within 1e-9. Throws AssignmentError.
  void validate() const;
};

struct DomainLossResult {
  double loss = 0.0;
  Matrix grad;           // d loss / d branch logits
  Matrix branch_losses;  // unweighted BCE per sample and branch
};

/// Batch mean over samples of Σ_k ỹ_mk BCE(z_mk, d_m). Branches whose weight is
/// zero contribute nothing, including to the gradient.
DomainLossResult class_weighted_domain_loss(const Matrix& branch_logits,
                                            const BatchAssignment& assignment);

struct SourceBatch {
  Matrix x;
  std::vector<int> labels;
};

struct TargetBatch {
  Matrix x;
};

struct ObjectiveSettings {
  double lambda_adv = 1.0;
  double lambda_r = 0.01;
  StructureDirection direction = StructureDirection::d_to_y;
  double eps0 = kDefaultShrinkEps;
  /// Treat the target class weights ŷ as constants. When false the domain loss
  /// also differentiates through softmax(G_y) on target samples (no reversal on
  /// that path).
  bool detach_target_weights = true;
};

struct ObjectiveResult {
  double total = 0.0;
  double label_loss = 0.0;
  double domain_loss = 0.0;
  double structure_loss = 0.0;
  double shrink_y = 0.0;
  double shrink_d = 0.0;

  /// What SGD descends: the discriminator sees the unscaled domain loss and the
  /// feature extractor sees the domain gradient through the reversal layer.
  ModelGradients update;
  /// True gradient of `total` (reversal replaced by identity). Only filled in
  /// when requested.
  std::optional<ModelGradients> objective;
  /// d(domain loss)/dθ_f with the reversal replaced by identity. Only filled in
  /// when requested.
  std::optional<Gradients> feature_domain_identity;
};

/// softmax(G_y(G_f(x))) for K-branch discriminators, all-ones for one branch.
Matrix target_class_weights(const RadaModel& model, const Matrix& target_x);

/// L_y(source) + λ_R L_R(W_y, W_d) + λ_adv (class-weighted domain loss over
/// source ∪ target, normalised by M_s + M_t).
///
/// `frozen_target_weights`, when given, replaces ŷ for the target rows. Throws
/// BatchError on empty batches.
ObjectiveResult total_objective(const RadaModel& model, const SourceBatch& source,
                                const TargetBatch& target, const ObjectiveSettings& settings,
                                const std::optional<Matrix>& frozen_target_weights = std::nullopt,
                                bool want_objective_gradient = false);

/// `total` of total_objective without any backward pass.
double objective_value(const RadaModel& model, const SourceBatch& source, const TargetBatch& target,
                       const ObjectiveSettings& settings,
                       const std::optional<Matrix>& frozen_target_weights = std::nullopt);

/// (1 - e^{-10p}) / (1 + e^{-10p})
double lambda_adv_schedule(double progress);
/// lr0 / (1 + α p)^β
double lr_schedule(double lr0, double progress, double alpha, double beta);

}  // namespace rada
