#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <vector>

#include "rada/adversarial.hpp"
#include "rada/datagen.hpp"
#include "rada/structure.hpp"
#include "rada/trainer.hpp"

namespace rada {

/// argmax of G_y(G_f(x)) per row; ties go to the lowest class index.
std::vector<int> predict(const RadaModel& model, const Matrix& x);
/// G_f(x)
Matrix extract_features(const RadaModel& model, const Matrix& x);

/// Throws EvalError when the dataset is unlabeled.
double accuracy(const RadaModel& model, const LabeledDataset& ds);
double accuracy(std::span<const int> predicted, std::span<const int> labels);

/// counts(true, predicted)
struct ConfusionMatrix {
  std::size_t classes = 0;
  std::vector<std::size_t> counts;

  std::size_t at(std::size_t truth, std::size_t predicted) const {
    return counts[truth * classes + predicted];
  }
  std::size_t total() const;
  std::size_t diagonal_sum() const;
  std::vector<std::size_t> row_sums() const;
};

ConfusionMatrix confusion(std::span<const int> predicted, std::span<const int> labels,
                          std::size_t classes);
ConfusionMatrix confusion(const RadaModel& model, const LabeledDataset& ds);

struct PadReport {
  double epsilon = 0.5;  // clamped to [0, 0.5]
  double d_a = 0.0;      // 2 (1 - 2 epsilon)
};

PadReport pad_from_error(double epsilon);

/// Proxy A-distance: k-fold cross-validated error of a linear logistic domain
/// classifier (200 full-batch gradient steps, lr 0.1, L2 1e-3, features
/// standardised on the training folds). Throws EvalError when a fold would hold
/// fewer than two samples.
PadReport proxy_a_distance(const Matrix& source_features, const Matrix& target_features,
                           std::size_t folds = 5);

struct StructureReport {
  PrecisionMatrix omega_y;
  PrecisionMatrix omega_d;
  Matrix rho_y;
  Matrix rho_d;
  double kl_dy = 0.0;    // D_KL(Ω_y || Ω_d)
  double kl_yd = 0.0;    // D_KL(Ω_d || Ω_y)
  double loss_d2y = 0.0; // training-form regulariser, d_to_y
  double loss_y2d = 0.0; // training-form regulariser, y_to_d
};

/// Requires a K-branch discriminator. Throws ShrinkageFailed.
StructureReport structure_report(const RadaModel& model, double eps0 = kDefaultShrinkEps);

/// Upper triangle from the label predictor, lower triangle from the
/// discriminator, unit diagonal.
Matrix combined_heatmap(const Matrix& rho_y, const Matrix& rho_d);

void write_matrix_csv(const std::filesystem::path& path, const Matrix& m);
void write_confusion_csv(const std::filesystem::path& path, const ConfusionMatrix& cm);
void write_report_csv(const std::filesystem::path& path, const TrainReport& report,
                      bool append = false);

}  // namespace rada
