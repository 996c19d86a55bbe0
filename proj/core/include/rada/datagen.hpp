#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "rada/linalg.hpp"

namespace rada {

enum class Domain { source, target };

std::string_view to_string(Domain d) noexcept;

/// Feature matrix plus per-sample class index (-1 when withheld).
struct LabeledDataset {
  Matrix features;
  std::vector<int> labels;
  Domain domain = Domain::source;
  std::size_t classes = 0;

  std::size_t size() const noexcept { return features.rows(); }
  std::size_t feature_dim() const noexcept { return features.cols(); }
  /// True when every sample carries a label.
  bool labeled() const;
  /// Copy with all labels replaced by -1.
  LabeledDataset without_labels() const;
  /// Throws DimensionError or LabelError on inconsistent contents.
  void validate() const;

  bool operator==(const LabeledDataset&) const = default;
};

enum class ShiftKind { rotation, translation, both };

std::string_view to_string(ShiftKind k) noexcept;
ShiftKind parse_shift_kind(std::string_view text);

struct GenConfig {
  std::size_t classes = 6;
  std::size_t features = 16;
  std::size_t per_class = 100;
  std::uint64_t seed = 1;
  ShiftKind shift = ShiftKind::both;
  /// Rotation angle in radians (applied in every coordinate plane of a random
  /// orthonormal basis) and translation length in units of
  /// class_scale * sqrt(features), the typical norm of a class mean.
  double shift_magnitude = 0.5;
  /// Standard deviation of the class-mean coordinates.
  double class_scale = 1.0;
  /// Isotropic per-sample noise standard deviation.
  double noise = 0.5;
  /// Probability that a pair of classes is directly dependent in Ω*.
  double edge_probability = 0.5;
  /// Target classes for partial adaptation; empty means all classes.
  std::vector<int> target_classes;

  /// Throws ConfigError naming the offending field.
  void validate() const;
};

struct GeneratedPair {
  LabeledDataset source;
  LabeledDataset target;  // labels retained for evaluation only
  Matrix ground_truth_precision;
  Matrix source_means;  // K x F
  Matrix target_means;  // K x F, rigid image of source_means
};

/// Draws a sparse PD class precision Ω*, class means correlated across classes
/// by (Ω*)⁻¹ in every feature coordinate, and a target domain obtained by one
/// rigid transform of all class means. Throws GenError if no PD Ω* is found in
/// 10 attempts.
GeneratedPair generate_pair(const GenConfig& cfg);

/// Plain text: "K F M domain" header, then M lines "label f_1 ... f_F" with
/// 17 significant digits.
void save_dataset(const LabeledDataset& ds, const std::filesystem::path& path);
/// Throws FormatError with the offending line number.
LabeledDataset load_dataset(const std::filesystem::path& path);

/// Formats a double with 17 significant digits (round-trips exactly).
std::string format_double(double v);

}  // namespace rada
