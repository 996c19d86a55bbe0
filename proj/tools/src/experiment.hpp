#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "rada/adversarial.hpp"
#include "rada/datagen.hpp"
#include "rada/trainer.hpp"

namespace rada::cli {

enum class Method { source_only, dann_single, multiclass_only, rada };

std::string_view to_string(Method m) noexcept;
/// Throws ConfigError("method") listing the valid names.
Method parse_method(std::string_view text);

struct ModelConfig {
  std::vector<std::size_t> feature_hidden{32};
  std::size_t feature_dim = 16;
  std::vector<std::size_t> label_hidden{32};
  std::size_t discriminator_hidden = 64;

  bool operator==(const ModelConfig&) const = default;
};

struct ExperimentConfig {
  GenConfig gen;
  ModelConfig model;
  TrainConfig train;
  Method method = Method::rada;
  std::filesystem::path out = "rada-out";
  /// Directory holding source.txt and target.txt; empty means `out`.
  std::filesystem::path data;
  /// Report formats written by train: any of "csv", "json".
  std::vector<std::string> formats{"csv"};

  /// Throws ConfigError with a "section.key" field name.
  void validate() const;

  /// Sectioned key = value text; parse(to_text()) round-trips.
  std::string to_text() const;
  static ExperimentConfig parse(std::string_view text);
  static ExperimentConfig load(const std::filesystem::path& path);

  std::filesystem::path data_dir() const { return data.empty() ? out : data; }

  /// Training settings after the method selector is applied.
  TrainConfig effective_train() const;
  ModelShape effective_shape() const;

  bool wants_format(std::string_view f) const;
};

}  // namespace rada::cli
