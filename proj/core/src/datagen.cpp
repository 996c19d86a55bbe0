#include "rada/datagen.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <random>
#include <set>
#include <sstream>
#include <string>

#include "rada/errors.hpp"

namespace rada {

std::string_view to_string(Domain d) noexcept {
  return d == Domain::source ? "source" : "target";
}

std::string_view to_string(ShiftKind k) noexcept {
  switch (k) {
    case ShiftKind::rotation: return "rotation";
    case ShiftKind::translation: return "translation";
    case ShiftKind::both: return "both";
  }
  return "both";
}

ShiftKind parse_shift_kind(std::string_view text) {
  if (text == "rotation") return ShiftKind::rotation;
  if (text == "translation") return ShiftKind::translation;
  if (text == "both") return ShiftKind::both;
  throw ConfigError("shift", "unknown value '" + std::string(text) +
                                 "' (valid: rotation, translation, both)");
}

bool LabeledDataset::labeled() const {
  return !labels.empty() &&
         std::all_of(labels.begin(), labels.end(), [](int l) { return l >= 0; });
}

LabeledDataset LabeledDataset::without_labels() const {
  LabeledDataset out = *this;
  std::fill(out.labels.begin(), out.labels.end(), -1);
  return out;
}

void LabeledDataset::validate() const {
  if (features.rows() == 0 || features.cols() == 0) throw DimensionError("dataset is empty");
  if (labels.size() != features.rows())
    throw DimensionError("dataset has " + std::to_string(labels.size()) + " labels for " +
                         std::to_string(features.rows()) + " samples");
  if (classes < 2) throw DimensionError("dataset needs at least two classes");
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < -1 || labels[i] >= static_cast<int>(classes))
      throw LabelError("label " + std::to_string(labels[i]) + " out of range at sample " +
                       std::to_string(i));
  }
}

void GenConfig::validate() const {
  if (classes < 2) throw ConfigError("classes", "must be at least 2");
  if (features < 2) throw ConfigError("features", "must be at least 2");
  if (per_class < 1) throw ConfigError("per_class", "must be at least 1");
  if (!(shift_magnitude >= 0.0)) throw ConfigError("shift_magnitude", "must be non-negative");
  if (!(class_scale > 0.0)) throw ConfigError("class_scale", "must be positive");
  if (!(noise >= 0.0)) throw ConfigError("noise", "must be non-negative");
  if (!(edge_probability >= 0.0 && edge_probability <= 1.0))
    throw ConfigError("edge_probability", "must lie in [0, 1]");
  std::set<int> seen;
  for (int c : target_classes) {
    if (c < 0 || c >= static_cast<int>(classes))
      throw ConfigError("target_classes", "class " + std::to_string(c) + " out of range");
    if (!seen.insert(c).second)
      throw ConfigError("target_classes", "class " + std::to_string(c) + " listed twice");
  }
}

namespace {

Matrix random_sparse_precision(std::size_t k, double edge_probability, std::mt19937_64& rng) {
  std::bernoulli_distribution edge(edge_probability);
  std::bernoulli_distribution negative(0.5);
  std::uniform_real_distribution<double> magnitude(0.3, 0.6);
  Matrix omega(k, k);
  for (std::size_t i = 0; i < k; ++i)
    for (std::size_t j = i + 1; j < k; ++j) {
      if (!edge(rng)) continue;
      const double v = (negative(rng) ? -1.0 : 1.0) * magnitude(rng);
      omega(i, j) = v;
      omega(j, i) = v;
    }
  for (std::size_t i = 0; i < k; ++i) {
    double row = 0.0;
    for (std::size_t j = 0; j < k; ++j)
      if (j != i) row += std::abs(omega(i, j));
    omega(i, i) = row + 0.5;
  }
  return omega;
}

// Gram-Schmidt on a Gaussian matrix; columns form an orthonormal basis.
Matrix random_orthonormal(std::size_t n, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix q(n, n);
  for (double& v : q.values()) v = normal(rng);
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t p = 0; p < j; ++p) {
      double dot = 0.0;
      for (std::size_t i = 0; i < n; ++i) dot += q(i, j) * q(i, p);
      for (std::size_t i = 0; i < n; ++i) q(i, j) -= dot * q(i, p);
    }
    double norm = 0.0;
    for (std::size_t i = 0; i < n; ++i) norm += q(i, j) * q(i, j);
    norm = std::sqrt(norm);
    for (std::size_t i = 0; i < n; ++i) q(i, j) /= norm;
  }
  return q;
}

// U R(θ) Uᵀ with R rotating coordinate planes (0,1), (2,3), ...
Matrix plane_rotation(std::size_t n, double angle, std::mt19937_64& rng) {
  const Matrix u = random_orthonormal(n, rng);
  Matrix r = Matrix::identity(n);
  const double c = std::cos(angle);
  const double s = std::sin(angle);
  for (std::size_t p = 0; p + 1 < n; p += 2) {
    r(p, p) = c;
    r(p, p + 1) = -s;
    r(p + 1, p) = s;
    r(p + 1, p + 1) = c;
  }
  return matmul(matmul(u, r), u.transpose());
}

LabeledDataset sample_domain(const Matrix& means, const std::vector<int>& classes,
                             std::size_t per_class, double noise, Domain domain,
                             std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  const std::size_t f = means.cols();
  LabeledDataset ds;
  ds.domain = domain;
  ds.classes = means.rows();
  ds.features = Matrix(classes.size() * per_class, f);
  ds.labels.reserve(classes.size() * per_class);
  std::size_t row = 0;
  for (int c : classes) {
    for (std::size_t n = 0; n < per_class; ++n, ++row) {
      for (std::size_t j = 0; j < f; ++j)
        ds.features(row, j) = means(static_cast<std::size_t>(c), j) + noise * normal(rng);
      ds.labels.push_back(c);
    }
  }
  return ds;
}

}  // namespace

GeneratedPair generate_pair(const GenConfig& cfg) {
  cfg.validate();
  std::mt19937_64 rng(cfg.seed);
  const std::size_t k = cfg.classes;
  const std::size_t f = cfg.features;

  Matrix omega;
  CholeskyFactor cov_factor;
  bool ok = false;
  for (int attempt = 0; attempt < 10 && !ok; ++attempt) {
    omega = random_sparse_precision(k, cfg.edge_probability, rng);
    try {
      cov_factor = cholesky(inverse_pd(omega));
      ok = true;
    } catch (const NotPositiveDefinite&) {
    }
  }
  if (!ok) throw GenError("could not construct a positive definite class precision in 10 attempts");

  // Each feature coordinate carries one N(0, (Ω*)⁻¹) draw across the K classes.
  double mean_var = 0.0;
  const Matrix cov = cov_factor.reconstruct();
  for (std::size_t i = 0; i < k; ++i) mean_var += cov(i, i);
  mean_var /= static_cast<double>(k);
  const double scale = cfg.class_scale / std::sqrt(mean_var);

  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix z(k, f);
  for (double& v : z.values()) v = normal(rng);
  Matrix source_means = matmul(cov_factor.lower, z) * scale;

  Matrix rotation = Matrix::identity(f);
  std::vector<double> translation(f, 0.0);
  const bool shifted = cfg.shift_magnitude > 0.0;
  const bool rotate = shifted && cfg.shift != ShiftKind::translation;
  const bool translate = shifted && cfg.shift != ShiftKind::rotation;
  if (rotate) rotation = plane_rotation(f, cfg.shift_magnitude, rng);
  if (translate) {
    const double length = cfg.shift_magnitude * cfg.class_scale * std::sqrt(static_cast<double>(f));
    double norm = 0.0;
    for (double& v : translation) {
      v = normal(rng);
      norm += v * v;
    }
    norm = std::sqrt(norm);
    for (double& v : translation) v *= length / norm;
  }
  Matrix target_means = matmul_nt(source_means, rotation);
  for (std::size_t i = 0; i < k; ++i)
    for (std::size_t j = 0; j < f; ++j) target_means(i, j) += translation[j];

  std::vector<int> all_classes(k);
  for (std::size_t c = 0; c < k; ++c) all_classes[c] = static_cast<int>(c);
  std::vector<int> target_classes = cfg.target_classes.empty() ? all_classes : cfg.target_classes;
  std::sort(target_classes.begin(), target_classes.end());

  GeneratedPair out;
  out.source = sample_domain(source_means, all_classes, cfg.per_class, cfg.noise, Domain::source, rng);
  out.target = sample_domain(target_means, target_classes, cfg.per_class, cfg.noise, Domain::target, rng);
  out.ground_truth_precision = std::move(omega);
  out.source_means = std::move(source_means);
  out.target_means = std::move(target_means);
  return out;
}

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

void save_dataset(const LabeledDataset& ds, const std::filesystem::path& path) {
  ds.validate();
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  out << ds.classes << ' ' << ds.feature_dim() << ' ' << ds.size() << ' ' << to_string(ds.domain)
      << '\n';
  for (std::size_t r = 0; r < ds.size(); ++r) {
    out << ds.labels[r];
    for (double v : ds.features.row(r)) out << ' ' << format_double(v);
    out << '\n';
  }
  if (!out) throw Error("write failed for " + path.string());
}

namespace {

template <typename T>
T parse_number(std::string_view token, std::size_t line, const char* what) {
  T value{};
  const auto res = std::from_chars(token.data(), token.data() + token.size(), value);
  if (res.ec != std::errc() || res.ptr != token.data() + token.size())
    throw FormatError(std::string("cannot parse ") + what + " '" + std::string(token) + "'", line);
  return value;
}

std::vector<std::string_view> split_ws(std::string_view s) {
  std::vector<std::string_view> tokens;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && (s[i] == ' ' || s[i] == '\t' || s[i] == '\r')) ++i;
    const std::size_t start = i;
    while (i < s.size() && s[i] != ' ' && s[i] != '\t' && s[i] != '\r') ++i;
    if (i > start) tokens.push_back(s.substr(start, i - start));
  }
  return tokens;
}

}  // namespace

LabeledDataset load_dataset(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw FormatError("missing header", 1);
  const auto header = split_ws(line);
  if (header.size() != 4) throw FormatError("header must be 'K F M domain'", 1);
  const auto k = parse_number<std::size_t>(header[0], 1, "class count");
  const auto f = parse_number<std::size_t>(header[1], 1, "feature count");
  const auto m = parse_number<std::size_t>(header[2], 1, "record count");
  LabeledDataset ds;
  if (header[3] == "source") ds.domain = Domain::source;
  else if (header[3] == "target") ds.domain = Domain::target;
  else throw FormatError("unknown domain '" + std::string(header[3]) + "'", 1);
  if (k < 2 || f < 1 || m < 1) throw FormatError("header values out of range", 1);
  ds.classes = k;
  ds.features = Matrix(m, f);
  ds.labels.reserve(m);

  std::size_t record = 0;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    const auto tokens = split_ws(line);
    if (tokens.empty()) continue;
    if (record >= m)
      throw FormatError("more records than the header's " + std::to_string(m), line_no);
    if (tokens.size() != f + 1)
      throw FormatError("expected " + std::to_string(f + 1) + " fields, found " +
                            std::to_string(tokens.size()),
                        line_no);
    const int label = parse_number<int>(tokens[0], line_no, "label");
    if (label < -1 || label >= static_cast<int>(k))
      throw FormatError("label " + std::to_string(label) + " outside [-1, " + std::to_string(k) + ")",
                        line_no);
    ds.labels.push_back(label);
    for (std::size_t j = 0; j < f; ++j)
      ds.features(record, j) = parse_number<double>(tokens[j + 1], line_no, "feature");
    ++record;
  }
  if (record != m)
    throw FormatError("header promises " + std::to_string(m) + " records, found " +
                          std::to_string(record),
                      line_no);
  return ds;
}

}  // namespace rada
