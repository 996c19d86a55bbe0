#include "rada/eval.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <string>

#include "rada/errors.hpp"

namespace rada {

std::vector<int> predict(const RadaModel& model, const Matrix& x) {
  const auto feats = forward(model.g_f, x);
  const auto logits = forward(model.g_y, feats.output).output;
  std::vector<int> out(logits.rows());
  for (std::size_t r = 0; r < logits.rows(); ++r) {
    const auto z = logits.row(r);
    out[r] = static_cast<int>(std::max_element(z.begin(), z.end()) - z.begin());
  }
  return out;
}

Matrix extract_features(const RadaModel& model, const Matrix& x) {
  return forward(model.g_f, x).output;
}

double accuracy(std::span<const int> predicted, std::span<const int> labels) {
  if (predicted.size() != labels.size()) throw EvalError("prediction and label counts differ");
  if (labels.empty()) throw EvalError("no samples to evaluate");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0) throw EvalError("dataset is unlabeled");
    if (predicted[i] == labels[i]) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(labels.size());
}

double accuracy(const RadaModel& model, const LabeledDataset& ds) {
  if (!ds.labeled()) throw EvalError("accuracy needs a labeled dataset");
  const auto pred = predict(model, ds.features);
  return accuracy(pred, ds.labels);
}

std::size_t ConfusionMatrix::total() const {
  return std::accumulate(counts.begin(), counts.end(), std::size_t{0});
}

std::size_t ConfusionMatrix::diagonal_sum() const {
  std::size_t s = 0;
  for (std::size_t i = 0; i < classes; ++i) s += at(i, i);
  return s;
}

std::vector<std::size_t> ConfusionMatrix::row_sums() const {
  std::vector<std::size_t> rows(classes, 0);
  for (std::size_t t = 0; t < classes; ++t)
    for (std::size_t p = 0; p < classes; ++p) rows[t] += at(t, p);
  return rows;
}

ConfusionMatrix confusion(std::span<const int> predicted, std::span<const int> labels,
                          std::size_t classes) {
  if (predicted.size() != labels.size()) throw EvalError("prediction and label counts differ");
  ConfusionMatrix cm{classes, std::vector<std::size_t>(classes * classes, 0)};
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0) throw EvalError("dataset is unlabeled");
    if (labels[i] >= static_cast<int>(classes) || predicted[i] < 0 ||
        predicted[i] >= static_cast<int>(classes))
      throw EvalError("class index out of range");
    ++cm.counts[static_cast<std::size_t>(labels[i]) * classes +
                static_cast<std::size_t>(predicted[i])];
  }
  return cm;
}

ConfusionMatrix confusion(const RadaModel& model, const LabeledDataset& ds) {
  if (!ds.labeled()) throw EvalError("confusion needs a labeled dataset");
  return confusion(predict(model, ds.features), ds.labels, model.classes());
}

PadReport pad_from_error(double epsilon) {
  PadReport r;
  r.epsilon = std::clamp(epsilon, 0.0, 0.5);
  r.d_a = 2.0 * (1.0 - 2.0 * r.epsilon);
  return r;
}

namespace {

struct LogisticModel {
  std::vector<double> w;
  double b = 0.0;
};

double logistic_score(const LogisticModel& m, std::span<const double> x) {
  double z = m.b;
  for (std::size_t j = 0; j < x.size(); ++j) z += m.w[j] * x[j];
  return z;
}

}  // namespace

PadReport proxy_a_distance(const Matrix& source_features, const Matrix& target_features,
                           std::size_t folds) {
  if (source_features.rows() == 0 || target_features.rows() == 0)
    throw EvalError("proxy_a_distance: both feature sets must be non-empty");
  if (source_features.cols() != target_features.cols())
    throw EvalError("proxy_a_distance: feature widths differ");
  if (folds < 2) throw EvalError("proxy_a_distance: need at least two folds");

  const std::size_t n = source_features.rows() + target_features.rows();
  const std::size_t f = source_features.cols();
  if (n / folds < 2) throw EvalError("proxy_a_distance: folds would hold fewer than two samples");

  Matrix x(n, f);
  std::vector<int> y(n);
  std::vector<std::size_t> fold_of(n);
  for (std::size_t i = 0; i < source_features.rows(); ++i) {
    std::copy(source_features.row(i).begin(), source_features.row(i).end(), x.row(i).begin());
    y[i] = 1;
    fold_of[i] = i % folds;
  }
  for (std::size_t i = 0; i < target_features.rows(); ++i) {
    const std::size_t r = source_features.rows() + i;
    std::copy(target_features.row(i).begin(), target_features.row(i).end(), x.row(r).begin());
    y[r] = 0;
    fold_of[r] = i % folds;
  }

  constexpr int kSteps = 200;
  constexpr double kLearningRate = 0.1;
  constexpr double kL2 = 1e-3;

  std::size_t errors = 0;
  std::size_t evaluated = 0;
  for (std::size_t fold = 0; fold < folds; ++fold) {
    std::vector<std::size_t> train;
    std::vector<std::size_t> test;
    for (std::size_t i = 0; i < n; ++i) (fold_of[i] == fold ? test : train).push_back(i);
    if (train.size() < 2 || test.size() < 2)
      throw EvalError("proxy_a_distance: degenerate fold " + std::to_string(fold));

    std::vector<double> mean(f, 0.0);
    std::vector<double> sd(f, 0.0);
    for (std::size_t i : train)
      for (std::size_t j = 0; j < f; ++j) mean[j] += x(i, j);
    for (double& v : mean) v /= static_cast<double>(train.size());
    for (std::size_t i : train)
      for (std::size_t j = 0; j < f; ++j) sd[j] += (x(i, j) - mean[j]) * (x(i, j) - mean[j]);
    for (double& v : sd) {
      v = std::sqrt(v / static_cast<double>(train.size()));
      if (!(v > 1e-12)) v = 1.0;
    }
    auto standardized = [&](std::size_t i) {
      std::vector<double> row(f);
      for (std::size_t j = 0; j < f; ++j) row[j] = (x(i, j) - mean[j]) / sd[j];
      return row;
    };
    std::vector<std::vector<double>> train_x;
    train_x.reserve(train.size());
    for (std::size_t i : train) train_x.push_back(standardized(i));

    LogisticModel model{std::vector<double>(f, 0.0), 0.0};
    const double inv = 1.0 / static_cast<double>(train.size());
    for (int step = 0; step < kSteps; ++step) {
      std::vector<double> gw(f, 0.0);
      double gb = 0.0;
      for (std::size_t t = 0; t < train.size(); ++t) {
        const auto g = sigmoid_bce_loss(logistic_score(model, train_x[t]), y[train[t]]).grad;
        for (std::size_t j = 0; j < f; ++j) gw[j] += g * train_x[t][j];
        gb += g;
      }
      for (std::size_t j = 0; j < f; ++j) model.w[j] -= kLearningRate * (gw[j] * inv + kL2 * model.w[j]);
      model.b -= kLearningRate * gb * inv;
    }
    for (std::size_t i : test) {
      const int predicted = logistic_score(model, standardized(i)) > 0.0 ? 1 : 0;
      if (predicted != y[i]) ++errors;
      ++evaluated;
    }
  }
  return pad_from_error(static_cast<double>(errors) / static_cast<double>(evaluated));
}

StructureReport structure_report(const RadaModel& model, double eps0) {
  if (model.branches() != model.classes())
    throw EvalError("structure_report needs a K-branch discriminator");
  StructureReport r;
  r.omega_y = precision_from_weights(model.g_y.last(), eps0);
  r.omega_d = precision_from_weights(model.g_d.last(), eps0);
  r.rho_y = partial_correlations(r.omega_y);
  r.rho_d = partial_correlations(r.omega_d);
  r.kl_dy = kl_precision(r.omega_y, r.omega_d, StructureDirection::d_to_y);
  r.kl_yd = kl_precision(r.omega_y, r.omega_d, StructureDirection::y_to_d);
  r.loss_d2y = structure_loss(model.g_y.last(), model.g_d.last(), StructureDirection::d_to_y, eps0).value;
  r.loss_y2d = structure_loss(model.g_y.last(), model.g_d.last(), StructureDirection::y_to_d, eps0).value;
  return r;
}

Matrix combined_heatmap(const Matrix& rho_y, const Matrix& rho_d) {
  if (rho_y.rows() != rho_d.rows() || rho_y.cols() != rho_d.cols() || rho_y.rows() != rho_y.cols())
    throw DimensionError("combined_heatmap: shapes differ");
  const std::size_t k = rho_y.rows();
  Matrix h(k, k);
  for (std::size_t i = 0; i < k; ++i)
    for (std::size_t j = 0; j < k; ++j) h(i, j) = i < j ? rho_y(i, j) : (i > j ? rho_d(i, j) : 1.0);
  return h;
}

namespace {

std::ofstream open_csv(const std::filesystem::path& path, bool append = false) {
  std::ofstream out(path, std::ios::binary | (append ? std::ios::app : std::ios::trunc));
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  return out;
}

std::string optional_cell(const std::optional<double>& v) {
  return v ? format_double(*v) : std::string("NA");
}

}  // namespace

void write_matrix_csv(const std::filesystem::path& path, const Matrix& m) {
  auto out = open_csv(path);
  for (std::size_t r = 0; r < m.rows(); ++r) {
    for (std::size_t c = 0; c < m.cols(); ++c) out << (c ? "," : "") << format_double(m(r, c));
    out << '\n';
  }
}

void write_confusion_csv(const std::filesystem::path& path, const ConfusionMatrix& cm) {
  auto out = open_csv(path);
  for (std::size_t t = 0; t < cm.classes; ++t) {
    for (std::size_t p = 0; p < cm.classes; ++p) out << (p ? "," : "") << cm.at(t, p);
    out << '\n';
  }
}

void write_report_csv(const std::filesystem::path& path, const TrainReport& report, bool append) {
  const bool header = !append || !std::filesystem::exists(path) || std::filesystem::file_size(path) == 0;
  auto out = open_csv(path, append);
  if (header) {
    out << "epoch,label_loss,domain_loss,structure_loss,kl_dy,kl_yd,lambda_adv,lr_backbone,"
           "lr_heads,source_accuracy,target_accuracy,shrink_events\n";
  }
  for (const auto& e : report.epochs) {
    out << e.epoch << ',' << format_double(e.label_loss) << ',' << format_double(e.domain_loss)
        << ',' << optional_cell(e.structure_loss) << ',' << optional_cell(e.kl_dy) << ','
        << optional_cell(e.kl_yd) << ',' << format_double(e.lambda_adv) << ','
        << format_double(e.lr_backbone) << ',' << format_double(e.lr_heads) << ','
        << format_double(e.source_accuracy) << ',' << optional_cell(e.target_accuracy) << ','
        << e.shrink_events << '\n';
  }
}

}  // namespace rada
