#include "rada/adversarial.hpp"

#include <cmath>
#include <random>
#include <string>

#include "rada/errors.hpp"

namespace rada {

namespace {

Matrix stack_rows(const Matrix& top, const Matrix& bottom) {
  if (top.cols() != bottom.cols()) throw DimensionError("source and target feature widths differ");
  Matrix out(top.rows() + bottom.rows(), top.cols());
  std::copy(top.values().begin(), top.values().end(), out.values().begin());
  std::copy(bottom.values().begin(), bottom.values().end(),
            out.values().begin() + static_cast<std::ptrdiff_t>(top.size()));
  return out;
}

Matrix slice_rows(const Matrix& m, std::size_t begin, std::size_t end) {
  Matrix out(end - begin, m.cols());
  for (std::size_t r = begin; r < end; ++r) {
    const auto src = m.row(r);
    std::copy(src.begin(), src.end(), out.row(r - begin).begin());
  }
  return out;
}

std::vector<std::size_t> chain(std::size_t in, const std::vector<std::size_t>& hidden,
                               std::size_t out) {
  std::vector<std::size_t> widths{in};
  widths.insert(widths.end(), hidden.begin(), hidden.end());
  widths.push_back(out);
  return widths;
}

}  // namespace

void RadaModel::validate() const {
  g_f.validate();
  g_y.validate();
  g_d.validate();
  if (g_y.input_width() != g_f.output_width() || g_d.input_width() != g_f.output_width())
    throw DimensionError("label predictor and discriminator must consume the feature extractor output");
  if (classes() < 2) throw DimensionError("need at least two classes");
  if (branches() != classes() && branches() != 1)
    throw DimensionError("discriminator must have K branches or a single branch");
}

RadaModel make_model(const ModelShape& shape, std::uint64_t seed) {
  if (shape.classes < 2) throw ConfigError("classes", "must be at least 2");
  std::mt19937_64 rng(seed);
  RadaModel m;
  m.g_f = init_network(chain(shape.input_dim, shape.feature_hidden, shape.feature_dim), rng);
  m.g_y = init_network(chain(shape.feature_dim, shape.label_hidden, shape.classes), rng);
  m.g_d = init_network(chain(shape.feature_dim, {shape.discriminator_hidden},
                             shape.discriminator_branches),
                       rng);
  m.validate();
  return m;
}

ModelGradients ModelGradients::zeros_like(const RadaModel& model) {
  return {Gradients::zeros_like(model.g_f), Gradients::zeros_like(model.g_y),
          Gradients::zeros_like(model.g_d)};
}

bool ModelGradients::all_finite() const {
  return f.all_finite() && y.all_finite() && d.all_finite();
}

void BatchAssignment::validate() const {
  if (domain.size() != weights.rows())
    throw AssignmentError("domain labels and class weights disagree on batch size");
  for (std::size_t m = 0; m < weights.rows(); ++m) {
    const auto w = weights.row(m);
    double sum = 0.0;
    for (double v : w) {
      if (!(v >= 0.0 && v <= 1.0))
        throw AssignmentError("class weight outside [0, 1] at row " + std::to_string(m));
      sum += v;
    }
    if (domain[m] == DomainLabel::source) {
      std::size_t ones = 0;
      for (double v : w) {
        if (v == 1.0) ++ones;
        else if (v != 0.0) ones = w.size() + 1;
      }
      if (ones != 1)
        throw AssignmentError("source row " + std::to_string(m) + " is not one-hot");
    } else if (std::abs(sum - 1.0) > 1e-9) {
      throw AssignmentError("target row " + std::to_string(m) + " weights sum to " +
                            std::to_string(sum));
    }
  }
}

DomainLossResult class_weighted_domain_loss(const Matrix& branch_logits,
                                            const BatchAssignment& assignment) {
  if (branch_logits.rows() != assignment.weights.rows() ||
      branch_logits.cols() != assignment.weights.cols())
    throw DimensionError("class_weighted_domain_loss: logits and weights differ in shape");
  if (branch_logits.rows() == 0) throw BatchError("class_weighted_domain_loss: empty batch");
  assignment.validate();

  const double inv_batch = 1.0 / static_cast<double>(branch_logits.rows());
  DomainLossResult out{0.0, Matrix(branch_logits.rows(), branch_logits.cols()),
                       Matrix(branch_logits.rows(), branch_logits.cols())};
  for (std::size_t m = 0; m < branch_logits.rows(); ++m) {
    const int label = static_cast<int>(assignment.domain[m]);
    double sample = 0.0;
    for (std::size_t k = 0; k < branch_logits.cols(); ++k) {
      const auto bce = sigmoid_bce_loss(branch_logits(m, k), label);
      out.branch_losses(m, k) = bce.loss;
      const double w = assignment.weights(m, k);
      if (w == 0.0) continue;  // muted branch
      sample += w * bce.loss;
      out.grad(m, k) = w * bce.grad * inv_batch;
    }
    out.loss += sample * inv_batch;
  }
  return out;
}

Matrix target_class_weights(const RadaModel& model, const Matrix& target_x) {
  if (model.branches() == 1) return Matrix(target_x.rows(), 1, 1.0);
  const auto feats = forward(model.g_f, target_x);
  return softmax(forward(model.g_y, feats.output).output);
}

namespace {

ObjectiveResult evaluate_objective(const RadaModel& model, const SourceBatch& source,
                                   const TargetBatch& target, const ObjectiveSettings& settings,
                                   const std::optional<Matrix>& frozen_target_weights,
                                   bool want_objective_gradient, bool value_only) {
  model.validate();
  const std::size_t ms = source.x.rows();
  const std::size_t mt = target.x.rows();
  if (ms == 0 || mt == 0) throw BatchError("total_objective: source and target batches must be non-empty");
  if (source.labels.size() != ms) throw BatchError("total_objective: source batch is missing labels");
  if (settings.lambda_adv < 0.0 || settings.lambda_r < 0.0)
    throw ConfigError("lambda", "balancing weights must be non-negative");

  const std::size_t k = model.classes();
  const std::size_t branches = model.branches();
  const double lambda_adv = settings.lambda_adv;

  const Matrix x = stack_rows(source.x, target.x);
  const auto trace_f = forward(model.g_f, x);
  const auto trace_y = forward(model.g_y, trace_f.output);
  const auto trace_d = forward(model.g_d, trace_f.output);

  ObjectiveResult result;
  const auto ce = softmax_ce_loss(slice_rows(trace_y.output, 0, ms), source.labels);
  result.label_loss = ce.loss;

  // Discriminator branch weights.
  BatchAssignment assignment;
  assignment.domain.assign(ms, DomainLabel::source);
  assignment.domain.resize(ms + mt, DomainLabel::target);
  assignment.weights = Matrix(ms + mt, branches);
  bool weights_track_predictor = false;
  Matrix target_probs;
  if (branches == 1) {
    for (double& v : assignment.weights.values()) v = 1.0;
  } else {
    for (std::size_t m = 0; m < ms; ++m)
      assignment.weights(m, static_cast<std::size_t>(source.labels[m])) = 1.0;
    if (frozen_target_weights) {
      if (frozen_target_weights->rows() != mt || frozen_target_weights->cols() != k)
        throw DimensionError("total_objective: frozen target weights have the wrong shape");
      target_probs = *frozen_target_weights;
    } else {
      target_probs = softmax(slice_rows(trace_y.output, ms, ms + mt));
      weights_track_predictor = !settings.detach_target_weights;
    }
    for (std::size_t m = 0; m < mt; ++m)
      for (std::size_t c = 0; c < k; ++c) assignment.weights(ms + m, c) = target_probs(m, c);
  }
  const auto domain = class_weighted_domain_loss(trace_d.output, assignment);
  result.domain_loss = domain.loss;

  if (value_only) {
    if (settings.lambda_r > 0.0) {
      if (branches != k)
        throw DimensionError("structure regulariser needs a K-branch discriminator");
      const auto reg = structure_loss(model.g_y.last(), model.g_d.last(), settings.direction,
                                      settings.eps0);
      result.structure_loss = reg.value;
      result.shrink_y = reg.shrink_y;
      result.shrink_d = reg.shrink_d;
    }
    result.total = result.label_loss + settings.lambda_r * result.structure_loss +
                   lambda_adv * result.domain_loss;
    return result;
  }

  // Label predictor upstream: CE on source rows, optionally the weight path on target rows.
  Matrix upstream_y(ms + mt, k);
  for (std::size_t m = 0; m < ms; ++m)
    for (std::size_t c = 0; c < k; ++c) upstream_y(m, c) = ce.grad(m, c);
  if (weights_track_predictor) {
    const double inv_batch = 1.0 / static_cast<double>(ms + mt);
    for (std::size_t m = 0; m < mt; ++m) {
      const auto p = target_probs.row(m);
      const auto losses = domain.branch_losses.row(ms + m);
      double mean = 0.0;
      for (std::size_t c = 0; c < k; ++c) mean += p[c] * losses[c];
      for (std::size_t c = 0; c < k; ++c)
        upstream_y(ms + m, c) = lambda_adv * inv_batch * p[c] * (losses[c] - mean);
    }
  }

  auto back_y = backward(model.g_y, trace_y, upstream_y);
  auto back_d = backward(model.g_d, trace_d, domain.grad);
  auto back_f_label = backward(model.g_f, trace_f, back_y.input_grad);
  auto back_f_reversed = backward(model.g_f, trace_f, grl_backward(back_d.input_grad, lambda_adv));

  result.update.f = back_f_label.grads;
  result.update.f += back_f_reversed.grads;
  result.update.y = back_y.grads;
  result.update.d = back_d.grads;

  if (settings.lambda_r > 0.0) {
    if (branches != k)
      throw DimensionError("structure regulariser needs a K-branch discriminator");
    const auto reg = structure_loss(model.g_y.last(), model.g_d.last(), settings.direction,
                                    settings.eps0);
    result.structure_loss = reg.value;
    result.shrink_y = reg.shrink_y;
    result.shrink_d = reg.shrink_d;
    result.update.y.layers.back() += reg.grad_wy * settings.lambda_r;
    result.update.d.layers.back() += reg.grad_wd * settings.lambda_r;
  }

  result.total = result.label_loss + settings.lambda_r * result.structure_loss +
                 lambda_adv * result.domain_loss;

  if (want_objective_gradient) {
    auto back_f_domain = backward(model.g_f, trace_f, back_d.input_grad);
    ModelGradients obj;
    obj.f = back_f_domain.grads;
    obj.f *= lambda_adv;
    obj.f += back_f_label.grads;
    obj.y = result.update.y;
    obj.d = back_d.grads;
    obj.d *= lambda_adv;
    if (settings.lambda_r > 0.0) {
      const auto reg = structure_loss(model.g_y.last(), model.g_d.last(), settings.direction,
                                      settings.eps0);
      obj.d.layers.back() += reg.grad_wd * settings.lambda_r;
    }
    result.objective = std::move(obj);
    result.feature_domain_identity = std::move(back_f_domain.grads);
  }
  return result;
}

}  // namespace

ObjectiveResult total_objective(const RadaModel& model, const SourceBatch& source,
                                const TargetBatch& target, const ObjectiveSettings& settings,
                                const std::optional<Matrix>& frozen_target_weights,
                                bool want_objective_gradient) {
  return evaluate_objective(model, source, target, settings, frozen_target_weights,
                            want_objective_gradient, false);
}

double objective_value(const RadaModel& model, const SourceBatch& source, const TargetBatch& target,
                       const ObjectiveSettings& settings,
                       const std::optional<Matrix>& frozen_target_weights) {
  return evaluate_objective(model, source, target, settings, frozen_target_weights, false, true).total;
}

double lambda_adv_schedule(double progress) {
  const double e = std::exp(-10.0 * progress);
  return (1.0 - e) / (1.0 + e);
}

double lr_schedule(double lr0, double progress, double alpha, double beta) {
  return lr0 / std::pow(1.0 + alpha * progress, beta);
}

}  // namespace rada
