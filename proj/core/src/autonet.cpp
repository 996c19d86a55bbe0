#include "rada/autonet.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "rada/errors.hpp"

namespace rada {

namespace {

Matrix with_bias_column(const Matrix& x) {
  Matrix out(x.rows(), x.cols() + 1);
  for (std::size_t r = 0; r < x.rows(); ++r) {
    const auto src = x.row(r);
    auto dst = out.row(r);
    std::copy(src.begin(), src.end(), dst.begin());
    dst[x.cols()] = 1.0;
  }
  return out;
}

}  // namespace

std::size_t NetworkParams::input_width() const {
  return layers.empty() ? 0 : layers.front().rows() - 1;
}

std::size_t NetworkParams::output_width() const {
  return layers.empty() ? 0 : layers.back().cols();
}

std::size_t NetworkParams::parameter_count() const {
  std::size_t n = 0;
  for (const auto& w : layers) n += w.size();
  return n;
}

void NetworkParams::validate() const {
  if (layers.empty()) throw DimensionError("network has no layers");
  for (std::size_t l = 0; l < layers.size(); ++l) {
    if (layers[l].rows() < 2 || layers[l].cols() < 1)
      throw DimensionError("layer " + std::to_string(l) + " is degenerate");
    if (l > 0 && layers[l].rows() != layers[l - 1].cols() + 1) {
      throw DimensionError("layer " + std::to_string(l) + " expects " +
                           std::to_string(layers[l].rows() - 1) + " inputs but layer " +
                           std::to_string(l - 1) + " emits " +
                           std::to_string(layers[l - 1].cols()));
    }
  }
}

Gradients Gradients::zeros_like(const NetworkParams& params) {
  Gradients g;
  g.layers.reserve(params.layers.size());
  for (const auto& w : params.layers) g.layers.emplace_back(w.rows(), w.cols());
  return g;
}

Gradients& Gradients::operator+=(const Gradients& other) {
  if (layers.size() != other.layers.size()) throw DimensionError("gradient layer count mismatch");
  for (std::size_t l = 0; l < layers.size(); ++l) layers[l] += other.layers[l];
  return *this;
}

Gradients& Gradients::operator*=(double s) {
  for (auto& g : layers) g *= s;
  return *this;
}

double Gradients::max_abs() const {
  double m = 0.0;
  for (const auto& g : layers) m = std::max(m, rada::max_abs(g));
  return m;
}

bool Gradients::all_finite() const {
  return std::all_of(layers.begin(), layers.end(),
                     [](const Matrix& g) { return rada::all_finite(g); });
}

NetworkParams init_network(std::span<const std::size_t> widths, std::mt19937_64& rng) {
  if (widths.size() < 2) throw DimensionError("init_network: need at least input and output width");
  NetworkParams p;
  for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
    const std::size_t fan_in = widths[l];
    const std::size_t fan_out = widths[l + 1];
    if (fan_in == 0 || fan_out == 0) throw DimensionError("init_network: zero layer width");
    const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    std::uniform_real_distribution<double> dist(-bound, bound);
    Matrix w(fan_in + 1, fan_out);
    for (std::size_t r = 0; r < fan_in; ++r)
      for (std::size_t c = 0; c < fan_out; ++c) w(r, c) = dist(rng);
    p.layers.push_back(std::move(w));
  }
  return p;
}

ForwardTrace forward(const NetworkParams& params, const Matrix& x, Activation activation) {
  params.validate();
  if (x.cols() != params.input_width()) {
    throw DimensionError("forward: input has " + std::to_string(x.cols()) +
                         " features, network expects " + std::to_string(params.input_width()));
  }
  ForwardTrace trace;
  trace.activation = activation;
  trace.inputs.reserve(params.layers.size());
  trace.pre_activations.reserve(params.layers.size());

  Matrix a = x;
  for (std::size_t l = 0; l < params.layers.size(); ++l) {
    trace.inputs.push_back(with_bias_column(a));
    Matrix z = matmul(trace.inputs.back(), params.layers[l]);
    const bool hidden = l + 1 < params.layers.size();
    a = z;
    if (hidden && activation == Activation::relu) {
      for (double& v : a.values()) v = v > 0.0 ? v : 0.0;
    }
    trace.pre_activations.push_back(std::move(z));
  }
  trace.output = std::move(a);
  return trace;
}

BackwardResult backward(const NetworkParams& params, const ForwardTrace& trace,
                        const Matrix& upstream) {
  if (upstream.rows() != trace.output.rows() || upstream.cols() != trace.output.cols()) {
    throw DimensionError("backward: upstream shape does not match the traced output");
  }
  if (trace.inputs.size() != params.layers.size())
    throw DimensionError("backward: trace does not belong to these parameters");

  BackwardResult result{Gradients::zeros_like(params), Matrix()};
  Matrix delta = upstream;  // d loss / d z^[l]
  for (std::size_t l = params.layers.size(); l-- > 0;) {
    result.grads.layers[l] = matmul_tn(trace.inputs[l], delta);
    Matrix d_input_aug = matmul_nt(delta, params.layers[l]);
    Matrix d_input(d_input_aug.rows(), d_input_aug.cols() - 1);
    for (std::size_t r = 0; r < d_input.rows(); ++r)
      for (std::size_t c = 0; c < d_input.cols(); ++c) d_input(r, c) = d_input_aug(r, c);
    if (l > 0 && trace.activation == Activation::relu) {
      const Matrix& z_prev = trace.pre_activations[l - 1];
      for (std::size_t i = 0; i < d_input.size(); ++i)
        if (!(z_prev.values()[i] > 0.0)) d_input.values()[i] = 0.0;
    }
    delta = std::move(d_input);
  }
  result.input_grad = std::move(delta);
  return result;
}

Matrix softmax(const Matrix& logits) {
  Matrix p(logits.rows(), logits.cols());
  for (std::size_t r = 0; r < logits.rows(); ++r) {
    const auto z = logits.row(r);
    const double zmax = *std::max_element(z.begin(), z.end());
    double denom = 0.0;
    for (std::size_t k = 0; k < z.size(); ++k) {
      p(r, k) = std::exp(z[k] - zmax);
      denom += p(r, k);
    }
    for (std::size_t k = 0; k < z.size(); ++k) p(r, k) /= denom;
  }
  return p;
}

LossGrad softmax_ce_loss(const Matrix& logits, std::span<const int> labels) {
  if (labels.size() != logits.rows())
    throw DimensionError("softmax_ce_loss: label count does not match batch size");
  if (logits.rows() == 0) throw BatchError("softmax_ce_loss: empty batch");
  const auto k_count = static_cast<int>(logits.cols());
  LossGrad out{0.0, Matrix(logits.rows(), logits.cols())};
  const double inv_batch = 1.0 / static_cast<double>(logits.rows());
  for (std::size_t r = 0; r < logits.rows(); ++r) {
    const int y = labels[r];
    if (y < 0 || y >= k_count) {
      throw LabelError("label " + std::to_string(y) + " outside [0, " + std::to_string(k_count) +
                       ") at row " + std::to_string(r));
    }
    const auto z = logits.row(r);
    const double zmax = *std::max_element(z.begin(), z.end());
    double sum = 0.0;
    for (double v : z) sum += std::exp(v - zmax);
    const double log_norm = zmax + std::log(sum);
    out.loss += (log_norm - z[static_cast<std::size_t>(y)]) * inv_batch;
    for (std::size_t k = 0; k < z.size(); ++k) {
      const double prob = std::exp(z[k] - log_norm);
      out.grad(r, k) = (prob - (static_cast<int>(k) == y ? 1.0 : 0.0)) * inv_batch;
    }
  }
  return out;
}

ScalarLossGrad sigmoid_bce_loss(double logit, int domain_label) {
  if (!std::isfinite(logit)) throw Error("sigmoid_bce_loss: non-finite logit");
  const double y = domain_label != 0 ? 1.0 : 0.0;
  const double loss = std::log1p(std::exp(-std::abs(logit))) + std::max(logit, 0.0) - logit * y;
  // sigmoid without overflow
  const double sig = logit >= 0.0 ? 1.0 / (1.0 + std::exp(-logit))
                                  : std::exp(logit) / (1.0 + std::exp(logit));
  return {loss, sig - y};
}

Matrix grl_backward(const Matrix& upstream, double lambda_adv) {
  if (lambda_adv < 0.0) throw Error("grl_backward: lambda_adv must be non-negative");
  return upstream * (-lambda_adv);
}

Gradients finite_diff_grad(const std::function<double(const NetworkParams&)>& loss_fn,
                           const NetworkParams& params, double h) {
  if (!(h > 0.0)) throw Error("finite_diff_grad: step must be positive");
  Gradients g = Gradients::zeros_like(params);
  NetworkParams probe = params;
  for (std::size_t l = 0; l < params.layers.size(); ++l) {
    auto values = probe.layers[l].values();
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double saved = values[i];
      values[i] = saved + h;
      const double up = loss_fn(probe);
      values[i] = saved - h;
      const double down = loss_fn(probe);
      values[i] = saved;
      g.layers[l].values()[i] = (up - down) / (2.0 * h);
    }
  }
  return g;
}

}  // namespace rada
