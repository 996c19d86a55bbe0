#pragma once

#include <cstddef>
#include <functional>
#include <random>
#include <span>
#include <vector>

#include "rada/linalg.hpp"

namespace rada {

enum class Activation { relu, identity };

/// Layer weight matrices, layer l sized (fan_in + 1) x fan_out. The last row of
/// each matrix is the bias.
struct NetworkParams {
  std::vector<Matrix> layers;

  std::size_t input_width() const;
  std::size_t output_width() const;
  std::size_t parameter_count() const;
  /// The output layer, including its bias row.
  const Matrix& last() const { return layers.back(); }
  Matrix& last() { return layers.back(); }

  /// Throws DimensionError if adjacent layers do not chain.
  void validate() const;

  bool operator==(const NetworkParams&) const = default;
};

/// Per-layer gradients, shaped exactly like the NetworkParams they belong to.
struct Gradients {
  std::vector<Matrix> layers;

  static Gradients zeros_like(const NetworkParams& params);

  Gradients& operator+=(const Gradients& other);
  Gradients& operator*=(double s);
  bool operator==(const Gradients&) const = default;
  double max_abs() const;
  bool all_finite() const;
};

/// Records everything a backward pass needs.
struct ForwardTrace {
  std::vector<Matrix> inputs;           // a^[l-1] with a trailing constant-1 column
  std::vector<Matrix> pre_activations;  // z^[l]
  Matrix output;                        // raw output of the final layer
  Activation activation = Activation::relu;
};

/// Glorot-uniform weights, zero bias rows. `widths` lists input width, hidden
/// widths and output width.
NetworkParams init_network(std::span<const std::size_t> widths, std::mt19937_64& rng);

/// Hidden layers apply `activation`; the final layer emits raw logits.
ForwardTrace forward(const NetworkParams& params, const Matrix& x,
                     Activation activation = Activation::relu);

struct BackwardResult {
  Gradients grads;
  Matrix input_grad;
};

BackwardResult backward(const NetworkParams& params, const ForwardTrace& trace,
                        const Matrix& upstream);

struct LossGrad {
  double loss = 0.0;
  Matrix grad;
};

/// Row-wise softmax with max shift.
Matrix softmax(const Matrix& logits);

/// Batch-mean softmax cross entropy and its gradient w.r.t. the logits.
LossGrad softmax_ce_loss(const Matrix& logits, std::span<const int> labels);

struct ScalarLossGrad {
  double loss = 0.0;
  double grad = 0.0;
};

/// log(1 + exp(-|z|)) + max(z, 0) - z * label
ScalarLossGrad sigmoid_bce_loss(double logit, int domain_label);

/// Gradient reversal: identity forward, -lambda * upstream backward.
Matrix grl_backward(const Matrix& upstream, double lambda_adv);

/// Central differences (f(θ+h) - f(θ-h)) / 2h for every scalar parameter.
Gradients finite_diff_grad(const std::function<double(const NetworkParams&)>& loss_fn,
                           const NetworkParams& params, double h);

}  // namespace rada
