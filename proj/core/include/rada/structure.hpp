#pragma once

#include <cstddef>
#include <string_view>

#include "rada/linalg.hpp"

namespace rada {

/// Inter-class precision matrix Ω (K x K, symmetric positive definite).
struct PrecisionMatrix {
  Matrix omega;
  double shrink_used = 0.0;  // identity multiple added to WᵀW before inversion

  std::size_t classes() const noexcept { return omega.rows(); }
};

/// Which KL discrepancy aligns the two structures.
///   d_to_y: D_KL(Ω_y || Ω_d), trained with the trace of W_y against (W_dᵀW_d)⁻¹
///   y_to_d: D_KL(Ω_d || Ω_y), trained with the trace of W_d against (W_yᵀW_y)⁻¹
enum class StructureDirection { d_to_y, y_to_d };

std::string_view to_string(StructureDirection dir) noexcept;
/// Accepts "d2y"/"d_to_y" and "y2d"/"y_to_d"; throws ConfigError otherwise.
StructureDirection parse_direction(std::string_view text);

inline constexpr double kDefaultShrinkEps = 1e-6;

/// Closed-form maximiser of the Gaussian row likelihood of W:
///   Ω = d (WᵀW + cI)⁻¹, d = row count of W (bias row included).
PrecisionMatrix precision_from_weights(const Matrix& w_last, double eps0 = kDefaultShrinkEps);

/// -d logdet(Ω) + Tr(W Ω Wᵀ)
double precision_objective(const Matrix& omega, const Matrix& w_last);

struct OracleOptions {
  double grad_tolerance = 1e-8;
  std::size_t max_steps = 50'000;
  double eigen_floor = 1e-8;
};

struct OracleResult {
  PrecisionMatrix precision;
  std::size_t steps = 0;
  double grad_norm = 0.0;
};

/// Iterative reference solution of the same likelihood problem: projected
/// gradient descent over the PD cone (eigenvalue clipping), started from I,
/// with Barzilai-Borwein step lengths and a non-monotone Armijo safeguard.
/// Shares no code with precision_from_weights beyond matrix products.
/// Throws OracleDidNotConverge.
OracleResult precision_oracle(const Matrix& w_last, const OracleOptions& options = {});

/// Exact Gaussian KL between the precision matrices, in the chosen direction:
/// d_to_y evaluates D(a || b), y_to_d evaluates D(b || a), where
///   D(p || q) = Tr(p⁻¹ q) - (logdet q - logdet p) - K.
/// Pass a = Ω_y and b = Ω_d.
double kl_precision(const PrecisionMatrix& a, const PrecisionMatrix& b, StructureDirection dir);

struct StructureLoss {
  double value = 0.0;
  Matrix grad_wy;
  Matrix grad_wd;
  double shrink_y = 0.0;
  double shrink_d = 0.0;

  bool shrunk() const noexcept { return shrink_y > 0.0 || shrink_d > 0.0; }
};

/// Relationship regulariser on the two output layers, in the training form
/// (additive constants and K omitted):
///   d_to_y: Tr(W_y (W_dᵀW_d)⁻¹ W_yᵀ) - (d_y/d_d) [logdet(W_yᵀW_y) - logdet(W_dᵀW_d)]
///   y_to_d: Tr(W_d (W_yᵀW_y)⁻¹ W_dᵀ) - (d_d/d_y) [logdet(W_dᵀW_d) - logdet(W_yᵀW_y)]
/// Gram matrices that need a factorisation go through shrink_to_pd, and the
/// same shifted matrices are used for the value and the gradients.
StructureLoss structure_loss(const Matrix& w_y, const Matrix& w_d, StructureDirection dir,
                             double eps0 = kDefaultShrinkEps);

/// ρ_ij = -ω_ij / sqrt(ω_ii ω_jj); the diagonal is reported as 1.
Matrix partial_correlations(const PrecisionMatrix& omega);
Matrix partial_correlations(const Matrix& omega);

}  // namespace rada
