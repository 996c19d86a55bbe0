#include "rada/structure.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <string>

#include "rada/errors.hpp"

namespace rada {

std::string_view to_string(StructureDirection dir) noexcept {
  return dir == StructureDirection::d_to_y ? "d2y" : "y2d";
}

StructureDirection parse_direction(std::string_view text) {
  if (text == "d2y" || text == "d_to_y") return StructureDirection::d_to_y;
  if (text == "y2d" || text == "y_to_d") return StructureDirection::y_to_d;
  throw ConfigError("direction", "unknown value '" + std::string(text) + "' (valid: d2y, y2d)");
}

PrecisionMatrix precision_from_weights(const Matrix& w_last, double eps0) {
  if (w_last.rows() < 1 || w_last.cols() < 2) {
    throw DimensionError("precision_from_weights: need at least one row and two classes, got " +
                         std::to_string(w_last.rows()) + "x" + std::to_string(w_last.cols()));
  }
  const auto shrunk = shrink_to_pd(matmul_tn(w_last, w_last), eps0);
  Matrix omega = inverse_pd(shrunk.matrix);
  omega *= static_cast<double>(w_last.rows());
  return {std::move(omega), shrunk.shrink};
}

double precision_objective(const Matrix& omega, const Matrix& w_last) {
  const double d = static_cast<double>(w_last.rows());
  return -d * logdet_pd(omega) + trace(matmul(matmul(w_last, omega), w_last.transpose()));
}

namespace {

// Everything below in this block is the oracle; it deliberately avoids the
// Cholesky-based routines used by the closed form.

Matrix from_eigen(const SymmetricEigen& eig, double (*map)(double, double), double arg) {
  const std::size_t n = eig.values.size();
  Matrix out(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      double acc = 0.0;
      for (std::size_t k = 0; k < n; ++k)
        acc += eig.vectors(i, k) * map(eig.values[k], arg) * eig.vectors(j, k);
      out(i, j) = acc;
    }
  return symmetrize(out);
}

double clip_value(double v, double floor) { return std::max(v, floor); }
double reciprocal(double v, double) { return 1.0 / v; }

Matrix project_pd(const Matrix& m, double floor) {
  return from_eigen(symmetric_eigen(m), clip_value, floor);
}

double frob_dot(const Matrix& a, const Matrix& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a.values()[i] * b.values()[i];
  return s;
}

struct OracleState {
  Matrix omega;
  SymmetricEigen eig;
  double objective = 0.0;
  Matrix grad;
};

OracleState evaluate_oracle(Matrix omega, const Matrix& gram, double d) {
  OracleState s{std::move(omega), {}, 0.0, {}};
  s.eig = symmetric_eigen(s.omega);
  double logdet = 0.0;
  for (double lambda : s.eig.values) {
    if (!(lambda > 0.0)) {
      s.objective = std::numeric_limits<double>::infinity();
      return s;
    }
    logdet += std::log(lambda);
  }
  s.objective = -d * logdet + frob_dot(s.omega, gram);
  s.grad = symmetrize(from_eigen(s.eig, reciprocal, 0.0) * (-d) + gram);
  return s;
}

}  // namespace

OracleResult precision_oracle(const Matrix& w_last, const OracleOptions& options) {
  if (w_last.cols() < 2) throw DimensionError("precision_oracle: need at least two classes");
  const double d = static_cast<double>(w_last.rows());
  const Matrix gram = symmetrize(matmul_tn(w_last, w_last));
  const std::size_t k = gram.rows();

  constexpr std::size_t kMemory = 10;
  constexpr double kArmijo = 1e-4;

  OracleState cur = evaluate_oracle(Matrix::identity(k), gram, d);
  std::deque<double> history{cur.objective};
  double step = 1.0 / std::max(frobenius_norm(cur.grad), 1.0);

  std::size_t it = 0;
  double gnorm = frobenius_norm(cur.grad);
  for (; it < options.max_steps && gnorm > options.grad_tolerance; ++it) {
    const Matrix target = project_pd(cur.omega - step * cur.grad, options.eigen_floor);
    const Matrix dir = target - cur.omega;
    const double slope = frob_dot(cur.grad, dir);
    const double reference = *std::max_element(history.begin(), history.end());

    double t = 1.0;
    OracleState next = evaluate_oracle(cur.omega + t * dir, gram, d);
    int backtracks = 0;
    while (!(next.objective <= reference + kArmijo * t * slope) && backtracks < 60) {
      t *= 0.5;
      next = evaluate_oracle(cur.omega + t * dir, gram, d);
      ++backtracks;
    }
    if (!std::isfinite(next.objective)) break;

    const Matrix s = next.omega - cur.omega;
    const Matrix y = next.grad - cur.grad;
    const double sy = frob_dot(s, y);
    step = sy > 0.0 ? std::clamp(frob_dot(s, s) / sy, 1e-12, 1e12) : 1.0;

    cur = std::move(next);
    history.push_back(cur.objective);
    if (history.size() > kMemory) history.pop_front();
    gnorm = frobenius_norm(cur.grad);
  }

  if (gnorm > options.grad_tolerance) throw OracleDidNotConverge(gnorm, it);
  return {PrecisionMatrix{std::move(cur.omega), 0.0}, it, gnorm};
}

double kl_precision(const PrecisionMatrix& a, const PrecisionMatrix& b, StructureDirection dir) {
  if (a.omega.rows() != b.omega.rows() || a.omega.cols() != b.omega.cols())
    throw DimensionError("kl_precision: class counts differ");
  const PrecisionMatrix& p = dir == StructureDirection::d_to_y ? a : b;
  const PrecisionMatrix& q = dir == StructureDirection::d_to_y ? b : a;
  const auto chol_p = cholesky(p.omega);
  const auto chol_q = cholesky(q.omega);
  const double k = static_cast<double>(p.omega.rows());
  return trace(chol_p.solve(q.omega)) - (chol_q.logdet() - chol_p.logdet()) - k;
}

StructureLoss structure_loss(const Matrix& w_y, const Matrix& w_d, StructureDirection dir,
                             double eps0) {
  if (w_y.cols() != w_d.cols())
    throw DimensionError("structure_loss: label predictor and discriminator class counts differ");
  if (w_y.cols() < 2) throw DimensionError("structure_loss: need at least two classes");

  // Written for the d_to_y form; y_to_d swaps the roles of the two heads.
  const bool d_to_y = dir == StructureDirection::d_to_y;
  const Matrix& w_p = d_to_y ? w_y : w_d;  // appears in the trace
  const Matrix& w_q = d_to_y ? w_d : w_y;  // appears inverted
  const double ratio = static_cast<double>(w_p.rows()) / static_cast<double>(w_q.rows());

  const Matrix gram_p = matmul_tn(w_p, w_p);
  const auto shrunk_p = shrink_to_pd(gram_p, eps0);
  const auto shrunk_q = shrink_to_pd(matmul_tn(w_q, w_q), eps0);
  const auto chol_p = cholesky(shrunk_p.matrix);
  const auto chol_q = cholesky(shrunk_q.matrix);
  const Matrix p_inv = symmetrize(chol_p.solve(Matrix::identity(gram_p.rows())));
  const Matrix q_inv = symmetrize(chol_q.solve(Matrix::identity(gram_p.rows())));

  const Matrix q_inv_gram_p = matmul(q_inv, gram_p);
  const double value = trace(q_inv_gram_p) - ratio * (chol_p.logdet() - chol_q.logdet());

  // d/dW_p: 2 W_p Q⁻¹ - 2 r W_p P⁻¹
  Matrix grad_p = matmul(w_p, q_inv) * 2.0 - matmul(w_p, p_inv) * (2.0 * ratio);
  // d/dW_q: -2 W_q Q⁻¹ Gram_p Q⁻¹ + 2 r W_q Q⁻¹
  Matrix grad_q = matmul(w_q, matmul(q_inv_gram_p, q_inv)) * -2.0 + matmul(w_q, q_inv) * (2.0 * ratio);

  StructureLoss out;
  out.value = value;
  if (d_to_y) {
    out.grad_wy = std::move(grad_p);
    out.grad_wd = std::move(grad_q);
    out.shrink_y = shrunk_p.shrink;
    out.shrink_d = shrunk_q.shrink;
  } else {
    out.grad_wd = std::move(grad_p);
    out.grad_wy = std::move(grad_q);
    out.shrink_d = shrunk_p.shrink;
    out.shrink_y = shrunk_q.shrink;
  }
  return out;
}

Matrix partial_correlations(const Matrix& omega) {
  if (omega.rows() != omega.cols()) throw DimensionError("partial_correlations: not square");
  const std::size_t k = omega.rows();
  Matrix rho(k, k);
  for (std::size_t i = 0; i < k; ++i) {
    rho(i, i) = 1.0;
    for (std::size_t j = i + 1; j < k; ++j) {
      const double v = -omega(i, j) / std::sqrt(omega(i, i) * omega(j, j));
      rho(i, j) = v;
      rho(j, i) = v;
    }
  }
  return rho;
}

Matrix partial_correlations(const PrecisionMatrix& omega) {
  return partial_correlations(omega.omega);
}

}  // namespace rada
