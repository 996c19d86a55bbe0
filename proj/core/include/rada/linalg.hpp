#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <utility>
#include <vector>

namespace rada {

/// Dense row-major matrix of doubles.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  Matrix(std::initializer_list<std::initializer_list<double>> init);

  static Matrix identity(std::size_t n);
  static Matrix diagonal(std::span<const double> diag);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) noexcept { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const noexcept { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) noexcept { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const noexcept {
    return {data_.data() + r * cols_, cols_};
  }

  std::span<double> values() noexcept { return data_; }
  std::span<const double> values() const noexcept { return data_; }

  Matrix transpose() const;

  Matrix& operator+=(const Matrix& other);
  Matrix& operator-=(const Matrix& other);
  Matrix& operator*=(double s) noexcept;

  bool operator==(const Matrix& other) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

Matrix operator+(Matrix a, const Matrix& b);
Matrix operator-(Matrix a, const Matrix& b);
Matrix operator*(Matrix a, double s);
Matrix operator*(double s, Matrix a);

/// a * b with fixed left-to-right accumulation over the inner index.
Matrix matmul(const Matrix& a, const Matrix& b);
/// aᵀ * b without materialising the transpose.
Matrix matmul_tn(const Matrix& a, const Matrix& b);
/// a * bᵀ without materialising the transpose.
Matrix matmul_nt(const Matrix& a, const Matrix& b);

double trace(const Matrix& m);
double frobenius_norm(const Matrix& m);
double max_abs(const Matrix& m);
bool all_finite(const Matrix& m);
/// Largest |m(i,j) - m(j,i)|; throws DimensionError for non-square input.
double asymmetry(const Matrix& m);
/// (m + mᵀ) / 2
Matrix symmetrize(const Matrix& m);

/// Lower-triangular L with L Lᵀ equal to the factored matrix.
struct CholeskyFactor {
  Matrix lower;

  std::size_t dim() const noexcept { return lower.rows(); }
  /// 2 Σ ln L_ii
  double logdet() const;
  /// Solves (L Lᵀ) X = b column by column.
  Matrix solve(const Matrix& b) const;
  Matrix reconstruct() const;
};

inline constexpr double kSymmetryTolerance = 1e-9;
inline constexpr double kPivotThreshold = 1e-12;

/// Throws NotPositiveDefinite (carrying the pivot index) when a pivot is <= 1e-12.
CholeskyFactor cholesky(const Matrix& m);
double logdet_pd(const Matrix& m);
Matrix inverse_pd(const Matrix& m);

struct ShrinkResult {
  Matrix matrix;
  double shrink = 0.0;
};

inline constexpr int kMaxShrinkEscalations = 12;

/// Returns m + c I for the smallest c in {0, eps0, 10 eps0, ...} that admits a
/// Cholesky factorisation. Throws ShrinkageFailed after 12 escalations.
ShrinkResult shrink_to_pd(const Matrix& m, double eps0);

struct SymmetricEigen {
  std::vector<double> values;  // ascending
  Matrix vectors;              // column j pairs with values[j]
};

/// Cyclic Jacobi eigen-decomposition of a symmetric matrix.
SymmetricEigen symmetric_eigen(const Matrix& m, double tol = 1e-15, int max_sweeps = 100);

}  // namespace rada
