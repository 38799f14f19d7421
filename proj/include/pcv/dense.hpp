#pragma once

// Small dense linear algebra used by the factor builders and by the
// definition-based oracles. Sized for matrices of at most a few thousand rows.

#include <cstddef>
#include <span>
#include <vector>

namespace pcv {

using Vector = std::vector<double>;

// Eigenvalues with |lambda| <= kPinvCutoff * max |lambda| are treated as zero
// in every pseudoinverse application.
inline constexpr double kPinvCutoff = 1e-12;

// Row-major dense matrix.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  static Matrix identity(std::size_t n);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

  double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const {
    return data_[i * cols_ + j];
  }

  std::span<double> row(std::size_t i) { return {data_.data() + i * cols_, cols_}; }
  std::span<const double> row(std::size_t i) const {
    return {data_.data() + i * cols_, cols_};
  }

  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

// Square matrix whose stored values are exactly symmetric.
class DenseSym {
 public:
  DenseSym() = default;
  explicit DenseSym(std::size_t n) : values_(n, n) {}
  // Throws InvalidArgument unless `m` is square and exactly symmetric.
  explicit DenseSym(Matrix m);

  std::size_t size() const { return values_.rows(); }
  double operator()(std::size_t i, std::size_t j) const { return values_(i, j); }
  void set(std::size_t i, std::size_t j, double v) {
    values_(i, j) = v;
    values_(j, i) = v;
  }
  const Matrix& matrix() const { return values_; }

 private:
  Matrix values_;
};

double dot(std::span<const double> a, std::span<const double> b);
double norm2(std::span<const double> a);
Vector matvec(const Matrix& a, std::span<const double> x);
Matrix multiply(const Matrix& a, const Matrix& b);
Matrix transpose(const Matrix& a);
double max_abs_diff(const Matrix& a, const Matrix& b);
double max_abs(const Matrix& a);

// Symmetric eigendecomposition, eigenvalues ascending. Column k of `vectors`
// is the eigenvector for values[k].
struct SymEigen {
  Vector values;
  Matrix vectors;
};

// Householder tridiagonalization followed by implicit QL.
SymEigen sym_eigen(const Matrix& a);

// Eigendecomposition of the symmetric tridiagonal matrix with the given
// diagonal and sub-diagonal (off_diag.size() == diag.size() - 1).
// With first_row_only, `vectors` holds just the first component of each
// eigenvector (a 1 x n matrix), which is all Gauss quadrature needs.
SymEigen tridiag_eigen(std::span<const double> diag,
                       std::span<const double> off_diag, bool first_row_only = false);

// Minimum-norm solver for a symmetric positive-semidefinite system. Uses a
// Cholesky factorization when every pivot is comfortably positive and falls
// back to an eigendecomposition with the pseudoinverse cutoff otherwise; on a
// nonsingular matrix both paths give the unique solution.
class PsdSolver {
 public:
  explicit PsdSolver(const Matrix& a);

  Vector solve(std::span<const double> b) const;
  bool used_cholesky() const { return cholesky_; }

 private:
  std::size_t n_ = 0;
  bool cholesky_ = false;
  Matrix factor_;  // Cholesky factor, or eigenvectors
  Vector scale_;   // inverse eigenvalues (zeroed below cutoff)
};

// Unit-lower-triangular L and nonnegative diagonal D with A = L D L^T for a
// positive-semidefinite A, processing pivots in index order. A pivot whose
// Schur complement is <= rel_tol * max diag(A) is recorded as exactly zero
// and its column of L is left as the unit vector.
struct LdlFactor {
  Matrix l;
  Vector d;
};
LdlFactor ldl_psd(const Matrix& a, double rel_tol);

}  // namespace pcv
