#include "pcv/dense.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "pcv/error.hpp"

namespace pcv {

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

DenseSym::DenseSym(Matrix m) : values_(std::move(m)) {
  require(values_.rows() == values_.cols(), "DenseSym: matrix must be square");
  for (std::size_t i = 0; i < values_.rows(); ++i)
    for (std::size_t j = 0; j < i; ++j)
      require(values_(i, j) == values_(j, i),
              "DenseSym: matrix is not exactly symmetric");
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

Vector matvec(const Matrix& a, std::span<const double> x) {
  Vector y(a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) y[i] = dot(a.row(i), x);
  return y;
}

Matrix multiply(const Matrix& a, const Matrix& b) {
  Matrix c(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    auto ci = c.row(i);
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      if (aik == 0.0) continue;
      auto bk = b.row(k);
      for (std::size_t j = 0; j < b.cols(); ++j) ci[j] += aik * bk[j];
    }
  }
  return c;
}

Matrix transpose(const Matrix& a) {
  Matrix t(a.cols(), a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) t(j, i) = a(i, j);
  return t;
}

double max_abs_diff(const Matrix& a, const Matrix& b) {
  double m = 0.0;
  for (std::size_t k = 0; k < a.data().size(); ++k)
    m = std::max(m, std::abs(a.data()[k] - b.data()[k]));
  return m;
}

double max_abs(const Matrix& a) {
  double m = 0.0;
  for (double v : a.data()) m = std::max(m, std::abs(v));
  return m;
}

namespace {

// Householder reduction to tridiagonal form (JAMA tred2). On exit v holds the
// accumulated orthogonal transform, d the diagonal, e the sub-diagonal in
// e[1..n-1].
void tridiagonalize(Matrix& v, Vector& d, Vector& e) {
  const int n = static_cast<int>(v.rows());
  for (int j = 0; j < n; ++j) d[j] = v(n - 1, j);

  for (int i = n - 1; i > 0; --i) {
    double scale = 0.0;
    double h = 0.0;
    for (int k = 0; k < i; ++k) scale += std::abs(d[k]);
    if (scale == 0.0) {
      e[i] = d[i - 1];
      for (int j = 0; j < i; ++j) {
        d[j] = v(i - 1, j);
        v(i, j) = 0.0;
        v(j, i) = 0.0;
      }
    } else {
      for (int k = 0; k < i; ++k) {
        d[k] /= scale;
        h += d[k] * d[k];
      }
      double f = d[i - 1];
      double g = std::sqrt(h);
      if (f > 0) g = -g;
      e[i] = scale * g;
      h -= f * g;
      d[i - 1] = f - g;
      for (int j = 0; j < i; ++j) e[j] = 0.0;

      for (int j = 0; j < i; ++j) {
        f = d[j];
        v(j, i) = f;
        g = e[j] + v(j, j) * f;
        for (int k = j + 1; k <= i - 1; ++k) {
          g += v(k, j) * d[k];
          e[k] += v(k, j) * f;
        }
        e[j] = g;
      }
      f = 0.0;
      for (int j = 0; j < i; ++j) {
        e[j] /= h;
        f += e[j] * d[j];
      }
      const double hh = f / (h + h);
      for (int j = 0; j < i; ++j) e[j] -= hh * d[j];
      for (int j = 0; j < i; ++j) {
        f = d[j];
        g = e[j];
        for (int k = j; k <= i - 1; ++k) v(k, j) -= (f * e[k] + g * d[k]);
        d[j] = v(i - 1, j);
        v(i, j) = 0.0;
      }
    }
    d[i] = h;
  }

  for (int i = 0; i < n - 1; ++i) {
    v(n - 1, i) = v(i, i);
    v(i, i) = 1.0;
    const double h = d[i + 1];
    if (h != 0.0) {
      for (int k = 0; k <= i; ++k) d[k] = v(k, i + 1) / h;
      for (int j = 0; j <= i; ++j) {
        double g = 0.0;
        for (int k = 0; k <= i; ++k) g += v(k, i + 1) * v(k, j);
        for (int k = 0; k <= i; ++k) v(k, j) -= g * d[k];
      }
    }
    for (int k = 0; k <= i; ++k) v(k, i + 1) = 0.0;
  }
  for (int j = 0; j < n; ++j) {
    d[j] = v(n - 1, j);
    v(n - 1, j) = 0.0;
  }
  v(n - 1, n - 1) = 1.0;
  e[0] = 0.0;
}

// Implicit QL on a symmetric tridiagonal matrix (JAMA tql2), accumulating
// rotations into v. e uses the tridiagonalize() layout.
void tridiagonal_ql(Matrix& v, Vector& d, Vector& e) {
  const int n = static_cast<int>(d.size());
  for (int i = 1; i < n; ++i) e[i - 1] = e[i];
  e[n - 1] = 0.0;

  double f = 0.0;
  double tst1 = 0.0;
  const double eps = std::ldexp(1.0, -52);
  for (int l = 0; l < n; ++l) {
    tst1 = std::max(tst1, std::abs(d[l]) + std::abs(e[l]));
    int m = l;
    while (m < n) {
      if (std::abs(e[m]) <= eps * tst1) break;
      ++m;
    }
    if (m > l) {
      int iterations = 0;
      do {
        if (++iterations > 60)
          fail(ErrorCode::InvalidArgument, "tridiagonal QL did not converge");
        double g = d[l];
        double p = (d[l + 1] - g) / (2.0 * e[l]);
        double r = std::hypot(p, 1.0);
        if (p < 0) r = -r;
        d[l] = e[l] / (p + r);
        d[l + 1] = e[l] * (p + r);
        const double dl1 = d[l + 1];
        double h = g - d[l];
        for (int i = l + 2; i < n; ++i) d[i] -= h;
        f += h;

        p = d[m];
        double c = 1.0, c2 = 1.0, c3 = 1.0;
        const double el1 = e[l + 1];
        double s = 0.0, s2 = 0.0;
        for (int i = m - 1; i >= l; --i) {
          c3 = c2;
          c2 = c;
          s2 = s;
          g = c * e[i];
          h = c * p;
          r = std::hypot(p, e[i]);
          e[i + 1] = s * r;
          s = e[i] / r;
          c = p / r;
          p = c * d[i] - s * g;
          d[i + 1] = h + s * (c * g + s * d[i]);
          for (std::size_t k = 0; k < v.rows(); ++k) {
            h = v(k, i + 1);
            v(k, i + 1) = s * v(k, i) + c * h;
            v(k, i) = c * v(k, i) - s * h;
          }
        }
        p = -s * s2 * c3 * el1 * e[l] / dl1;
        e[l] = s * p;
        d[l] = c * p;
      } while (std::abs(e[l]) > eps * tst1);
    }
    d[l] += f;
    e[l] = 0.0;
  }
}

SymEigen sorted(Vector d, const Matrix& v) {
  const std::size_t n = d.size();
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(),
                   [&](std::size_t a, std::size_t b) { return d[a] < d[b]; });
  SymEigen out{Vector(n), Matrix(v.rows(), n)};
  for (std::size_t k = 0; k < n; ++k) {
    out.values[k] = d[idx[k]];
    for (std::size_t i = 0; i < v.rows(); ++i) out.vectors(i, k) = v(i, idx[k]);
  }
  return out;
}

}  // namespace

SymEigen sym_eigen(const Matrix& a) {
  require(a.rows() == a.cols(), "sym_eigen: matrix must be square");
  const std::size_t n = a.rows();
  if (n == 0) return {};
  Matrix v = a;
  Vector d(n), e(n);
  tridiagonalize(v, d, e);
  tridiagonal_ql(v, d, e);
  return sorted(std::move(d), v);
}

SymEigen tridiag_eigen(std::span<const double> diag,
                       std::span<const double> off_diag, bool first_row_only) {
  const std::size_t n = diag.size();
  if (n == 0) return {};
  require(off_diag.size() + 1 == n, "tridiag_eigen: size mismatch");
  Matrix v = Matrix::identity(n);
  if (first_row_only) {
    v = Matrix(1, n);
    v(0, 0) = 1.0;
  }
  Vector d(diag.begin(), diag.end());
  Vector e(n, 0.0);
  for (std::size_t i = 1; i < n; ++i) e[i] = off_diag[i - 1];
  tridiagonal_ql(v, d, e);
  return sorted(std::move(d), v);
}

PsdSolver::PsdSolver(const Matrix& a) : n_(a.rows()) {
  require(a.rows() == a.cols(), "PsdSolver: matrix must be square");
  if (n_ == 0) {
    cholesky_ = true;
    return;
  }
  double max_diag = 0.0;
  for (std::size_t i = 0; i < n_; ++i) max_diag = std::max(max_diag, a(i, i));

  // Cholesky attempt; pivots must stay well above the pseudoinverse cutoff so
  // that the solution agrees with the minimum-norm one.
  Matrix l(n_, n_);
  bool ok = max_diag > 0.0;
  for (std::size_t j = 0; ok && j < n_; ++j) {
    double s = a(j, j);
    for (std::size_t k = 0; k < j; ++k) s -= l(j, k) * l(j, k);
    if (!(s > 1e-10 * max_diag)) {
      ok = false;
      break;
    }
    const double ljj = std::sqrt(s);
    l(j, j) = ljj;
    for (std::size_t i = j + 1; i < n_; ++i) {
      double t = a(i, j);
      for (std::size_t k = 0; k < j; ++k) t -= l(i, k) * l(j, k);
      l(i, j) = t / ljj;
    }
  }
  if (ok) {
    cholesky_ = true;
    factor_ = std::move(l);
    return;
  }

  SymEigen eig = sym_eigen(a);
  double lmax = 0.0;
  for (double v : eig.values) lmax = std::max(lmax, std::abs(v));
  scale_.assign(n_, 0.0);
  for (std::size_t k = 0; k < n_; ++k)
    if (eig.values[k] > kPinvCutoff * lmax) scale_[k] = 1.0 / eig.values[k];
  factor_ = std::move(eig.vectors);
}

Vector PsdSolver::solve(std::span<const double> b) const {
  require(b.size() == n_, "PsdSolver::solve: size mismatch");
  Vector x(n_, 0.0);
  if (cholesky_) {
    for (std::size_t i = 0; i < n_; ++i) {
      double s = b[i];
      for (std::size_t k = 0; k < i; ++k) s -= factor_(i, k) * x[k];
      x[i] = s / factor_(i, i);
    }
    for (std::size_t ii = n_; ii-- > 0;) {
      double s = x[ii];
      for (std::size_t k = ii + 1; k < n_; ++k) s -= factor_(k, ii) * x[k];
      x[ii] = s / factor_(ii, ii);
    }
    return x;
  }
  for (std::size_t k = 0; k < n_; ++k) {
    if (scale_[k] == 0.0) continue;
    double c = 0.0;
    for (std::size_t i = 0; i < n_; ++i) c += factor_(i, k) * b[i];
    c *= scale_[k];
    for (std::size_t i = 0; i < n_; ++i) x[i] += c * factor_(i, k);
  }
  return x;
}

LdlFactor ldl_psd(const Matrix& a, double rel_tol) {
  require(a.rows() == a.cols(), "ldl_psd: matrix must be square");
  const std::size_t n = a.rows();
  double max_diag = 0.0;
  for (std::size_t i = 0; i < n; ++i) max_diag = std::max(max_diag, a(i, i));
  const double cutoff = rel_tol * max_diag;

  // Right-looking elimination on a working copy of the lower triangle.
  Matrix w = a;
  LdlFactor out{Matrix::identity(n), Vector(n, 0.0)};
  for (std::size_t j = 0; j < n; ++j) {
    const double pivot = w(j, j);
    if (!(pivot > cutoff)) continue;
    out.d[j] = pivot;
    for (std::size_t i = j + 1; i < n; ++i) out.l(i, j) = w(i, j) / pivot;
    for (std::size_t i = j + 1; i < n; ++i) {
      const double lij = out.l(i, j);
      if (lij == 0.0) continue;
      for (std::size_t k = j + 1; k <= i; ++k) w(i, k) -= lij * pivot * out.l(k, j);
    }
  }
  return out;
}

}  // namespace pcv
