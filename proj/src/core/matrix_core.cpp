#include "pcv/matrix_core.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "pcv/error.hpp"

namespace pcv {

PivotOrder::PivotOrder(std::vector<std::size_t> perm) : perm_(std::move(perm)) {
  const std::size_t n = perm_.size();
  pos_.assign(n, n);
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t i = perm_[k];
    require(i < n && pos_[i] == n, "PivotOrder: not a permutation");
    pos_[i] = k;
  }
}

PivotOrder PivotOrder::identity(std::size_t n) {
  std::vector<std::size_t> p(n);
  std::iota(p.begin(), p.end(), 0);
  return PivotOrder(std::move(p));
}

PivotOrder PivotOrder::from_prefix(std::size_t n,
                                   std::span<const std::size_t> pivots) {
  std::vector<std::size_t> p(pivots.begin(), pivots.end());
  std::vector<char> used(n, 0);
  for (std::size_t u : pivots) {
    require(u < n && !used[u], "PivotOrder::from_prefix: invalid pivot list");
    used[u] = 1;
  }
  for (std::size_t i = 0; i < n; ++i)
    if (!used[i]) p.push_back(i);
  return PivotOrder(std::move(p));
}

SparsityPattern::SparsityPattern(std::vector<std::vector<std::size_t>> sets)
    : sets_(std::move(sets)) {
  for (std::size_t i = 0; i < sets_.size(); ++i) {
    const auto& s = sets_[i];
    for (std::size_t k = 0; k < s.size(); ++k) {
      require(s[k] < i, "SparsityPattern: row " + std::to_string(i) +
                            " references a column that is not below it");
      require(k == 0 || s[k - 1] < s[k],
              "SparsityPattern: row " + std::to_string(i) +
                  " is not strictly increasing");
    }
  }
}

SparsityPattern SparsityPattern::empty(std::size_t n) {
  return SparsityPattern(std::vector<std::vector<std::size_t>>(n));
}

SparsityPattern SparsityPattern::full(std::size_t n) {
  std::vector<std::vector<std::size_t>> sets(n);
  for (std::size_t i = 0; i < n; ++i) {
    sets[i].resize(i);
    std::iota(sets[i].begin(), sets[i].end(), 0);
  }
  return SparsityPattern(std::move(sets));
}

std::size_t SparsityPattern::nonzeros() const {
  std::size_t total = 0;
  for (const auto& s : sets_) total += s.size();
  return total;
}

PermutedOracle::PermutedOracle(const EntryOracle& base, const PivotOrder& order)
    : EntryOracle(base.size()), base_(base), order_(order) {
  require(order.size() == base.size(), "PermutedOracle: size mismatch");
}

double PermutedOracle::evaluate(std::size_t i, std::size_t j) const {
  return base_.peek(order_[i], order_[j]);
}

double PermutedOracle::lookup(std::size_t i, std::size_t j) const {
  return base_.entry(order_[i], order_[j]);
}

VecchiaFactor identity_factor(std::size_t n) {
  return VecchiaFactor{PivotOrder::identity(n), SparsityPattern::empty(n),
                       std::vector<Vector>(n), Vector(n, 1.0)};
}

LocalSystem gather_local_system(const EntryOracle& a, std::size_t i,
                                std::span<const std::size_t> s) {
  const std::size_t k = s.size();
  LocalSystem sys{Matrix(k, k), Vector(k), 0.0};
  for (std::size_t p = 0; p < k; ++p) {
    for (std::size_t q = p; q < k; ++q) {
      const double v = a.entry(s[p], s[q]);
      sys.m(p, q) = v;
      sys.m(q, p) = v;
    }
    sys.v[p] = a.entry(s[p], i);
  }
  sys.alpha = a.entry(i, i);
  return sys;
}

double weighted_distance_sq(const EntryOracle& a, std::size_t i,
                            std::span<const std::size_t> s) {
  require(i < a.size(), "weighted_distance_sq: index out of range");
  require(std::find(s.begin(), s.end(), i) == s.end(),
          "weighted_distance_sq: i must not belong to S");
  LocalSystem sys = gather_local_system(a, i, s);
  if (s.empty()) return std::max(sys.alpha, 0.0);
  const Vector x = PsdSolver(sys.m).solve(sys.v);
  return std::max(sys.alpha - dot(x, sys.v), 0.0);
}

namespace {

// Rows of the pattern as (column, coefficient) pairs make C x and C^T x cheap.
void apply_c(const VecchiaFactor& f, std::span<const double> y, Vector& out) {
  const std::size_t n = f.size();
  out.assign(y.begin(), y.end());
  for (std::size_t i = 0; i < n; ++i) {
    const auto& cols = f.pattern[i];
    const auto& c = f.rows[i];
    double s = y[i];
    for (std::size_t k = 0; k < cols.size(); ++k) s += c[k] * y[cols[k]];
    out[i] = s;
  }
}

void apply_c_transpose(const VecchiaFactor& f, std::span<const double> w,
                       Vector& out) {
  const std::size_t n = f.size();
  out.assign(w.begin(), w.end());
  for (std::size_t i = 0; i < n; ++i) {
    const auto& cols = f.pattern[i];
    const auto& c = f.rows[i];
    for (std::size_t k = 0; k < cols.size(); ++k) out[cols[k]] += c[k] * w[i];
  }
}

// Solve C u = z by forward substitution.
void solve_c(const VecchiaFactor& f, Vector& u) {
  for (std::size_t i = 0; i < f.size(); ++i) {
    const auto& cols = f.pattern[i];
    const auto& c = f.rows[i];
    double s = u[i];
    for (std::size_t k = 0; k < cols.size(); ++k) s -= c[k] * u[cols[k]];
    u[i] = s;
  }
}

// Solve C^T w = y by backward substitution (column-oriented scatter).
void solve_c_transpose(const VecchiaFactor& f, Vector& w) {
  for (std::size_t i = f.size(); i-- > 0;) {
    const double wi = w[i];
    if (wi == 0.0) continue;
    const auto& cols = f.pattern[i];
    const auto& c = f.rows[i];
    for (std::size_t k = 0; k < cols.size(); ++k) w[cols[k]] -= c[k] * wi;
  }
}

double diag_cutoff(const Vector& d) {
  double m = 0.0;
  for (double v : d) m = std::max(m, v);
  return kPinvCutoff * m;
}

}  // namespace

Vector factor_solve(const VecchiaFactor& f, std::span<const double> b) {
  const std::size_t n = f.size();
  require(b.size() == n, "factor_solve: size mismatch");
  Vector y(n);
  for (std::size_t k = 0; k < n; ++k) y[k] = b[f.order[k]];
  Vector z;
  apply_c(f, y, z);
  const double cut = diag_cutoff(f.diag);
  for (std::size_t k = 0; k < n; ++k)
    z[k] = f.diag[k] > cut ? z[k] / f.diag[k] : 0.0;
  Vector u;
  apply_c_transpose(f, z, u);
  Vector x(n);
  for (std::size_t k = 0; k < n; ++k) x[f.order[k]] = u[k];
  return x;
}

Vector factor_matvec(const VecchiaFactor& f, std::span<const double> v) {
  const std::size_t n = f.size();
  require(v.size() == n, "factor_matvec: size mismatch");
  Vector w(n);
  for (std::size_t k = 0; k < n; ++k) w[k] = v[f.order[k]];
  solve_c_transpose(f, w);
  for (std::size_t k = 0; k < n; ++k) w[k] *= f.diag[k];
  solve_c(f, w);
  Vector x(n);
  for (std::size_t k = 0; k < n; ++k) x[f.order[k]] = w[k];
  return x;
}

Vector factor_matvec(const PartialCholeskyFactor& f, std::span<const double> v) {
  const std::size_t n = f.size();
  require(v.size() == n, "factor_matvec: size mismatch");
  Vector t(f.rank, 0.0);
  for (std::size_t k = 0; k < n; ++k) {
    const double vk = v[f.order[k]];
    for (std::size_t j = 0; j < f.rank; ++j) t[j] += f.l(k, j) * vk;
  }
  for (std::size_t j = 0; j < f.rank; ++j) t[j] *= f.d[j];
  Vector x(n, 0.0);
  for (std::size_t k = 0; k < n; ++k) {
    double s = 0.0;
    for (std::size_t j = 0; j < f.rank; ++j) s += f.l(k, j) * t[j];
    x[f.order[k]] = s;
  }
  return x;
}

DenseSym reconstruct_dense(const PartialCholeskyFactor& f) {
  const std::size_t n = f.size();
  DenseSym out(n);
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = 0; b <= a; ++b) {
      double s = 0.0;
      for (std::size_t j = 0; j < f.rank; ++j) s += f.l(a, j) * f.d[j] * f.l(b, j);
      out.set(f.order[a], f.order[b], s);
    }
  }
  return out;
}

DenseSym reconstruct_dense(const VecchiaFactor& f) {
  const std::size_t n = f.size();
  // Column k of X = C^{-1} by forward substitution on e_k; X is unit lower
  // triangular, so the permuted approximation is X D X^T.
  Matrix x(n, n);
  Vector col(n);
  for (std::size_t k = 0; k < n; ++k) {
    std::fill(col.begin(), col.end(), 0.0);
    col[k] = 1.0;
    solve_c(f, col);
    for (std::size_t i = 0; i < n; ++i) x(i, k) = col[i];
  }
  DenseSym out(n);
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = 0; b <= a; ++b) {
      double s = 0.0;
      for (std::size_t k = 0; k <= b; ++k) s += x(a, k) * f.diag[k] * x(b, k);
      out.set(f.order[a], f.order[b], s);
    }
  }
  return out;
}

Matrix materialize(const EntryOracle& a) {
  const std::size_t n = a.size();
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j <= i; ++j) {
      const double v = a.entry(i, j);
      m(i, j) = v;
      m(j, i) = v;
    }
  return m;
}

Matrix materialize_uncounted(const EntryOracle& a) {
  const std::size_t n = a.size();
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j <= i; ++j) {
      const double v = a.peek(i, j);
      m(i, j) = v;
      m(j, i) = v;
    }
  return m;
}

}  // namespace pcv
