#include "pcv/kaporin.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "pcv/error.hpp"

namespace pcv {

namespace {

constexpr double kRangeCutoff = 1e-10;
constexpr double kRangeTol = 1e-8;

struct RangeInfo {
  SymEigen eig;
  std::size_t first = 0;  // eigenvalues at index >= first are in the range
  double lambda_max = 0.0;
};

RangeInfo range_of(const Matrix& m) {
  RangeInfo info{sym_eigen(m)};
  const Vector& v = info.eig.values;
  for (double x : v) info.lambda_max = std::max(info.lambda_max, std::abs(x));
  const double cut = kRangeCutoff * info.lambda_max;
  info.first = v.size();
  while (info.first > 0 && v[info.first - 1] > cut) --info.first;
  return info;
}

Matrix projector(const RangeInfo& info) {
  const std::size_t n = info.eig.vectors.rows();
  Matrix p(n, n);
  for (std::size_t k = info.first; k < n; ++k)
    for (std::size_t i = 0; i < n; ++i) {
      const double vi = info.eig.vectors(i, k);
      for (std::size_t j = 0; j < n; ++j) p(i, j) += vi * info.eig.vectors(j, k);
    }
  return p;
}

KaporinReport infinite(std::size_t rank) {
  KaporinReport r;
  r.finite = false;
  r.log_kappa = std::numeric_limits<double>::infinity();
  r.rank = rank;
  r.trace_ratio = std::numeric_limits<double>::infinity();
  return r;
}

}  // namespace

KaporinReport kappa_eigen_oracle(const DenseSym& a, const DenseSym& ahat) {
  const std::size_t n = a.size();
  require(ahat.size() == n, "kappa_eigen_oracle: size mismatch");
  if (n == 0) return {};
  const RangeInfo ra = range_of(a.matrix());
  const RangeInfo rh = range_of(ahat.matrix());
  const std::size_t rank = n - ra.first;
  if (rank != n - rh.first) return infinite(rank);

  Matrix diff = projector(ra);
  const Matrix ph = projector(rh);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) diff(i, j) -= ph(i, j);
  double gap = 0.0;
  for (double x : sym_eigen(diff).values) gap = std::max(gap, std::abs(x));
  if (gap > kRangeTol) return infinite(rank);
  if (rank == 0) return {};

  // H = Ahat^{+1/2}, then the nonzero spectrum of H A H equals that of A Ahat^+.
  Matrix h(n, n);
  for (std::size_t k = rh.first; k < n; ++k) {
    const double s = 1.0 / std::sqrt(rh.eig.values[k]);
    for (std::size_t i = 0; i < n; ++i) {
      const double vi = rh.eig.vectors(i, k) * s;
      for (std::size_t j = 0; j < n; ++j) h(i, j) += vi * rh.eig.vectors(j, k);
    }
  }
  Matrix b = multiply(multiply(h, a.matrix()), h);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < i; ++j) {
      const double s = 0.5 * (b(i, j) + b(j, i));
      b(i, j) = s;
      b(j, i) = s;
    }
  const Vector lam = sym_eigen(b).values;
  double sum = 0.0, logs = 0.0;
  for (std::size_t k = n - rank; k < n; ++k) {
    if (!(lam[k] > 0.0)) return infinite(rank);
    sum += lam[k];
    logs += std::log(lam[k]);
  }
  KaporinReport rep;
  rep.rank = rank;
  rep.trace_ratio = sum / static_cast<double>(rank);
  rep.log_kappa = static_cast<double>(rank) * std::log(rep.trace_ratio) - logs;
  return rep;
}

KaporinReport kappa_from_factor(const EntryOracle& a, const VecchiaFactor& factor,
                                const KappaOptions& opts) {
  const std::size_t n = a.size();
  require(factor.size() == n, "kappa_from_factor: size mismatch");
  require(n <= opts.max_dense_n,
          "kappa_from_factor: n = " + std::to_string(n) +
              " exceeds the dense limit; compare against a reference factor instead");
  PermutedOracle permuted(a, factor.order);
  const Matrix at = materialize_uncounted(permuted);
  double scale = 0.0;
  for (std::size_t i = 0; i < n; ++i) scale = std::max(scale, at(i, i));
  const double cut = opts.zero_tol * scale;
  const LdlFactor exact = ldl_psd(at, opts.zero_tol);

  KaporinReport rep;
  rep.per_row_log_terms.assign(n, 0.0);
  double trace = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = exact.d[i];
    const double dhat = factor.diag[i];
    if (!(d > cut)) {
      ++rep.excluded_rows;
      if (dhat > cut) {
        KaporinReport inf = infinite(n - rep.excluded_rows);
        inf.per_row_log_terms = std::move(rep.per_row_log_terms);
        inf.excluded_rows = rep.excluded_rows;
        return inf;
      }
      continue;
    }
    if (!(dhat > 0.0)) {
      KaporinReport inf = infinite(0);
      inf.per_row_log_terms = std::move(rep.per_row_log_terms);
      return inf;
    }
    rep.per_row_log_terms[i] = std::log(dhat / d);
    rep.log_kappa += rep.per_row_log_terms[i];

    // (c_i A~ c_i^T) / Dhat(i,i), with c_i the sparse row of C including its unit.
    const auto& cols = factor.pattern[i];
    const auto& c = factor.rows[i];
    double q = at(i, i);
    for (std::size_t k = 0; k < cols.size(); ++k) {
      q += 2.0 * c[k] * at(cols[k], i);
      for (std::size_t l = 0; l < cols.size(); ++l)
        q += c[k] * c[l] * at(cols[k], cols[l]);
    }
    trace += q / dhat;
  }
  rep.rank = n - rep.excluded_rows;
  rep.trace_ratio = rep.rank > 0 ? trace / static_cast<double>(rep.rank) : 0.0;
  return rep;
}

double kappa_relative(const VecchiaFactor& factor, const VecchiaFactor& reference) {
  require(factor.size() == reference.size() &&
              factor.order.perm() == reference.order.perm(),
          "kappa_relative: factors use different orders");
  double s = 0.0;
  for (std::size_t i = 0; i < factor.size(); ++i) {
    const double d = factor.diag[i];
    const double dr = reference.diag[i];
    if (d > 0.0 && dr > 0.0) s += std::log(d / dr);
  }
  return s;
}

Table1Bounds table1_bounds(const KaporinReport& report, std::size_t t) {
  require(report.finite, "table1_bounds: condition number is infinite");
  require(t >= 1, "table1_bounds: t must be positive");
  const double lk = std::max(report.log_kappa, 0.0);
  const double td = static_cast<double>(t);
  Table1Bounds b;
  b.direct_solve = 2.0 * static_cast<double>(report.rank) * lk;
  b.pcg = std::pow(3.0 * lk / td, td);
  b.det_identity = lk;
  b.stochastic = 8.0 * lk / td;
  return b;
}

}  // namespace pcv
