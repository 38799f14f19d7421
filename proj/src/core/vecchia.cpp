#include "pcv/vecchia.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>

#include "parallel.hpp"
#include "pcv/error.hpp"
#include "pcv/partial_cholesky.hpp"

namespace pcv {

ResidualOracle::ResidualOracle(const EntryOracle& base,
                               const PartialCholeskyFactor& factor)
    : EntryOracle(base.size()),
      base_(base),
      rank_(factor.rank),
      rows_(base.size(), factor.rank),
      scaled_rows_(base.size(), factor.rank) {
  require(factor.size() == base.size(), "ResidualOracle: size mismatch");
  for (std::size_t k = 0; k < factor.size(); ++k) {
    const std::size_t i = factor.order[k];
    for (std::size_t j = 0; j < rank_; ++j) {
      rows_(i, j) = factor.l(k, j);
      scaled_rows_(i, j) = factor.l(k, j) * factor.d[j];
    }
  }
}

double ResidualOracle::correction(std::size_t i, std::size_t j) const {
  return rank_ == 0 ? 0.0 : dot(scaled_rows_.row(i), rows_.row(j));
}

double ResidualOracle::evaluate(std::size_t i, std::size_t j) const {
  return base_.peek(i, j) - correction(i, j);
}

double ResidualOracle::lookup(std::size_t i, std::size_t j) const {
  return base_.entry(i, j) - correction(i, j);
}

namespace {

struct RowResult {
  Vector coefficients;
  double diag = 0.0;
  double raw_diag = 0.0;
};

// Local system solve for one row against an oracle in permuted coordinates.
RowResult solve_row(const EntryOracle& permuted, std::size_t i,
                    std::span<const std::size_t> s) {
  LocalSystem sys = gather_local_system(permuted, i, s);
  RowResult row;
  if (s.empty()) {
    row.raw_diag = sys.alpha;
  } else {
    row.coefficients = PsdSolver(sys.m).solve(sys.v);
    for (double& c : row.coefficients) c = -c;
    row.raw_diag = sys.alpha + dot(row.coefficients, sys.v);
  }
  row.diag = std::max(row.raw_diag, 0.0);
  return row;
}

void record_clamp(VecchiaBuildInfo* info, std::mutex& m, double raw) {
  if (info == nullptr || raw >= 0.0) return;
  std::lock_guard lock(m);
  ++info->clamped_rows;
  info->most_negative = std::min(info->most_negative, raw);
}

}  // namespace

VecchiaFactor build_vecchia(const EntryOracle& a, const PivotOrder& order,
                            const SparsityPattern& pattern, const VecchiaOptions& opts,
                            VecchiaBuildInfo* info) {
  const std::size_t n = a.size();
  require(order.size() == n && pattern.size() == n,
          "build_vecchia: order/pattern size mismatch");
  PermutedOracle permuted(a, order);
  VecchiaFactor f{order, pattern, std::vector<Vector>(n), Vector(n, 0.0)};
  std::mutex info_mutex;
  detail::parallel_for(n, opts.threads, [&](std::size_t i) {
    RowResult row = solve_row(permuted, i, pattern[i]);
    record_clamp(info, info_mutex, row.raw_diag);
    f.rows[i] = std::move(row.coefficients);
    f.diag[i] = row.diag;
  });
  return f;
}

SparsityPattern augment_pattern(std::size_t r, const SparsityPattern& q) {
  const std::size_t n = q.size();
  std::vector<std::vector<std::size_t>> sets(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t lead = std::min(r, i);
    auto& s = sets[i];
    s.reserve(lead + q[i].size());
    for (std::size_t j = 0; j < lead; ++j) s.push_back(j);
    for (std::size_t j : q[i])
      if (j >= lead) s.push_back(j);
  }
  return SparsityPattern(std::move(sets));
}

VecchiaFactor build_hybrid(const EntryOracle& a, const PivotOrder& order, std::size_t r,
                           const SparsityPattern& q, const VecchiaOptions& opts,
                           VecchiaBuildInfo* info) {
  require(r <= a.size(), "build_hybrid: rank exceeds dimension");
  return build_hybrid(a, build_partial_cholesky(a, order, r), q, opts, info);
}

VecchiaFactor build_hybrid(const EntryOracle& a, const PartialCholeskyFactor& partial,
                           const SparsityPattern& q, const VecchiaOptions& opts,
                           VecchiaBuildInfo* info) {
  const std::size_t n = a.size();
  const std::size_t r = partial.rank;
  require(partial.size() == n && q.size() == n, "build_hybrid: size mismatch");
  for (std::size_t i = r; i < n; ++i)
    for (std::size_t j : q[i])
      require(j >= r, "build_hybrid: residual pattern row " + std::to_string(i) +
                          " references a Cholesky pivot");

  const Matrix& l = partial.l;

  // Inverse of the unit-lower-triangular leading block, stored densely.
  Matrix l11_inv = Matrix::identity(r);
  for (std::size_t c = 0; c < r; ++c)
    for (std::size_t i = c + 1; i < r; ++i) {
      double s = 0.0;
      for (std::size_t k = c; k < i; ++k) s += l(i, k) * l11_inv(k, c);
      l11_inv(i, c) = -s;
    }

  VecchiaFactor f{partial.order, augment_pattern(r, q), std::vector<Vector>(n),
                  Vector(n, 0.0)};
  for (std::size_t i = 0; i < r; ++i) {
    f.rows[i].assign(l11_inv.row(i).begin(), l11_inv.row(i).begin() + i);
    f.diag[i] = partial.d[i];
  }

  ResidualOracle residual(a, partial);
  PermutedOracle permuted(residual, partial.order);
  std::mutex info_mutex;
  detail::parallel_for(n - r, opts.threads, [&](std::size_t offset) {
    const std::size_t i = r + offset;
    const auto& qi = q[i];
    RowResult row = solve_row(permuted, i, qi);
    record_clamp(info, info_mutex, row.raw_diag);

    // Row i of -C22 L21 L11^{-1}: w = L(i,:) + sum_t x_t L(q_t,:), then w L11^{-1}.
    Vector w(l.row(i).begin(), l.row(i).end());
    for (std::size_t t = 0; t < qi.size(); ++t) {
      const double x = row.coefficients[t];
      auto lq = l.row(qi[t]);
      for (std::size_t k = 0; k < r; ++k) w[k] += x * lq[k];
    }
    Vector& out = f.rows[i];
    out.assign(r + qi.size(), 0.0);
    for (std::size_t m = 0; m < r; ++m) {
      double y = 0.0;
      for (std::size_t k = m; k < r; ++k) y += w[k] * l11_inv(k, m);
      out[m] = -y;
    }
    std::copy(row.coefficients.begin(), row.coefficients.end(), out.begin() + r);
    f.diag[i] = row.diag;
  });
  return f;
}

double EquivalenceReport::max() const {
  return std::max({coefficients, diagonal, dense});
}

EquivalenceReport check_equivalence(const EntryOracle& a, const PivotOrder& order,
                                    std::size_t r, const SparsityPattern& q) {
  const VecchiaFactor hybrid = build_hybrid(a, order, r, q);
  const VecchiaFactor direct = build_vecchia(a, order, augment_pattern(r, q));

  EquivalenceReport rep;
  rep.same_pattern = hybrid.pattern.sets() == direct.pattern.sets();
  require(rep.same_pattern, "check_equivalence: patterns differ");

  const std::size_t n = a.size();
  double diag_scale = 0.0;
  for (std::size_t i = 0; i < n; ++i) diag_scale = std::max(diag_scale, a.peek(i, i));
  diag_scale = std::max(diag_scale, 1e-300);

  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < hybrid.rows[i].size(); ++k) {
      const double c1 = hybrid.rows[i][k];
      const double c2 = direct.rows[i][k];
      rep.coefficients =
          std::max(rep.coefficients, std::abs(c1 - c2) / std::max(1.0, std::abs(c2)));
    }
    rep.diagonal =
        std::max(rep.diagonal, std::abs(hybrid.diag[i] - direct.diag[i]) / diag_scale);
  }
  const DenseSym d1 = reconstruct_dense(hybrid);
  const DenseSym d2 = reconstruct_dense(direct);
  const Matrix full = materialize_uncounted(a);
  rep.dense = max_abs_diff(d1.matrix(), d2.matrix()) / std::max(max_abs(full), 1e-300);
  return rep;
}

double logdet_direct(const VecchiaFactor& f) {
  double dmax = 0.0;
  for (double d : f.diag) dmax = std::max(dmax, d);
  const double cut = kPinvCutoff * dmax;
  double s = 0.0;
  for (std::size_t i = 0; i < f.diag.size(); ++i) {
    if (!(f.diag[i] > cut) || !(f.diag[i] > 0.0))
      fail(ErrorCode::NonSpdFactor,
           "logdet_direct: D(" + std::to_string(i) + ") = " + std::to_string(f.diag[i]) +
               " is not positive");
    s += std::log(f.diag[i]);
  }
  return s;
}

}  // namespace pcv
