#pragma once

#include <cstddef>

#include "pcv/matrix_core.hpp"

namespace pcv {

struct KaporinReport {
  double log_kappa = 0.0;  // +inf when `finite` is false
  bool finite = true;
  std::size_t rank = 0;
  double trace_ratio = 0.0;  // tr(A Ahat^+) / rank
  // Factor path only: log(Dhat(i,i) / D(i,i)) per permuted row, 0 on rows
  // excluded because D(i,i) is numerically zero.
  Vector per_row_log_terms;
  std::size_t excluded_rows = 0;
};

// Definition-based evaluation from two dense matrices: eigenvalues of
// Ahat^{+1/2} A Ahat^{+1/2} on the common range. Ranges are compared through
// their orthogonal projectors (eigenvalue cutoff 1e-10 * lambda_max, spectral
// norm tolerance 1e-8); a mismatch gives the infinite flag.
KaporinReport kappa_eigen_oracle(const DenseSym& a, const DenseSym& ahat);

struct KappaOptions {
  // D(i,i) <= zero_tol * max_i A(i,i) marks a row as numerically singular.
  double zero_tol = 1e-10;
  // The exact denominators need a dense n x n factorization.
  std::size_t max_dense_n = 4000;
};

// Product formula sum_i log(Dhat(i,i) / D(i,i)) with D from the exact LDL^T of
// the permuted matrix. Uses uncounted access. Throws InvalidArgument when n
// exceeds opts.max_dense_n; use kappa_relative there.
KaporinReport kappa_from_factor(const EntryOracle& a, const VecchiaFactor& factor,
                                const KappaOptions& opts = {});

// sum_i log(Dhat(i,i) / Dref(i,i)) for two factors on the same order. With a
// reference built on a superset pattern this is log kappa(factor) minus log
// kappa(reference). Rows where either diagonal is zero are skipped.
double kappa_relative(const VecchiaFactor& factor, const VecchiaFactor& reference);

struct Table1Bounds {
  double direct_solve = 0.0;  // 2 rank log kappa
  double pcg = 0.0;           // (3 log kappa / t)^t
  double det_identity = 0.0;  // log kappa
  double stochastic = 0.0;    // 8 log kappa / t
};

// Requires a finite report and t >= 1.
Table1Bounds table1_bounds(const KaporinReport& report, std::size_t t);

}  // namespace pcv
