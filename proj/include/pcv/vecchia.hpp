#pragma once

#include <cstddef>

#include "pcv/matrix_core.hpp"

namespace pcv {

// Residual A - P L D L^T P^T of a partial Cholesky factor, in original
// coordinates. Each entry costs one base lookup plus an O(r) inner product.
// Keeps a reference to `base`; the factor data is copied.
class ResidualOracle final : public EntryOracle {
 public:
  ResidualOracle(const EntryOracle& base, const PartialCholeskyFactor& factor);

 protected:
  double evaluate(std::size_t i, std::size_t j) const override;
  double lookup(std::size_t i, std::size_t j) const override;

 private:
  double correction(std::size_t i, std::size_t j) const;

  const EntryOracle& base_;
  std::size_t rank_;
  Matrix rows_;         // L rows in original order
  Matrix scaled_rows_;  // L rows times D
};

struct VecchiaOptions {
  unsigned threads = 1;
};

struct VecchiaBuildInfo {
  // Rows whose computed alpha + x^T v came out negative and were clamped to 0.
  std::size_t clamped_rows = 0;
  double most_negative = 0.0;
};

// Each row solves A~(S_i,S_i) x = -A~(S_i,i) (minimum-norm solution) and sets
// D(i,i) = A~(i,i) + x^T A~(S_i,i), clamped at zero. Rows are independent and
// built concurrently when opts.threads > 1.
VecchiaFactor build_vecchia(const EntryOracle& a, const PivotOrder& order,
                            const SparsityPattern& pattern,
                            const VecchiaOptions& opts = {},
                            VecchiaBuildInfo* info = nullptr);

// S_i = ({0..r-1} u Q_i) n {0..i-1}.
SparsityPattern augment_pattern(std::size_t r, const SparsityPattern& q);

// Partial Cholesky of rank r on `order`, then a Vecchia approximation of the
// residual with pattern q, merged into one factor on the augmented pattern.
// q[i] must lie in [r, i) for i >= r; rows i < r are ignored.
VecchiaFactor build_hybrid(const EntryOracle& a, const PivotOrder& order,
                           std::size_t r, const SparsityPattern& q,
                           const VecchiaOptions& opts = {},
                           VecchiaBuildInfo* info = nullptr);

// Same, reusing an already built partial Cholesky factor.
VecchiaFactor build_hybrid(const EntryOracle& a, const PartialCholeskyFactor& partial,
                           const SparsityPattern& q, const VecchiaOptions& opts = {},
                           VecchiaBuildInfo* info = nullptr);

struct EquivalenceReport {
  double coefficients = 0.0;  // max |c1 - c2| / max(1, |c2|)
  double diagonal = 0.0;      // max |d1 - d2| / max_i A(i,i)
  double dense = 0.0;         // max |A1 - A2| / max |A|
  bool same_pattern = false;

  double max() const;
};

// Builds the hybrid factor and the conventional factor on the augmented
// pattern and reports how far apart they are. Both paths are materialized
// densely, so keep n to a few hundred.
EquivalenceReport check_equivalence(const EntryOracle& a, const PivotOrder& order,
                                    std::size_t r, const SparsityPattern& q);

// sum_i log D(i,i); throws NonSpdFactor if any D(i,i) <= kPinvCutoff * max D.
double logdet_direct(const VecchiaFactor& f);

}  // namespace pcv
