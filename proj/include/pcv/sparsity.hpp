#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "pcv/matrix_core.hpp"

namespace pcv {

enum class SparsityRule { NN, OMP };

struct SparsityChooser {
  SparsityRule rule = SparsityRule::OMP;
  std::size_t q = 0;  // per-row budget
  std::size_t c = 0;  // candidate count, 0 = every admissible index
  std::uint64_t seed = 0;
};

// The min(c, i - lo) indices j in [lo, i) nearest to i in the pointwise
// distance a(i,i) - 2 a(i,j) + a(j,j), ties to the lowest index; returned in
// ascending order. c == 0 keeps all of [lo, i). `diag` may hold a cached
// diagonal of `a` to save lookups.
std::vector<std::size_t> choose_candidates(const EntryOracle& a, std::size_t i,
                                           std::size_t c, std::size_t lo = 0,
                                           const Vector* diag = nullptr);

// The q candidates closest to i in pointwise residual distance, ascending.
std::vector<std::size_t> choose_pattern_nn(const EntryOracle& residual, std::size_t i,
                                           std::size_t q,
                                           std::span<const std::size_t> candidates);

struct OmpSelection {
  std::vector<std::size_t> set;     // ascending
  std::vector<std::size_t> picked;  // in greedy order
  // distances[k] is the squared residual distance from e_i to the span of the
  // first k picks; distances[0] = residual(i,i).
  Vector distances;
};

// Greedy orthogonal matching pursuit with an incrementally updated Cholesky
// factor of the residual Gram matrix on the chosen set.
OmpSelection choose_pattern_omp(const EntryOracle& residual, std::size_t i,
                                std::size_t q, std::span<const std::size_t> candidates);

// Residual pattern Q_i for every row i >= partial.rank, in permuted
// coordinates: candidates from the permuted A, then NN or OMP on the permuted
// residual of `partial`. Rows are handled concurrently when threads > 1.
SparsityPattern select_residual_pattern(const EntryOracle& a,
                                        const PartialCholeskyFactor& partial,
                                        const SparsityChooser& chooser,
                                        unsigned threads = 1);

}  // namespace pcv
