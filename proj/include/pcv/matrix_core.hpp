#pragma once

#include <atomic>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "pcv/dense.hpp"

namespace pcv {

// A symmetric positive-semidefinite matrix accessed one entry at a time.
//
// `entry()` is the counted access path used by every factor construction and
// increments `lookup_count()` exactly once per call. `peek()` evaluates the
// same value without counting; it is reserved for applying the matrix as an
// operator (matrix-vector products inside solvers) and for test oracles.
// The counter is atomic, so one oracle may serve concurrent readers.
class EntryOracle {
 public:
  virtual ~EntryOracle() = default;
  EntryOracle(const EntryOracle&) = delete;
  EntryOracle& operator=(const EntryOracle&) = delete;

  std::size_t size() const { return n_; }

  double entry(std::size_t i, std::size_t j) const {
    lookups_.fetch_add(1, std::memory_order_relaxed);
    return lookup(i, j);
  }

  double peek(std::size_t i, std::size_t j) const { return evaluate(i, j); }

  std::uint64_t lookup_count() const {
    return lookups_.load(std::memory_order_relaxed);
  }
  void reset_lookup_count() const { lookups_.store(0, std::memory_order_relaxed); }

 protected:
  explicit EntryOracle(std::size_t n) : n_(n) {}

  virtual double evaluate(std::size_t i, std::size_t j) const = 0;
  // Views over another oracle override this to forward to the counted path.
  virtual double lookup(std::size_t i, std::size_t j) const { return evaluate(i, j); }

 private:
  std::size_t n_;
  mutable std::atomic<std::uint64_t> lookups_{0};
};

class DenseOracle final : public EntryOracle {
 public:
  explicit DenseOracle(DenseSym a) : EntryOracle(a.size()), a_(std::move(a)) {}
  const DenseSym& matrix() const { return a_; }

 protected:
  double evaluate(std::size_t i, std::size_t j) const override { return a_(i, j); }

 private:
  DenseSym a_;
};

// Serves diagonal entries from a cache of values already read through the
// counted path and forwards every other lookup to `base`. Keeps references.
class CachedDiagonalOracle final : public EntryOracle {
 public:
  CachedDiagonalOracle(const EntryOracle& base, const Vector& diag)
      : EntryOracle(base.size()), base_(base), diag_(diag) {}

 protected:
  double evaluate(std::size_t i, std::size_t j) const override {
    return i == j ? diag_[i] : base_.peek(i, j);
  }
  double lookup(std::size_t i, std::size_t j) const override {
    return i == j ? diag_[i] : base_.entry(i, j);
  }

 private:
  const EntryOracle& base_;
  const Vector& diag_;
};

class PivotOrder;

// The permuted matrix P^T A P as a view: entry(i, j) = base.entry(perm[i],
// perm[j]). Lookups are counted on both the view and the base. The view keeps
// references, so `base` and `order` must outlive it.
class PermutedOracle final : public EntryOracle {
 public:
  PermutedOracle(const EntryOracle& base, const PivotOrder& order);

 protected:
  double evaluate(std::size_t i, std::size_t j) const override;
  double lookup(std::size_t i, std::size_t j) const override;

 private:
  const EntryOracle& base_;
  const PivotOrder& order_;
};

// Permutation stored as pivot sequence: perm()[k] is the original index placed
// at position k. Positions are the canonical coordinates of every factor.
class PivotOrder {
 public:
  PivotOrder() = default;
  // Throws InvalidArgument unless `perm` is a bijection on {0, ..., n-1}.
  explicit PivotOrder(std::vector<std::size_t> perm);

  static PivotOrder identity(std::size_t n);
  // `pivots` first, then every remaining index in ascending order.
  static PivotOrder from_prefix(std::size_t n, std::span<const std::size_t> pivots);

  std::size_t size() const { return perm_.size(); }
  std::size_t operator[](std::size_t k) const { return perm_[k]; }
  const std::vector<std::size_t>& perm() const { return perm_; }
  // position(i) is the k with perm()[k] == i.
  std::size_t position(std::size_t i) const { return pos_[i]; }

 private:
  std::vector<std::size_t> perm_;
  std::vector<std::size_t> pos_;
};

// Per-row index sets: sets()[i] is a sorted, duplicate-free subset of
// {0, ..., i-1} in permuted coordinates.
class SparsityPattern {
 public:
  SparsityPattern() = default;
  // Throws InvalidArgument if any set is unsorted, has duplicates, or
  // contains an index >= its row.
  explicit SparsityPattern(std::vector<std::vector<std::size_t>> sets);

  static SparsityPattern empty(std::size_t n);
  static SparsityPattern full(std::size_t n);

  std::size_t size() const { return sets_.size(); }
  const std::vector<std::size_t>& operator[](std::size_t i) const { return sets_[i]; }
  const std::vector<std::vector<std::size_t>>& sets() const { return sets_; }
  std::size_t nonzeros() const;

 private:
  std::vector<std::vector<std::size_t>> sets_;
};

// Rank-r approximation P L D L^T P^T. `l` is n x r in permuted row order,
// unit on the diagonal and zero above it; `d` has r nonnegative entries.
struct PartialCholeskyFactor {
  PivotOrder order;
  std::size_t rank = 0;
  Matrix l;
  Vector d;

  std::size_t size() const { return order.size(); }
};

// Sparse inverse-Cholesky approximation P C^{-1} D C^{-T} P^T. Row i of C has
// an implicit unit diagonal and coefficients rows[i][k] at column pattern[i][k].
struct VecchiaFactor {
  PivotOrder order;
  SparsityPattern pattern;
  std::vector<Vector> rows;
  Vector diag;

  std::size_t size() const { return order.size(); }
};

VecchiaFactor identity_factor(std::size_t n);

// The blocks [M v; v^T alpha] = A([S, i], [S, i]). Reads the upper triangle
// only: |S|(|S|+3)/2 + 1 lookups.
struct LocalSystem {
  Matrix m;
  Vector v;
  double alpha = 0.0;
};
LocalSystem gather_local_system(const EntryOracle& a, std::size_t i,
                                std::span<const std::size_t> s);

// Square A-weighted distance from e_i to span{e_j : j in s}, i.e. the Schur
// complement A(i,i) - A(i,S) A(S,S)^+ A(S,i), clamped at zero.
double weighted_distance_sq(const EntryOracle& a, std::size_t i,
                            std::span<const std::size_t> s);

// Materialize the approximation (tests and small problems only).
DenseSym reconstruct_dense(const PartialCholeskyFactor& f);
DenseSym reconstruct_dense(const VecchiaFactor& f);

// x = P C^T D^+ C P^T b, with D^+ zeroing entries <= kPinvCutoff * max(D).
Vector factor_solve(const VecchiaFactor& f, std::span<const double> b);

Vector factor_matvec(const PartialCholeskyFactor& f, std::span<const double> v);
Vector factor_matvec(const VecchiaFactor& f, std::span<const double> v);

// Copies every entry through the counted path.
Matrix materialize(const EntryOracle& a);
// Same, without touching the lookup counter.
Matrix materialize_uncounted(const EntryOracle& a);

}  // namespace pcv
