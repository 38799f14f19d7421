#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "pcv/matrix_core.hpp"

namespace pcv {

enum class PivotRule {
  AdaptiveSearch,  // greedy minimizer of the Kaporin condition number
  Rpc,             // randomly pivoted Cholesky: sample by residual diagonal
  Sds,             // square distance sampling: sample by pointwise distance
  Cpc,             // column pivoted Cholesky: largest residual diagonal
  Fps,             // farthest point sampling: largest pointwise distance
  Fixed,           // take `fixed_order` as given
};

struct PivotChooser {
  PivotRule rule = PivotRule::Rpc;
  std::uint64_t seed = 0;
  std::vector<std::size_t> fixed_order;
  // AdaptiveSearch only: score every candidate by building the factor and
  // evaluating the condition number from scratch (O(n^3) per candidate).
  bool full_recompute = false;
};

// Distances from each e_i to the current pivot set R.
struct DistanceState {
  // d_A(e_i, span{e_j : j in R})^2, the residual diagonal.
  Vector residual_diag;
  // min over j in R of d_A(e_i, e_j)^2 = A(i,i) - 2 A(i,j) + A(j,j); equal to
  // A(i,i) while R is empty.
  Vector pointwise_dists;
};

// Incremental partial Cholesky in original coordinates. Each pivot reads one
// full column of A (n lookups); tracking distances adds n diagonal reads up
// front.
class PartialCholeskyBuilder {
 public:
  PartialCholeskyBuilder(const EntryOracle& a, bool track_distances);

  void add_pivot(std::size_t u);

  std::size_t size() const { return n_; }
  const std::vector<std::size_t>& pivots() const { return pivots_; }
  const DistanceState& state() const { return state_; }
  bool selected(std::size_t i) const { return selected_[i] != 0; }
  double trace() const { return trace_; }
  // diag(A) as read at construction; empty without distance tracking.
  const Vector& diagonal() const { return diag_; }

  // `order` must start with pivots().
  PartialCholeskyFactor finish(const PivotOrder& order) const;

 private:
  const EntryOracle& a_;
  std::size_t n_;
  bool track_;
  std::vector<Vector> columns_;  // unit-normalized residual columns
  Vector d_;
  std::vector<std::size_t> pivots_;
  std::vector<char> selected_;
  DistanceState state_;
  Vector diag_;
  double trace_ = 0.0;
  Vector work_;
};

PartialCholeskyFactor build_partial_cholesky(const EntryOracle& a,
                                             const PivotOrder& order,
                                             std::size_t r);

struct PivotSelection {
  std::vector<std::size_t> pivots;  // in selection sequence
  PivotOrder order;                 // pivots, then the rest ascending
  PartialCholeskyFactor factor;     // rank == pivots.size()
  Vector diagonal;                  // diag(A) when the chooser read it, else empty
};

// Selects up to r pivots. Random choosers stop early when every remaining
// weight is zero; indices whose residual diagonal is <= 1e-12 * tr(A) are
// never selected.
PivotSelection choose_pivots(const EntryOracle& a, const PivotChooser& chooser,
                             std::size_t r);

struct EtaObjectives {
  double rpc = 0.0;  // sum of residual diagonal
  double sds = 0.0;  // sum of square pointwise distances
  double cpc = 0.0;  // max residual distance (not squared)
  double fps = 0.0;  // max pointwise distance (not squared)
};

EtaObjectives eta_objectives(const EntryOracle& a, std::span<const std::size_t> r);

// Farthest point sampling objective divided by its exhaustive optimum over all
// r-subsets. Defined as 1 when both are zero. Requires n <= 12.
double verify_fps_ratio(const EntryOracle& a, std::size_t r, std::uint64_t seed = 0);

}  // namespace pcv
