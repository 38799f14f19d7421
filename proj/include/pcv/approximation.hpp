#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>

#include "pcv/matrix_core.hpp"
#include "pcv/partial_cholesky.hpp"
#include "pcv/solvers.hpp"
#include "pcv/sparsity.hpp"

namespace pcv {

// base - shift on the diagonal; used to recover K = A - mu I from a kernel
// oracle with a ridge. Lookups forward to the counted path of `base`.
class ShiftedOracle final : public EntryOracle {
 public:
  ShiftedOracle(const EntryOracle& base, double shift)
      : EntryOracle(base.size()), base_(base), shift_(shift) {}

 protected:
  double evaluate(std::size_t i, std::size_t j) const override {
    return base_.peek(i, j) - (i == j ? shift_ : 0.0);
  }
  double lookup(std::size_t i, std::size_t j) const override {
    return base_.entry(i, j) - (i == j ? shift_ : 0.0);
  }

 private:
  const EntryOracle& base_;
  double shift_;
};

enum class Method {
  PcV,        // partial Cholesky + Vecchia, hybrid construction
  Vecchia,    // same pattern, built row by row from A (conventional)
  Frangella,  // K̂ + lambda_r (I - U U^T) + mu I
  Diaz,       // K̂ + mu I
};

// Method names accepted on the command line: pc+v0, pc+v1/4, pc+v1/3,
// pc+v(q) (q given separately), vecchia, frangella, diaz.
struct MethodSpec {
  Method method = Method::PcV;
  // q as floor(n^exponent); unset means q comes from the config.
  std::optional<double> q_exponent;
  std::string name;
};
MethodSpec parse_method(const std::string& name);

std::size_t floor_root(std::size_t n, double exponent);

struct ApproximationConfig {
  Method method = Method::PcV;
  std::size_t r = 0;
  std::size_t q = 0;
  std::size_t c = 0;  // 0 = unrestricted candidates
  PivotChooser pivot;
  SparsityRule sparsity = SparsityRule::OMP;
  double mu = 0.0;  // needed by the low-rank comparators
  unsigned threads = 1;
  bool compute_kappa = true;
  std::size_t kappa_max_n = 2000;
};

struct ApproximationStats {
  std::uint64_t lookups_pivots = 0;
  std::uint64_t lookups_pattern = 0;
  std::uint64_t lookups_build = 0;
  std::uint64_t lookups_total = 0;
  double seconds_pivots = 0.0;
  double seconds_pattern = 0.0;
  double seconds_build = 0.0;
  double seconds_kappa = 0.0;
  std::size_t rank = 0;       // pivots actually selected
  std::size_t nonzeros = 0;   // off-diagonal entries of C
  std::size_t clamped_rows = 0;
  std::optional<double> log_kappa;  // +inf allowed
};

struct Approximation {
  std::unique_ptr<Preconditioner> preconditioner;
  std::optional<VecchiaFactor> factor;  // Vecchia-type methods only
  ApproximationStats stats;
};

// Counts lookups on `a`; resets its counter first.
Approximation build_approximation(const EntryOracle& a, const ApproximationConfig& cfg);

}  // namespace pcv
