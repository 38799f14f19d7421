#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pcv/matrix_core.hpp"

namespace pcv {

// Â written as Â^+ = G^T G. Every preconditioner can apply Â^+, G and G^T and
// report log det Â.
class Preconditioner {
 public:
  virtual ~Preconditioner() = default;
  virtual std::size_t size() const = 0;
  virtual Vector solve(std::span<const double> b) const = 0;
  virtual Vector half(std::span<const double> v) const = 0;
  virtual Vector half_transpose(std::span<const double> v) const = 0;
  virtual double logdet() const = 0;
  virtual std::string name() const = 0;
};

// G = D^{-1/2} C P^T. half() and half_transpose() need every D(i,i) > 0.
class VecchiaPreconditioner final : public Preconditioner {
 public:
  explicit VecchiaPreconditioner(VecchiaFactor factor);

  std::size_t size() const override { return factor_.size(); }
  Vector solve(std::span<const double> b) const override;
  Vector half(std::span<const double> v) const override;
  Vector half_transpose(std::span<const double> v) const override;
  double logdet() const override;
  std::string name() const override { return "vecchia"; }

  const VecchiaFactor& factor() const { return factor_; }

 private:
  void require_positive() const;

  VecchiaFactor factor_;
  bool positive_ = true;
};

// Low-rank plus shift comparators built from a partial Cholesky factor of
// K = A - mu I, with K̂ = U diag(lambda) U^T:
//   Projected:  Â = K̂ + lambda_r (I - U U^T) + mu I
//   Ridge:      Â = K̂ + mu I
class LowRankShiftPreconditioner final : public Preconditioner {
 public:
  enum class Kind { Projected, Ridge };

  LowRankShiftPreconditioner(const PartialCholeskyFactor& k_factor, double mu, Kind kind);

  std::size_t size() const override { return n_; }
  Vector solve(std::span<const double> b) const override;
  Vector half(std::span<const double> v) const override;
  Vector half_transpose(std::span<const double> v) const override { return half(v); }
  double logdet() const override;
  std::string name() const override;

  // Â itself, column by column (small n only).
  Matrix dense() const;
  const Vector& eigenvalues() const { return lambda_; }
  double complement_value() const { return floor_; }

 private:
  // U f(lambda + mu) U^T v + g (v - U U^T v)
  Vector apply(std::span<const double> v, double power) const;

  std::size_t n_ = 0;
  Kind kind_;
  double mu_ = 0.0;
  Matrix u_;       // n x k, orthonormal columns
  Vector lambda_;  // descending
  double floor_ = 0.0;  // eigenvalue of Â on the complement of range(U)
};

using MatVec = std::function<Vector(std::span<const double>)>;

// A x through uncounted access: a dense copy when n <= dense_limit, otherwise
// entries are evaluated on every call.
MatVec make_matvec(const EntryOracle& a, std::size_t dense_limit = 5000);
MatVec make_matvec(Matrix a);

// x0 + Â^+ (b - A x0). An empty x0 means zero and skips the product with A.
Vector direct_solve(const MatVec& a, const Preconditioner& p, std::span<const double> b,
                    std::span<const double> x0 = {});

enum class PcgTermination { Converged, MaxIterations, ZeroRhs };

struct PcgOptions {
  double tol = 1e-6;
  std::size_t max_iter = 1000;
  Vector x0;                    // empty: zero
  std::optional<Vector> x_star; // enables A-norm error tracking
  bool keep_iterates = false;
};

struct PcgTrace {
  Vector x;
  // relative_residuals[t] = ||r_t|| / ||b|| for t = 0..iterations.
  Vector relative_residuals;
  // anorm_errors[t] = ||x_t - x*||_A when x_star was given.
  Vector anorm_errors;
  std::vector<Vector> iterates;
  std::size_t iterations = 0;
  PcgTermination termination = PcgTermination::MaxIterations;
};

// Throws Breakdown when d^T A d <= 1e-14 ||d|| ||A d||.
PcgTrace pcg(const MatVec& a, const Preconditioner& p, std::span<const double> b,
             const PcgOptions& opts = {});

struct KrylovQuadratic {
  double value = 0.0;      // u^T log(M) u approximated on the Krylov space
  std::size_t depth = 0;   // achieved dimension
};

// Lanczos with full reorthogonalization for the symmetric positive definite
// operator `op`, started from u; stops early when the basis is exhausted.
KrylovQuadratic krylov_log_quadratic(const MatVec& op, std::span<const double> u,
                                     std::size_t m);

struct LogdetEstimate {
  double correction = 0.0;  // s_t, mean of the quadratic forms
  Vector samples;
  std::vector<std::size_t> depths;
  std::size_t t = 0;
  std::size_t m = 0;
  double direct = 0.0;    // log det Â
  double estimate = 0.0;  // direct + correction
};

// s_t over t probe vectors with M = G A G^T. Probe k is a Gaussian vector
// rescaled to length sqrt(n), drawn from derive_seed(seed, k), so results do
// not depend on the thread count. t == 0 returns the direct estimate only.
LogdetEstimate logdet_stochastic(const MatVec& a, const Preconditioner& p, std::size_t t,
                                 std::size_t m, std::uint64_t seed, unsigned threads = 1);

}  // namespace pcv
