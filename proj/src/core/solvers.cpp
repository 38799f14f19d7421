#include "pcv/solvers.hpp"

#include <algorithm>
#include <cmath>

#include "parallel.hpp"
#include "pcv/error.hpp"
#include "pcv/random.hpp"
#include "pcv/vecchia.hpp"

namespace pcv {

namespace {

void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

}  // namespace

VecchiaPreconditioner::VecchiaPreconditioner(VecchiaFactor factor)
    : factor_(std::move(factor)) {
  for (double d : factor_.diag) positive_ = positive_ && d > 0.0;
}

void VecchiaPreconditioner::require_positive() const {
  if (!positive_)
    fail(ErrorCode::NonSpdFactor, "Vecchia factor has a zero diagonal entry");
}

Vector VecchiaPreconditioner::solve(std::span<const double> b) const {
  return factor_solve(factor_, b);
}

Vector VecchiaPreconditioner::half(std::span<const double> v) const {
  require_positive();
  const std::size_t n = size();
  require(v.size() == n, "half: size mismatch");
  Vector y(n);
  for (std::size_t k = 0; k < n; ++k) y[k] = v[factor_.order[k]];
  Vector out(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& cols = factor_.pattern[i];
    const auto& c = factor_.rows[i];
    double s = y[i];
    for (std::size_t k = 0; k < cols.size(); ++k) s += c[k] * y[cols[k]];
    out[i] = s / std::sqrt(factor_.diag[i]);
  }
  return out;
}

Vector VecchiaPreconditioner::half_transpose(std::span<const double> v) const {
  require_positive();
  const std::size_t n = size();
  require(v.size() == n, "half_transpose: size mismatch");
  Vector w(n);
  for (std::size_t i = 0; i < n; ++i) w[i] = v[i] / std::sqrt(factor_.diag[i]);
  Vector u(w);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& cols = factor_.pattern[i];
    const auto& c = factor_.rows[i];
    for (std::size_t k = 0; k < cols.size(); ++k) u[cols[k]] += c[k] * w[i];
  }
  Vector x(n);
  for (std::size_t k = 0; k < n; ++k) x[factor_.order[k]] = u[k];
  return x;
}

double VecchiaPreconditioner::logdet() const { return logdet_direct(factor_); }

LowRankShiftPreconditioner::LowRankShiftPreconditioner(const PartialCholeskyFactor& kf,
                                                       double mu, Kind kind)
    : n_(kf.size()), kind_(kind), mu_(mu) {
  require(mu >= 0.0, "LowRankShiftPreconditioner: mu must be nonnegative");
  const std::size_t r = kf.rank;
  // F = L D^{1/2} in original row order, K̂ = F F^T. Eigen of F^T F gives
  // K̂ = U Sigma^2 U^T with U = F V Sigma^{-1}.
  Matrix f(n_, r);
  for (std::size_t k = 0; k < n_; ++k)
    for (std::size_t j = 0; j < r; ++j)
      f(kf.order[k], j) = kf.l(k, j) * std::sqrt(std::max(kf.d[j], 0.0));
  Matrix gram(r, r);
  for (std::size_t i = 0; i < n_; ++i)
    for (std::size_t a = 0; a < r; ++a)
      for (std::size_t b = 0; b <= a; ++b) gram(a, b) += f(i, a) * f(i, b);
  for (std::size_t a = 0; a < r; ++a)
    for (std::size_t b = 0; b < a; ++b) gram(b, a) = gram(a, b);
  const SymEigen eig = r > 0 ? sym_eigen(gram) : SymEigen{};
  double top = 0.0;
  for (double v : eig.values) top = std::max(top, v);
  std::vector<std::size_t> keep;
  for (std::size_t k = r; k-- > 0;)
    if (eig.values[k] > kPinvCutoff * top) keep.push_back(k);
  u_ = Matrix(n_, keep.size());
  lambda_.resize(keep.size());
  for (std::size_t c = 0; c < keep.size(); ++c) {
    const std::size_t k = keep[c];
    lambda_[c] = eig.values[k];
    const double inv = 1.0 / std::sqrt(eig.values[k]);
    for (std::size_t i = 0; i < n_; ++i) {
      double s = 0.0;
      for (std::size_t j = 0; j < r; ++j) s += f(i, j) * eig.vectors(j, k);
      u_(i, c) = s * inv;
    }
  }
  floor_ = mu_;
  if (kind_ == Kind::Projected && !lambda_.empty()) floor_ += lambda_.back();
  if (!(floor_ > 0.0) && lambda_.size() < n_)
    fail(ErrorCode::NonSpdFactor,
         "low-rank preconditioner is singular: zero shift on the complement");
}

std::string LowRankShiftPreconditioner::name() const {
  return kind_ == Kind::Projected ? "frangella" : "diaz";
}

Vector LowRankShiftPreconditioner::apply(std::span<const double> v, double power) const {
  require(v.size() == n_, "low-rank preconditioner: size mismatch");
  const std::size_t k = lambda_.size();
  Vector coef(k, 0.0);
  for (std::size_t i = 0; i < n_; ++i)
    for (std::size_t c = 0; c < k; ++c) coef[c] += u_(i, c) * v[i];
  const double g = lambda_.size() < n_ ? std::pow(floor_, power) : 0.0;
  Vector out(v.begin(), v.end());
  for (double& x : out) x *= g;
  for (std::size_t c = 0; c < k; ++c) {
    const double w = (std::pow(lambda_[c] + mu_, power) - g) * coef[c];
    for (std::size_t i = 0; i < n_; ++i) out[i] += w * u_(i, c);
  }
  return out;
}

Vector LowRankShiftPreconditioner::solve(std::span<const double> b) const {
  return apply(b, -1.0);
}

Vector LowRankShiftPreconditioner::half(std::span<const double> v) const {
  return apply(v, -0.5);
}

Matrix LowRankShiftPreconditioner::dense() const {
  Matrix m(n_, n_);
  Vector e(n_, 0.0);
  for (std::size_t j = 0; j < n_; ++j) {
    e[j] = 1.0;
    const Vector col = apply(e, 1.0);
    e[j] = 0.0;
    for (std::size_t i = 0; i < n_; ++i) m(i, j) = col[i];
  }
  for (std::size_t i = 0; i < n_; ++i)
    for (std::size_t j = 0; j < i; ++j) {
      const double s = 0.5 * (m(i, j) + m(j, i));
      m(i, j) = s;
      m(j, i) = s;
    }
  return m;
}

double LowRankShiftPreconditioner::logdet() const {
  double s = 0.0;
  for (double l : lambda_) s += std::log(l + mu_);
  const std::size_t rest = n_ - lambda_.size();
  if (rest > 0) s += static_cast<double>(rest) * std::log(floor_);
  return s;
}

MatVec make_matvec(Matrix a) {
  auto m = std::make_shared<const Matrix>(std::move(a));
  return [m](std::span<const double> x) { return matvec(*m, x); };
}

MatVec make_matvec(const EntryOracle& a, std::size_t dense_limit) {
  if (a.size() <= dense_limit) return make_matvec(materialize_uncounted(a));
  return [&a](std::span<const double> x) {
    const std::size_t n = a.size();
    Vector y(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      double s = 0.0;
      for (std::size_t j = 0; j < n; ++j) s += a.peek(i, j) * x[j];
      y[i] = s;
    }
    return y;
  };
}

Vector direct_solve(const MatVec& a, const Preconditioner& p, std::span<const double> b,
                    std::span<const double> x0) {
  require(b.size() == p.size(), "direct_solve: size mismatch");
  if (x0.empty()) return p.solve(b);
  require(x0.size() == b.size(), "direct_solve: x0 size mismatch");
  Vector r(b.begin(), b.end());
  const Vector ax = a(x0);
  for (std::size_t i = 0; i < r.size(); ++i) r[i] -= ax[i];
  Vector x = p.solve(r);
  for (std::size_t i = 0; i < x.size(); ++i) x[i] += x0[i];
  return x;
}

PcgTrace pcg(const MatVec& a, const Preconditioner& p, std::span<const double> b,
             const PcgOptions& opts) {
  const std::size_t n = p.size();
  require(b.size() == n, "pcg: size mismatch");
  require(opts.tol > 0.0, "pcg: tol must be positive");
  require(opts.x0.empty() || opts.x0.size() == n, "pcg: x0 size mismatch");
  require(!opts.x_star || opts.x_star->size() == n, "pcg: x_star size mismatch");

  PcgTrace tr;
  const double bnorm = norm2(b);
  tr.x = opts.x0.empty() ? Vector(n, 0.0) : opts.x0;
  if (bnorm == 0.0) {
    std::fill(tr.x.begin(), tr.x.end(), 0.0);
    tr.relative_residuals.push_back(0.0);
    tr.termination = PcgTermination::ZeroRhs;
    return tr;
  }

  auto record = [&](const Vector& r) {
    tr.relative_residuals.push_back(norm2(r) / bnorm);
    if (opts.x_star) {
      Vector e(tr.x);
      for (std::size_t i = 0; i < n; ++i) e[i] -= (*opts.x_star)[i];
      tr.anorm_errors.push_back(std::sqrt(std::max(dot(e, a(e)), 0.0)));
    }
    if (opts.keep_iterates) tr.iterates.push_back(tr.x);
  };

  Vector r(b.begin(), b.end());
  if (!opts.x0.empty()) {
    const Vector ax = a(tr.x);
    for (std::size_t i = 0; i < n; ++i) r[i] -= ax[i];
  }
  Vector z = p.solve(r);
  Vector d = z;
  double rz = dot(r, z);
  record(r);

  while (true) {
    if (tr.relative_residuals.back() <= opts.tol) {
      tr.termination = PcgTermination::Converged;
      break;
    }
    if (tr.iterations >= opts.max_iter) {
      tr.termination = PcgTermination::MaxIterations;
      break;
    }
    const Vector ad = a(d);
    const double dad = dot(d, ad);
    if (!(dad > 1e-14 * norm2(d) * norm2(ad)))
      fail(ErrorCode::Breakdown, "pcg: search direction has d^T A d = " +
                                     std::to_string(dad) + " at iteration " +
                                     std::to_string(tr.iterations + 1));
    const double alpha = rz / dad;
    axpy(alpha, d, tr.x);
    axpy(-alpha, ad, r);
    z = p.solve(r);
    const double rz_next = dot(r, z);
    const double beta = rz_next / rz;
    rz = rz_next;
    for (std::size_t i = 0; i < n; ++i) d[i] = z[i] + beta * d[i];
    ++tr.iterations;
    record(r);
  }
  return tr;
}

KrylovQuadratic krylov_log_quadratic(const MatVec& op, std::span<const double> u,
                                     std::size_t m) {
  const std::size_t n = u.size();
  require(m >= 1, "krylov_log_quadratic: depth must be positive");
  const double unorm = norm2(u);
  KrylovQuadratic out;
  if (unorm == 0.0 || n == 0) return out;
  m = std::min(m, n);

  std::vector<Vector> basis;
  Vector alpha, beta;
  Vector q(u.begin(), u.end());
  for (double& x : q) x /= unorm;
  double scale = 0.0;
  for (std::size_t k = 0; k < m; ++k) {
    basis.push_back(q);
    Vector w = op(q);
    const double a = dot(q, w);
    alpha.push_back(a);
    scale = std::max(scale, std::abs(a));
    // Full reorthogonalization, twice for stability.
    for (int pass = 0; pass < 2; ++pass)
      for (const Vector& v : basis) axpy(-dot(v, w), v, w);
    if (k + 1 == m) break;
    const double b = norm2(w);
    if (!(b > 1e-12 * scale)) break;
    beta.push_back(b);
    for (double& x : w) x /= b;
    q = std::move(w);
  }
  out.depth = alpha.size();
  const SymEigen eig = tridiag_eigen(alpha, beta, true);
  double s = 0.0;
  for (std::size_t k = 0; k < eig.values.size(); ++k) {
    const double theta = eig.values[k];
    if (!(theta > 0.0))
      fail(ErrorCode::NonSpdFactor,
           "krylov_log_quadratic: nonpositive Ritz value " + std::to_string(theta));
    const double e = eig.vectors(0, k);
    s += e * e * std::log(theta);
  }
  out.value = unorm * unorm * s;
  return out;
}

LogdetEstimate logdet_stochastic(const MatVec& a, const Preconditioner& p, std::size_t t,
                                 std::size_t m, std::uint64_t seed, unsigned threads) {
  const std::size_t n = p.size();
  LogdetEstimate est;
  est.t = t;
  est.m = m;
  est.direct = p.logdet();
  est.estimate = est.direct;
  if (t == 0) return est;
  require(m >= 2, "logdet_stochastic: Krylov depth must be at least 2");

  const MatVec op = [&](std::span<const double> v) {
    return p.half(a(p.half_transpose(v)));
  };
  est.samples.assign(t, 0.0);
  est.depths.assign(t, 0);
  const double target = std::sqrt(static_cast<double>(n));
  detail::parallel_for(t, threads, [&](std::size_t k) {
    Rng rng(derive_seed(seed, k));
    Vector u(n);
    for (double& x : u) x = rng.normal();
    const double len = norm2(u);
    for (double& x : u) x *= target / len;
    const KrylovQuadratic qf = krylov_log_quadratic(op, u, m);
    est.samples[k] = qf.value;
    est.depths[k] = qf.depth;
  });
  double s = 0.0;
  for (double v : est.samples) s += v;
  est.correction = s / static_cast<double>(t);
  est.estimate = est.direct + est.correction;
  return est;
}

}  // namespace pcv
