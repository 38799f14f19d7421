#include "pcv/approximation.hpp"

#include <chrono>
#include <cmath>
#include <limits>

#include "pcv/error.hpp"
#include "pcv/kaporin.hpp"
#include "pcv/vecchia.hpp"

namespace pcv {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

}  // namespace

std::size_t floor_root(std::size_t n, double exponent) {
  auto v = static_cast<std::size_t>(std::floor(std::pow(static_cast<double>(n), exponent)));
  // Guard against pow landing just below an exact integer root.
  while (std::pow(static_cast<double>(v + 1), 1.0 / exponent) <= static_cast<double>(n) + 1e-9)
    ++v;
  return v;
}

MethodSpec parse_method(const std::string& name) {
  MethodSpec s;
  s.name = name;
  if (name == "pc+v0") {
    s.q_exponent = 0.0;
  } else if (name == "pc+v1/4") {
    s.q_exponent = 0.25;
  } else if (name == "pc+v1/3") {
    s.q_exponent = 1.0 / 3.0;
  } else if (name == "pc+v(q)" || name == "pc+v") {
    s.name = "pc+v(q)";
  } else if (name == "vecchia") {
    s.method = Method::Vecchia;
  } else if (name == "frangella") {
    s.method = Method::Frangella;
  } else if (name == "diaz") {
    s.method = Method::Diaz;
  } else {
    fail(ErrorCode::ConfigError,
         "method: unknown value '" + name +
             "' (expected pc+v0, pc+v1/4, pc+v1/3, pc+v(q), vecchia, frangella, diaz)");
  }
  return s;
}

Approximation build_approximation(const EntryOracle& a, const ApproximationConfig& cfg) {
  const std::size_t n = a.size();
  if (cfg.r > n)
    fail(ErrorCode::ConfigError, "r: " + std::to_string(cfg.r) + " exceeds n = " +
                                     std::to_string(n));
  if (cfg.mu < 0.0) fail(ErrorCode::ConfigError, "mu: must be nonnegative");
  if (cfg.c != 0 && cfg.c < cfg.q)
    fail(ErrorCode::ConfigError, "c: must be 0 or at least q");

  Approximation out;
  ApproximationStats& st = out.stats;
  a.reset_lookup_count();

  if (cfg.method == Method::Frangella || cfg.method == Method::Diaz) {
    if (cfg.method == Method::Diaz && cfg.mu <= 0.0 && cfg.r < n)
      fail(ErrorCode::ConfigError, "mu: the diaz comparator needs mu > 0");
    ShiftedOracle k(a, cfg.mu);
    auto t0 = Clock::now();
    PivotSelection sel = choose_pivots(k, cfg.pivot, cfg.r);
    st.seconds_pivots = seconds_since(t0);
    st.lookups_pivots = a.lookup_count();
    st.rank = sel.factor.rank;
    t0 = Clock::now();
    out.preconditioner = std::make_unique<LowRankShiftPreconditioner>(
        sel.factor, cfg.mu,
        cfg.method == Method::Frangella ? LowRankShiftPreconditioner::Kind::Projected
                                        : LowRankShiftPreconditioner::Kind::Ridge);
    st.seconds_build = seconds_since(t0);
    st.lookups_total = a.lookup_count();
    if (cfg.compute_kappa && n <= std::min<std::size_t>(cfg.kappa_max_n, 400)) {
      t0 = Clock::now();
      const auto& lr = static_cast<const LowRankShiftPreconditioner&>(*out.preconditioner);
      const Matrix dense = materialize_uncounted(a);
      const KaporinReport rep = kappa_eigen_oracle(DenseSym(dense), DenseSym(lr.dense()));
      st.log_kappa = rep.log_kappa;
      st.seconds_kappa = seconds_since(t0);
    }
    return out;
  }

  auto t0 = Clock::now();
  PivotSelection sel = choose_pivots(a, cfg.pivot, cfg.r);
  st.seconds_pivots = seconds_since(t0);
  st.lookups_pivots = a.lookup_count();
  st.rank = sel.factor.rank;

  // Diagonal entries read while choosing pivots are not looked up again.
  std::unique_ptr<CachedDiagonalOracle> cached;
  if (sel.diagonal.size() == n) cached = std::make_unique<CachedDiagonalOracle>(a, sel.diagonal);
  const EntryOracle& src = cached ? static_cast<const EntryOracle&>(*cached) : a;

  t0 = Clock::now();
  SparsityChooser sc{cfg.sparsity, cfg.q, cfg.c, cfg.pivot.seed};
  const SparsityPattern q = select_residual_pattern(src, sel.factor, sc, cfg.threads);
  st.seconds_pattern = seconds_since(t0);
  st.lookups_pattern = a.lookup_count() - st.lookups_pivots;

  t0 = Clock::now();
  VecchiaBuildInfo info;
  VecchiaOptions vo{cfg.threads};
  VecchiaFactor f = cfg.method == Method::PcV
                        ? build_hybrid(src, sel.factor, q, vo, &info)
                        : build_vecchia(src, sel.order, augment_pattern(st.rank, q), vo, &info);
  st.seconds_build = seconds_since(t0);
  st.lookups_total = a.lookup_count();
  st.lookups_build = st.lookups_total - st.lookups_pivots - st.lookups_pattern;
  st.clamped_rows = info.clamped_rows;
  st.nonzeros = f.pattern.nonzeros();

  if (cfg.compute_kappa && n <= cfg.kappa_max_n) {
    t0 = Clock::now();
    KappaOptions ko;
    ko.max_dense_n = cfg.kappa_max_n;
    const KaporinReport rep = kappa_from_factor(a, f, ko);
    st.log_kappa = rep.finite ? rep.log_kappa : std::numeric_limits<double>::infinity();
    st.seconds_kappa = seconds_since(t0);
  }
  out.factor = f;
  out.preconditioner = std::make_unique<VecchiaPreconditioner>(std::move(f));
  return out;
}

}  // namespace pcv
