#include <doctest.h>

#include <cmath>
#include <numeric>

#include "pcv/error.hpp"
#include "pcv/kaporin.hpp"
#include "pcv/random_matrices.hpp"
#include "pcv/vecchia.hpp"
#include "support.hpp"

using namespace pcv;

TEST_CASE("eigen oracle") {
  SUBCASE("Ahat = A") {
    const DenseSym a = test::to_sym(oracle::random_spd(6, 1));
    const KaporinReport r = kappa_eigen_oracle(a, a);
    CHECK(r.finite);
    CHECK(std::abs(r.log_kappa) <= 1e-12);
    CHECK(r.rank == 6);
  }
  SUBCASE("diag(1,2) against diag(2,2)") {
    const KaporinReport r =
        kappa_eigen_oracle(test::to_sym({{1, 0}, {0, 2}}), test::to_sym({{2, 0}, {0, 2}}));
    CHECK(std::exp(r.log_kappa) == doctest::Approx(1.125).epsilon(1e-14));
    CHECK(r.trace_ratio == doctest::Approx(0.75));
  }
  SUBCASE("different ranges give the infinite flag") {
    Rng rng(1);
    const DenseSym low = random_low_rank_psd(3, 2, rng);
    const KaporinReport r = kappa_eigen_oracle(low, test::to_sym(oracle::eye(3)));
    CHECK_FALSE(r.finite);
    CHECK(std::isinf(r.log_kappa));
  }
  SUBCASE("same singular range stays finite") {
    Rng rng(2);
    const DenseSym low = random_low_rank_psd(5, 2, rng);
    const KaporinReport r = kappa_eigen_oracle(low, low);
    CHECK(r.finite);
    CHECK(r.rank == 2);
    CHECK(std::abs(r.log_kappa) <= 1e-8);
  }
  SUBCASE("matches the independent SPD evaluation") {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      const oracle::Mat a = oracle::random_spd(8, seed);
      const oracle::Mat b = oracle::random_spd(8, seed + 50);
      const KaporinReport r = kappa_eigen_oracle(test::to_sym(a), test::to_sym(b));
      CHECK(std::abs(r.log_kappa - oracle::log_kappa(a, b)) <= 1e-9);
    }
  }
}

TEST_CASE("factor formula") {
  SUBCASE("full pattern gives zero") {
    DenseOracle a(test::to_sym(oracle::random_spd(10, 3)));
    const VecchiaFactor f = build_vecchia(a, PivotOrder::identity(10), SparsityPattern::full(10));
    CHECK(std::abs(kappa_from_factor(a, f).log_kappa) <= 1e-10);
  }
  SUBCASE("empty pattern is the Hadamard ratio") {
    const oracle::Mat m = test::fixture_a6();
    DenseOracle a(test::to_sym(m));
    const VecchiaFactor f = build_vecchia(a, PivotOrder::identity(6), SparsityPattern::empty(6));
    const double k = kappa_from_factor(a, f).log_kappa;
    CHECK(k == doctest::Approx(2.3955546198635194).epsilon(1e-12));
    double hadamard = -oracle::logdet(m);
    for (std::size_t i = 0; i < 6; ++i) hadamard += std::log(m[i][i]);
    CHECK(std::abs(k - hadamard) <= 1e-12);
  }
  SUBCASE("agrees with the eigen oracle on 50 instances, n <= 40") {
    double worst = 0.0;
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
      Rng rng(seed);
      const std::size_t n = 5 + static_cast<std::size_t>(rng.index(36));
      const DenseSym a = seed % 2 ? random_spd(n, rng) : random_kernel_spd(n, 3, 0.1, rng);
      DenseOracle o(a);
      std::vector<std::size_t> perm(n);
      for (std::size_t i = 0; i < n; ++i) perm[i] = (i * 7 + seed) % n;
      if (std::gcd(n, std::size_t{7}) != 1) perm = PivotOrder::identity(n).perm();
      const SparsityPattern q = random_pattern(n, 4, rng);
      const VecchiaFactor f = build_vecchia(o, PivotOrder(perm), q);
      const KaporinReport fr = kappa_from_factor(o, f);
      const KaporinReport er = kappa_eigen_oracle(a, reconstruct_dense(f));
      worst = std::max(worst, std::abs(fr.log_kappa - er.log_kappa));
    }
    CHECK(worst <= 1e-8);
  }
  SUBCASE("relative kappa against a superset pattern") {
    Rng rng(4);
    DenseOracle a(random_spd(20, rng));
    const SparsityPattern small = random_pattern(20, 2, rng);
    const VecchiaFactor f = build_vecchia(a, PivotOrder::identity(20), small);
    const VecchiaFactor full = build_vecchia(a, PivotOrder::identity(20), SparsityPattern::full(20));
    CHECK(std::abs(kappa_relative(f, full) - kappa_from_factor(a, f).log_kappa) <= 1e-9);
  }
  SUBCASE("size guard") {
    DenseOracle a(test::to_sym(oracle::random_spd(10, 3)));
    KappaOptions ko;
    ko.max_dense_n = 5;
    CHECK_THROWS_AS(kappa_from_factor(a, identity_factor(10), ko), Error);
  }
}

TEST_CASE("bound formulas") {
  KaporinReport r;
  r.log_kappa = 0.0;
  r.rank = 4;
  Table1Bounds b = table1_bounds(r, 1);
  CHECK(b.direct_solve == 0.0);
  CHECK(b.pcg == 0.0);
  CHECK(b.det_identity == 0.0);
  CHECK(b.stochastic == 0.0);

  r.rank = 5;
  r.log_kappa = 0.01;
  CHECK(table1_bounds(r, 1).direct_solve == doctest::Approx(0.1));

  r.log_kappa = 1.0;
  b = table1_bounds(r, 6);
  CHECK(b.pcg == doctest::Approx(0.015625).epsilon(1e-15));
  CHECK(b.stochastic == doctest::Approx(8.0 / 6.0));

  r.finite = false;
  CHECK_THROWS_AS(table1_bounds(r, 1), Error);
}
