#include <doctest.h>

#include <cmath>

#include "pcv/error.hpp"
#include "pcv/matrix_core.hpp"
#include "pcv/random.hpp"
#include "pcv/random_matrices.hpp"
#include "support.hpp"

using namespace pcv;

TEST_CASE("pivot order and pattern validation") {
  CHECK_THROWS_AS(PivotOrder({0, 0, 1}), Error);
  CHECK_THROWS_AS(PivotOrder({0, 3, 1}), Error);
  const PivotOrder p = PivotOrder::from_prefix(5, std::vector<std::size_t>{3, 1});
  CHECK(p.perm() == std::vector<std::size_t>{3, 1, 0, 2, 4});
  CHECK(p.position(3) == 0);
  CHECK(p.position(4) == 4);

  CHECK_THROWS_AS(SparsityPattern({{}, {0}, {1, 0}}), Error);
  CHECK_THROWS_AS(SparsityPattern({{}, {1}}), Error);
  CHECK_THROWS_AS(SparsityPattern({{}, {0, 0}}), Error);
  CHECK(SparsityPattern::full(4).nonzeros() == 6);
  CHECK(SparsityPattern::empty(4).nonzeros() == 0);
}

TEST_CASE("dense symmetric storage rejects asymmetry") {
  Matrix m(2, 2);
  m(0, 1) = 1.0;
  CHECK_THROWS_AS(DenseSym{m}, Error);
  Matrix r(2, 3);
  CHECK_THROWS_AS(DenseSym{r}, Error);
}

TEST_CASE("lookups are counted on entry and not on peek") {
  DenseOracle a(test::to_sym(test::fixture_a6()));
  CHECK(a.lookup_count() == 0);
  (void)a.peek(1, 2);
  CHECK(a.lookup_count() == 0);
  (void)a.entry(1, 2);
  (void)a.entry(2, 2);
  CHECK(a.lookup_count() == 2);

  const PivotOrder order({5, 4, 3, 2, 1, 0});
  PermutedOracle p(a, order);
  CHECK(p.entry(0, 1) == a.peek(5, 4));
  CHECK(a.lookup_count() == 3);
  CHECK(p.lookup_count() == 1);
  a.reset_lookup_count();
  CHECK(a.lookup_count() == 0);
}

TEST_CASE("cached diagonal serves diagonal reads for free") {
  DenseOracle a(test::to_sym(test::fixture_a6()));
  Vector diag(6);
  for (std::size_t i = 0; i < 6; ++i) diag[i] = a.peek(i, i);
  CachedDiagonalOracle c(a, diag);
  CHECK(c.entry(3, 3) == 13.0);
  CHECK(a.lookup_count() == 0);
  CHECK(c.entry(3, 2) == a.peek(3, 2));
  CHECK(a.lookup_count() == 1);
}

TEST_CASE("local system reads the upper triangle only") {
  DenseOracle a(test::to_sym(test::fixture_a6()));
  const std::vector<std::size_t> s{0, 2, 3};
  const LocalSystem sys = gather_local_system(a, 5, s);
  CHECK(a.lookup_count() == 3 * 6 / 2 + 1);
  CHECK(sys.alpha == a.peek(5, 5));
  CHECK(sys.v[1] == a.peek(2, 5));
  CHECK(sys.m(2, 0) == a.peek(3, 0));
}

TEST_CASE("weighted distance") {
  SUBCASE("identity, empty span") {
    DenseOracle a(test::to_sym(oracle::eye(3)));
    CHECK(weighted_distance_sq(a, 1, {}) == 1.0);
  }
  SUBCASE("ones matrix: e_2 - e_1 is in the nullspace") {
    DenseOracle a(test::to_sym({{1, 1}, {1, 1}}));
    const std::vector<std::size_t> s{0};
    CHECK(std::abs(weighted_distance_sq(a, 1, s)) <= 1e-14);
  }
  SUBCASE("frozen fixture value") {
    DenseOracle a(test::to_sym(test::fixture_a6()));
    const std::vector<std::size_t> s{0, 2};
    CHECK(weighted_distance_sq(a, 4, s) == doctest::Approx(6.363636363636363).epsilon(1e-12));
  }
  SUBCASE("random 6x6 against the eigen projection oracle") {
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
      const oracle::Mat m = oracle::random_spd(6, seed);
      DenseOracle a(test::to_sym(m));
      const std::vector<std::size_t> s{0, 2};
      CHECK(std::abs(weighted_distance_sq(a, 4, s) - oracle::projection_residual(m, 4, s)) <=
            1e-10);
    }
  }
  SUBCASE("rank-deficient span uses the pseudoinverse") {
    Rng rng(4);
    const DenseSym low = random_low_rank_psd(6, 2, rng);
    DenseOracle a(low);
    const std::vector<std::size_t> s{0, 1, 2};
    CHECK(std::abs(weighted_distance_sq(a, 4, s) -
                   oracle::projection_residual(test::to_mat(low), 4, s)) <= 1e-9);
  }
}

TEST_CASE("reconstruction") {
  SUBCASE("empty pattern gives diag(D)") {
    VecchiaFactor f = identity_factor(3);
    f.diag = {2.0, 3.0, 5.0};
    const DenseSym d = reconstruct_dense(f);
    CHECK(d(0, 0) == 2.0);
    CHECK(d(2, 2) == 5.0);
    CHECK(d(0, 2) == 0.0);
  }
  SUBCASE("full-rank partial Cholesky of the identity") {
    PartialCholeskyFactor f{PivotOrder::identity(3), 3, Matrix::identity(3), Vector(3, 1.0)};
    CHECK(max_abs_diff(reconstruct_dense(f).matrix(), Matrix::identity(3)) == 0.0);
  }
  SUBCASE("random factor against triangular solves per entry") {
    Rng rng(11);
    const std::size_t n = 5;
    const SparsityPattern pat = random_pattern(n, 3, rng);
    VecchiaFactor f{PivotOrder({2, 0, 4, 1, 3}), pat, std::vector<Vector>(n), Vector(n)};
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t k = 0; k < pat[i].size(); ++k) f.rows[i].push_back(rng.normal());
      f.diag[i] = 0.5 + rng.uniform();
    }
    // Dense C in permuted coordinates, then A = P C^{-1} D C^{-T} P^T.
    oracle::Mat c = oracle::eye(n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t k = 0; k < pat[i].size(); ++k) c[i][pat[i][k]] = f.rows[i][k];
    const oracle::Mat ci = oracle::inverse(c);
    oracle::Mat d = oracle::zeros(n, n);
    for (std::size_t i = 0; i < n; ++i) d[i][i] = f.diag[i];
    const oracle::Mat inner = oracle::mul(oracle::mul(ci, d), oracle::trans(ci));
    oracle::Mat full = oracle::zeros(n, n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) full[f.order[i]][f.order[j]] = inner[i][j];
    CHECK(oracle::max_abs_diff(test::to_mat(reconstruct_dense(f)), full) <= 1e-12);

    Vector v{1.0, -2.0, 0.5, 3.0, -1.0};
    const Vector y = factor_matvec(f, v);
    const oracle::Vec yo = oracle::apply(full, v);
    for (std::size_t i = 0; i < n; ++i) CHECK(std::abs(y[i] - yo[i]) <= 1e-12);
  }
}

TEST_CASE("factor solve and matvec") {
  SUBCASE("identity") {
    const VecchiaFactor f = identity_factor(3);
    const Vector b{1.0, 2.0, 3.0};
    CHECK(factor_solve(f, b) == b);
    CHECK(factor_matvec(f, b) == b);
  }
  SUBCASE("zero diagonal solves to zero") {
    VecchiaFactor f = identity_factor(3);
    f.diag = {0.0, 0.0, 0.0};
    const Vector b{1.0, 2.0, 3.0};
    CHECK(factor_solve(f, b) == Vector(3, 0.0));
  }
  SUBCASE("rank-0 partial factor") {
    PartialCholeskyFactor f{PivotOrder::identity(3), 0, Matrix(3, 0), {}};
    CHECK(factor_matvec(f, Vector{1.0, 2.0, 3.0}) == Vector(3, 0.0));
  }
}
