#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "pcv/partial_cholesky.hpp"
#include "pcv/random_matrices.hpp"
#include "pcv/sparsity.hpp"
#include "pcv/vecchia.hpp"
#include "support.hpp"

using namespace pcv;

namespace {

std::vector<std::size_t> sort_oracle(const oracle::Mat& a, std::size_t i, std::size_t c,
                                     std::size_t lo = 0) {
  std::vector<std::size_t> idx(i - lo);
  std::iota(idx.begin(), idx.end(), lo);
  auto dist = [&](std::size_t j) { return a[i][i] - 2 * a[i][j] + a[j][j]; };
  std::stable_sort(idx.begin(), idx.end(),
                   [&](std::size_t x, std::size_t y) { return dist(x) < dist(y); });
  idx.resize(std::min(c, idx.size()));
  std::sort(idx.begin(), idx.end());
  return idx;
}

}  // namespace

TEST_CASE("candidate selection") {
  SUBCASE("c at least i keeps everything") {
    DenseOracle a(test::to_sym(oracle::random_spd(10, 1)));
    CHECK(choose_candidates(a, 5, 5) == std::vector<std::size_t>{0, 1, 2, 3, 4});
    CHECK(choose_candidates(a, 5, 0) == std::vector<std::size_t>{0, 1, 2, 3, 4});
  }
  SUBCASE("identity ties go to the lowest indices") {
    DenseOracle a(test::to_sym(oracle::eye(8)));
    CHECK(choose_candidates(a, 7, 3) == std::vector<std::size_t>{0, 1, 2});
  }
  SUBCASE("frozen fixture") {
    DenseOracle a(test::to_sym(test::fixture_a6()));
    CHECK(choose_candidates(a, 5, 3) == std::vector<std::size_t>{0, 2, 4});
  }
  SUBCASE("random 10x10 against a full sort") {
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
      const oracle::Mat m = oracle::random_spd(10, seed);
      DenseOracle a(test::to_sym(m));
      CHECK(choose_candidates(a, 9, 3) == sort_oracle(m, 9, 3));
      CHECK(choose_candidates(a, 9, 4, 2) == sort_oracle(m, 9, 4, 2));
    }
  }
}

TEST_CASE("nearest neighbour pattern") {
  std::vector<std::size_t> cand{0, 1, 2, 3, 4};
  SUBCASE("q at least the candidate count") {
    DenseOracle a(test::to_sym(oracle::random_spd(6, 2)));
    CHECK(choose_pattern_nn(a, 5, 9, cand) == cand);
  }
  SUBCASE("diagonal residual picks the smallest diagonals") {
    oracle::Mat d = oracle::zeros(6, 6);
    const double vals[6] = {5, 1, 4, 2, 3, 7};
    for (std::size_t i = 0; i < 6; ++i) d[i][i] = vals[i];
    DenseOracle a(test::to_sym(d));
    CHECK(choose_pattern_nn(a, 5, 2, cand) == std::vector<std::size_t>{1, 3});
  }
  SUBCASE("random instance against a sort") {
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
      const oracle::Mat m = oracle::random_spd(6, seed + 40);
      DenseOracle a(test::to_sym(m));
      CHECK(choose_pattern_nn(a, 5, 2, cand) == sort_oracle(m, 5, 2));
    }
  }
}

TEST_CASE("orthogonal matching pursuit") {
  SUBCASE("q = 1 with a constant diagonal matches the first NN pick") {
    oracle::Mat m = oracle::random_spd(7, 3);
    for (std::size_t i = 0; i < 7; ++i) {
      const double s = 1.0 / std::sqrt(m[i][i]);
      for (std::size_t j = 0; j < 7; ++j) {
        m[i][j] *= s;
        m[j][i] *= s;
      }
    }
    for (std::size_t i = 0; i < 7; ++i) m[i][i] = 1.0;
    DenseOracle a(test::to_sym(m));
    const std::vector<std::size_t> cand{0, 1, 2, 3, 4, 5};
    const OmpSelection s = choose_pattern_omp(a, 6, 1, cand);
    CHECK(s.set == choose_pattern_nn(a, 6, 1, cand));
  }
  SUBCASE("q at least the candidates: final distance is the full projection") {
    const oracle::Mat m = oracle::random_spd(8, 5);
    DenseOracle a(test::to_sym(m));
    const std::vector<std::size_t> cand{1, 3, 4, 6};
    const OmpSelection s = choose_pattern_omp(a, 7, 10, cand);
    CHECK(s.set == cand);
    CHECK(std::abs(s.distances.back() - weighted_distance_sq(a, 7, cand)) <= 1e-10);
  }
  SUBCASE("frozen fixture greedy path") {
    DenseOracle a(test::to_sym(test::fixture_a6()));
    const std::vector<std::size_t> cand{0, 1, 2, 3, 4};
    const OmpSelection s = choose_pattern_omp(a, 5, 3, cand);
    CHECK(s.picked == std::vector<std::size_t>{0, 2, 4});
    const Vector frozen{13.0, 9.875, 8.454545454545451, 7.642857142857143};
    REQUIRE(s.distances.size() == 4);
    for (std::size_t k = 0; k < 4; ++k) CHECK(s.distances[k] == doctest::Approx(frozen[k]).epsilon(1e-12));
  }
  SUBCASE("random 10x10 residual, q=3, c=6 against step-by-step projections") {
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
      const oracle::Mat m = oracle::random_spd(10, seed + 200);
      DenseOracle a(test::to_sym(m));
      const PartialCholeskyFactor pc = build_partial_cholesky(a, PivotOrder::identity(10), 2);
      ResidualOracle res(a, pc);
      const oracle::Mat rm = test::to_mat(materialize_uncounted(res));
      const std::vector<std::size_t> cand = sort_oracle(m, 9, 6, 2);
      const OmpSelection s = choose_pattern_omp(res, 9, 3, cand);
      std::vector<std::size_t> chosen;
      for (std::size_t step = 0; step < 3; ++step) {
        double best = INFINITY;
        std::size_t arg = 0;
        for (std::size_t j : cand) {
          if (std::find(chosen.begin(), chosen.end(), j) != chosen.end()) continue;
          auto trial = chosen;
          trial.push_back(j);
          const double d = oracle::projection_residual(rm, 9, trial);
          if (d < best - 1e-12) best = d, arg = j;
        }
        chosen.push_back(arg);
        CHECK(s.picked[step] == arg);
        CHECK(std::abs(s.distances[step + 1] - best) <= 1e-9);
      }
    }
  }
  SUBCASE("candidates with zero residual diagonal are skipped") {
    oracle::Mat m = oracle::random_spd(8, 6);
    for (std::size_t j = 0; j < 8; ++j) m[3][j] = m[j][3] = 0.0;
    DenseOracle a(test::to_sym(m));
    const std::vector<std::size_t> cand{2, 3, 4};
    const OmpSelection s = choose_pattern_omp(a, 7, 3, cand);
    CHECK(s.set == std::vector<std::size_t>{2, 4});
  }
}

TEST_CASE("residual pattern selection") {
  Rng rng(12);
  DenseOracle a(random_kernel_spd(80, 3, 0.01, rng));
  const PivotSelection sel = choose_pivots(a, {PivotRule::Rpc, 3}, 8);
  for (SparsityRule rule : {SparsityRule::NN, SparsityRule::OMP}) {
    const SparsityPattern q = select_residual_pattern(a, sel.factor, {rule, 4, 20, 0});
    for (std::size_t i = 0; i < 80; ++i) {
      if (i < 8) {
        CHECK(q[i].empty());
        continue;
      }
      CHECK(q[i].size() <= 4);
      for (std::size_t j : q[i]) CHECK((j >= 8 && j < i));
    }
    const SparsityPattern q4 = select_residual_pattern(a, sel.factor, {rule, 4, 20, 0}, 4);
    CHECK(q4.sets() == q.sets());
  }
}
