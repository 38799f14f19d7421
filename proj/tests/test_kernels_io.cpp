#include <doctest.h>

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "pcv/error.hpp"
#include "pcv/partial_cholesky.hpp"
#include "pcv/random_matrices.hpp"
#include "pcv/serialize.hpp"
#include "pcv/vecchia.hpp"
#include "support.hpp"

using namespace pcv;

namespace {

std::string write_file(const std::string& name, const std::string& text) {
  const std::string path = test::temp_path(name);
  std::ofstream(path) << text;
  return path;
}

const char* kFixture =
    "x,y,const,label\n"
    "1,10,5,0\n"
    "2,20,5,1\n"
    "3,40,5,0\n"
    "4,50,5,1\n";

}  // namespace

TEST_CASE("CSV loading") {
  const std::string path = write_file("fixture.csv", kFixture);
  SUBCASE("standardized against hand-computed statistics") {
    CsvOptions o;
    o.label_column = "label";
    const Dataset ds = load_csv(path, o);
    REQUIRE(ds.size() == 4);
    REQUIRE(ds.dim() == 3);
    const double x[4] = {-1.161895003862225, -0.3872983346207417, 0.3872983346207417,
                         1.161895003862225};
    const double y[4] = {-1.0954451150103321, -0.5477225575051661, 0.5477225575051661,
                         1.0954451150103321};
    for (std::size_t i = 0; i < 4; ++i) {
      CHECK(ds.points(i, 0) == doctest::Approx(x[i]).epsilon(1e-14));
      CHECK(ds.points(i, 1) == doctest::Approx(y[i]).epsilon(1e-14));
      CHECK(ds.points(i, 2) == 0.0);
    }
    REQUIRE(ds.labels);
    CHECK(*ds.labels == Vector{0, 1, 0, 1});
  }
  SUBCASE("first n rows, full-file statistics by default") {
    CsvOptions o;
    o.n_max = 2;
    o.label_column = "3";
    const Dataset ds = load_csv(path, o);
    REQUIRE(ds.size() == 2);
    CHECK(ds.points(0, 0) == doctest::Approx(-1.161895003862225));
    CHECK(ds.points(1, 0) == doctest::Approx(-0.3872983346207417));
  }
  SUBCASE("subsample statistics on request") {
    CsvOptions o;
    o.n_max = 2;
    o.label_column = "label";
    o.standardize = StandardizeMode::Subsample;
    const Dataset ds = load_csv(path, o);
    CHECK(ds.points(0, 0) == doctest::Approx(-0.7071067811865475));
    CHECK(ds.points(1, 1) == doctest::Approx(0.7071067811865475));
    CHECK(ds.points(1, 2) == 0.0);
  }
  SUBCASE("no standardization keeps raw values") {
    CsvOptions o;
    o.standardize = StandardizeMode::None;
    const Dataset ds = load_csv(path, o);
    CHECK(ds.dim() == 4);
    CHECK(ds.points(2, 1) == 40.0);
  }
  SUBCASE("quoted fields and no header") {
    const std::string p = write_file("quoted.csv", "\"1.5\",2\n3,\"4\"\n");
    CsvOptions o;
    o.standardize = StandardizeMode::None;
    const Dataset ds = load_csv(p, o);
    CHECK(ds.points(0, 0) == 1.5);
    CHECK(ds.points(1, 1) == 4.0);
  }
  SUBCASE("errors") {
    try {
      (void)load_csv(write_file("bad.csv", "a,b\n1,2\n3,x\n"));
      FAIL("expected a parse error");
    } catch (const ParseError& e) {
      CHECK(e.row() == 3);
      CHECK(e.column() == 2);
    }
    CHECK_THROWS_AS(load_csv(write_file("ragged.csv", "1,2\n3\n")), ParseError);
    try {
      (void)load_csv(write_file("empty.csv", "a,b\n"));
      FAIL("expected EmptyDataset");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::EmptyDataset);
    }
    try {
      (void)load_csv(test::temp_path("does-not-exist.csv"));
      FAIL("expected IoError");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::IoError);
    }
    CsvOptions o;
    o.label_column = "missing";
    CHECK_THROWS_AS(load_csv(path, o), Error);
  }
}

TEST_CASE("kernel oracle") {
  Matrix z(3, 3);
  z(1, 0) = 1.0;
  z(1, 1) = 2.0;
  z(1, 2) = 2.0;
  z(2, 0) = 1.0;
  z(2, 1) = 2.0;
  z(2, 2) = 2.0;
  for (bool cache : {false, true}) {
    KernelOracle k(z, 0.25, cache);
    CHECK(k.entry(0, 0) == 1.25);
    CHECK(k.entry(1, 2) == 1.0);
    CHECK(k.entry(0, 1) == doctest::Approx(0.22313016014842982).epsilon(1e-15));
  }
  // Squared distance 2d gives exp(-1).
  Matrix w(2, 2);
  w(1, 0) = 2.0;
  KernelOracle k2(w, 0.0);
  CHECK(k2.peek(0, 1) == doctest::Approx(std::exp(-1.0)));
}

TEST_CASE("kernel response vectors") {
  Rng rng(3);
  Matrix z(6, 2);
  for (std::size_t i = 0; i < 6; ++i)
    for (std::size_t j = 0; j < 2; ++j) z(i, j) = rng.normal();
  const auto b = kernel_response_vectors(z, 2, 17);
  REQUIRE(b.size() == 2);
  // Scalar recomputation with the documented generator.
  Rng ref(17);
  for (std::size_t k = 0; k < 2; ++k) {
    const double w0 = ref.normal(), w1 = ref.normal();
    for (std::size_t i = 0; i < 6; ++i) {
      const double d = std::pow(z(i, 0) - w0, 2) + std::pow(z(i, 1) - w1, 2);
      CHECK(b[k][i] == doctest::Approx(std::exp(-d / 4.0)).epsilon(1e-15));
    }
  }
  Matrix one(1, 1);
  const auto single = kernel_response_vectors(one, 1, 5);
  Rng r5(5);
  const double w = r5.normal();
  CHECK(single[0][0] == doctest::Approx(std::exp(-w * w / 2.0)));
}

TEST_CASE("synthetic clusters") {
  SUBCASE("one cluster without spread collapses to a point") {
    const Dataset ds = synthetic_clusters(10, 3, 1, 0.0, 4);
    for (std::size_t i = 0; i < 10; ++i)
      for (std::size_t j = 0; j < 3; ++j) CHECK(ds.points(i, j) == ds.points(0, j));
  }
  SUBCASE("seeded and deterministic") {
    const Dataset a = synthetic_clusters(50, 4, 3, 1.0, 9);
    const Dataset b = synthetic_clusters(50, 4, 3, 1.0, 9);
    CHECK(a.points.data().size() == b.points.data().size());
    CHECK(std::equal(a.points.data().begin(), a.points.data().end(), b.points.data().begin()));
    CHECK(*a.labels == *b.labels);
  }
  SUBCASE("FPS with r = k finds every cluster") {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      const Dataset ds = synthetic_clusters(200, 8, 4, 1.0, seed);
      KernelOracle k(ds.points, 1e-3);
      const PivotSelection s = choose_pivots(k, {PivotRule::Fps, seed}, 4);
      std::set<double> clusters;
      for (std::size_t p : s.pivots) clusters.insert((*ds.labels)[p]);
      CHECK(clusters.size() == 4);
    }
  }
}

TEST_CASE("serialization round trips") {
  SUBCASE("factor") {
    Rng rng(2);
    DenseOracle a(random_spd(12, rng));
    const VecchiaFactor f =
        build_hybrid(a, PivotOrder({3, 5, 0, 1, 2, 4, 6, 7, 8, 9, 10, 11}), 2,
                     random_pattern(12, 3, rng, 2));
    std::stringstream ss;
    write_factor(ss, f);
    const VecchiaFactor g = read_factor(ss);
    CHECK(g.order.perm() == f.order.perm());
    CHECK(g.pattern.sets() == f.pattern.sets());
    CHECK(g.rows == f.rows);
    CHECK(g.diag == f.diag);
  }
  SUBCASE("dataset") {
    Dataset ds = synthetic_clusters(7, 2, 2, 0.5, 3);
    ds.provenance = "fixture with spaces";
    std::stringstream ss;
    write_dataset(ss, ds);
    const Dataset back = read_dataset(ss);
    CHECK(back.provenance == ds.provenance);
    CHECK(std::equal(back.points.data().begin(), back.points.data().end(), ds.points.data().begin()));
    CHECK(*back.labels == *ds.labels);
  }
  SUBCASE("shortest round-trip doubles") {
    for (double v : {0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23}) CHECK(std::stod(format_double(v)) == v);
  }
  SUBCASE("corrupted input reports a location") {
    std::stringstream ss("PCVF 1\nn 2\norder 0 1\ndiag 1 zz\nend\n");
    try {
      (void)read_factor(ss);
      FAIL("expected a parse error");
    } catch (const ParseError& e) {
      CHECK(e.row() == 4);
    }
    std::stringstream bad_perm("PCVF 1\nn 2\norder 0 0\ndiag 1 1\nend\n");
    CHECK_THROWS_AS(read_factor(bad_perm), Error);
    std::stringstream truncated("PCVF 1\nn 2\norder 0 1\n");
    CHECK_THROWS_AS(read_factor(truncated), Error);
  }
}
