#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "pcv/kernels_io.hpp"
#include "pcv/serialize.hpp"
#include "support.hpp"

using nlohmann::json;

namespace {

int run(const std::string& args, const std::string& env = "") {
  const std::string cmd = env + " " + std::string(PCV_BINARY) + " " + args + " >" +
                          test::temp_path("stdout.txt") + " 2>" + test::temp_path("stderr.txt");
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json load(const std::string& path) { return json::parse(slurp(path)); }

std::string tmp(const std::string& name) { return test::temp_path(name); }

double hadamard_log_kappa(const pcv::Dataset& ds, double mu) {
  pcv::KernelOracle k(ds.points, mu);
  const oracle::Mat m = test::to_mat(pcv::materialize_uncounted(k));
  double s = -oracle::logdet(m);
  for (std::size_t i = 0; i < m.size(); ++i) s += std::log(m[i][i]);
  return s;
}

}  // namespace

TEST_CASE("approximate") {
  SUBCASE("pc+v0 with RPC stays within the lookup budget") {
    const std::string out = tmp("approx.json"), factor = tmp("approx.pcvf");
    REQUIRE(run("approximate --synthetic --n 500 --method pc+v0 --pivot rpc --r 22 --seed 4 "
                "--out " + out + " --factor-out " + factor) == 0);
    const json r = load(out);
    CHECK(r["schema"] == "pcv-result");
    CHECK(r["schema_version"] == 1);
    CHECK(r["status"] == "ok");
    CHECK(r["derived"]["r"] == 22);
    CHECK(r["build"]["lookups"]["total"].get<std::uint64_t>() <= 23u * 500u);
    CHECK(r["timings"].contains("pivots"));
    CHECK(pcv::load_factor(factor).size() == 500);
  }
  SUBCASE("r = 0, q = 0 reports the Hadamard ratio") {
    const std::string out = tmp("diag.json"), data = tmp("diag.pcvd");
    REQUIRE(run("approximate --synthetic --n 150 --mu 0.01 --method 'pc+v(q)' --r 0 --q 0 --kappa "
                "--save-dataset " + data + " --out " + out) == 0);
    const json r = load(out);
    const double expected = hadamard_log_kappa(pcv::load_dataset(data), 0.01);
    CHECK(std::abs(r["build"]["log_kappa"].get<double>() - expected) <= 1e-8);
  }
  SUBCASE("validation errors exit with 2") {
    CHECK(run("approximate --synthetic --mu -1") == 2);
    CHECK(slurp(tmp("stderr.txt")).find("mu") != std::string::npos);
    CHECK(run("approximate --synthetic --method nonsense") == 2);
    CHECK(run("approximate --synthetic --no-such-flag") == 2);
    CHECK(run("approximate") == 2);
    CHECK(run("approximate --synthetic --n 50 --r 80") == 2);
    CHECK(run("") == 2);
  }
  SUBCASE("missing input is a runtime failure") {
    CHECK(run("approximate --data " + tmp("missing.csv")) == 1);
  }
  SUBCASE("config round trip reproduces the run") {
    const std::string a = tmp("rt_a.json"), b = tmp("rt_b.json");
    REQUIRE(run("approximate --synthetic --n 200 --method pc+v1/3 --pivot sds --sparsity nn "
                "--seed 9 --out " + a) == 0);
    REQUIRE(run("approximate --config " + a + " --out " + b) == 0);
    const json ra = load(a), rb = load(b);
    CHECK(ra["config"] == rb["config"]);
    CHECK(ra["build"] == rb["build"]);
    // Explicit flags override the file.
    REQUIRE(run("approximate --config " + a + " --seed 10 --out " + b) == 0);
    CHECK(load(b)["config"]["options"]["seed"] == 10);
  }
  SUBCASE("seed from the environment") {
    const std::string a = tmp("env.json");
    REQUIRE(run("approximate --synthetic --n 100 --out " + a, "PCV_SEED=77") == 0);
    CHECK(load(a)["config"]["options"]["seed"] == 77);
  }
  SUBCASE("CSV table") {
    const std::string csv = tmp("approx.csv");
    REQUIRE(run("approximate --synthetic --n 100 --out " + tmp("x.json") + " --csv " + csv) == 0);
    CHECK(slurp(csv).rfind("stage,lookups,seconds\n", 0) == 0);
  }
}

TEST_CASE("solve") {
  SUBCASE("exact preconditioner takes one iteration per right-hand side") {
    const std::string out = tmp("solve_exact.json");
    REQUIRE(run("solve --synthetic --n 120 --method 'pc+v(q)' --r 120 --q 0 --out " + out) == 0);
    const json r = load(out);
    CHECK(r["result"]["runs"].size() == 5);
    for (const auto& run_rec : r["result"]["runs"]) CHECK(run_rec["iterations"] == 1);
    CHECK(r["result"]["tol"] == 1e-4);
  }
  SUBCASE("zero labels need no iterations") {
    const std::string csv = tmp("zero_labels.csv");
    std::ofstream(csv) << "a,b,y\n1,2,0\n2,1,0\n3,5,0\n4,4,0\n";
    const std::string out = tmp("solve_zero.json"), table = tmp("solve_zero.csv");
    REQUIRE(run("solve --data " + csv + " --label-column y --rhs labels --r 1 --out " + out +
                " --csv " + table) == 0);
    const json r = load(out);
    CHECK(r["result"]["runs"][0]["iterations"] == 0);
    CHECK(r["result"]["tol"] == 1e-3);
    CHECK(slurp(table).rfind("rhs,t,relative_residual\n", 0) == 0);
  }
  SUBCASE("labels are required for --rhs labels") {
    const std::string csv = tmp("nolabels.csv");
    std::ofstream(csv) << "1,2\n3,4\n5,7\n";
    CHECK(run("solve --data " + csv + " --rhs labels") == 2);
  }
  SUBCASE("non-convergence within max-iter exits with 1") {
    CHECK(run("solve --synthetic --n 300 --method pc+v0 --r 2 --max-iter 2 --out " +
              tmp("slow.json")) == 1);
    CHECK(load(tmp("slow.json"))["status"] == "fail");
  }
}

TEST_CASE("logdet") {
  SUBCASE("full pattern is exact") {
    const std::string out = tmp("ld_exact.json");
    REQUIRE(run("logdet --synthetic --n 100 --method 'pc+v(q)' --r 100 --q 0 --probes 3 --out " + out) == 0);
    const json e = load(out)["result"]["estimates"][0];
    CHECK(std::abs(e["normalized_error"].get<double>()) <= 1e-8);
  }
  SUBCASE("no probes gives the direct estimate only") {
    const std::string out = tmp("ld_direct.json");
    REQUIRE(run("logdet --synthetic --n 100 --probes 0 --out " + out) == 0);
    const json e = load(out)["result"]["estimates"];
    REQUIRE(e.size() == 1);
    CHECK(e[0]["estimate"] == e[0]["direct"]);
    CHECK(e[0]["correction"] == 0.0);
  }
  SUBCASE("depth sweep: full depth is no worse than depth 5") {
    for (int seed = 1; seed <= 3; ++seed) {
      const std::string out = tmp("ld_sweep.json"), csv = tmp("ld_sweep.csv");
      REQUIRE(run("logdet --synthetic --n 200 --method pc+v0 --probes 10 --depths 5 20 full --seed " +
                  std::to_string(seed) + " --out " + out + " --csv " + csv) == 0);
      const json e = load(out)["result"]["estimates"];
      REQUIRE(e.size() == 3);
      CHECK(e[2]["depth"] == 200);
      CHECK(std::abs(e[2]["normalized_error"].get<double>()) <=
            std::abs(e[0]["normalized_error"].get<double>()));
      CHECK(slurp(csv).rfind("depth,estimate,correction,normalized_error\n", 0) == 0);
    }
  }
  SUBCASE("bad depth list") { CHECK(run("logdet --synthetic --n 50 --depths 1") == 2); }
}

TEST_CASE("verify") {
  SUBCASE("suites pass") {
    CHECK(run("verify fps --out " + tmp("v_fps.json")) == 0);
    const json r = load(tmp("v_fps.json"));
    CHECK(r["result"]["passed"] == true);
    CHECK(run("verify equivalence --scale 0.2 --out " + tmp("v_eq.json")) == 0);
    const json e = load(tmp("v_eq.json"));
    CHECK(e["result"]["checks"][0].contains("worst"));
  }
  SUBCASE("a corrupted factor fails with a named invariant") {
    const std::string data = tmp("vf.pcvd"), factor = tmp("vf.pcvf"), bad = tmp("vf_bad.pcvf");
    REQUIRE(run("approximate --synthetic --n 120 --r 8 --save-dataset " + data + " --factor-out " +
                factor + " --out " + tmp("vf.json")) == 0);
    CHECK(run("verify factor --dataset " + data + " --factor " + factor + " --out " +
              tmp("vf_ok.json")) == 0);
    // Perturb one coefficient of the stored factor.
    pcv::VecchiaFactor f = pcv::load_factor(factor);
    for (auto& row : f.rows)
      if (!row.empty()) {
        row[0] += 0.25;
        break;
      }
    pcv::save_factor(bad, f);
    CHECK(run("verify factor --dataset " + data + " --factor " + bad + " --out " +
              tmp("vf_bad.json")) == 1);
    const json r = load(tmp("vf_bad.json"));
    CHECK(r["result"]["passed"] == false);
    bool named = false;
    for (const auto& c : r["result"]["checks"])
      named = named || (c["passed"] == false && !c["name"].get<std::string>().empty());
    CHECK(named);
  }
  SUBCASE("unknown suite") { CHECK(run("verify sideways") == 2); }
  SUBCASE("truncated factor file") {
    const std::string trunc = tmp("trunc.pcvf");
    std::ofstream(trunc) << "PCVF 1\nn 3\norder 0 1\n";
    CHECK(run("verify factor --synthetic --n 3 --factor " + trunc) == 1);
    CHECK(slurp(tmp("stderr.txt")).find("row") != std::string::npos);
  }
}

TEST_CASE("batch") {
  const std::string c1 = tmp("b1.json"), c2 = tmp("b2.json"), out = tmp("batch.json");
  std::ofstream(c1) << R"({"command": "approximate", "options": {"synthetic": true, "n": 100, "seed": 1}})";
  std::ofstream(c2) << R"({"command": "verify", "options": {"suite": "fps"}})";
  REQUIRE(run("batch --jobs 2 --out " + out + " " + c1 + " " + c2) == 0);
  const json r = load(out);
  REQUIRE(r.is_array());
  REQUIRE(r.size() == 2);
  CHECK(r[0]["command"] == "approximate");
  CHECK(r[1]["command"] == "verify");
  CHECK(r[0]["config_file"] == c1);

  const std::string broken = tmp("b3.json");
  std::ofstream(broken) << "{ not json";
  CHECK(run("batch " + c1 + " " + broken) == 2);
}
