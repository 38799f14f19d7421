// pcv: command line front end over the C interface.
//
//   pcv approximate  build a preconditioner, report lookups/timings/log kappa
//   pcv solve        PCG on label or kernel response vectors
//   pcv logdet       direct and stochastic log-determinant estimates
//   pcv verify       seeded property suites, or check a stored factor
//   pcv batch        run several config files, --jobs at a time
//
// Exit codes: 0 success or pass, 1 failure, 2 configuration error.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <memory>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "pcv/pcv.h"

using nlohmann::json;

namespace {

constexpr int kSchemaVersion = 1;
constexpr int kExitFail = 1;
constexpr int kExitConfig = 2;

// Thrown for failures that should end a run with a given exit code.
struct RunError {
  int exit_code;
  std::string message;
};

void check(pcv_status s, const std::string& what) {
  if (s == PCV_OK) return;
  const bool config = s == PCV_ERR_CONFIG || s == PCV_ERR_INVALID_ARGUMENT;
  throw RunError{config ? kExitConfig : kExitFail, what + ": " + pcv_last_error()};
}

template <typename T, void (*Free)(T*)>
struct Deleter {
  void operator()(T* p) const { Free(p); }
};
using DatasetPtr = std::unique_ptr<pcv_dataset, Deleter<pcv_dataset, pcv_dataset_free>>;
using OraclePtr = std::unique_ptr<pcv_oracle, Deleter<pcv_oracle, pcv_oracle_free>>;
using FactorPtr = std::unique_ptr<pcv_factor, Deleter<pcv_factor, pcv_factor_free>>;

// JSON cannot hold inf or nan.
json number(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

struct Options {
  std::string command;
  // data
  std::string data;
  std::string dataset;
  std::string save_dataset;
  bool synthetic = false;
  long long n = 0;
  long long dim = 8;
  long long clusters = 4;
  double spread = 1.0;
  std::string label_column;
  std::string standardize = "full-file";
  double mu = 1e-3;
  // approximation
  std::string method = "pc+v1/4";
  long long r = -1;
  long long q = 0;
  long long c = -1;
  std::string pivot = "rpc";
  std::string sparsity = "omp";
  unsigned long long seed = 0;
  unsigned threads = 1;
  bool kappa = false;
  long long kappa_max_n = 2000;
  std::string factor;
  std::string factor_out;
  // solve
  std::string rhs = "kernel-vectors";
  long long num_rhs = 5;
  double tol = 0.0;
  long long max_iter = 1000;
  // logdet
  long long probes = 10;
  long long depth = 100;
  std::vector<std::string> depths;
  long long exact_max_n = 4000;
  // verify
  std::string suite;
  double scale = 1.0;
  double factor_tol = 1e-8;
  // output
  std::string out;
  std::string csv;

  json to_json() const {
    json o{{"data", data},
           {"dataset", dataset},
           {"synthetic", synthetic},
           {"n", n},
           {"dim", dim},
           {"clusters", clusters},
           {"spread", spread},
           {"label-column", label_column},
           {"standardize", standardize},
           {"mu", mu},
           {"method", method},
           {"r", r},
           {"q", q},
           {"c", c},
           {"pivot", pivot},
           {"sparsity", sparsity},
           {"seed", seed},
           {"threads", threads},
           {"kappa", kappa},
           {"kappa-max-n", kappa_max_n},
           {"factor", factor}};
    if (command == "approximate") o["factor-out"] = factor_out;
    if (command == "solve") {
      o["rhs"] = rhs;
      o["num-rhs"] = num_rhs;
      o["tol"] = tol;
      o["max-iter"] = max_iter;
    }
    if (command == "logdet") {
      o["probes"] = probes;
      o["depth"] = depth;
      o["depths"] = depths;
      o["exact-max-n"] = exact_max_n;
    }
    if (command == "verify") {
      o["suite"] = suite;
      o["scale"] = scale;
      o["factor-tol"] = factor_tol;
    }
    return json{{"command", command}, {"options", o}};
  }
};

void add_data_options(CLI::App* sub, Options& o) {
  sub->add_option("--data", o.data, "CSV file of predictors (and optionally a label column)");
  sub->add_option("--dataset", o.dataset, "Dataset cache file written by --save-dataset");
  sub->add_option("--save-dataset", o.save_dataset, "Write the loaded dataset to this file");
  sub->add_flag("--synthetic", o.synthetic, "Use a seeded Gaussian cluster dataset");
  sub->add_option("--n", o.n, "Rows to keep (CSV) or to generate (synthetic); 0 = all")
      ->check(CLI::NonNegativeNumber);
  sub->add_option("--dim", o.dim, "Synthetic dimension")->check(CLI::PositiveNumber);
  sub->add_option("--clusters", o.clusters, "Synthetic cluster count")->check(CLI::PositiveNumber);
  sub->add_option("--spread", o.spread, "Synthetic within-cluster standard deviation")
      ->check(CLI::NonNegativeNumber);
  sub->add_option("--label-column", o.label_column, "CSV label column (name or index)");
  sub->add_option("--standardize", o.standardize,
                  "full-file: file statistics then first n rows; subsample: first n rows "
                  "then their statistics; none")
      ->check(CLI::IsMember({"full-file", "subsample", "none"}));
  sub->add_option("--mu", o.mu, "Ridge added to the kernel diagonal");
}

void add_method_options(CLI::App* sub, Options& o) {
  sub->add_option("--method", o.method,
                  "pc+v0, pc+v1/4, pc+v1/3, pc+v(q), vecchia, frangella, diaz");
  sub->add_option("--r", o.r, "Pivots; -1 = floor(sqrt(n))");
  sub->add_option("--q", o.q, "Residual nonzeros per row for pc+v(q) and vecchia")
      ->check(CLI::NonNegativeNumber);
  sub->add_option("--c", o.c, "Candidate count; 0 = unrestricted, -1 = 10 q");
  sub->add_option("--pivot", o.pivot, "Pivot rule")
      ->check(CLI::IsMember({"rpc", "sds", "cpc", "fps", "adaptive"}));
  sub->add_option("--sparsity", o.sparsity, "Sparsity rule")->check(CLI::IsMember({"omp", "nn"}));
  sub->add_option("--threads", o.threads, "Worker threads")->check(CLI::PositiveNumber);
  sub->add_flag("--kappa", o.kappa, "Report log kappa (dense, small n)");
  sub->add_option("--kappa-max-n", o.kappa_max_n, "Largest n for --kappa");
  sub->add_option("--factor", o.factor, "Use a stored factor instead of building one");
}

void add_common(CLI::App* sub, Options& o) {
  sub->add_option("--seed", o.seed, "Random seed")->envname("PCV_SEED");
  sub->add_option("--out", o.out, "Write the JSON record here instead of stdout");
  sub->add_option("--csv", o.csv, "Also write a CSV table");
}

struct Problem {
  DatasetPtr dataset;
  OraclePtr oracle;
  std::size_t n = 0;
  json info;
};

Problem load_problem(const Options& o) {
  const int sources = (o.data.empty() ? 0 : 1) + (o.dataset.empty() ? 0 : 1) + (o.synthetic ? 1 : 0);
  if (sources != 1)
    throw RunError{kExitConfig, "data: give exactly one of --data, --dataset, --synthetic"};
  if (o.mu < 0.0) throw RunError{kExitConfig, "mu: must be nonnegative"};
  Problem p;
  pcv_dataset* ds = nullptr;
  if (o.synthetic) {
    const long long n = o.n > 0 ? o.n : 1000;
    check(pcv_dataset_synthetic(static_cast<size_t>(n), static_cast<size_t>(o.dim),
                                static_cast<size_t>(o.clusters), o.spread, o.seed, &ds),
          "synthetic dataset");
  } else if (!o.dataset.empty()) {
    check(pcv_dataset_load(o.dataset.c_str(), &ds), "dataset");
  } else {
    const pcv_standardize mode = o.standardize == "subsample" ? PCV_STANDARDIZE_SUBSAMPLE
                                 : o.standardize == "none"    ? PCV_STANDARDIZE_NONE
                                                              : PCV_STANDARDIZE_FULL_FILE;
    check(pcv_dataset_load_csv(o.data.c_str(), static_cast<size_t>(o.n),
                               o.label_column.empty() ? nullptr : o.label_column.c_str(), mode,
                               &ds),
          "data");
  }
  p.dataset.reset(ds);
  if (!o.save_dataset.empty())
    check(pcv_dataset_save(ds, o.save_dataset.c_str()), "save-dataset");
  pcv_oracle* orc = nullptr;
  check(pcv_oracle_kernel(ds, o.mu, &orc), "kernel");
  p.oracle.reset(orc);
  p.n = pcv_oracle_size(orc);
  p.info = {{"provenance", pcv_dataset_provenance(ds)},
            {"n", p.n},
            {"d", pcv_dataset_dim(ds)},
            {"labels", pcv_dataset_has_labels(ds) != 0}};
  return p;
}

struct Built {
  FactorPtr factor;
  json build;
  json timings;
  json derived;
};

Built build_or_load(const Options& o, const Problem& p) {
  Built b;
  pcv_factor* f = nullptr;
  if (!o.factor.empty()) {
    check(pcv_factor_load(o.factor.c_str(), &f), "factor");
    b.factor.reset(f);
    if (pcv_factor_size(f) != p.n)
      throw RunError{kExitConfig, "factor: size " + std::to_string(pcv_factor_size(f)) +
                                      " does not match n = " + std::to_string(p.n)};
    b.build = {{"source", o.factor}};
    b.derived = {{"n", p.n}};
    if (o.kappa) {
      double lk = 0.0;
      int finite = 0;
      check(pcv_kappa(p.oracle.get(), f, &lk, &finite), "kappa");
      b.build["log_kappa"] = number(lk);
    }
    return b;
  }
  if (o.r < -1) throw RunError{kExitConfig, "r: must be -1 (auto) or nonnegative"};
  if (o.c < -1) throw RunError{kExitConfig, "c: must be -1 (auto), 0 or positive"};
  pcv_build_options bo;
  pcv_build_options_default(&bo);
  bo.method = o.method.c_str();
  bo.r = o.r < 0 ? PCV_AUTO : static_cast<size_t>(o.r);
  bo.q = static_cast<size_t>(o.q);
  bo.c = o.c < 0 ? PCV_AUTO : static_cast<size_t>(o.c);
  bo.pivot = o.pivot.c_str();
  bo.sparsity = o.sparsity.c_str();
  bo.seed = o.seed;
  bo.mu = o.mu;
  bo.threads = o.threads;
  bo.compute_kappa = o.kappa ? 1 : 0;
  bo.kappa_max_n = static_cast<size_t>(o.kappa_max_n);
  pcv_build_stats st;
  check(pcv_build(p.oracle.get(), &bo, &f, &st), "build");
  b.factor.reset(f);
  b.derived = {{"n", p.n}, {"r", st.r}, {"q", st.q}, {"c", st.c}};
  b.build = {{"method", pcv_factor_method(f)},
             {"nonzeros", st.nonzeros},
             {"clamped_rows", st.clamped_rows},
             {"lookups", {{"pivots", st.lookups_pivots},
                          {"pattern", st.lookups_pattern},
                          {"build", st.lookups_build},
                          {"total", st.lookups_total}}}};
  if (st.has_log_kappa) b.build["log_kappa"] = number(st.log_kappa);
  b.timings = {{"pivots", st.seconds_pivots},
               {"pattern", st.seconds_pattern},
               {"build", st.seconds_build},
               {"kappa", st.seconds_kappa}};
  return b;
}

std::ofstream open_csv(const std::string& path) {
  std::ofstream f(path);
  if (!f) throw RunError{kExitFail, "csv: cannot write " + path};
  f.precision(17);
  return f;
}

int cmd_approximate(const Options& o, json& rec) {
  Problem p = load_problem(o);
  Built b = build_or_load(o, p);
  rec["dataset"] = p.info;
  rec["derived"] = b.derived;
  rec["build"] = b.build;
  rec["timings"] = b.timings;
  if (!o.factor_out.empty()) {
    check(pcv_factor_save(b.factor.get(), o.factor_out.c_str()), "factor-out");
    rec["result"] = {{"factor_file", o.factor_out}};
  }
  if (!o.csv.empty() && b.build.contains("lookups")) {
    auto f = open_csv(o.csv);
    f << "stage,lookups,seconds\n";
    for (const char* s : {"pivots", "pattern", "build"})
      f << s << ',' << b.build["lookups"][s].get<uint64_t>() << ','
        << b.timings[s].get<double>() << '\n';
  }
  return 0;
}

int cmd_solve(const Options& o, json& rec) {
  Problem p = load_problem(o);
  Built b = build_or_load(o, p);
  const std::size_t n = p.n;
  std::vector<std::vector<double>> rhs;
  const double tol = o.tol > 0.0 ? o.tol : (o.rhs == "labels" ? 1e-3 : 1e-4);
  if (o.rhs == "labels") {
    if (!pcv_dataset_has_labels(p.dataset.get()))
      throw RunError{kExitConfig, "rhs: dataset has no labels (set --label-column)"};
    rhs.emplace_back(n);
    check(pcv_dataset_labels(p.dataset.get(), rhs[0].data(), n), "labels");
  } else {
    if (o.num_rhs < 1) throw RunError{kExitConfig, "num-rhs: must be positive"};
    const auto k = static_cast<std::size_t>(o.num_rhs);
    std::vector<double> all(k * n);
    check(pcv_response_vectors(p.dataset.get(), k, o.seed + 1, all.data(), all.size()),
          "response vectors");
    for (std::size_t t = 0; t < k; ++t)
      rhs.emplace_back(all.begin() + static_cast<std::ptrdiff_t>(t * n),
                       all.begin() + static_cast<std::ptrdiff_t>((t + 1) * n));
  }
  const auto max_iter = static_cast<std::size_t>(std::max(0LL, o.max_iter));
  json runs = json::array();
  std::vector<std::vector<double>> histories;
  std::vector<double> x(n), hist(max_iter + 1);
  for (std::size_t k = 0; k < rhs.size(); ++k) {
    pcv_pcg_result res;
    check(pcv_pcg(p.oracle.get(), b.factor.get(), rhs[k].data(), nullptr, n, tol, max_iter,
                  x.data(), hist.data(), &res),
          "pcg (rhs " + std::to_string(k) + ")");
    histories.emplace_back(hist.begin(), hist.begin() + static_cast<std::ptrdiff_t>(res.iterations + 1));
    runs.push_back({{"rhs", k},
                    {"iterations", res.iterations},
                    {"converged", res.converged != 0},
                    {"relative_residual", number(res.residual)}});
  }
  json solved = json::object();
  for (std::size_t limit : {10, 20, 50, 100, 200, 500, 1000}) {
    std::size_t count = 0;
    for (const auto& r : runs)
      if (r["converged"].get<bool>() && r["iterations"].get<std::size_t>() <= limit) ++count;
    solved[std::to_string(limit)] = count;
  }
  rec["dataset"] = p.info;
  rec["derived"] = b.derived;
  rec["build"] = b.build;
  rec["timings"] = b.timings;
  rec["result"] = {{"rhs", o.rhs}, {"tol", tol}, {"max_iter", max_iter}, {"runs", runs},
                   {"solved_within", solved}};
  if (!o.csv.empty()) {
    auto f = open_csv(o.csv);
    f << "rhs,t,relative_residual\n";
    for (std::size_t k = 0; k < histories.size(); ++k)
      for (std::size_t t = 0; t < histories[k].size(); ++t)
        f << k << ',' << t << ',' << histories[k][t] << '\n';
  }
  bool all = true;
  for (const auto& r : runs) all = all && r["converged"].get<bool>();
  return all ? 0 : kExitFail;
}

int cmd_logdet(const Options& o, json& rec) {
  Problem p = load_problem(o);
  Built b = build_or_load(o, p);
  const std::size_t n = p.n;
  std::optional<double> exact;
  if (n <= static_cast<std::size_t>(std::max(0LL, o.exact_max_n))) {
    double v = 0.0;
    check(pcv_logdet_exact(p.oracle.get(), static_cast<size_t>(o.exact_max_n), &v), "exact");
    exact = v;
  }
  std::vector<std::size_t> depths;
  for (const auto& d : o.depths) {
    if (d == "full") {
      depths.push_back(n);
      continue;
    }
    try {
      std::size_t pos = 0;
      const long long v = std::stoll(d, &pos);
      if (pos != d.size() || v < 2) throw std::invalid_argument(d);
      depths.push_back(static_cast<std::size_t>(v));
    } catch (const std::exception&) {
      throw RunError{kExitConfig, "depths: expected integers >= 2 or 'full', got '" + d + "'"};
    }
  }
  if (depths.empty()) depths.push_back(static_cast<std::size_t>(std::max(2LL, o.depth)));
  if (o.probes < 0) throw RunError{kExitConfig, "probes: must be nonnegative"};
  const auto t = static_cast<std::size_t>(o.probes);

  json estimates = json::array();
  std::ofstream csv;
  if (!o.csv.empty()) {
    csv = open_csv(o.csv);
    csv << "depth,estimate,correction,normalized_error\n";
  }
  for (std::size_t m : depths) {
    pcv_logdet_result r;
    check(pcv_logdet_stochastic(p.oracle.get(), b.factor.get(), t, m, o.seed, o.threads,
                                nullptr, &r),
          "logdet");
    json e{{"depth", m}, {"probes", t}, {"direct", number(r.direct)},
           {"correction", number(r.correction)}, {"estimate", number(r.estimate)}};
    double err = NAN;
    if (exact) {
      err = (r.estimate - *exact) / static_cast<double>(n);
      e["normalized_error"] = number(err);
      e["normalized_error_direct"] = number((r.direct - *exact) / static_cast<double>(n));
    }
    if (csv.is_open()) csv << m << ',' << r.estimate << ',' << r.correction << ',' << err << '\n';
    estimates.push_back(std::move(e));
    if (t == 0) break;  // the depth plays no role without probes
  }
  rec["dataset"] = p.info;
  rec["derived"] = b.derived;
  rec["build"] = b.build;
  rec["timings"] = b.timings;
  rec["result"] = {{"estimates", estimates}};
  if (exact) rec["result"]["exact"] = number(*exact);
  return 0;
}

int cmd_verify(const Options& o, json& rec) {
  char* report = nullptr;
  int passed = 0;
  if (o.suite == "factor") {
    if (o.factor.empty()) throw RunError{kExitConfig, "factor: verify factor needs --factor"};
    Problem p = load_problem(o);
    pcv_factor* f = nullptr;
    check(pcv_factor_load(o.factor.c_str(), &f), "factor");
    FactorPtr guard(f);
    if (pcv_factor_size(f) != p.n)
      throw RunError{kExitFail, "factor: size does not match the dataset"};
    check(pcv_verify_factor(p.oracle.get(), f, o.factor_tol, &report, &passed), "verify");
    rec["dataset"] = p.info;
  } else {
    check(pcv_verify_suite(o.suite.c_str(), o.seed, o.scale, &report, &passed), "verify");
  }
  json r = json::parse(report);
  pcv_free_string(report);
  rec["result"] = r;
  if (!o.csv.empty()) {
    auto f = open_csv(o.csv);
    f << "check,passed,worst,limit,cases\n";
    for (const auto& c : r["checks"])
      f << '"' << c["name"].get<std::string>() << "\"," << (c["passed"].get<bool>() ? 1 : 0)
        << ',' << (c["worst"].is_null() ? std::string("inf") : c["worst"].dump()) << ','
        << c["limit"].get<double>() << ',' << c["cases"].get<std::size_t>() << '\n';
  }
  return passed ? 0 : kExitFail;
}

// Runs one command from an argument list (without the program name). The
// record is filled in on success and on handled errors alike.
int run(const std::vector<std::string>& args, json& rec, std::string& out_path) {
  Options o;
  CLI::App app{"Partial Cholesky + Vecchia preconditioners for kernel matrices", "pcv"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(pcv_version()));

  auto* approx = app.add_subcommand("approximate", "Build an approximation and report its cost");
  auto* solve = app.add_subcommand("solve", "Preconditioned conjugate gradient runs");
  auto* logdet = app.add_subcommand("logdet", "Log-determinant estimates");
  auto* verify = app.add_subcommand("verify", "Property suites or a stored factor check");
  // Listed for --help only; main() dispatches batch before this parser runs.
  app.add_subcommand("batch", "Run several config files concurrently");
  for (auto* sub : {approx, solve, logdet}) {
    add_data_options(sub, o);
    add_method_options(sub, o);
    add_common(sub, o);
  }
  approx->add_option("--factor-out", o.factor_out, "Write the factor to this file");
  solve->add_option("--rhs", o.rhs, "Right-hand sides")
      ->check(CLI::IsMember({"labels", "kernel-vectors"}));
  solve->add_option("--num-rhs", o.num_rhs, "Number of kernel response vectors");
  solve->add_option("--tol", o.tol, "Relative residual tolerance (default 1e-3 labels, 1e-4 kernel vectors)");
  solve->add_option("--max-iter", o.max_iter, "Iteration limit");
  logdet->add_option("--probes", o.probes, "Stochastic probe vectors (0 = direct estimate only)");
  logdet->add_option("--depth", o.depth, "Krylov depth");
  logdet->add_option("--depths", o.depths, "Depth sweep, integers or 'full'")->expected(1, -1);
  logdet->add_option("--exact-max-n", o.exact_max_n, "Largest n for the exact reference");
  verify->add_option("suite", o.suite, "equivalence, optimality, bounds, fps or factor")
      ->required()
      ->check(CLI::IsMember({"equivalence", "optimality", "bounds", "fps", "factor"}));
  verify->add_option("--scale", o.scale, "Scale the instance counts");
  verify->add_option("--factor", o.factor, "Factor file for the factor check");
  verify->add_option("--factor-tol", o.factor_tol, "Tolerance for the factor check");
  add_data_options(verify, o);
  add_common(verify, o);

  rec = json{{"schema", "pcv-result"}, {"schema_version", kSchemaVersion},
             {"tool_version", pcv_version()}};
  try {
    std::vector<std::string> rev(args.rbegin(), args.rend());
    app.parse(std::move(rev));
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    if (code == 0) return -1;  // --help or --version, already printed
    rec["status"] = "config-error";
    rec["error"] = e.what();
    return kExitConfig;
  }
  out_path = o.out;
  for (auto* sub : app.get_subcommands()) o.command = sub->get_name();
  rec["command"] = o.command;
  rec["config"] = o.to_json();
  try {
    int code = 0;
    if (o.command == "approximate") code = cmd_approximate(o, rec);
    if (o.command == "solve") code = cmd_solve(o, rec);
    if (o.command == "logdet") code = cmd_logdet(o, rec);
    if (o.command == "verify") code = cmd_verify(o, rec);
    rec["status"] = code == 0 ? "ok" : "fail";
    return code;
  } catch (const RunError& e) {
    rec["status"] = e.exit_code == kExitConfig ? "config-error" : "error";
    rec["error"] = e.message;
    return e.exit_code;
  } catch (const std::exception& e) {
    rec["status"] = "error";
    rec["error"] = e.what();
    return kExitFail;
  }
}

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw RunError{kExitConfig, "config: cannot open " + path};
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw RunError{kExitConfig, "config: " + path + ": " + e.what()};
  }
}

bool mentions(const std::vector<std::string>& args, const std::string& key) {
  const std::string flag = "--" + key;
  for (const auto& a : args)
    if (a == flag || a.rfind(flag + "=", 0) == 0) return true;
  return false;
}

// Accepts a bare config {"command", "options"} or a whole output record that
// carries one under "config". Options already given on the command line win.
std::vector<std::string> expand_config(const json& cfg_in, std::vector<std::string> user) {
  const json& cfg = cfg_in.contains("config") ? cfg_in["config"] : cfg_in;
  if (!cfg.is_object() || !cfg.contains("options") || !cfg["options"].is_object())
    throw RunError{kExitConfig, "config: expected an object with an \"options\" member"};
  std::string command = cfg.value("command", "");
  const bool user_has_command =
      !user.empty() && user.front().rfind("-", 0) != 0;
  if (user_has_command) {
    command = user.front();
    user.erase(user.begin());
  }
  if (command.empty()) throw RunError{kExitConfig, "config: no command given"};
  std::vector<std::string> out{command};
  for (const auto& [key, value] : cfg["options"].items()) {
    if (mentions(user, key)) continue;
    if (key == "suite") {
      if (command == "verify" && (user.empty() || user.front().rfind("-", 0) == 0))
        out.push_back(value.get<std::string>());
      continue;
    }
    if (value.is_boolean()) {
      if (value.get<bool>()) out.push_back("--" + key);
    } else if (value.is_array()) {
      if (value.empty()) continue;
      out.push_back("--" + key);
      for (const auto& v : value) out.push_back(v.is_string() ? v.get<std::string>() : v.dump());
    } else if (value.is_string()) {
      if (value.get<std::string>().empty()) continue;
      out.push_back("--" + key);
      out.push_back(value.get<std::string>());
    } else if (value.is_number()) {
      out.push_back("--" + key);
      out.push_back(value.dump());
    } else {
      throw RunError{kExitConfig, "config: option '" + key + "' has an unsupported type"};
    }
  }
  out.insert(out.end(), user.begin(), user.end());
  return out;
}

// Pulls --config out of the arguments and merges the file in.
std::vector<std::string> apply_config(std::vector<std::string> args) {
  std::optional<std::string> path;
  for (std::size_t k = 0; k < args.size(); ++k) {
    if (args[k] == "--config") {
      if (k + 1 >= args.size()) throw RunError{kExitConfig, "config: missing file name"};
      path = args[k + 1];
      args.erase(args.begin() + static_cast<std::ptrdiff_t>(k),
                 args.begin() + static_cast<std::ptrdiff_t>(k + 2));
      break;
    }
    if (args[k].rfind("--config=", 0) == 0) {
      path = args[k].substr(9);
      args.erase(args.begin() + static_cast<std::ptrdiff_t>(k));
      break;
    }
  }
  if (!path) return args;
  return expand_config(read_json_file(*path), std::move(args));
}

void emit(const json& rec, const std::string& path) {
  if (path.empty()) {
    std::cout << rec.dump(2) << '\n';
    return;
  }
  std::ofstream f(path);
  if (!f || !(f << rec.dump(2) << '\n'))
    std::cerr << "error: cannot write " << path << '\n';
}

int run_single(const std::vector<std::string>& args) {
  json rec;
  std::string out;
  int code;
  try {
    std::string dummy;
    code = run(apply_config(args), rec, out);
  } catch (const RunError& e) {
    std::cerr << "error: " << e.message << '\n';
    return e.exit_code;
  }
  if (code == -1) return 0;
  if (rec.contains("error")) std::cerr << "error: " << rec["error"].get<std::string>() << '\n';
  if (!(code == kExitConfig && !rec.contains("config"))) emit(rec, out);
  return code;
}

int run_batch(const std::vector<std::string>& args) {
  CLI::App app{"Run several config files", "pcv batch"};
  unsigned jobs = 1;
  std::vector<std::string> files;
  std::string out;
  app.add_option("--jobs", jobs, "Concurrent runs")->check(CLI::PositiveNumber);
  app.add_option("configs", files, "Config files")->required();
  app.add_option("--out", out, "Write the array of records here instead of stdout");
  try {
    std::vector<std::string> rev(args.rbegin(), args.rend());
    app.parse(std::move(rev));
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }
  std::vector<json> records(files.size());
  std::vector<int> codes(files.size(), 0);
  std::atomic<std::size_t> next{0};
  std::mutex err_mutex;
  auto worker = [&] {
    for (std::size_t k = next++; k < files.size(); k = next++) {
      json rec;
      std::string path;
      try {
        codes[k] = run(expand_config(read_json_file(files[k]), {}), rec, path);
        if (!path.empty()) emit(rec, path);
      } catch (const RunError& e) {
        codes[k] = e.exit_code;
        rec = json{{"schema", "pcv-result"}, {"schema_version", kSchemaVersion},
                   {"status", "config-error"}, {"error", e.message}};
      }
      rec["config_file"] = files[k];
      if (rec.contains("error")) {
        std::lock_guard lock(err_mutex);
        std::cerr << "error: " << files[k] << ": " << rec["error"].get<std::string>() << '\n';
      }
      records[k] = std::move(rec);
    }
  };
  {
    std::vector<std::jthread> pool;
    for (unsigned j = 0; j < std::min<std::size_t>(jobs, files.size()); ++j) pool.emplace_back(worker);
  }
  emit(json(records), out);
  int code = 0;
  for (int c : codes)
    if (c == kExitConfig) code = kExitConfig;
    else if (c != 0 && code == 0) code = kExitFail;
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  if (!args.empty() && args.front() == "batch") {
    args.erase(args.begin());
    return run_batch(args);
  }
  return run_single(args);
}
