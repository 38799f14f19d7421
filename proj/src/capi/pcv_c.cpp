#include "pcv/pcv.h"

#include <cmath>
#include <cstring>
#include <limits>
#include <memory>
#include <new>
#include <string>

#include <json.hpp>

#include "pcv/approximation.hpp"
#include "pcv/error.hpp"
#include "pcv/kaporin.hpp"
#include "pcv/kernels_io.hpp"
#include "pcv/serialize.hpp"
#include "pcv/solvers.hpp"
#include "pcv/vecchia.hpp"
#include "pcv/verify.hpp"

struct pcv_dataset {
  std::shared_ptr<const pcv::Dataset> data;
};

struct pcv_oracle {
  std::shared_ptr<const pcv::Dataset> data;  // kept alive for kernel oracles
  std::unique_ptr<pcv::EntryOracle> oracle;
};

struct pcv_factor {
  std::string method;
  std::unique_ptr<pcv::Preconditioner> precond;
  std::optional<pcv::VecchiaFactor> factor;
};

namespace {

thread_local std::string last_error;

pcv_status to_status(pcv::ErrorCode c) {
  switch (c) {
    case pcv::ErrorCode::InvalidArgument: return PCV_ERR_INVALID_ARGUMENT;
    case pcv::ErrorCode::ParseError: return PCV_ERR_PARSE;
    case pcv::ErrorCode::EmptyDataset: return PCV_ERR_EMPTY_DATASET;
    case pcv::ErrorCode::NonSpdFactor: return PCV_ERR_NON_SPD;
    case pcv::ErrorCode::Breakdown: return PCV_ERR_BREAKDOWN;
    case pcv::ErrorCode::ConfigError: return PCV_ERR_CONFIG;
    case pcv::ErrorCode::IoError: return PCV_ERR_IO;
  }
  return PCV_ERR_INTERNAL;
}

template <typename Fn>
pcv_status guard(Fn&& fn) {
  try {
    fn();
    return PCV_OK;
  } catch (const pcv::Error& e) {
    last_error = e.what();
    return to_status(e.code());
  } catch (const std::bad_alloc&) {
    last_error = "out of memory";
  } catch (const std::exception& e) {
    last_error = e.what();
  } catch (...) {
    last_error = "unknown error";
  }
  return PCV_ERR_INTERNAL;
}

void need(const void* p, const char* what) {
  if (p == nullptr) pcv::fail(pcv::ErrorCode::InvalidArgument, std::string(what) + " is NULL");
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (out == nullptr) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

pcv::PivotRule parse_pivot(const std::string& s) {
  if (s == "rpc") return pcv::PivotRule::Rpc;
  if (s == "sds") return pcv::PivotRule::Sds;
  if (s == "cpc") return pcv::PivotRule::Cpc;
  if (s == "fps") return pcv::PivotRule::Fps;
  if (s == "adaptive") return pcv::PivotRule::AdaptiveSearch;
  pcv::fail(pcv::ErrorCode::ConfigError,
            "pivot: unknown value '" + s + "' (expected rpc, sds, cpc, fps, adaptive)");
}

pcv::SparsityRule parse_sparsity(const std::string& s) {
  if (s == "omp") return pcv::SparsityRule::OMP;
  if (s == "nn") return pcv::SparsityRule::NN;
  pcv::fail(pcv::ErrorCode::ConfigError,
            "sparsity: unknown value '" + s + "' (expected omp, nn)");
}

nlohmann::json report_json(const pcv::VerifyReport& r) {
  nlohmann::json checks = nlohmann::json::array();
  for (const auto& c : r.checks) {
    nlohmann::json j{{"name", c.name}, {"passed", c.passed}, {"cases", c.cases},
                     {"detail", c.detail}};
    // Infinite or NaN worst values are not representable in JSON.
    j["worst"] = std::isfinite(c.worst) ? nlohmann::json(c.worst) : nlohmann::json(nullptr);
    j["limit"] = c.limit;
    checks.push_back(std::move(j));
  }
  return {{"suite", r.suite}, {"passed", r.passed}, {"checks", checks}};
}

}  // namespace

extern "C" {

const char* pcv_version(void) { return "1.0.0"; }

const char* pcv_last_error(void) { return last_error.c_str(); }

void pcv_free_string(char* s) { std::free(s); }

pcv_status pcv_dataset_load_csv(const char* path, size_t n_max, const char* label_column,
                                pcv_standardize mode, pcv_dataset** out) {
  return guard([&] {
    need(path, "path");
    need(out, "out");
    pcv::CsvOptions o;
    o.n_max = n_max;
    if (label_column != nullptr) o.label_column = std::string(label_column);
    switch (mode) {
      case PCV_STANDARDIZE_FULL_FILE: o.standardize = pcv::StandardizeMode::FullFile; break;
      case PCV_STANDARDIZE_SUBSAMPLE: o.standardize = pcv::StandardizeMode::Subsample; break;
      case PCV_STANDARDIZE_NONE: o.standardize = pcv::StandardizeMode::None; break;
      default: pcv::fail(pcv::ErrorCode::InvalidArgument, "unknown standardize mode");
    }
    auto ds = std::make_shared<pcv::Dataset>(pcv::load_csv(path, o));
    *out = new pcv_dataset{std::move(ds)};
  });
}

pcv_status pcv_dataset_synthetic(size_t n, size_t d, size_t clusters, double spread,
                                 uint64_t seed, pcv_dataset** out) {
  return guard([&] {
    need(out, "out");
    auto ds = std::make_shared<pcv::Dataset>(
        pcv::synthetic_clusters(n, d, clusters, spread, seed));
    *out = new pcv_dataset{std::move(ds)};
  });
}

pcv_status pcv_dataset_from_points(const double* points, size_t n, size_t d,
                                   const double* labels, pcv_dataset** out) {
  return guard([&] {
    need(points, "points");
    need(out, "out");
    if (n == 0 || d == 0) pcv::fail(pcv::ErrorCode::EmptyDataset, "dataset has no points");
    auto ds = std::make_shared<pcv::Dataset>();
    ds->points = pcv::Matrix(n, d);
    std::copy(points, points + n * d, ds->points.data().begin());
    if (labels != nullptr) ds->labels = pcv::Vector(labels, labels + n);
    ds->provenance = "memory";
    *out = new pcv_dataset{std::move(ds)};
  });
}

pcv_status pcv_dataset_load(const char* path, pcv_dataset** out) {
  return guard([&] {
    need(path, "path");
    need(out, "out");
    *out = new pcv_dataset{std::make_shared<pcv::Dataset>(pcv::load_dataset(path))};
  });
}

pcv_status pcv_dataset_save(const pcv_dataset* ds, const char* path) {
  return guard([&] {
    need(ds, "dataset");
    need(path, "path");
    pcv::save_dataset(path, *ds->data);
  });
}

size_t pcv_dataset_size(const pcv_dataset* ds) { return ds ? ds->data->size() : 0; }
size_t pcv_dataset_dim(const pcv_dataset* ds) { return ds ? ds->data->dim() : 0; }
int pcv_dataset_has_labels(const pcv_dataset* ds) {
  return ds && ds->data->labels.has_value() ? 1 : 0;
}

pcv_status pcv_dataset_labels(const pcv_dataset* ds, double* out, size_t len) {
  return guard([&] {
    need(ds, "dataset");
    need(out, "out");
    if (!ds->data->labels) pcv::fail(pcv::ErrorCode::InvalidArgument, "dataset has no labels");
    if (len < ds->data->size())
      pcv::fail(pcv::ErrorCode::InvalidArgument, "label buffer too small");
    std::copy(ds->data->labels->begin(), ds->data->labels->end(), out);
  });
}

const char* pcv_dataset_provenance(const pcv_dataset* ds) {
  return ds ? ds->data->provenance.c_str() : "";
}

pcv_status pcv_response_vectors(const pcv_dataset* ds, size_t k, uint64_t seed, double* out,
                                size_t len) {
  return guard([&] {
    need(ds, "dataset");
    need(out, "out");
    const size_t n = ds->data->size();
    if (len < k * n) pcv::fail(pcv::ErrorCode::InvalidArgument, "output buffer too small");
    const auto vs = pcv::kernel_response_vectors(ds->data->points, k, seed);
    for (size_t t = 0; t < k; ++t) std::copy(vs[t].begin(), vs[t].end(), out + t * n);
  });
}

void pcv_dataset_free(pcv_dataset* ds) { delete ds; }

pcv_status pcv_oracle_kernel(const pcv_dataset* ds, double mu, pcv_oracle** out) {
  return guard([&] {
    need(ds, "dataset");
    need(out, "out");
    auto o = std::make_unique<pcv_oracle>();
    o->data = ds->data;
    o->oracle = std::make_unique<pcv::KernelOracle>(o->data->points, mu);
    *out = o.release();
  });
}

pcv_status pcv_oracle_dense(const double* a, size_t n, pcv_oracle** out) {
  return guard([&] {
    need(a, "matrix");
    need(out, "out");
    pcv::Matrix m(n, n);
    std::copy(a, a + n * n, m.data().begin());
    auto o = std::make_unique<pcv_oracle>();
    o->oracle = std::make_unique<pcv::DenseOracle>(pcv::DenseSym(std::move(m)));
    *out = o.release();
  });
}

size_t pcv_oracle_size(const pcv_oracle* o) { return o ? o->oracle->size() : 0; }

pcv_status pcv_oracle_entry(const pcv_oracle* o, size_t i, size_t j, double* out) {
  return guard([&] {
    need(o, "oracle");
    need(out, "out");
    if (i >= o->oracle->size() || j >= o->oracle->size())
      pcv::fail(pcv::ErrorCode::InvalidArgument, "index out of range");
    *out = o->oracle->entry(i, j);
  });
}

uint64_t pcv_oracle_lookup_count(const pcv_oracle* o) {
  return o ? o->oracle->lookup_count() : 0;
}

void pcv_oracle_reset_lookup_count(const pcv_oracle* o) {
  if (o) o->oracle->reset_lookup_count();
}

pcv_status pcv_logdet_exact(const pcv_oracle* o, size_t max_n, double* out) {
  return guard([&] {
    need(o, "oracle");
    need(out, "out");
    const size_t n = o->oracle->size();
    if (n > max_n)
      pcv::fail(pcv::ErrorCode::InvalidArgument,
                "exact log determinant limited to n <= " + std::to_string(max_n));
    const pcv::LdlFactor f = pcv::ldl_psd(pcv::materialize_uncounted(*o->oracle), 0.0);
    double s = 0.0;
    for (double d : f.d) {
      if (!(d > 0.0)) pcv::fail(pcv::ErrorCode::NonSpdFactor, "matrix is not positive definite");
      s += std::log(d);
    }
    *out = s;
  });
}

void pcv_oracle_free(pcv_oracle* o) { delete o; }

void pcv_build_options_default(pcv_build_options* opts) {
  if (opts == nullptr) return;
  opts->method = "pc+v1/4";
  opts->r = PCV_AUTO;
  opts->q = 0;
  opts->c = PCV_AUTO;
  opts->pivot = "rpc";
  opts->sparsity = "omp";
  opts->seed = 0;
  opts->mu = 0.0;
  opts->threads = 1;
  opts->compute_kappa = 0;
  opts->kappa_max_n = 2000;
}

pcv_status pcv_build(const pcv_oracle* o, const pcv_build_options* opts, pcv_factor** out,
                     pcv_build_stats* stats) {
  return guard([&] {
    need(o, "oracle");
    need(opts, "options");
    need(out, "out");
    need(opts->method, "method");
    const size_t n = o->oracle->size();
    const pcv::MethodSpec spec = pcv::parse_method(opts->method);
    pcv::ApproximationConfig cfg;
    cfg.method = spec.method;
    cfg.r = opts->r == PCV_AUTO ? pcv::floor_root(n, 0.5) : opts->r;
    cfg.q = spec.q_exponent ? (*spec.q_exponent == 0.0 ? 0 : pcv::floor_root(n, *spec.q_exponent))
                            : opts->q;
    cfg.c = opts->c == PCV_AUTO ? 10 * cfg.q : opts->c;
    cfg.pivot.rule = parse_pivot(opts->pivot ? opts->pivot : "rpc");
    cfg.pivot.seed = opts->seed;
    cfg.sparsity = parse_sparsity(opts->sparsity ? opts->sparsity : "omp");
    cfg.mu = opts->mu;
    cfg.threads = std::max(1u, opts->threads);
    cfg.compute_kappa = opts->compute_kappa != 0;
    cfg.kappa_max_n = opts->kappa_max_n;
    pcv::Approximation ap = pcv::build_approximation(*o->oracle, cfg);
    if (stats != nullptr) {
      const auto& s = ap.stats;
      *stats = pcv_build_stats{};
      stats->r = s.rank;
      stats->q = cfg.q;
      stats->c = cfg.c;
      stats->nonzeros = s.nonzeros;
      stats->clamped_rows = s.clamped_rows;
      stats->lookups_pivots = s.lookups_pivots;
      stats->lookups_pattern = s.lookups_pattern;
      stats->lookups_build = s.lookups_build;
      stats->lookups_total = s.lookups_total;
      stats->seconds_pivots = s.seconds_pivots;
      stats->seconds_pattern = s.seconds_pattern;
      stats->seconds_build = s.seconds_build;
      stats->seconds_kappa = s.seconds_kappa;
      stats->has_log_kappa = s.log_kappa.has_value() ? 1 : 0;
      stats->log_kappa = s.log_kappa.value_or(0.0);
    }
    auto f = std::make_unique<pcv_factor>();
    f->method = spec.name;
    f->precond = std::move(ap.preconditioner);
    f->factor = std::move(ap.factor);
    *out = f.release();
  });
}

size_t pcv_factor_size(const pcv_factor* f) { return f ? f->precond->size() : 0; }

const char* pcv_factor_method(const pcv_factor* f) { return f ? f->method.c_str() : ""; }

pcv_status pcv_factor_solve(const pcv_factor* f, const double* b, double* x, size_t n) {
  return guard([&] {
    need(f, "factor");
    need(b, "b");
    need(x, "x");
    if (n != f->precond->size()) pcv::fail(pcv::ErrorCode::InvalidArgument, "size mismatch");
    const pcv::Vector y = f->precond->solve(std::span<const double>(b, n));
    std::copy(y.begin(), y.end(), x);
  });
}

pcv_status pcv_factor_logdet(const pcv_factor* f, double* out) {
  return guard([&] {
    need(f, "factor");
    need(out, "out");
    *out = f->precond->logdet();
  });
}

pcv_status pcv_factor_save(const pcv_factor* f, const char* path) {
  return guard([&] {
    need(f, "factor");
    need(path, "path");
    if (!f->factor)
      pcv::fail(pcv::ErrorCode::InvalidArgument,
                "only Vecchia-type factors can be saved (method " + f->method + ")");
    pcv::save_factor(path, *f->factor);
  });
}

pcv_status pcv_factor_load(const char* path, pcv_factor** out) {
  return guard([&] {
    need(path, "path");
    need(out, "out");
    auto f = std::make_unique<pcv_factor>();
    f->factor = pcv::load_factor(path);
    f->precond = std::make_unique<pcv::VecchiaPreconditioner>(*f->factor);
    f->method = "file";
    *out = f.release();
  });
}

void pcv_factor_free(pcv_factor* f) { delete f; }

pcv_status pcv_kappa(const pcv_oracle* o, const pcv_factor* f, double* log_kappa,
                     int* finite) {
  return guard([&] {
    need(o, "oracle");
    need(f, "factor");
    need(log_kappa, "log_kappa");
    if (!f->factor)
      pcv::fail(pcv::ErrorCode::InvalidArgument, "log kappa needs a Vecchia-type factor");
    const pcv::KaporinReport r = pcv::kappa_from_factor(*o->oracle, *f->factor);
    *log_kappa = r.log_kappa;
    if (finite) *finite = r.finite ? 1 : 0;
  });
}

pcv_status pcv_pcg(const pcv_oracle* o, const pcv_factor* f, const double* b,
                   const double* x0, size_t n, double tol, size_t max_iter, double* x,
                   double* history, pcv_pcg_result* result) {
  return guard([&] {
    need(o, "oracle");
    need(f, "factor");
    need(b, "b");
    need(x, "x");
    if (n != o->oracle->size() || n != f->precond->size())
      pcv::fail(pcv::ErrorCode::InvalidArgument, "size mismatch");
    pcv::PcgOptions po;
    po.tol = tol;
    po.max_iter = max_iter;
    if (x0 != nullptr) po.x0.assign(x0, x0 + n);
    const pcv::MatVec mv = pcv::make_matvec(*o->oracle);
    const pcv::PcgTrace tr = pcv::pcg(mv, *f->precond, std::span<const double>(b, n), po);
    std::copy(tr.x.begin(), tr.x.end(), x);
    if (history != nullptr)
      std::copy(tr.relative_residuals.begin(), tr.relative_residuals.end(), history);
    if (result != nullptr) {
      result->iterations = tr.iterations;
      result->converged = tr.termination != pcv::PcgTermination::MaxIterations ? 1 : 0;
      result->residual = tr.relative_residuals.back();
    }
  });
}

pcv_status pcv_logdet_stochastic(const pcv_oracle* o, const pcv_factor* f, size_t t,
                                 size_t m, uint64_t seed, unsigned threads, double* samples,
                                 pcv_logdet_result* out) {
  return guard([&] {
    need(o, "oracle");
    need(f, "factor");
    need(out, "out");
    if (o->oracle->size() != f->precond->size())
      pcv::fail(pcv::ErrorCode::InvalidArgument, "size mismatch");
    const pcv::MatVec mv = pcv::make_matvec(*o->oracle);
    const pcv::LogdetEstimate e =
        pcv::logdet_stochastic(mv, *f->precond, t, m, seed, std::max(1u, threads));
    if (samples != nullptr) std::copy(e.samples.begin(), e.samples.end(), samples);
    out->direct = e.direct;
    out->correction = e.correction;
    out->estimate = e.estimate;
  });
}

pcv_status pcv_verify_suite(const char* name, uint64_t seed, double scale, char** report,
                            int* passed) {
  return guard([&] {
    need(name, "name");
    need(report, "report");
    if (!(scale > 0.0)) pcv::fail(pcv::ErrorCode::InvalidArgument, "scale must be positive");
    const pcv::VerifyReport r = pcv::run_suite(name, {seed, scale});
    *report = dup_string(report_json(r).dump());
    if (passed) *passed = r.passed ? 1 : 0;
  });
}

pcv_status pcv_verify_factor(const pcv_oracle* o, const pcv_factor* f, double tol,
                             char** report, int* passed) {
  return guard([&] {
    need(o, "oracle");
    need(f, "factor");
    need(report, "report");
    if (!f->factor)
      pcv::fail(pcv::ErrorCode::InvalidArgument, "verification needs a Vecchia-type factor");
    const pcv::VerifyReport r = pcv::verify_factor(*o->oracle, *f->factor, tol);
    *report = dup_string(report_json(r).dump());
    if (passed) *passed = r.passed ? 1 : 0;
  });
}

}  // extern "C"
