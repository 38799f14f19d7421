/* C interface to the pcv library. All handles are opaque; functions return a
 * pcv_status and leave a message for pcv_last_error() on failure. Messages
 * are per thread and valid until the next failing call on that thread. */
#ifndef PCV_PCV_H
#define PCV_PCV_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define PCV_API __declspec(dllexport)
#elif defined(__GNUC__)
#define PCV_API __attribute__((visibility("default")))
#else
#define PCV_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum pcv_status {
  PCV_OK = 0,
  PCV_ERR_INVALID_ARGUMENT = 1,
  PCV_ERR_PARSE = 2,
  PCV_ERR_EMPTY_DATASET = 3,
  PCV_ERR_NON_SPD = 4,
  PCV_ERR_BREAKDOWN = 5,
  PCV_ERR_CONFIG = 6,
  PCV_ERR_IO = 7,
  PCV_ERR_INTERNAL = 99
} pcv_status;

typedef struct pcv_dataset pcv_dataset;
typedef struct pcv_oracle pcv_oracle;
typedef struct pcv_factor pcv_factor;

PCV_API const char* pcv_version(void);
PCV_API const char* pcv_last_error(void);
/* Strings returned through char** out-parameters. */
PCV_API void pcv_free_string(char* s);

/* ---- datasets ---- */

typedef enum pcv_standardize {
  PCV_STANDARDIZE_FULL_FILE = 0, /* file statistics, then the first n rows */
  PCV_STANDARDIZE_SUBSAMPLE = 1, /* first n rows, then their statistics */
  PCV_STANDARDIZE_NONE = 2
} pcv_standardize;

/* n_max = 0 keeps every row; label_column may be NULL, a header name or a
 * zero-based index written in decimal. */
PCV_API pcv_status pcv_dataset_load_csv(const char* path, size_t n_max,
                                        const char* label_column, pcv_standardize mode,
                                        pcv_dataset** out);
PCV_API pcv_status pcv_dataset_synthetic(size_t n, size_t d, size_t clusters,
                                         double spread, uint64_t seed, pcv_dataset** out);
/* Row-major n x d points; labels may be NULL. Points are copied as given. */
PCV_API pcv_status pcv_dataset_from_points(const double* points, size_t n, size_t d,
                                           const double* labels, pcv_dataset** out);
PCV_API pcv_status pcv_dataset_load(const char* path, pcv_dataset** out);
PCV_API pcv_status pcv_dataset_save(const pcv_dataset* ds, const char* path);
PCV_API size_t pcv_dataset_size(const pcv_dataset* ds);
PCV_API size_t pcv_dataset_dim(const pcv_dataset* ds);
PCV_API int pcv_dataset_has_labels(const pcv_dataset* ds);
PCV_API pcv_status pcv_dataset_labels(const pcv_dataset* ds, double* out, size_t len);
PCV_API const char* pcv_dataset_provenance(const pcv_dataset* ds);
/* k vectors of length n written one after another into out (k * n values). */
PCV_API pcv_status pcv_response_vectors(const pcv_dataset* ds, size_t k, uint64_t seed,
                                        double* out, size_t len);
PCV_API void pcv_dataset_free(pcv_dataset* ds);

/* ---- matrix oracles ---- */

/* Gaussian kernel plus mu on the diagonal. The oracle keeps its own reference
 * to the dataset, so the dataset handle may be freed first. */
PCV_API pcv_status pcv_oracle_kernel(const pcv_dataset* ds, double mu, pcv_oracle** out);
/* Row-major symmetric n x n matrix, copied. */
PCV_API pcv_status pcv_oracle_dense(const double* a, size_t n, pcv_oracle** out);
PCV_API size_t pcv_oracle_size(const pcv_oracle* o);
/* Counted lookup. */
PCV_API pcv_status pcv_oracle_entry(const pcv_oracle* o, size_t i, size_t j, double* out);
PCV_API uint64_t pcv_oracle_lookup_count(const pcv_oracle* o);
PCV_API void pcv_oracle_reset_lookup_count(const pcv_oracle* o);
/* log det A from a dense factorization; n is limited to max_n. */
PCV_API pcv_status pcv_logdet_exact(const pcv_oracle* o, size_t max_n, double* out);
PCV_API void pcv_oracle_free(pcv_oracle* o);

/* ---- approximations ---- */

/* Marks r and c as "derive from n": r = floor(sqrt(n)), c = 10 q. */
#define PCV_AUTO ((size_t)-1)

typedef struct pcv_build_options {
  const char* method;   /* pc+v0, pc+v1/4, pc+v1/3, pc+v(q), vecchia, frangella, diaz */
  size_t r;             /* pivots, or PCV_AUTO */
  size_t q;             /* residual nonzeros per row (pc+v(q) and vecchia) */
  size_t c;             /* candidates, 0 = unrestricted, PCV_AUTO = 10 q */
  const char* pivot;    /* rpc, sds, cpc, fps, adaptive */
  const char* sparsity; /* omp, nn */
  uint64_t seed;
  double mu;            /* ridge of the kernel, used by frangella and diaz */
  unsigned threads;
  int compute_kappa;    /* nonzero: report log kappa when n <= kappa_max_n */
  size_t kappa_max_n;
} pcv_build_options;

typedef struct pcv_build_stats {
  size_t r;  /* pivots actually selected */
  size_t q;  /* q after resolving the method name */
  size_t c;
  size_t nonzeros;
  size_t clamped_rows;
  uint64_t lookups_pivots;
  uint64_t lookups_pattern;
  uint64_t lookups_build;
  uint64_t lookups_total;
  double seconds_pivots;
  double seconds_pattern;
  double seconds_build;
  double seconds_kappa;
  int has_log_kappa;
  double log_kappa; /* may be +inf */
} pcv_build_stats;

PCV_API void pcv_build_options_default(pcv_build_options* opts);
/* stats may be NULL. */
PCV_API pcv_status pcv_build(const pcv_oracle* o, const pcv_build_options* opts,
                             pcv_factor** out, pcv_build_stats* stats);
PCV_API size_t pcv_factor_size(const pcv_factor* f);
PCV_API const char* pcv_factor_method(const pcv_factor* f);
/* x = Ahat^+ b. */
PCV_API pcv_status pcv_factor_solve(const pcv_factor* f, const double* b, double* x,
                                    size_t n);
PCV_API pcv_status pcv_factor_logdet(const pcv_factor* f, double* out);
/* Only Vecchia-type factors can be stored. */
PCV_API pcv_status pcv_factor_save(const pcv_factor* f, const char* path);
PCV_API pcv_status pcv_factor_load(const char* path, pcv_factor** out);
PCV_API void pcv_factor_free(pcv_factor* f);

/* log kappa of a Vecchia-type factor against the oracle it approximates. */
PCV_API pcv_status pcv_kappa(const pcv_oracle* o, const pcv_factor* f, double* log_kappa,
                             int* finite);

/* ---- solvers ---- */

typedef struct pcv_pcg_result {
  size_t iterations;
  int converged;     /* 1 when the tolerance was met (or b = 0) */
  double residual;   /* final ||A x - b|| / ||b|| */
} pcv_pcg_result;

/* x0 and history may be NULL; history receives relative residuals for
 * t = 0..iterations and must hold max_iter + 1 values. */
PCV_API pcv_status pcv_pcg(const pcv_oracle* o, const pcv_factor* f, const double* b,
                           const double* x0, size_t n, double tol, size_t max_iter,
                           double* x, double* history, pcv_pcg_result* result);

typedef struct pcv_logdet_result {
  double direct;      /* log det Ahat */
  double correction;  /* mean of the probe quadratic forms */
  double estimate;    /* direct + correction */
} pcv_logdet_result;

/* samples may be NULL or hold t values. t = 0 gives the direct part only. */
PCV_API pcv_status pcv_logdet_stochastic(const pcv_oracle* o, const pcv_factor* f,
                                         size_t t, size_t m, uint64_t seed,
                                         unsigned threads, double* samples,
                                         pcv_logdet_result* out);

/* ---- verification ---- */

/* JSON report in *report (free with pcv_free_string); *passed is 0 or 1. */
PCV_API pcv_status pcv_verify_suite(const char* name, uint64_t seed, double scale,
                                    char** report, int* passed);
PCV_API pcv_status pcv_verify_factor(const pcv_oracle* o, const pcv_factor* f, double tol,
                                     char** report, int* passed);

#ifdef __cplusplus
}
#endif

#endif
