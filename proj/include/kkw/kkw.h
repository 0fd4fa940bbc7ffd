/*
 * C interface to the Kaczmarz Kac walk library.
 *
 * Every fallible call returns a kkw_status. On failure the message for the
 * calling thread is available from kkw_last_error() until the next failing
 * call on that thread. Handles are opaque and owned by the caller, who
 * releases them with the matching *_destroy function (NULL is accepted).
 */
#ifndef KKW_KKW_H
#define KKW_KKW_H

#include <stddef.h>
#include <stdint.h>

#if defined(KKW_BUILDING_LIBRARY)
#define KKW_API __attribute__((visibility("default")))
#else
#define KKW_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum kkw_status {
    KKW_OK = 0,
    KKW_ERR_NULL_ARGUMENT = 1,
    KKW_ERR_INVALID_ARGUMENT = 2, /* bad shape, index, config value */
    KKW_ERR_DEGENERATE = 3,       /* parallel rows where the operation forbids them */
    KKW_ERR_NUMERICAL = 4,        /* blow-up, mass drift, non-finite data */
    KKW_ERR_IO = 5,
    KKW_ERR_CONFIG = 6,
    KKW_ERR_BUFFER_TOO_SMALL = 7,
    KKW_ERR_INTERNAL = 99
} kkw_status;

KKW_API const char* kkw_last_error(void);
KKW_API const char* kkw_status_name(kkw_status status);
KKW_API const char* kkw_version(void);

/* ---- linear systems ---------------------------------------------------- */

typedef struct kkw_system kkw_system;

/* Copies the row-major m x n matrix `a` and right-hand side `b`. When
 * normalize is nonzero each row (and its b entry) is scaled to unit length
 * first. `x_ref` (length n) may be NULL. */
KKW_API kkw_status kkw_system_create(size_t m, size_t n, const double* a, const double* b,
                                     const double* x_ref, int normalize, kkw_system** out);

/* Row-normalized standard Gaussian m x n system with b = A x_ref for a
 * Gaussian x_ref, redrawn while numerically rank deficient. */
KKW_API kkw_status kkw_system_random(size_t m, size_t n, uint64_t seed, kkw_system** out);

KKW_API kkw_status kkw_system_clone(const kkw_system* sys, kkw_system** out);
KKW_API void kkw_system_destroy(kkw_system* sys);

KKW_API size_t kkw_system_rows(const kkw_system* sys);
KKW_API size_t kkw_system_cols(const kkw_system* sys);

/* Copy out m*n matrix entries (row-major) / m rhs entries. */
KKW_API kkw_status kkw_system_matrix(const kkw_system* sys, double* out, size_t len);
KKW_API kkw_status kkw_system_rhs(const kkw_system* sys, double* out, size_t len);

/* Writes n descending singular values. */
KKW_API kkw_status kkw_system_singular_values(const kkw_system* sys, double* out, size_t len);
KKW_API kkw_status kkw_system_frobenius_sq(const kkw_system* sys, double* out);
KKW_API kkw_status kkw_system_residual_at_reference(const kkw_system* sys, double* out);

/* ---- the walk ---------------------------------------------------------- */

typedef struct kkw_walk_config {
    uint64_t seed;
    uint64_t steps;
    double degenerate_tol;   /* default 1e-12 */
    uint64_t snapshot_every; /* 0 selects the column count */
    int renormalize;         /* default 1 */
} kkw_walk_config;

typedef struct kkw_step_record {
    uint64_t k;
    size_t i;
    size_t j;
    double c;
    int skipped;
} kkw_step_record;

KKW_API kkw_walk_config kkw_walk_config_default(void);

/* One update of row j against row i, in place. */
KKW_API kkw_status kkw_walk_step(kkw_system* sys, size_t i, size_t j, const kkw_walk_config* cfg,
                                 kkw_step_record* out);

typedef struct kkw_walk_result kkw_walk_result;

/* Runs cfg->steps steps on a copy of sys; sys itself is left untouched. */
KKW_API kkw_status kkw_run_walk(const kkw_system* sys, const kkw_walk_config* cfg,
                                kkw_walk_result** out);
KKW_API void kkw_walk_result_destroy(kkw_walk_result* res);

KKW_API size_t kkw_walk_result_snapshot_count(const kkw_walk_result* res);
KKW_API size_t kkw_walk_result_record_count(const kkw_walk_result* res);
KKW_API size_t kkw_walk_result_skipped_count(const kkw_walk_result* res);
/* Step index and n singular values of snapshot `index`. */
KKW_API kkw_status kkw_walk_result_snapshot(const kkw_walk_result* res, size_t index,
                                            uint64_t* k, double* sigmas, size_t len,
                                            double* frob_sq);
KKW_API kkw_status kkw_walk_result_record(const kkw_walk_result* res, size_t index,
                                          kkw_step_record* out);
/* New handle holding the walked system. */
KKW_API kkw_status kkw_walk_result_final_system(const kkw_walk_result* res, kkw_system** out);
KKW_API kkw_status kkw_walk_result_write_snapshots_csv(const kkw_walk_result* res, const char* path);
KKW_API kkw_status kkw_walk_result_write_steps_csv(const kkw_walk_result* res, const char* path);

/* ---- theory ------------------------------------------------------------ */

typedef struct kkw_gain_report {
    double expected_norm_sq;
    double base_norm_sq;
    double bound_rhs;
    double sigma_sum;
    double sigma2_sum;
    double sigma_exact;
} kkw_gain_report;

KKW_API kkw_status kkw_expected_gain_exact(size_t m, size_t n, const double* a, const double* x,
                                           kkw_gain_report* out);
/* JSON object text; `*needed` receives the size including the terminator. */
KKW_API kkw_status kkw_gain_report_json(const kkw_gain_report* report, char* buf, size_t len,
                                        size_t* needed);

KKW_API kkw_status kkw_predict_linear(size_t n, double sigma0, double k, double* out);
KKW_API kkw_status kkw_predict_logistic(size_t n, double sigma0, double k, double* out);
KKW_API kkw_status kkw_logistic_ode_check(size_t n, double sigma0, double t_max, double* out);

/* ---- solver ------------------------------------------------------------ */

typedef struct kkw_solve_config {
    uint64_t seed;
    uint64_t max_iters;
    double target_residual;
    uint64_t record_every;
} kkw_solve_config;

typedef struct kkw_solve_trace kkw_solve_trace;

KKW_API kkw_solve_config kkw_solve_config_default(void);

/* x0 and x_out have length n; x_out may be NULL. */
KKW_API kkw_status kkw_kaczmarz_solve(const kkw_system* sys, const double* x0,
                                      const kkw_solve_config* cfg, double* x_out,
                                      kkw_solve_trace** trace);
KKW_API void kkw_solve_trace_destroy(kkw_solve_trace* trace);
KKW_API size_t kkw_solve_trace_length(const kkw_solve_trace* trace);
KKW_API int kkw_solve_trace_converged(const kkw_solve_trace* trace);
KKW_API kkw_status kkw_solve_trace_point(const kkw_solve_trace* trace, size_t index,
                                         uint64_t* iter, double* error_sq);
KKW_API kkw_status kkw_solve_trace_write_csv(const kkw_solve_trace* trace, const char* path);

/* ---- circle / mean field ----------------------------------------------- */

/* In-place particle step on `angles` (length n). *moved is set to 0 when the
 * pair was numerically parallel and nothing changed. */
KKW_API kkw_status kkw_circle_step(double* angles, size_t n, size_t i, size_t j, double tol,
                                   int* moved);
KKW_API kkw_status kkw_order_parameter_4(const double* angles, size_t n, double* out);

/* Density of `cells` values (multiple of 4) advanced in place from t = 0 to t_end. */
KKW_API kkw_status kkw_meanfield_integrate(double* density, size_t cells, double t_end, double dt);
KKW_API kkw_status kkw_meanfield_rhs(const double* density, size_t cells, double* rate);
/* Seeds 1/(2 pi) + eps cos(mode x) and returns the fitted decay rate. */
KKW_API kkw_status kkw_fourier_decay_rate(size_t cells, int mode, double eps, double t_end,
                                          double dt, double* out);

/* ---- experiments ------------------------------------------------------- */

typedef struct kkw_experiment kkw_experiment;

/* Number of registered experiments and their names. */
KKW_API size_t kkw_experiment_count(void);
KKW_API const char* kkw_experiment_name(size_t index);

/* Config preloaded with the defaults registered for `name`. */
KKW_API kkw_status kkw_experiment_create(const char* name, kkw_experiment** out);
KKW_API void kkw_experiment_destroy(kkw_experiment* exp);
/* Applies every "key = value" line of the file on top of the current config. */
KKW_API kkw_status kkw_experiment_load_config(kkw_experiment* exp, const char* path);
KKW_API kkw_status kkw_experiment_set(kkw_experiment* exp, const char* key, const char* value);
/* Config text (same format the loader reads). */
KKW_API kkw_status kkw_experiment_emit(const kkw_experiment* exp, char* buf, size_t len,
                                       size_t* needed);
KKW_API kkw_status kkw_experiment_run(kkw_experiment* exp);
/* report.json text of the last successful run. */
KKW_API kkw_status kkw_experiment_report(const kkw_experiment* exp, char* buf, size_t len,
                                         size_t* needed);
KKW_API size_t kkw_experiment_file_count(const kkw_experiment* exp);
KKW_API const char* kkw_experiment_file(const kkw_experiment* exp, size_t index);

#ifdef __cplusplus
}
#endif

#endif /* KKW_KKW_H */
