/* C interface to the adaprox library.
 *
 * Every function returns an adaprox_status; on failure the message is
 * available from adaprox_last_error() until the next call on the same thread.
 * Objects are opaque handles released with the matching *_free function.
 * Strings returned through char** are released with adaprox_string_free.
 */
#ifndef ADAPROX_ADAPROX_H
#define ADAPROX_ADAPROX_H

#include <stddef.h>
#include <stdint.h>

#if defined(ADAPROX_BUILDING_LIBRARY)
#define ADAPROX_API __attribute__((visibility("default")))
#else
#define ADAPROX_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum adaprox_status {
  ADAPROX_OK = 0,
  ADAPROX_E_ARGUMENT = 1,
  ADAPROX_E_STATE = 2,
  ADAPROX_E_UNSUPPORTED = 3,
  ADAPROX_E_DEGENERATE_DATA = 4,
  ADAPROX_E_CONFIG = 5,
  ADAPROX_E_IO = 6,
  ADAPROX_E_PARSE = 7,
  ADAPROX_E_NUMERICAL = 8,
  ADAPROX_E_INTERNAL = 9
} adaprox_status;

typedef enum adaprox_controller {
  ADAPROX_CONTROLLER_NORM = 0,
  ADAPROX_CONTROLLER_IP = 1,
  ADAPROX_CONTROLLER_GEOMETRIC = 2,
  ADAPROX_CONTROLLER_ORACLE = 3
} adaprox_controller;

typedef struct adaprox_problem adaprox_problem;
typedef struct adaprox_prox adaprox_prox;
typedef struct adaprox_trace adaprox_trace;

ADAPROX_API const char* adaprox_version(void);
ADAPROX_API const char* adaprox_last_error(void);
ADAPROX_API const char* adaprox_status_name(adaprox_status s);
ADAPROX_API void adaprox_string_free(char* s);

/* Problems */
ADAPROX_API adaprox_status adaprox_quadratic_random(int64_t dimension, double mu, double lipschitz, double sigma,
                                                    size_t pool_size, uint64_t seed, adaprox_problem** out);
/* q is d x d column-major, pool is d x pool_size column-major. */
ADAPROX_API adaprox_status adaprox_quadratic_create(int64_t dimension, const double* q, const double* b,
                                                    const double* pool, size_t pool_size, adaprox_problem** out);
/* lambda < 0 selects the default 1/N. */
ADAPROX_API adaprox_status adaprox_logistic_load(const char* path, double lambda, adaprox_problem** out);
ADAPROX_API void adaprox_problem_free(adaprox_problem* p);
ADAPROX_API adaprox_status adaprox_problem_dimension(const adaprox_problem* p, int64_t* out);
ADAPROX_API adaprox_status adaprox_problem_samples(const adaprox_problem* p, size_t* out);
ADAPROX_API adaprox_status adaprox_problem_value(const adaprox_problem* p, const double* x, double* out);
ADAPROX_API adaprox_status adaprox_problem_gradient(const adaprox_problem* p, const double* x, double* out);
/* Writes the default regularizer of the problem (l1 for logistic, zero otherwise). */
ADAPROX_API adaprox_status adaprox_problem_regularizer(const adaprox_problem* p, adaprox_prox** out);

/* Regularizers */
ADAPROX_API adaprox_status adaprox_prox_zero(int64_t dimension, adaprox_prox** out);
ADAPROX_API adaprox_status adaprox_prox_l1(int64_t dimension, double weight, adaprox_prox** out);
ADAPROX_API adaprox_status adaprox_prox_nonneg(int64_t dimension, adaprox_prox** out);
ADAPROX_API adaprox_status adaprox_prox_box(int64_t dimension, const double* lo, const double* hi,
                                            adaprox_prox** out);
ADAPROX_API adaprox_status adaprox_prox_halfspace(int64_t dimension, const double* normal, double offset,
                                                  adaprox_prox** out);
ADAPROX_API void adaprox_prox_free(adaprox_prox* h);
ADAPROX_API adaprox_status adaprox_prox_apply(const adaprox_prox* h, double alpha, const double* z, double* out);
/* +inf outside the feasible set of an indicator. */
ADAPROX_API adaprox_status adaprox_prox_evaluate(const adaprox_prox* h, const double* x, double* out);

/* Solver */
typedef struct adaprox_solver_options {
  adaprox_controller controller;
  /* eta (NORM, ORACLE), beta (IP) or gamma (GEOMETRIC). */
  double parameter;
  /* alpha <= 0 selects (1 - theory_eta) / L. */
  double alpha;
  double theory_eta;
  double max_epochs;
  double step_tolerance;
  uint64_t seed;
  size_t record_every;
  size_t initial_batch;
  /* 0 = no iteration limit. */
  size_t max_iterations;
  /* 0 = no cap beyond N. */
  size_t cap;
  int resample_all;
  /* NaN leaves phi_gap undefined. */
  double phi_star;
} adaprox_solver_options;

typedef struct adaprox_record {
  size_t iteration;
  size_t batch_size;
  uint64_t cumulative_samples;
  double effective_gradient_evaluations;
  double phi;
  double phi_gap;
  double step_norm_over_alpha;
  double trial_step_norm_over_alpha;
  int resampled;
  double wall_ms;
} adaprox_record;

ADAPROX_API void adaprox_solver_options_init(adaprox_solver_options* opts);
/* x0 may be NULL (origin). */
ADAPROX_API adaprox_status adaprox_solve(const adaprox_problem* p, const adaprox_prox* h,
                                         const adaprox_solver_options* opts, const double* x0, adaprox_trace** out);
ADAPROX_API void adaprox_trace_free(adaprox_trace* t);
ADAPROX_API size_t adaprox_trace_length(const adaprox_trace* t);
ADAPROX_API adaprox_status adaprox_trace_record(const adaprox_trace* t, size_t i, adaprox_record* out);
/* Copies the final iterate (problem dimension entries). */
ADAPROX_API adaprox_status adaprox_trace_solution(const adaprox_trace* t, double* x);
/* "step_tolerance", "sample_budget", "iteration_limit" or "degenerate_decrease". */
ADAPROX_API const char* adaprox_trace_termination(const adaprox_trace* t);

/* Experiments. config_json is the experiment config text; overrides_json may
 * be NULL or an object with any of controller, eta, beta, gamma, alpha, seed,
 * max_epochs, out, jobs. ADAPROX_E_NUMERICAL is returned when any cell hit a
 * numerical failure; *summary_json is still written in that case. */
ADAPROX_API adaprox_status adaprox_run_experiment(const char* config_json, const char* overrides_json,
                                                  char** summary_json);
ADAPROX_API adaprox_status adaprox_compute_reference(const char* config_json, const char* overrides_json,
                                                     char** reference_json);
/* *files_json receives a JSON list of written paths. */
ADAPROX_API adaprox_status adaprox_emit_plot_data(const char* directory, char** files_json);

/* Verification suites: "linear", "sublinear", "eq_test", "figure1".
 * options_json may be NULL. *passed is set to 0 or 1. */
ADAPROX_API adaprox_status adaprox_verify(const char* suite, const char* options_json, char** report_json,
                                          int* passed);

#ifdef __cplusplus
}
#endif

#endif
