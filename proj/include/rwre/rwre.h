/* rwre: random walks in i.i.d. random environments on Z. */
#ifndef RWRE_RWRE_H
#define RWRE_RWRE_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define RWRE_API __declspec(dllexport)
#elif defined(__GNUC__)
#define RWRE_API __attribute__((visibility("default")))
#else
#define RWRE_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum rwre_status {
  RWRE_OK = 0,
  RWRE_E_PARSE = 1,
  RWRE_E_INVALID_ARGUMENT = 2,
  RWRE_E_PRECONDITION = 3,
  RWRE_E_OUT_OF_RANGE = 4,
  RWRE_E_NOT_CONVERGED = 5,
  RWRE_E_NO_ROOT = 6,
  RWRE_E_INTERNAL = 7
} rwre_status;

typedef struct rwre_law rwre_law;
typedef struct rwre_step rwre_step;
typedef struct rwre_window rwre_window;
typedef struct rwre_overshoot rwre_overshoot;
typedef struct rwre_samples rwre_samples;
typedef struct rwre_divergence rwre_divergence;

RWRE_API const char* rwre_version(void);
RWRE_API const char* rwre_status_string(int status);
/* Message of the last failing call on this thread; "" after success. */
RWRE_API const char* rwre_last_error(void);

/* ---- environment laws ---- */

/* constant:p | discrete:w@omega,... | beta:a,b  (numbers may be n/d) */
RWRE_API int rwre_law_parse(const char* text, rwre_law** out);
RWRE_API void rwre_law_free(rwre_law* law);
/* Canonical text. Writes at most cap bytes including the terminator; *needed
   receives the full length plus one. */
RWRE_API int rwre_law_to_string(const rwre_law* law, char* buf, size_t cap, size_t* needed);

RWRE_API int rwre_moment_rho(const rwre_law* law, double u, double* out);
RWRE_API int rwre_mean_log_rho(const rwre_law* law, double* out);
/* *found = 0 when there is no root below cap. */
RWRE_API int rwre_kappa_root(const rwre_law* law, double tol, double* kappa, int* found);

enum { RWRE_DIRECTION_RIGHT = 0, RWRE_DIRECTION_LEFT = 1, RWRE_DIRECTION_RECURRENT = 2 };
enum {
  RWRE_AVERAGED_YES = 0,
  RWRE_AVERAGED_NO = 1,
  RWRE_AVERAGED_BOUNDARY_UNRESOLVED = 2,
  RWRE_AVERAGED_NOT_APPLICABLE = 3
};

typedef struct rwre_regime {
  double mean_log_rho;
  double mean_rho;
  double mean_inv_rho;
  int direction;
  double speed;
  int ballistic;
  int quenched_strongly_transient;
  int averaged_strongly_transient;
  int has_kappa;
  double kappa;
  int has_rho_log_rho; /* set only on the E[rho] = 1 boundary */
  int rho_log_rho_finite;
  double rho_log_rho;
} rwre_regime;

RWRE_API int rwre_classify(const rwre_law* law, rwre_regime* out);
RWRE_API int rwre_speed_et1(const rwre_law* law, double* speed, double* e_t1);

/* ---- windows ---- */

RWRE_API int rwre_window_sample(const rwre_law* law, uint64_t seed, int64_t lo, int64_t hi,
                                rwre_window** out);
/* Window from explicit values omega[0..n) placed at lo..lo+n-1. */
RWRE_API int rwre_window_from_values(int64_t lo, const double* omega, size_t n, rwre_window** out);
RWRE_API void rwre_window_free(rwre_window* w);
RWRE_API int rwre_window_bounds(const rwre_window* w, int64_t* lo, int64_t* hi);
RWRE_API int rwre_window_omega(const rwre_window* w, int64_t x, double* out);

RWRE_API int rwre_cascade(const rwre_window* w, int64_t i, int64_t j, double* pi, double* r);
RWRE_API int rwre_hitting_prob(const rwre_window* w, int64_t x, int64_t a, int64_t b, double* p_left,
                               double* p_right);
RWRE_API int rwre_absorption_oracle(const rwre_window* w, int64_t a, int64_t b, int64_t x, double* p_left,
                                    double* expected_time);

/* ---- series on the environment determined by (law, seed) ---- */

typedef struct rwre_series_options {
  double tol;
  int64_t horizon;
  int quiet_run;
} rwre_series_options;

typedef struct rwre_series {
  double value;
  double remainder_bound;
  int64_t terms_used;
  int converged;
  int heuristic_bound;
} rwre_series;

enum { RWRE_HIT_RIGHT = 0, RWRE_HIT_LEFT = 1 };

/* opt may be NULL for defaults (tol 1e-12, horizon 1e6, quiet run 32). */
RWRE_API int rwre_r_tail(const rwre_law* law, uint64_t seed, int64_t i, const rwre_series_options* opt,
                         rwre_series* out);
RWRE_API int rwre_expected_hit(const rwre_law* law, uint64_t seed, int64_t x, int dir,
                               const rwre_series_options* opt, rwre_series* out);
RWRE_API int rwre_expected_hit_window(const rwre_window* w, int64_t x, int dir, const rwre_series_options* opt,
                                      rwre_series* out);
RWRE_API int rwre_conditioned_env(const rwre_law* law, uint64_t seed, int64_t hi, const rwre_series_options* opt,
                                  rwre_window** out);
RWRE_API int rwre_conditioned_return_expectation(const rwre_law* law, uint64_t seed,
                                                 const rwre_series_options* opt, rwre_series* out);

typedef struct rwre_return_decomposition {
  double omega0;
  double p_return;
  double e_return_indicator;
  double e_left_hit;
  double p_right_return;
  double e_cond_right;
  double e_return_given_return;
  double r1;
  double e_return_walk;
  double e_return_given_return_walk;
  int converged;
} rwre_return_decomposition;

RWRE_API int rwre_return_decompose(const rwre_law* law, uint64_t seed, const rwre_series_options* opt,
                                       rwre_return_decomposition* out);

/* ---- increment laws ---- */

/* discrete:w@v,... | lattice:w@k,...[;a=x|;a=ln:x] | logrho:<law> */
RWRE_API int rwre_step_parse(const char* text, rwre_step** out);
RWRE_API void rwre_step_free(rwre_step* s);
RWRE_API int rwre_step_to_string(const rwre_step* s, char* buf, size_t cap, size_t* needed);
RWRE_API int rwre_step_mean(const rwre_step* s, double* out);
RWRE_API int rwre_step_spacing(const rwre_step* s, double* spacing, int* is_lattice);
RWRE_API int rwre_gamma_root(const rwre_step* s, double tol, double* out);
/* Copies at most cap tilted weights into q; *count receives the number of atoms. */
RWRE_API int rwre_tilt(const rwre_step* s, double gamma, double* q, size_t cap, size_t* count, double* mean_q);

typedef struct rwre_estimate {
  double value;
  double std_error;
  int64_t n;
  char method[40];
  uint64_t seed;
  double error_budget;
  unsigned workers;
  double sample_min;
  double sample_max;
} rwre_estimate;

enum { RWRE_SUP_IMPORTANCE = 0, RWRE_SUP_NAIVE = 1 };

RWRE_API int rwre_sup_tail(const rwre_step* s, double t, int64_t n, uint64_t seed, int method, double censor_eps,
                           unsigned workers, rwre_estimate* out);
RWRE_API int rwre_phi(const rwre_step* s, double t, int64_t n, uint64_t seed, unsigned workers,
                      rwre_estimate* out);

typedef struct rwre_wald {
  double mean_ladder;
  double mean_tau;
  double drift_q;
  double mean_residual;
  double residual_se;
} rwre_wald;

RWRE_API int rwre_overshoot_run(const rwre_step* s, int64_t k_lo, int64_t k_hi, int64_t n, uint64_t seed,
                                unsigned workers, rwre_overshoot** out);
RWRE_API void rwre_overshoot_free(rwre_overshoot* o);
RWRE_API size_t rwre_overshoot_rows(const rwre_overshoot* o);
RWRE_API int rwre_overshoot_row(const rwre_overshoot* o, size_t i, int64_t* k, rwre_estimate* scaled);
RWRE_API size_t rwre_overshoot_pmf_size(const rwre_overshoot* o);
RWRE_API int rwre_overshoot_pmf(const rwre_overshoot* o, size_t i, int64_t* units, double* freq);
RWRE_API int rwre_overshoot_info(const rwre_overshoot* o, double* gamma, double* spacing, rwre_wald* wald);

/* ---- walk simulation ---- */

RWRE_API int rwre_speed_estimate(const rwre_law* law, int64_t horizon, int64_t reps, uint64_t seed,
                                 unsigned workers, rwre_estimate* out);

enum { RWRE_CONDITIONED_H_TRANSFORM = 0, RWRE_CONDITIONED_REJECTION = 1 };

/* T_0 from 1 conditioned on T_0 < inf, in the environment (law, env_seed). */
RWRE_API int rwre_conditioned_sample(const rwre_law* law, uint64_t env_seed, int64_t n, uint64_t seed, int mode,
                                     int64_t cap, double escape_eps, unsigned workers, rwre_samples** out);
RWRE_API void rwre_samples_free(rwre_samples* s);
RWRE_API size_t rwre_samples_size(const rwre_samples* s);
RWRE_API const int64_t* rwre_samples_data(const rwre_samples* s);
RWRE_API int rwre_samples_info(const rwre_samples* s, int64_t* censored, int64_t* edge_hits, int64_t* discarded,
                               int64_t* edge);

enum { RWRE_RETURN_QUENCHED = 0, RWRE_RETURN_AVERAGED = 1 };
enum { RWRE_STATISTIC_FORMULA = 0, RWRE_STATISTIC_WALK = 1 };

typedef struct rwre_return_options {
  int mode;
  int statistic;
  uint64_t env_seed;
  int64_t n_env;
  int64_t n_walk;
  double tol;
  int64_t cap;
  double escape_eps;
  unsigned workers;
} rwre_return_options;

typedef struct rwre_return_result {
  rwre_estimate estimate;
  int theory_infinite;
  int64_t failed_environments;
  int has_quenched;
  rwre_return_decomposition quenched;
  int has_walk;
  rwre_estimate walk_conditional;
  rwre_estimate walk_p_return;
} rwre_return_result;

RWRE_API void rwre_return_options_default(rwre_return_options* opt);
RWRE_API int rwre_return_conditional(const rwre_law* law, uint64_t seed, const rwre_return_options* opt,
                                     rwre_return_result* out);

typedef struct rwre_running_point {
  int64_t n;
  double mean;
  double std_error;
} rwre_running_point;

typedef struct rwre_tail_point {
  double t;
  double p_hat;
  double scaled;
} rwre_tail_point;

typedef struct rwre_divergence_summary {
  double hill_index;
  double hill_xi;
  int64_t hill_k;
  double hill_threshold;
  double tail_floor;
  double loglog_slope;
  double loglog_intercept;
  size_t loglog_points;
  int has_kappa;
  double kappa;
  int64_t failed_environments;
  int theory_infinite;
} rwre_divergence_summary;

/* schedule/grid may be NULL to use {1e3, 1e4, 1e5} and {10, 100, 1000}. */
RWRE_API int rwre_divergence_run(const rwre_law* law, uint64_t seed, const int64_t* schedule, size_t n_schedule,
                                 const double* grid, size_t n_grid, double hill_fraction, double tol,
                                 unsigned workers, rwre_divergence** out);
RWRE_API void rwre_divergence_free(rwre_divergence* d);
RWRE_API int rwre_divergence_summary_get(const rwre_divergence* d, rwre_divergence_summary* out);
RWRE_API size_t rwre_divergence_running_size(const rwre_divergence* d);
RWRE_API int rwre_divergence_running(const rwre_divergence* d, size_t i, rwre_running_point* out);
RWRE_API size_t rwre_divergence_tail_size(const rwre_divergence* d);
RWRE_API int rwre_divergence_tail(const rwre_divergence* d, size_t i, rwre_tail_point* out);

/* ---- statistics ---- */

RWRE_API int rwre_ks_two_sample(const double* a, size_t n, const double* b, size_t m, double alpha,
                                double* statistic, double* critical);

#ifdef __cplusplus
}
#endif

#endif
