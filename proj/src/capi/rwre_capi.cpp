#include "rwre/rwre.h"

#include <algorithm>
#include <cstring>
#include <memory>
#include <new>
#include <string>

#include "rwre/env.hpp"
#include "rwre/error.hpp"
#include "rwre/exact.hpp"
#include "rwre/ladder.hpp"
#include "rwre/mc.hpp"
#include "rwre/stats.hpp"

#ifndef RWRE_VERSION
#define RWRE_VERSION "0.0.0"
#endif

struct rwre_law {
  std::shared_ptr<const rwre::EnvLaw> law;
};
struct rwre_step {
  rwre::StepLaw step;
};
struct rwre_window {
  rwre::EnvWindow window;
};
struct rwre_overshoot {
  rwre::OvershootResult result;
};
struct rwre_samples {
  rwre::ConditionedSamples samples;
};
struct rwre_divergence {
  rwre::DivergenceReport report;
};

namespace {

thread_local std::string g_last_error;

template <class Fn>
int guarded(Fn&& fn) {
  try {
    fn();
    g_last_error.clear();
    return RWRE_OK;
  } catch (const rwre::Error& e) {
    g_last_error = e.what();
    return static_cast<int>(e.code());
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
    return RWRE_E_INTERNAL;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return RWRE_E_INTERNAL;
  } catch (...) {
    g_last_error = "unknown failure";
    return RWRE_E_INTERNAL;
  }
}

void need(const void* p, const char* what) {
  if (p == nullptr) rwre::fail(rwre::ErrorCode::kInvalidArgument, std::string(what) + " is null");
}

rwre::SeriesOptions series_options(const rwre_series_options* opt) {
  rwre::SeriesOptions s;
  if (opt != nullptr) {
    if (opt->tol > 0.0) s.tol = opt->tol;
    if (opt->horizon > 0) s.horizon = opt->horizon;
    if (opt->quiet_run > 0) s.quiet_run = opt->quiet_run;
  }
  return s;
}

void to_c(const rwre::SeriesValue& v, rwre_series* out) {
  out->value = v.value;
  out->remainder_bound = v.remainder_bound;
  out->terms_used = v.terms_used;
  out->converged = v.converged ? 1 : 0;
  out->heuristic_bound = v.heuristic_bound ? 1 : 0;
}

void to_c(const rwre::Estimate& e, rwre_estimate* out) {
  out->value = e.value;
  out->std_error = e.std_error;
  out->n = e.n;
  std::memset(out->method, 0, sizeof out->method);
  std::strncpy(out->method, e.method.c_str(), sizeof out->method - 1);
  out->seed = e.seed;
  out->error_budget = e.error_budget;
  out->workers = e.workers;
  out->sample_min = e.sample_min;
  out->sample_max = e.sample_max;
}

void to_c(const rwre::ReturnDecomposition& d, rwre_return_decomposition* out) {
  out->omega0 = d.omega0;
  out->p_return = d.p_return;
  out->e_return_indicator = d.e_return_indicator;
  out->e_left_hit = d.e_left_hit;
  out->p_right_return = d.p_right_return;
  out->e_cond_right = d.e_cond_right;
  out->e_return_given_return = d.e_return_given_return;
  out->r1 = d.r1;
  out->e_return_walk = d.e_return_walk;
  out->e_return_given_return_walk = d.e_return_given_return_walk;
  out->converged = d.converged ? 1 : 0;
}

void copy_text(const std::string& s, char* buf, size_t cap, size_t* needed) {
  if (needed != nullptr) *needed = s.size() + 1;
  if (buf != nullptr && cap > 0) {
    const size_t n = std::min(cap - 1, s.size());
    std::memcpy(buf, s.data(), n);
    buf[n] = '\0';
  }
}

unsigned workers_or_one(unsigned w) { return w == 0 ? 1 : w; }

}  // namespace

extern "C" {

const char* rwre_version(void) { return RWRE_VERSION; }

const char* rwre_status_string(int status) {
  switch (status) {
    case RWRE_OK: return "ok";
    case RWRE_E_PARSE: return "parse error";
    case RWRE_E_INVALID_ARGUMENT: return "invalid argument";
    case RWRE_E_PRECONDITION: return "precondition violated";
    case RWRE_E_OUT_OF_RANGE: return "index out of range";
    case RWRE_E_NOT_CONVERGED: return "not converged";
    case RWRE_E_NO_ROOT: return "no root";
    case RWRE_E_INTERNAL: return "internal error";
    default: return "unknown status";
  }
}

const char* rwre_last_error(void) { return g_last_error.c_str(); }

int rwre_law_parse(const char* text, rwre_law** out) {
  return guarded([&] {
    need(text, "text");
    need(out, "out");
    *out = new rwre_law{std::make_shared<const rwre::EnvLaw>(rwre::EnvLaw::parse(text))};
  });
}

void rwre_law_free(rwre_law* law) { delete law; }

int rwre_law_to_string(const rwre_law* law, char* buf, size_t cap, size_t* needed) {
  return guarded([&] {
    need(law, "law");
    copy_text(law->law->to_string(), buf, cap, needed);
  });
}

int rwre_moment_rho(const rwre_law* law, double u, double* out) {
  return guarded([&] {
    need(law, "law");
    need(out, "out");
    *out = rwre::moment_rho(*law->law, u);
  });
}

int rwre_mean_log_rho(const rwre_law* law, double* out) {
  return guarded([&] {
    need(law, "law");
    need(out, "out");
    *out = rwre::mean_log_rho(*law->law);
  });
}

int rwre_kappa_root(const rwre_law* law, double tol, double* kappa, int* found) {
  return guarded([&] {
    need(law, "law");
    need(kappa, "kappa");
    need(found, "found");
    const auto k = rwre::kappa_root(*law->law, tol > 0.0 ? tol : 1e-12);
    *found = k.has_value() ? 1 : 0;
    *kappa = k.value_or(0.0);
  });
}

int rwre_classify(const rwre_law* law, rwre_regime* out) {
  return guarded([&] {
    need(law, "law");
    need(out, "out");
    const rwre::RegimeReport r = rwre::classify_regime(*law->law);
    *out = {};
    out->mean_log_rho = r.mean_log_rho;
    out->mean_rho = r.mean_rho;
    out->mean_inv_rho = r.mean_inv_rho;
    out->direction = static_cast<int>(r.direction);
    out->speed = r.speed;
    out->ballistic = r.ballistic ? 1 : 0;
    out->quenched_strongly_transient = r.quenched_strongly_transient ? 1 : 0;
    out->averaged_strongly_transient = static_cast<int>(r.averaged_strongly_transient);
    out->has_kappa = r.kappa.has_value() ? 1 : 0;
    out->kappa = r.kappa.value_or(0.0);
    out->has_rho_log_rho = r.rho_log_rho_finite.has_value() ? 1 : 0;
    out->rho_log_rho_finite = r.rho_log_rho_finite.value_or(false) ? 1 : 0;
    out->rho_log_rho = r.rho_log_rho.value_or(0.0);
  });
}

int rwre_speed_et1(const rwre_law* law, double* speed, double* e_t1) {
  return guarded([&] {
    need(law, "law");
    need(speed, "speed");
    need(e_t1, "e_t1");
    const rwre::SpeedEt1 s = rwre::speed_and_et1(*law->law);
    *speed = s.speed;
    *e_t1 = s.e_t1;
  });
}

int rwre_window_sample(const rwre_law* law, uint64_t seed, int64_t lo, int64_t hi, rwre_window** out) {
  return guarded([&] {
    need(law, "law");
    need(out, "out");
    if (lo > hi) rwre::fail(rwre::ErrorCode::kInvalidArgument, "window needs lo <= hi");
    *out = new rwre_window{rwre::sample_window(*law->law, seed, lo, hi)};
  });
}

int rwre_window_from_values(int64_t lo, const double* omega, size_t n, rwre_window** out) {
  return guarded([&] {
    need(omega, "omega");
    need(out, "out");
    if (n == 0) rwre::fail(rwre::ErrorCode::kInvalidArgument, "window needs at least one site");
    *out = new rwre_window{rwre::EnvWindow(lo, std::vector<double>(omega, omega + n))};
  });
}

void rwre_window_free(rwre_window* w) { delete w; }

int rwre_window_bounds(const rwre_window* w, int64_t* lo, int64_t* hi) {
  return guarded([&] {
    need(w, "window");
    if (lo != nullptr) *lo = w->window.lo();
    if (hi != nullptr) *hi = w->window.hi();
  });
}

int rwre_window_omega(const rwre_window* w, int64_t x, double* out) {
  return guarded([&] {
    need(w, "window");
    need(out, "out");
    *out = w->window.omega(x);
  });
}

int rwre_cascade(const rwre_window* w, int64_t i, int64_t j, double* pi, double* r) {
  return guarded([&] {
    need(w, "window");
    const rwre::CascadeValue c = rwre::cascade(w->window, i, j);
    if (pi != nullptr) *pi = c.pi;
    if (r != nullptr) *r = c.r;
  });
}

int rwre_hitting_prob(const rwre_window* w, int64_t x, int64_t a, int64_t b, double* p_left, double* p_right) {
  return guarded([&] {
    need(w, "window");
    const rwre::HittingProbability h = rwre::hitting_prob(w->window, x, a, b);
    if (p_left != nullptr) *p_left = h.p_left;
    if (p_right != nullptr) *p_right = h.p_right;
  });
}

int rwre_absorption_oracle(const rwre_window* w, int64_t a, int64_t b, int64_t x, double* p_left,
                           double* expected_time) {
  return guarded([&] {
    need(w, "window");
    const rwre::Absorption h = rwre::absorption_oracle(w->window, a, b, x);
    if (p_left != nullptr) *p_left = h.p_left;
    if (expected_time != nullptr) *expected_time = h.expected_time;
  });
}

int rwre_r_tail(const rwre_law* law, uint64_t seed, int64_t i, const rwre_series_options* opt, rwre_series* out) {
  return guarded([&] {
    need(law, "law");
    need(out, "out");
    to_c(rwre::r_tail(rwre::Environment(law->law, seed), i, series_options(opt)), out);
  });
}

int rwre_expected_hit(const rwre_law* law, uint64_t seed, int64_t x, int dir, const rwre_series_options* opt,
                      rwre_series* out) {
  return guarded([&] {
    need(law, "law");
    need(out, "out");
    const auto d = dir == RWRE_HIT_LEFT ? rwre::HitDirection::kLeft : rwre::HitDirection::kRight;
    to_c(rwre::expected_hit(rwre::Environment(law->law, seed), x, d, series_options(opt)), out);
  });
}

int rwre_expected_hit_window(const rwre_window* w, int64_t x, int dir, const rwre_series_options* opt,
                             rwre_series* out) {
  return guarded([&] {
    need(w, "window");
    need(out, "out");
    const auto d = dir == RWRE_HIT_LEFT ? rwre::HitDirection::kLeft : rwre::HitDirection::kRight;
    to_c(rwre::expected_hit(w->window, x, d, series_options(opt)), out);
  });
}

int rwre_conditioned_env(const rwre_law* law, uint64_t seed, int64_t hi, const rwre_series_options* opt,
                         rwre_window** out) {
  return guarded([&] {
    need(law, "law");
    need(out, "out");
    *out = new rwre_window{rwre::conditioned_env(rwre::Environment(law->law, seed), hi, series_options(opt))};
  });
}

int rwre_conditioned_return_expectation(const rwre_law* law, uint64_t seed, const rwre_series_options* opt,
                                        rwre_series* out) {
  return guarded([&] {
    need(law, "law");
    need(out, "out");
    to_c(rwre::conditioned_return_expectation(rwre::Environment(law->law, seed), series_options(opt)), out);
  });
}

int rwre_return_decompose(const rwre_law* law, uint64_t seed, const rwre_series_options* opt,
                              rwre_return_decomposition* out) {
  return guarded([&] {
    need(law, "law");
    need(out, "out");
    to_c(rwre::return_decomposition(rwre::Environment(law->law, seed), series_options(opt)), out);
  });
}

int rwre_step_parse(const char* text, rwre_step** out) {
  return guarded([&] {
    need(text, "text");
    need(out, "out");
    *out = new rwre_step{rwre::StepLaw::parse(text)};
  });
}

void rwre_step_free(rwre_step* s) { delete s; }

int rwre_step_to_string(const rwre_step* s, char* buf, size_t cap, size_t* needed) {
  return guarded([&] {
    need(s, "step");
    copy_text(s->step.to_string(), buf, cap, needed);
  });
}

int rwre_step_mean(const rwre_step* s, double* out) {
  return guarded([&] {
    need(s, "step");
    need(out, "out");
    *out = s->step.mean();
  });
}

int rwre_step_spacing(const rwre_step* s, double* spacing, int* is_lattice) {
  return guarded([&] {
    need(s, "step");
    if (spacing != nullptr) *spacing = s->step.spacing().value_or(0.0);
    if (is_lattice != nullptr) *is_lattice = s->step.is_lattice() ? 1 : 0;
  });
}

int rwre_gamma_root(const rwre_step* s, double tol, double* out) {
  return guarded([&] {
    need(s, "step");
    need(out, "out");
    *out = rwre::gamma_root(s->step, tol > 0.0 ? tol : 1e-12);
  });
}

int rwre_tilt(const rwre_step* s, double gamma, double* q, size_t cap, size_t* count, double* mean_q) {
  return guarded([&] {
    need(s, "step");
    const rwre::TiltedLaw t = rwre::tilt(s->step, gamma);
    if (count != nullptr) *count = t.q_weights.size();
    if (q != nullptr) std::copy_n(t.q_weights.begin(), std::min(cap, t.q_weights.size()), q);
    if (mean_q != nullptr) *mean_q = t.mean_q;
  });
}

int rwre_sup_tail(const rwre_step* s, double t, int64_t n, uint64_t seed, int method, double censor_eps,
                  unsigned workers, rwre_estimate* out) {
  return guarded([&] {
    need(s, "step");
    need(out, "out");
    rwre::SupTailOptions opt;
    opt.method = method == RWRE_SUP_NAIVE ? rwre::SupTailMethod::kNaive : rwre::SupTailMethod::kImportance;
    if (censor_eps > 0.0) opt.censor_eps = censor_eps;
    opt.workers = workers_or_one(workers);
    to_c(rwre::sup_tail(s->step, t, n, seed, opt), out);
  });
}

int rwre_phi(const rwre_step* s, double t, int64_t n, uint64_t seed, unsigned workers, rwre_estimate* out) {
  return guarded([&] {
    need(s, "step");
    need(out, "out");
    to_c(rwre::phi_estimate(s->step, t, n, seed, workers_or_one(workers)), out);
  });
}

int rwre_overshoot_run(const rwre_step* s, int64_t k_lo, int64_t k_hi, int64_t n, uint64_t seed, unsigned workers,
                       rwre_overshoot** out) {
  return guarded([&] {
    need(s, "step");
    need(out, "out");
    *out = new rwre_overshoot{rwre::overshoot_constant(s->step, k_lo, k_hi, n, seed, workers_or_one(workers))};
  });
}

void rwre_overshoot_free(rwre_overshoot* o) { delete o; }

size_t rwre_overshoot_rows(const rwre_overshoot* o) { return o == nullptr ? 0 : o->result.rows.size(); }

int rwre_overshoot_row(const rwre_overshoot* o, size_t i, int64_t* k, rwre_estimate* scaled) {
  return guarded([&] {
    need(o, "overshoot");
    if (i >= o->result.rows.size()) rwre::fail(rwre::ErrorCode::kOutOfRange, "overshoot row index");
    if (k != nullptr) *k = o->result.rows[i].k;
    if (scaled != nullptr) to_c(o->result.rows[i].scaled, scaled);
  });
}

size_t rwre_overshoot_pmf_size(const rwre_overshoot* o) { return o == nullptr ? 0 : o->result.overshoot_pmf.size(); }

int rwre_overshoot_pmf(const rwre_overshoot* o, size_t i, int64_t* units, double* freq) {
  return guarded([&] {
    need(o, "overshoot");
    if (i >= o->result.overshoot_pmf.size()) rwre::fail(rwre::ErrorCode::kOutOfRange, "overshoot pmf index");
    if (units != nullptr) *units = o->result.overshoot_pmf[i].first;
    if (freq != nullptr) *freq = o->result.overshoot_pmf[i].second;
  });
}

int rwre_overshoot_info(const rwre_overshoot* o, double* gamma, double* spacing, rwre_wald* wald) {
  return guarded([&] {
    need(o, "overshoot");
    if (gamma != nullptr) *gamma = o->result.gamma;
    if (spacing != nullptr) *spacing = o->result.spacing;
    if (wald != nullptr) {
      const rwre::WaldCheck& w = o->result.wald;
      *wald = {w.mean_ladder, w.mean_tau, w.drift_q, w.mean_residual, w.residual_se};
    }
  });
}

int rwre_speed_estimate(const rwre_law* law, int64_t horizon, int64_t reps, uint64_t seed, unsigned workers,
                        rwre_estimate* out) {
  return guarded([&] {
    need(law, "law");
    need(out, "out");
    to_c(rwre::speed_estimate(*law->law, horizon, reps, seed, workers_or_one(workers)), out);
  });
}

int rwre_conditioned_sample(const rwre_law* law, uint64_t env_seed, int64_t n, uint64_t seed, int mode, int64_t cap,
                            double escape_eps, unsigned workers, rwre_samples** out) {
  return guarded([&] {
    need(law, "law");
    need(out, "out");
    rwre::ConditionedOptions opt;
    opt.mode = mode == RWRE_CONDITIONED_REJECTION ? rwre::ConditionedMode::kRejection
                                                  : rwre::ConditionedMode::kHTransform;
    if (cap > 0) opt.cap = cap;
    if (escape_eps > 0.0) opt.escape_eps = escape_eps;
    opt.workers = workers_or_one(workers);
    *out = new rwre_samples{rwre::conditioned_sampler(rwre::Environment(law->law, env_seed), n, seed, opt)};
  });
}

void rwre_samples_free(rwre_samples* s) { delete s; }

size_t rwre_samples_size(const rwre_samples* s) { return s == nullptr ? 0 : s->samples.times.size(); }

const int64_t* rwre_samples_data(const rwre_samples* s) {
  return s == nullptr ? nullptr : s->samples.times.data();
}

int rwre_samples_info(const rwre_samples* s, int64_t* censored, int64_t* edge_hits, int64_t* discarded,
                      int64_t* edge) {
  return guarded([&] {
    need(s, "samples");
    if (censored != nullptr) *censored = s->samples.censored;
    if (edge_hits != nullptr) *edge_hits = s->samples.edge_hits;
    if (discarded != nullptr) *discarded = s->samples.discarded;
    if (edge != nullptr) *edge = s->samples.edge;
  });
}

void rwre_return_options_default(rwre_return_options* opt) {
  if (opt == nullptr) return;
  const rwre::ReturnConditionalOptions d;
  opt->mode = RWRE_RETURN_AVERAGED;
  opt->statistic = RWRE_STATISTIC_FORMULA;
  opt->env_seed = d.env_seed;
  opt->n_env = d.n_env;
  opt->n_walk = d.n_walk;
  opt->tol = d.series.tol;
  opt->cap = d.cap;
  opt->escape_eps = d.escape_eps;
  opt->workers = d.workers;
}

int rwre_return_conditional(const rwre_law* law, uint64_t seed, const rwre_return_options* opt,
                            rwre_return_result* out) {
  return guarded([&] {
    need(law, "law");
    need(opt, "options");
    need(out, "out");
    rwre::ReturnConditionalOptions o;
    o.mode = opt->mode == RWRE_RETURN_QUENCHED ? rwre::ReturnMode::kQuenched : rwre::ReturnMode::kAveraged;
    o.statistic = opt->statistic == RWRE_STATISTIC_WALK ? rwre::ReturnStatistic::kWalk
                                                        : rwre::ReturnStatistic::kFormula;
    o.env_seed = opt->env_seed;
    o.n_env = opt->n_env;
    o.n_walk = opt->n_walk;
    if (opt->tol > 0.0) o.series.tol = opt->tol;
    if (opt->cap > 0) o.cap = opt->cap;
    if (opt->escape_eps > 0.0) o.escape_eps = opt->escape_eps;
    o.workers = workers_or_one(opt->workers);
    const rwre::ReturnConditionalResult r = rwre::estimate_return_conditional(*law->law, seed, o);
    *out = {};
    to_c(r.estimate, &out->estimate);
    out->theory_infinite = r.theory_infinite ? 1 : 0;
    out->failed_environments = r.failed_environments;
    if (r.quenched) {
      out->has_quenched = 1;
      to_c(*r.quenched, &out->quenched);
    }
    if (r.walk_conditional && r.walk_p_return) {
      out->has_walk = 1;
      to_c(*r.walk_conditional, &out->walk_conditional);
      to_c(*r.walk_p_return, &out->walk_p_return);
    }
  });
}

int rwre_divergence_run(const rwre_law* law, uint64_t seed, const int64_t* schedule, size_t n_schedule,
                        const double* grid, size_t n_grid, double hill_fraction, double tol, unsigned workers,
                        rwre_divergence** out) {
  return guarded([&] {
    need(law, "law");
    need(out, "out");
    rwre::DivergenceOptions opt;
    if (schedule != nullptr && n_schedule > 0) opt.schedule.assign(schedule, schedule + n_schedule);
    if (grid != nullptr && n_grid > 0) opt.tail_grid.assign(grid, grid + n_grid);
    if (hill_fraction > 0.0) opt.hill_fraction = hill_fraction;
    if (tol > 0.0) opt.series.tol = tol;
    opt.workers = workers_or_one(workers);
    *out = new rwre_divergence{rwre::divergence_diagnostic(*law->law, seed, opt)};
  });
}

void rwre_divergence_free(rwre_divergence* d) { delete d; }

int rwre_divergence_summary_get(const rwre_divergence* d, rwre_divergence_summary* out) {
  return guarded([&] {
    need(d, "divergence");
    need(out, "out");
    const rwre::DivergenceReport& r = d->report;
    out->hill_index = r.hill.tail_index;
    out->hill_xi = r.hill.xi;
    out->hill_k = r.hill.k;
    out->hill_threshold = r.hill.threshold;
    out->tail_floor = r.tail_floor;
    out->loglog_slope = r.r1_loglog.slope;
    out->loglog_intercept = r.r1_loglog.intercept;
    out->loglog_points = r.r1_loglog.points;
    out->has_kappa = r.kappa.has_value() ? 1 : 0;
    out->kappa = r.kappa.value_or(0.0);
    out->failed_environments = r.failed_environments;
    out->theory_infinite = r.theory_infinite ? 1 : 0;
  });
}

size_t rwre_divergence_running_size(const rwre_divergence* d) {
  return d == nullptr ? 0 : d->report.running_mean.size();
}

int rwre_divergence_running(const rwre_divergence* d, size_t i, rwre_running_point* out) {
  return guarded([&] {
    need(d, "divergence");
    need(out, "out");
    if (i >= d->report.running_mean.size()) rwre::fail(rwre::ErrorCode::kOutOfRange, "running mean index");
    const rwre::RunningMeanPoint& p = d->report.running_mean[i];
    *out = {p.n, p.mean, p.std_error};
  });
}

size_t rwre_divergence_tail_size(const rwre_divergence* d) { return d == nullptr ? 0 : d->report.r1_tail.size(); }

int rwre_divergence_tail(const rwre_divergence* d, size_t i, rwre_tail_point* out) {
  return guarded([&] {
    need(d, "divergence");
    need(out, "out");
    if (i >= d->report.r1_tail.size()) rwre::fail(rwre::ErrorCode::kOutOfRange, "tail index");
    const rwre::TailPoint& p = d->report.r1_tail[i];
    *out = {p.t, p.p_hat, p.scaled};
  });
}

int rwre_ks_two_sample(const double* a, size_t n, const double* b, size_t m, double alpha, double* statistic,
                       double* critical) {
  return guarded([&] {
    need(a, "a");
    need(b, "b");
    const double d = rwre::ks_two_sample(std::vector<double>(a, a + n), std::vector<double>(b, b + m));
    if (statistic != nullptr) *statistic = d;
    if (critical != nullptr) *critical = rwre::ks_critical_value(n, m, alpha > 0.0 ? alpha : 0.01);
  });
}

}  // extern "C"
