// rwre command-line front end. Links against the C API only.
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <memory>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "output.hpp"
#include "rwre/rwre.h"

using json = nlohmann::ordered_json;

namespace {

constexpr const char* kCliVersion = "0.1.0";

struct Failure {
  int status;
  std::string message;
};

void check(int status) {
  if (status != RWRE_OK) throw Failure{status, rwre_last_error()};
}

struct LawDeleter {
  void operator()(rwre_law* p) const { rwre_law_free(p); }
};
struct StepDeleter {
  void operator()(rwre_step* p) const { rwre_step_free(p); }
};
struct WindowDeleter {
  void operator()(rwre_window* p) const { rwre_window_free(p); }
};
struct OvershootDeleter {
  void operator()(rwre_overshoot* p) const { rwre_overshoot_free(p); }
};
struct SamplesDeleter {
  void operator()(rwre_samples* p) const { rwre_samples_free(p); }
};
struct DivergenceDeleter {
  void operator()(rwre_divergence* p) const { rwre_divergence_free(p); }
};
using Law = std::unique_ptr<rwre_law, LawDeleter>;
using Step = std::unique_ptr<rwre_step, StepDeleter>;
using Window = std::unique_ptr<rwre_window, WindowDeleter>;
using Overshoot = std::unique_ptr<rwre_overshoot, OvershootDeleter>;
using Samples = std::unique_ptr<rwre_samples, SamplesDeleter>;
using Divergence = std::unique_ptr<rwre_divergence, DivergenceDeleter>;

template <class Fn>
std::string read_text(Fn&& fn) {
  size_t needed = 0;
  check(fn(nullptr, 0, &needed));
  std::string s(needed, '\0');
  check(fn(s.data(), s.size(), &needed));
  s.resize(needed - 1);
  return s;
}

Law parse_law(const std::string& text) {
  rwre_law* p = nullptr;
  check(rwre_law_parse(text.c_str(), &p));
  return Law(p);
}

std::string canonical(const rwre_law* law) {
  return read_text([&](char* b, size_t c, size_t* n) { return rwre_law_to_string(law, b, c, n); });
}

Step parse_step(const std::string& text) {
  rwre_step* p = nullptr;
  check(rwre_step_parse(text.c_str(), &p));
  return Step(p);
}

std::string canonical(const rwre_step* step) {
  return read_text([&](char* b, size_t c, size_t* n) { return rwre_step_to_string(step, b, c, n); });
}

std::pair<std::int64_t, std::int64_t> parse_range(const std::string& s, const char* what) {
  const auto colon = s.find(':');
  try {
    if (colon == std::string::npos) throw std::invalid_argument(s);
    return {std::stoll(s.substr(0, colon)), std::stoll(s.substr(colon + 1))};
  } catch (const std::exception&) {
    throw Failure{RWRE_E_PARSE, std::string(what) + " expects lo:hi, got '" + s + "'"};
  }
}

std::string json_num(double v) { return cli::num(v); }

json number_or_text(double v) {
  if (std::isfinite(v)) return v;
  return json_num(v);
}

unsigned default_workers() {
  if (const char* env = std::getenv("RWRE_WORKERS")) {
    try {
      const long v = std::stol(env);
      if (v > 0) return static_cast<unsigned>(v);
    } catch (const std::exception&) {
    }
  }
  return 1;
}

std::uint64_t draw_seed() {
  std::random_device rd;
  return (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
}

struct Run {
  std::string command;
  std::string law;
  std::string step;
  std::optional<std::uint64_t> seed;
  std::uint64_t env_seed = 0;
  unsigned workers = default_workers();
  double tol = 0.0;
  std::int64_t horizon = 0;
  std::int64_t n = 0;
  std::int64_t cap = 0;
  double escape_eps = 0.0;

  // exact
  std::vector<std::int64_t> r_tail;
  std::vector<std::int64_t> expected_hit;
  std::string dir = "right";
  bool conditioned_return = false;
  bool return_decomposition = false;
  std::optional<std::int64_t> conditioned_env;
  std::optional<std::int64_t> identity;
  bool speed_et1 = false;
  std::vector<std::string> hitting;
  std::string window = "-10:10";
  bool oracle = false;

  // simulate
  bool speed = false;
  std::int64_t reps = 100;
  bool return_conditional = false;
  std::string mode;
  std::string statistic = "formula";
  std::int64_t n_env = 1000;
  std::int64_t n_walk = 0;

  // conditioned
  bool emit_samples = false;

  // ladder
  bool gamma = false;
  bool tilt = false;
  std::vector<double> sup_tail;
  std::string method = "importance";
  double censor_eps = 0.0;
  std::string overshoot;
  std::vector<double> phi;

  // diverge
  std::vector<std::int64_t> schedule{1000, 10000, 100000};
  std::vector<double> grid{10.0, 100.0, 1000.0};
  double hill_fraction = 0.01;
};

rwre_series_options series_opts(const Run& r) {
  rwre_series_options o{};
  o.tol = r.tol;
  o.horizon = r.horizon;
  o.quiet_run = 0;
  return o;
}

struct Outcome {
  json result = json::object();
  bool threshold_failure = false;
};

const char* direction_name(int d) {
  switch (d) {
    case RWRE_DIRECTION_RIGHT: return "right";
    case RWRE_DIRECTION_LEFT: return "left";
    default: return "recurrent";
  }
}

const char* averaged_name(int a) {
  switch (a) {
    case RWRE_AVERAGED_YES: return "yes";
    case RWRE_AVERAGED_NO: return "no";
    case RWRE_AVERAGED_BOUNDARY_UNRESOLVED: return "boundary-unresolved";
    default: return "not-applicable";
  }
}

Outcome cmd_classify(const Run& r, cli::Table& t, const rwre_law* law) {
  rwre_regime g{};
  check(rwre_classify(law, &g));
  double speed = 0.0, e_t1 = 0.0;
  check(rwre_speed_et1(law, &speed, &e_t1));
  Outcome o;
  json& j = o.result;
  j["law"] = r.law;
  j["mean_log_rho"] = number_or_text(g.mean_log_rho);
  j["mean_rho"] = number_or_text(g.mean_rho);
  j["mean_inv_rho"] = number_or_text(g.mean_inv_rho);
  j["direction"] = direction_name(g.direction);
  j["speed"] = g.speed;
  j["e_t1"] = number_or_text(e_t1);
  j["ballistic"] = g.ballistic != 0;
  j["quenched_strongly_transient"] = g.quenched_strongly_transient != 0;
  j["averaged_strongly_transient"] = averaged_name(g.averaged_strongly_transient);
  j["kappa"] = g.has_kappa ? json(g.kappa) : json(nullptr);
  j["rho_log_rho_finite"] = g.has_rho_log_rho ? json(g.rho_log_rho_finite != 0) : json(nullptr);
  if (g.has_rho_log_rho) j["rho_log_rho"] = number_or_text(g.rho_log_rho);

  t.exact("mean_log_rho", r.law, g.mean_log_rho);
  t.exact("mean_rho", r.law, g.mean_rho);
  t.exact("mean_inv_rho", r.law, g.mean_inv_rho);
  t.exact("speed", r.law, g.speed);
  t.exact("e_t1", r.law, e_t1);
  t.exact("ballistic", r.law, g.ballistic);
  t.exact("quenched_strongly_transient", r.law, g.quenched_strongly_transient);
  if (g.has_kappa) t.exact("kappa", r.law, g.kappa);
  if (g.has_rho_log_rho) t.exact("rho_log_rho", r.law, g.rho_log_rho);
  return o;
}

void print_classify_table(const json& j, std::ostream& os) {
  for (const auto& [k, v] : j.items()) {
    os << std::left << std::setw(30) << k;
    if (v.is_string()) {
      os << v.get<std::string>();
    } else if (v.is_null()) {
      os << "-";
    } else if (v.is_number_float()) {
      os << cli::num(v.get<double>());
    } else {
      os << v.dump();
    }
    os << '\n';
  }
}

Outcome cmd_exact(const Run& r, cli::Table& t, const rwre_law* law) {
  Outcome o;
  const rwre_series_options so = series_opts(r);
  bool any = false;
  for (std::int64_t i : r.r_tail) {
    rwre_series s{};
    check(rwre_r_tail(law, r.env_seed, i, &so, &s));
    t.series("r_tail", "i=" + std::to_string(i), s);
    any = true;
  }
  const int dir = r.dir == "left" ? RWRE_HIT_LEFT : RWRE_HIT_RIGHT;
  for (std::int64_t x : r.expected_hit) {
    rwre_series s{};
    check(rwre_expected_hit(law, r.env_seed, x, dir, &so, &s));
    t.series("expected_hit_" + r.dir, "x=" + std::to_string(x), s);
    any = true;
  }
  if (r.conditioned_return) {
    rwre_series s{};
    check(rwre_conditioned_return_expectation(law, r.env_seed, &so, &s));
    t.series("conditioned_return_expectation", "x=1", s);
    any = true;
  }
  if (r.return_decomposition) {
    rwre_return_decomposition d{};
    check(rwre_return_decompose(law, r.env_seed, &so, &d));
    const bool c = d.converged != 0;
    t.exact("omega0", "", d.omega0, c);
    t.exact("p_return", "", d.p_return, c);
    t.exact("e_return_indicator", "", d.e_return_indicator, c);
    t.exact("e_left_hit", "x=-1", d.e_left_hit, c);
    t.exact("p_right_return", "x=1", d.p_right_return, c);
    t.exact("e_cond_right", "x=1", d.e_cond_right, c);
    t.exact("e_return_given_return", "", d.e_return_given_return, c);
    t.exact("r1", "", d.r1, c);
    t.exact("e_return_walk", "", d.e_return_walk, c);
    t.exact("e_return_given_return_walk", "", d.e_return_given_return_walk, c);
    any = true;
  }
  if (r.conditioned_env) {
    rwre_window* p = nullptr;
    check(rwre_conditioned_env(law, r.env_seed, *r.conditioned_env, &so, &p));
    Window w(p);
    for (std::int64_t x = 0; x <= *r.conditioned_env; ++x) {
      double v = 0.0;
      check(rwre_window_omega(w.get(), x, &v));
      t.exact("omega_tilde", "x=" + std::to_string(x), v);
    }
    any = true;
  }
  if (r.speed_et1) {
    double speed = 0.0, e_t1 = 0.0;
    check(rwre_speed_et1(law, &speed, &e_t1));
    t.exact("speed", "", speed);
    t.exact("e_t1", "", e_t1);
    any = true;
  }
  if (!r.hitting.empty()) {
    const auto [lo, hi] = parse_range(r.window, "--window");
    rwre_window* p = nullptr;
    check(rwre_window_sample(law, r.env_seed, lo, hi, &p));
    Window w(p);
    for (const std::string& triple : r.hitting) {
      std::int64_t x = 0, a = 0, b = 0;
      char c1 = 0, c2 = 0;
      std::istringstream is(triple);
      if (!(is >> x >> c1 >> a >> c2 >> b) || c1 != ',' || c2 != ',' || !is.eof()) {
        throw Failure{RWRE_E_PARSE, "--hitting expects x,a,b, got '" + triple + "'"};
      }
      double pl = 0.0, pr = 0.0;
      check(rwre_hitting_prob(w.get(), x, a, b, &pl, &pr));
      t.exact("hitting_p_left", triple, pl);
      t.exact("hitting_p_right", triple, pr);
      if (r.oracle) {
        double ol = 0.0, et = 0.0;
        check(rwre_absorption_oracle(w.get(), a, b, x, &ol, &et));
        t.exact("oracle_p_left", triple, ol);
        t.exact("oracle_expected_time", triple, et);
      }
    }
    any = true;
  }
  if (!any) throw Failure{RWRE_E_INVALID_ARGUMENT, "exact: choose at least one quantity"};
  return o;
}

Outcome cmd_simulate(const Run& r, cli::Table& t, const rwre_law* law) {
  Outcome o;
  const std::uint64_t seed = *r.seed;
  bool any = false;
  if (r.speed) {
    rwre_estimate e{};
    check(rwre_speed_estimate(law, r.horizon, r.reps, seed, r.workers, &e));
    t.estimate("speed", "horizon=" + std::to_string(r.horizon), e);
    any = true;
  }
  if (r.return_conditional) {
    rwre_return_options opt{};
    rwre_return_options_default(&opt);
    opt.mode = r.mode == "quenched" ? RWRE_RETURN_QUENCHED : RWRE_RETURN_AVERAGED;
    opt.statistic = r.statistic == "walk" ? RWRE_STATISTIC_WALK : RWRE_STATISTIC_FORMULA;
    opt.env_seed = r.env_seed;
    opt.n_env = r.n_env;
    opt.n_walk = r.n_walk;
    opt.tol = r.tol;
    opt.cap = r.cap;
    opt.escape_eps = r.escape_eps;
    opt.workers = r.workers;
    rwre_return_result res{};
    check(rwre_return_conditional(law, seed, &opt, &res));
    const std::string input = std::string(opt.mode == RWRE_RETURN_QUENCHED ? "quenched" : "averaged") +
                              " statistic=" + r.statistic;
    t.estimate("e_return_given_return", input, res.estimate);
    t.exact("theory_infinite", input, res.theory_infinite);
    t.exact("failed_environments", input, static_cast<double>(res.failed_environments));
    if (res.has_quenched) t.exact("p_return", input, res.quenched.p_return, res.quenched.converged != 0);
    if (res.has_walk) {
      t.estimate("walk_p_return", input, res.walk_p_return);
      t.estimate("walk_e_return_given_return", input, res.walk_conditional);
    }
    o.result["theory_infinite"] = res.theory_infinite != 0;
    any = true;
  }
  if (!any) throw Failure{RWRE_E_INVALID_ARGUMENT, "simulate: choose --speed and/or --return-conditional"};
  return o;
}

Outcome cmd_conditioned(const Run& r, cli::Table& t, const rwre_law* law) {
  Outcome o;
  const std::uint64_t seed = *r.seed;
  std::vector<std::string> modes;
  if (r.mode == "both") {
    modes = {"h-transform", "rejection"};
  } else {
    modes = {r.mode};
  }
  std::vector<std::vector<double>> all;
  for (const std::string& m : modes) {
    rwre_samples* p = nullptr;
    const int mode = m == "rejection" ? RWRE_CONDITIONED_REJECTION : RWRE_CONDITIONED_H_TRANSFORM;
    check(rwre_conditioned_sample(law, r.env_seed, r.n, seed, mode, r.cap, r.escape_eps, r.workers, &p));
    Samples s(p);
    const size_t n = rwre_samples_size(s.get());
    const std::int64_t* data = rwre_samples_data(s.get());
    std::int64_t censored = 0, edge_hits = 0, discarded = 0, edge = 0;
    check(rwre_samples_info(s.get(), &censored, &edge_hits, &discarded, &edge));
    std::vector<double> v(data, data + n);
    double sum = 0.0, sq = 0.0;
    std::int64_t odd = 0;
    for (size_t i = 0; i < n; ++i) {
      sum += v[i];
      if (data[i] % 2 != 0) ++odd;
    }
    const double mean = n > 0 ? sum / static_cast<double>(n) : 0.0;
    for (double x : v) sq += (x - mean) * (x - mean);
    const double se = n > 1 ? std::sqrt(sq / static_cast<double>(n - 1) / static_cast<double>(n)) : 0.0;
    t.add({"mean_return_time", m, mean, se, 0.0, static_cast<std::int64_t>(n), censored == 0});
    t.exact("odd_fraction", m, n > 0 ? static_cast<double>(odd) / static_cast<double>(n) : 0.0);
    t.exact("censored", m, static_cast<double>(censored), censored == 0);
    t.exact("edge_hits", m, static_cast<double>(edge_hits));
    t.exact("discarded", m, static_cast<double>(discarded));
    t.exact("edge", m, static_cast<double>(edge));
    if (r.emit_samples) {
      for (size_t i = 0; i < n; ++i) t.exact("sample", m + " i=" + std::to_string(i), v[i]);
    }
    all.push_back(std::move(v));
  }
  rwre_series s{};
  const rwre_series_options so = series_opts(r);
  check(rwre_conditioned_return_expectation(law, r.env_seed, &so, &s));
  t.series("conditioned_return_expectation", "exact", s);
  if (all.size() == 2) {
    double d = 0.0, crit = 0.0;
    check(rwre_ks_two_sample(all[0].data(), all[0].size(), all[1].data(), all[1].size(), 0.01, &d, &crit));
    t.exact("ks_statistic", "h-transform vs rejection", d);
    t.exact("ks_critical_1pct", "h-transform vs rejection", crit);
    o.result["ks_pass"] = d < crit;
  }
  return o;
}

Outcome cmd_ladder(const Run& r, cli::Table& t, const rwre_step* step) {
  Outcome o;
  const std::uint64_t seed = *r.seed;
  bool any = false;
  double mean = 0.0;
  check(rwre_step_mean(step, &mean));
  t.exact("mean", r.step, mean);
  if (r.gamma || r.tilt) {
    double g = 0.0;
    check(rwre_gamma_root(step, r.tol, &g));
    t.exact("gamma", r.step, g);
    if (r.tilt) {
      size_t count = 0;
      double mean_q = 0.0;
      check(rwre_tilt(step, g, nullptr, 0, &count, &mean_q));
      std::vector<double> q(count);
      check(rwre_tilt(step, g, q.data(), q.size(), &count, &mean_q));
      for (size_t i = 0; i < count; ++i) t.exact("q_weight", "atom=" + std::to_string(i), q[i]);
      t.exact("mean_q", r.step, mean_q);
    }
    any = true;
  }
  const int method = r.method == "naive" ? RWRE_SUP_NAIVE : RWRE_SUP_IMPORTANCE;
  for (double level : r.sup_tail) {
    rwre_estimate e{};
    check(rwre_sup_tail(step, level, r.n, seed, method, r.censor_eps, r.workers, &e));
    t.estimate("sup_tail_" + r.method, "t=" + cli::num(level), e);
    t.exact("sup_tail_spread_" + r.method, "t=" + cli::num(level), e.sample_max - e.sample_min);
    any = true;
  }
  if (!r.overshoot.empty()) {
    const auto [lo, hi] = parse_range(r.overshoot, "--overshoot");
    rwre_overshoot* p = nullptr;
    check(rwre_overshoot_run(step, lo, hi, r.n, seed, r.workers, &p));
    Overshoot ov(p);
    for (size_t i = 0; i < rwre_overshoot_rows(ov.get()); ++i) {
      std::int64_t k = 0;
      rwre_estimate e{};
      check(rwre_overshoot_row(ov.get(), i, &k, &e));
      t.estimate("overshoot_scaled", "k=" + std::to_string(k), e);
    }
    for (size_t i = 0; i < rwre_overshoot_pmf_size(ov.get()); ++i) {
      std::int64_t u = 0;
      double f = 0.0;
      check(rwre_overshoot_pmf(ov.get(), i, &u, &f));
      t.exact("overshoot_pmf", "units=" + std::to_string(u) + " k=" + std::to_string(hi), f);
    }
    double g = 0.0, a = 0.0;
    rwre_wald w{};
    check(rwre_overshoot_info(ov.get(), &g, &a, &w));
    const std::string in = "k=" + std::to_string(hi);
    t.exact("wald_mean_ladder", in, w.mean_ladder);
    t.exact("wald_mean_tau", in, w.mean_tau);
    t.exact("wald_drift_q", in, w.drift_q);
    t.add({"wald_residual", in, w.mean_residual, w.residual_se, 0.0, r.n, true});
    any = true;
  }
  for (double level : r.phi) {
    rwre_estimate e{};
    check(rwre_phi(step, level, r.n, seed, r.workers, &e));
    t.estimate("phi", "t=" + cli::num(level), e);
    any = true;
  }
  if (!any) throw Failure{RWRE_E_INVALID_ARGUMENT, "ladder: choose at least one quantity"};
  return o;
}

Outcome cmd_diverge(const Run& r, cli::Table& t, const rwre_law* law) {
  Outcome o;
  rwre_divergence* p = nullptr;
  check(rwre_divergence_run(law, *r.seed, r.schedule.data(), r.schedule.size(), r.grid.data(), r.grid.size(),
                            r.hill_fraction, r.tol, r.workers, &p));
  Divergence d(p);
  rwre_divergence_summary s{};
  check(rwre_divergence_summary_get(d.get(), &s));
  for (size_t i = 0; i < rwre_divergence_running_size(d.get()); ++i) {
    rwre_running_point pt{};
    check(rwre_divergence_running(d.get(), i, &pt));
    t.add({"running_mean", "n=" + std::to_string(pt.n), pt.mean, pt.std_error, 0.0, pt.n, true});
  }
  for (size_t i = 0; i < rwre_divergence_tail_size(d.get()); ++i) {
    rwre_tail_point pt{};
    check(rwre_divergence_tail(d.get(), i, &pt));
    t.exact("r1_tail_p_hat", "t=" + cli::num(pt.t), pt.p_hat);
    t.exact("r1_tail_scaled", "t=" + cli::num(pt.t), pt.scaled);
  }
  t.exact("tail_floor", "", s.tail_floor);
  t.add({"hill_index", "top=" + cli::num(r.hill_fraction), s.hill_index, 0.0, 0.0, s.hill_k, true});
  t.add({"r1_loglog_slope", "", s.loglog_slope, 0.0, 0.0, static_cast<std::int64_t>(s.loglog_points), true});
  if (s.has_kappa) t.exact("kappa", "", s.kappa);
  t.exact("theory_infinite", "", s.theory_infinite);
  const std::int64_t n_max = r.schedule.empty() ? 0 : *std::max_element(r.schedule.begin(), r.schedule.end());
  t.exact("failed_environments", "", static_cast<double>(s.failed_environments));
  o.threshold_failure = static_cast<double>(s.failed_environments) > 1e-3 * static_cast<double>(n_max);
  return o;
}

// Canonical argv for the subcommand actually run: every option that was set,
// with the law/step text canonicalized and the seed made explicit.
std::vector<std::string> canonical_argv(const CLI::App* sub, const Run& r) {
  std::vector<std::string> out{sub->get_name()};
  for (const CLI::Option* opt : sub->get_options()) {
    const std::string name = opt->get_name();
    if (name == "--help" || name == "--out" || name == "--seed" || name == "--workers") continue;
    if (opt->count() == 0) continue;
    if (name == "--law") {
      out.insert(out.end(), {name, r.law});
    } else if (name == "--step") {
      out.insert(out.end(), {name, r.step});
    } else if (opt->get_type_size() == 0) {
      out.push_back(name);
    } else {
      for (const std::string& v : opt->results()) out.insert(out.end(), {name, v});
    }
  }
  if (r.seed) out.insert(out.end(), {"--seed", std::to_string(*r.seed)});
  out.insert(out.end(), {"--workers", std::to_string(r.workers)});
  return out;
}

// --config replays a manifest: its argv replaces the command line, keeping
// only --out from the current invocation.
std::vector<std::string> expand_config(const std::vector<std::string>& args) {
  std::vector<std::string> out{args.front()};
  std::optional<std::string> config;
  std::vector<std::string> rest;
  for (size_t i = 1; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) {
      config = args[++i];
    } else if (args[i].rfind("--config=", 0) == 0) {
      config = args[i].substr(9);
    } else {
      rest.push_back(args[i]);
    }
  }
  if (!config) return args;
  std::ifstream in(*config);
  if (!in) throw Failure{RWRE_E_PARSE, "cannot open config " + *config};
  json m;
  try {
    m = json::parse(in);
  } catch (const json::exception& e) {
    throw Failure{RWRE_E_PARSE, std::string("config: ") + e.what()};
  }
  if (!m.contains("argv") || !m["argv"].is_array()) throw Failure{RWRE_E_PARSE, "config has no argv array"};
  for (const auto& v : m["argv"]) out.push_back(v.get<std::string>());
  for (size_t i = 0; i < rest.size(); ++i) {
    if (rest[i] == "--out" && i + 1 < rest.size()) {
      out.insert(out.end(), {"--out", rest[i + 1]});
      ++i;
    } else if (rest[i].rfind("--out=", 0) == 0) {
      out.push_back(rest[i]);
    }
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  Run r;
  std::string out;
  std::vector<std::string> args(argv, argv + argc);
  try {
    args = expand_config(args);
  } catch (const Failure& f) {
    std::cerr << "error: " << f.message << '\n';
    return 1;
  }

  CLI::App app{"Random walks in random environments: exact formulas, estimators and diagnostics"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kCliVersion) + " (library " + rwre_version() + ")");

  std::uint64_t seed_value = 0;
  auto common = [&](CLI::App* s, bool seeded) {
    s->add_option("--out", out, "Write <prefix>.csv and <prefix>.json instead of CSV on stdout");
    s->add_option("--workers", r.workers, "Worker threads (default $RWRE_WORKERS or 1)")->check(CLI::PositiveNumber);
    if (seeded) s->add_option("--seed", seed_value, "RNG seed (drawn and recorded when absent)");
  };
  auto series = [&](CLI::App* s) {
    s->add_option("--tol", r.tol, "Relative series tolerance");
    s->add_option("--horizon", r.horizon, "Series term budget");
  };

  auto* classify = app.add_subcommand("classify", "Regime report for an environment law");
  classify->add_option("--law", r.law, "constant:p | discrete:w@o,... | beta:a,b")->required();
  common(classify, false);

  auto* exact = app.add_subcommand("exact", "Exact quenched quantities in one environment");
  exact->add_option("--law", r.law)->required();
  exact->add_option("--env-seed", r.env_seed, "Environment seed");
  series(exact);
  exact->add_option("--r-tail", r.r_tail, "R_i for each i");
  exact->add_option("--expected-hit", r.expected_hit, "E^x[T_{x+1}] or E^x[T_{x-1}] for each x");
  exact->add_option("--dir", r.dir)->check(CLI::IsMember({"right", "left"}));
  exact->add_flag("--conditioned-return", r.conditioned_return, "E^1[T_0 | T_0 < inf]");
  exact->add_flag("--return-decomposition", r.return_decomposition, "First-step decomposition of the return time");
  exact->add_option("--conditioned-env", r.conditioned_env, "Conditioned environment on [0, H]");
  exact->add_flag("--speed-et1", r.speed_et1, "Averaged speed and E[T_1]");
  exact->add_option("--hitting", r.hitting, "x,a,b hitting probabilities in a sampled window");
  exact->add_option("--window", r.window, "lo:hi window for --hitting");
  exact->add_flag("--oracle", r.oracle, "Also solve the absorption equations directly");
  common(exact, false);

  auto* simulate = app.add_subcommand("simulate", "Walk-level Monte Carlo");
  simulate->add_option("--law", r.law)->required();
  simulate->add_flag("--speed", r.speed, "Averaged speed X_n / n");
  simulate->add_option("--horizon", r.horizon, "Steps per replicate (speed)")->default_val(100000);
  simulate->add_option("--reps", r.reps, "Replicates (speed)");
  simulate->add_flag("--return-conditional", r.return_conditional, "E[r | r < inf]");
  simulate->add_option("--mode", r.mode)->check(CLI::IsMember({"quenched", "averaged"}))->default_val("averaged");
  simulate->add_option("--statistic", r.statistic)->check(CLI::IsMember({"formula", "walk"}));
  simulate->add_option("--env-seed", r.env_seed, "Environment seed (quenched)");
  simulate->add_option("--n-env", r.n_env, "Environments (averaged)");
  simulate->add_option("--n-walk", r.n_walk, "Walk samples for the quenched cross-check");
  simulate->add_option("--cap", r.cap, "Step cap per walk");
  simulate->add_option("--escape-eps", r.escape_eps, "Certified escape probability");
  simulate->add_option("--tol", r.tol, "Relative series tolerance");
  common(simulate, true);

  auto* conditioned = app.add_subcommand("conditioned", "Samples of T_0 from 1 given T_0 < inf");
  conditioned->add_option("--law", r.law)->required();
  conditioned->add_option("--env-seed", r.env_seed, "Environment seed");
  conditioned->add_option("-n,--n", r.n, "Samples per mode")->default_val(10000);
  conditioned->add_option("--mode", r.mode)
      ->check(CLI::IsMember({"h-transform", "rejection", "both"}))
      ->default_val("h-transform");
  conditioned->add_option("--cap", r.cap, "Step cap per walk");
  conditioned->add_option("--escape-eps", r.escape_eps, "Certified escape probability");
  conditioned->add_option("--tol", r.tol, "Relative series tolerance");
  conditioned->add_flag("--emit-samples", r.emit_samples, "One row per sample");
  common(conditioned, true);

  auto* ladder = app.add_subcommand("ladder", "Negative-drift random walk: tilt, level crossing, overshoot, phi");
  ladder->add_option("--step", r.step, "discrete:w@v,... | lattice:w@k,...[;a=x] | logrho:<law>")->required();
  ladder->add_option("-n,--n", r.n, "Replicates")->default_val(100000);
  ladder->add_flag("--gamma", r.gamma, "Tilt root gamma");
  ladder->add_flag("--tilt", r.tilt, "Tilted weights");
  ladder->add_option("--sup-tail", r.sup_tail, "P(sup S_n >= t) for each t");
  ladder->add_option("--method", r.method)->check(CLI::IsMember({"importance", "naive"}));
  ladder->add_option("--censor-eps", r.censor_eps, "Naive-method censoring budget");
  ladder->add_option("--overshoot", r.overshoot, "klo:khi scaled level-crossing rows");
  ladder->add_option("--phi", r.phi, "phi(t) for each t");
  ladder->add_option("--tol", r.tol, "Root tolerance");
  common(ladder, true);

  auto* diverge = app.add_subcommand("diverge", "Weak-transience diagnostics");
  diverge->add_option("--law", r.law)->required();
  diverge->add_option("--schedule", r.schedule, "Running-mean checkpoints")->delimiter(',');
  diverge->add_option("--grid", r.grid, "Levels t for t P(R_1 >= t)")->delimiter(',');
  diverge->add_option("--hill-fraction", r.hill_fraction, "Hill top fraction");
  diverge->add_option("--tol", r.tol, "Relative series tolerance")->default_val(1e-10);
  common(diverge, true);

  std::vector<std::string> rev(args.rbegin(), args.rend() - 1);
  try {
    app.parse(rev);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  CLI::App* sub = app.get_subcommands().front();
  r.command = sub->get_name();
  if (auto* s = sub->get_option_no_throw("--seed"); s != nullptr) {
    r.seed = s->count() > 0 ? seed_value : draw_seed();
  }

  const auto t0 = std::chrono::steady_clock::now();
  cli::Table table(r.command, r.seed.value_or(r.env_seed));
  Outcome outcome;
  int exit_code = 0;
  try {
    if (r.command == "ladder") {
      Step step = parse_step(r.step);
      r.step = canonical(step.get());
      outcome = cmd_ladder(r, table, step.get());
    } else {
      Law law = parse_law(r.law);
      r.law = canonical(law.get());
      if (r.command == "classify") outcome = cmd_classify(r, table, law.get());
      if (r.command == "exact") outcome = cmd_exact(r, table, law.get());
      if (r.command == "simulate") outcome = cmd_simulate(r, table, law.get());
      if (r.command == "conditioned") outcome = cmd_conditioned(r, table, law.get());
      if (r.command == "diverge") outcome = cmd_diverge(r, table, law.get());
    }
  } catch (const Failure& f) {
    std::cerr << "error: " << r.command << ": " << f.message << " (" << rwre_status_string(f.status) << ")\n";
    return f.status == RWRE_E_NOT_CONVERGED ? 2 : 1;
  }
  if (!table.all_converged() || outcome.threshold_failure) exit_code = 2;
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  if (r.command == "classify") {
    std::cout << outcome.result.dump() << '\n';
    print_classify_table(outcome.result, std::cout);
  }

  if (out.empty()) {
    if (r.command != "classify") table.write_csv(std::cout);
  } else {
    std::ofstream csv(out + ".csv", std::ios::binary);
    table.write_csv(csv);
    json m;
    m["command"] = r.command;
    m["argv"] = canonical_argv(sub, r);
    if (!r.law.empty()) m["law"] = r.law;
    if (!r.step.empty()) m["step"] = r.step;
    m["seed"] = r.seed ? json(*r.seed) : json(nullptr);
    m["env_seed"] = r.env_seed;
    m["workers"] = r.workers;
    m["versions"] = {{"cli", kCliVersion}, {"library", rwre_version()}};
    m["wall_time_seconds"] = wall;
    m["rows"] = table.rows().size();
    m["exit_code"] = exit_code;
    m["result"] = outcome.result;
    std::ofstream js(out + ".json", std::ios::binary);
    js << std::setw(2) << m << '\n';
    if (!csv || !js) {
      std::cerr << "error: cannot write " << out << ".csv/.json\n";
      return 1;
    }
  }
  if (exit_code == 2) std::cerr << "warning: " << r.command << ": some quantities did not converge\n";
  return exit_code;
}
