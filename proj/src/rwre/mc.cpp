#include "rwre/mc.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "rwre/error.hpp"
#include "rwre/numerics.hpp"
#include "rwre/parallel.hpp"

namespace rwre {
namespace {

constexpr std::int64_t kMaxEscapeLevel = std::int64_t{1} << 40;

template <class Omega>
WalkResult walk(Omega&& omega, std::int64_t start, std::span<const std::int64_t> targets,
                std::int64_t cap, SplitMix64& rng) {
  auto is_target = [&](std::int64_t x) {
    return std::find(targets.begin(), targets.end(), x) != targets.end();
  };
  if (is_target(start)) return {true, start, 0};
  std::int64_t x = start;
  for (std::int64_t s = 1; s <= cap; ++s) {
    x += rng.uniform01() < omega(x) ? 1 : -1;
    if (is_target(x)) return {true, x, s};
  }
  return {false, x, cap};
}

void require_right_transient(const EnvLaw& law, const char* what) {
  if (!(mean_log_rho(law) < 0.0)) {
    fail(ErrorCode::kPrecondition, std::string(what) + " needs a right-transient law (E[log rho] < 0)");
  }
}

ReturnOutcome first_return(SiteCache& cache, std::int64_t edge, double bound, std::int64_t cap,
                           SplitMix64& rng) {
  ReturnOutcome out;
  out.cap = cap;
  out.first_step = rng.uniform01() < cache.omega(0) ? 1 : -1;
  if (cap < 1) return out;
  if (out.first_step == 1 && edge == 1) {
    out.status = ReturnOutcome::Status::kEscaped;
    out.steps = 1;
    out.escape_bound = bound;
    return out;
  }
  const std::array<std::int64_t, 2> targets{0, edge};
  const WalkResult w = walk([&](std::int64_t x) { return cache.omega(x); }, out.first_step, targets,
                            cap - 1, rng);
  out.steps = 1 + w.steps;
  if (!w.hit) {
    out.status = ReturnOutcome::Status::kCensored;
  } else if (w.site == 0) {
    out.status = ReturnOutcome::Status::kReturned;
  } else {
    out.status = ReturnOutcome::Status::kEscaped;
    out.escape_bound = bound;
  }
  return out;
}

// R_{1,m-1} and R_1 give P^1(T_m < T_0) = 1 / (1 + R_{1,m-1}).
double prefix_r(const Environment& env, std::int64_t m) {
  double log_pi = 0.0;
  CompensatedSum r;
  for (std::int64_t k = 1; k < m; ++k) {
    log_pi += env.log_rho(k);
    r.add(std::exp(log_pi));
  }
  return r.value();
}

struct Slot {
  bool ok = false;
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
};

}  // namespace

WalkResult simulate_until(const EnvWindow& env, std::int64_t start, std::span<const std::int64_t> targets,
                          std::int64_t cap, SplitMix64& rng) {
  return walk([&](std::int64_t x) { return env.omega(x); }, start, targets, cap, rng);
}

WalkResult simulate_until(SiteCache& env, std::int64_t start, std::span<const std::int64_t> targets,
                          std::int64_t cap, SplitMix64& rng) {
  return walk([&](std::int64_t x) { return env.omega(x); }, start, targets, cap, rng);
}

std::int64_t certified_escape_level(const Environment& env, double eps, const SeriesOptions& opt) {
  require_right_transient(env.law(), "certified_escape_level");
  for (std::int64_t m = 16; m <= kMaxEscapeLevel; m *= 2) {
    if (escape_return_bound(env, m, opt) <= eps) return m;
  }
  fail(ErrorCode::kNotConverged, "no escape level certifies the requested epsilon");
}

std::int64_t conditioned_escape_level(const Environment& env, double eps, const SeriesOptions& opt) {
  require_right_transient(env.law(), "conditioned_escape_level");
  const SeriesValue r1 = r_tail(env, 1, opt);
  const double p_return = r1.value / (1.0 + r1.value);
  for (std::int64_t h = 16; h <= kMaxEscapeLevel; h *= 2) {
    const double reach = 1.0 / (1.0 + prefix_r(env, h));
    if (reach * escape_return_bound(env, h, opt) / p_return <= eps) return h;
  }
  fail(ErrorCode::kNotConverged, "no conditioned escape level certifies the requested epsilon");
}

ReturnOutcome sample_first_return(const EnvWindow& env, std::int64_t cap, double escape_eps,
                                  SplitMix64& rng) {
  if (!env.law()) fail(ErrorCode::kInvalidArgument, "sample_first_return needs a window sampled from a law");
  if (!(env.lo() <= 0 && env.hi() >= 1)) {
    fail(ErrorCode::kOutOfRange, "sample_first_return needs a window containing 0 and 1");
  }
  const Environment source(env.law(), env.seed());
  require_right_transient(source.law(), "sample_first_return");
  const double bound = escape_return_bound(source, env.hi());
  if (!(bound <= escape_eps)) {
    fail(ErrorCode::kPrecondition, "window right edge " + std::to_string(env.hi()) +
                                       " cannot certify escape at the requested epsilon");
  }
  SiteCache cache(source);
  return first_return(cache, env.hi(), bound, cap, rng);
}

ConditionedSamples conditioned_sampler(const Environment& env, std::int64_t n, std::uint64_t seed,
                                       const ConditionedOptions& opt) {
  require_right_transient(env.law(), "conditioned_sampler");
  if (n < 1) fail(ErrorCode::kInvalidArgument, "conditioned_sampler needs n >= 1");
  const bool h_transform = opt.mode == ConditionedMode::kHTransform;
  ConditionedSamples out;
  out.edge = h_transform ? conditioned_escape_level(env, opt.escape_eps, opt.series)
                         : certified_escape_level(env, opt.escape_eps, opt.series);
  const EnvWindow window = h_transform ? conditioned_env(env, out.edge, opt.series) : env.window(0, out.edge);
  const std::array<std::int64_t, 2> targets{0, out.edge};

  struct Shard {
    std::vector<std::int64_t> times;
    std::int64_t censored = 0, edge_hits = 0, discarded = 0;
  };
  const auto parts = run_sharded<Shard>(n, opt.workers, [&](std::int64_t b, std::int64_t e) {
    Shard s;
    auto omega = [&](std::int64_t x) { return window.omega_unchecked(x); };
    for (std::int64_t i = b; i < e; ++i) {
      SplitMix64 rng(seed, stream::kWalk, static_cast<std::uint64_t>(i));
      for (;;) {
        const WalkResult w = walk(omega, 1, targets, opt.cap, rng);
        if (!w.hit) {
          ++s.censored;
          break;
        }
        if (w.site == 0) {
          s.times.push_back(w.steps);
          break;
        }
        if (h_transform) {
          ++s.edge_hits;
          break;
        }
        ++s.discarded;
      }
    }
    return s;
  });
  for (const Shard& s : parts) {
    out.times.insert(out.times.end(), s.times.begin(), s.times.end());
    out.censored += s.censored;
    out.edge_hits += s.edge_hits;
    out.discarded += s.discarded;
  }
  return out;
}

ReturnConditionalResult estimate_return_conditional(const EnvLaw& law, std::uint64_t seed,
                                                    const ReturnConditionalOptions& opt) {
  require_right_transient(law, "estimate_return_conditional");
  ReturnConditionalResult res;
  res.theory_infinite = classify_regime(law).averaged_strongly_transient != AveragedStrength::kYes;
  const bool walk_stat = opt.statistic == ReturnStatistic::kWalk;
  const auto law_ptr = std::make_shared<const EnvLaw>(law);

  if (opt.mode == ReturnMode::kQuenched) {
    const Environment env(law_ptr, opt.env_seed);
    const ReturnDecomposition d = return_decomposition(env, opt.series);
    if (!d.converged) fail(ErrorCode::kNotConverged, "quenched return decomposition did not converge");
    res.quenched = d;
    res.estimate.value = walk_stat ? d.e_return_given_return_walk : d.e_return_given_return;
    res.estimate.n = 1;
    res.estimate.method = "quenched-exact";
    res.estimate.seed = opt.env_seed;
    res.estimate.workers = opt.workers;
    if (opt.n_walk < 1) return res;

    const std::int64_t edge = certified_escape_level(env, opt.escape_eps, opt.series);
    const double bound = escape_return_bound(env, edge, opt.series);
    const std::int64_t h_edge = conditioned_escape_level(env, opt.escape_eps, opt.series);
    const EnvWindow tilde = conditioned_env(env, h_edge, opt.series);
    const std::array<std::int64_t, 2> h_targets{0, h_edge};
    const std::array<std::int64_t, 1> origin{0};
    const double p_left_given_return = (1.0 - d.omega0) / d.p_return;

    struct Shard {
      RunningStats p_return, conditional;
      std::int64_t failures = 0;
    };
    const auto parts = run_sharded<Shard>(opt.n_walk, opt.workers, [&](std::int64_t b, std::int64_t e) {
      Shard s;
      SiteCache cache(env);
      for (std::int64_t i = b; i < e; ++i) {
        SplitMix64 raw(seed, stream::kWalk, static_cast<std::uint64_t>(i));
        const ReturnOutcome o = first_return(cache, edge, bound, opt.cap, raw);
        if (o.status == ReturnOutcome::Status::kCensored) {
          ++s.failures;
        } else {
          s.p_return.add(o.status == ReturnOutcome::Status::kReturned ? 1.0 : 0.0);
        }

        // Exact draw of r given r < inf: choose the first step from its
        // conditional law, then finish with the raw walk (left) or the
        // h-transformed walk (right).
        SplitMix64 cond(seed, stream::kReplicate, static_cast<std::uint64_t>(i));
        WalkResult w;
        if (cond.uniform01() < p_left_given_return) {
          w = walk([&](std::int64_t x) { return cache.omega(x); }, -1, origin, opt.cap, cond);
        } else {
          w = walk([&](std::int64_t x) { return tilde.omega_unchecked(x); }, 1, h_targets, opt.cap, cond);
        }
        if (w.hit && w.site == 0) {
          s.conditional.add(1.0 + static_cast<double>(w.steps));
        } else {
          ++s.failures;
        }
      }
      return s;
    });
    RunningStats pr, cr;
    for (const Shard& s : parts) {
      pr.merge(s.p_return);
      cr.merge(s.conditional);
      res.failed_environments += s.failures;
    }
    res.walk_p_return = to_estimate(pr, "walk-return-probability", seed, opt.workers, opt.escape_eps);
    res.walk_conditional = to_estimate(cr, "walk-conditional-return", seed, opt.workers);
    return res;
  }

  if (opt.n_env < 2) fail(ErrorCode::kInvalidArgument, "averaged mode needs n_env >= 2");
  std::vector<Slot> slots(static_cast<std::size_t>(opt.n_env));
  run_sharded<int>(opt.n_env, opt.workers, [&](std::int64_t b, std::int64_t e) {
    for (std::int64_t i = b; i < e; ++i) {
      const Environment env(law_ptr, derive_seed(seed, stream::kEnvironment, static_cast<std::uint64_t>(i)));
      Slot& s = slots[static_cast<std::size_t>(i)];
      try {
        const ReturnDecomposition d = return_decomposition(env, opt.series);
        s.ok = d.converged && std::isfinite(d.e_return_indicator);
        s.x = walk_stat ? d.e_return_walk : d.e_return_indicator;
        s.y = d.p_return;
      } catch (const Error& err) {
        if (err.code() != ErrorCode::kNotConverged) throw;
        s.ok = false;
      }
    }
    return 0;
  });
  CompensatedSum sx, sy;
  std::int64_t m = 0;
  for (const Slot& s : slots) {
    if (!s.ok) {
      ++res.failed_environments;
      continue;
    }
    sx.add(s.x);
    sy.add(s.y);
    ++m;
  }
  if (static_cast<double>(res.failed_environments) > 1e-3 * static_cast<double>(opt.n_env)) {
    fail(ErrorCode::kNotConverged, std::to_string(res.failed_environments) + " of " +
                                       std::to_string(opt.n_env) + " environments failed to converge");
  }
  const double mean_x = sx.value() / static_cast<double>(m);
  const double mean_y = sy.value() / static_cast<double>(m);
  const double ratio = mean_x / mean_y;
  CompensatedSum ss;
  for (const Slot& s : slots) {
    if (!s.ok) continue;
    const double r = s.x - ratio * s.y;
    ss.add(r * r);
  }
  res.estimate.value = ratio;
  res.estimate.std_error =
      m > 1 ? std::sqrt(ss.value() / static_cast<double>(m - 1) / static_cast<double>(m)) / mean_y : 0.0;
  res.estimate.n = m;
  res.estimate.method = "averaged-ratio";
  res.estimate.seed = seed;
  res.estimate.workers = opt.workers;
  return res;
}

DivergenceReport divergence_diagnostic(const EnvLaw& law, std::uint64_t seed, const DivergenceOptions& opt) {
  require_right_transient(law, "divergence_diagnostic");
  if (opt.schedule.empty()) fail(ErrorCode::kInvalidArgument, "divergence_diagnostic needs a schedule");
  DivergenceReport rep;
  rep.theory_infinite = classify_regime(law).averaged_strongly_transient != AveragedStrength::kYes;
  rep.kappa = kappa_root(law);
  std::vector<std::int64_t> schedule = opt.schedule;
  std::sort(schedule.begin(), schedule.end());
  const std::int64_t n_max = schedule.back();
  const auto law_ptr = std::make_shared<const EnvLaw>(law);

  // x = w, y = c, z = R_1
  std::vector<Slot> slots(static_cast<std::size_t>(n_max));
  run_sharded<int>(n_max, opt.workers, [&](std::int64_t b, std::int64_t e) {
    for (std::int64_t i = b; i < e; ++i) {
      const Environment env(law_ptr, derive_seed(seed, stream::kEnvironment, static_cast<std::uint64_t>(i)));
      Slot& s = slots[static_cast<std::size_t>(i)];
      const SeriesValue r1 = r_tail(env, 1, opt.series);
      const SeriesValue c = conditioned_return_expectation(env, opt.series);
      s.ok = r1.converged && c.converged;
      s.x = r1.value / (1.0 + r1.value);
      s.y = c.value;
      s.z = r1.value;
    }
    return 0;
  });

  CompensatedSum sw, swc;
  std::int64_t m = 0;
  std::size_t next = 0;
  std::vector<double> c_values, r1_values;
  for (std::int64_t i = 0; i < n_max; ++i) {
    const Slot& s = slots[static_cast<std::size_t>(i)];
    if (s.ok) {
      sw.add(s.x);
      swc.add(s.x * s.y);
      c_values.push_back(s.y);
      r1_values.push_back(s.z);
      ++m;
    } else {
      ++rep.failed_environments;
    }
    while (next < schedule.size() && schedule[next] == i + 1) {
      const double mean = swc.value() / sw.value();
      CompensatedSum ss;
      for (std::int64_t j = 0; j <= i; ++j) {
        const Slot& t = slots[static_cast<std::size_t>(j)];
        if (!t.ok) continue;
        const double r = t.x * t.y - mean * t.x;
        ss.add(r * r);
      }
      const double mw = sw.value() / static_cast<double>(m);
      const double se =
          m > 1 ? std::sqrt(ss.value() / static_cast<double>(m - 1) / static_cast<double>(m)) / mw : 0.0;
      rep.running_mean.push_back({schedule[next], mean, se});
      ++next;
    }
  }

  rep.hill = hill_tail_index(c_values, opt.hill_fraction);

  const double total = static_cast<double>(r1_values.size());
  std::sort(r1_values.begin(), r1_values.end());
  auto count_at_least = [&](double t) {
    return static_cast<double>(r1_values.end() - std::lower_bound(r1_values.begin(), r1_values.end(), t));
  };
  auto count_above = [&](double t) {
    return static_cast<double>(r1_values.end() - std::upper_bound(r1_values.begin(), r1_values.end(), t));
  };
  rep.tail_floor = kInf;
  for (double t : opt.tail_grid) {
    const double p = count_at_least(t) / total;
    rep.r1_tail.push_back({t, p, t * p});
    rep.tail_floor = std::min(rep.tail_floor, t * p);
  }
  std::vector<double> lx, ly;
  for (int j = 0;; ++j) {
    const double t = std::pow(10.0, 1.0 + 0.25 * j);
    const double c = count_above(t);
    if (c < 20.0) break;
    lx.push_back(std::log(t));
    ly.push_back(std::log(c / total));
  }
  rep.r1_loglog = least_squares(lx, ly);
  return rep;
}

Estimate speed_estimate(const EnvLaw& law, std::int64_t horizon, std::int64_t reps, std::uint64_t seed,
                        unsigned workers) {
  if (!std::isfinite(mean_log_rho(law))) fail(ErrorCode::kPrecondition, "speed_estimate needs finite E[log rho]");
  if (horizon < 1 || reps < 1) fail(ErrorCode::kInvalidArgument, "speed_estimate needs horizon, reps >= 1");
  const auto parts = run_sharded<RunningStats>(reps, workers, [&](std::int64_t b, std::int64_t e) {
    RunningStats st;
    for (std::int64_t r = b; r < e; ++r) {
      const EnvWindow env =
          sample_window(law, derive_seed(seed, stream::kEnvironment, static_cast<std::uint64_t>(r)), -horizon, horizon);
      SplitMix64 rng(seed, stream::kWalk, static_cast<std::uint64_t>(r));
      std::int64_t x = 0;
      for (std::int64_t s = 0; s < horizon; ++s) x += rng.uniform01() < env.omega_unchecked(x) ? 1 : -1;
      st.add(static_cast<double>(x) / static_cast<double>(horizon));
    }
    return st;
  });
  RunningStats all;
  for (const RunningStats& p : parts) all.merge(p);
  return to_estimate(all, "averaged-speed", seed, workers);
}

}  // namespace rwre
