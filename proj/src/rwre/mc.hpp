#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "rwre/env.hpp"
#include "rwre/estimate.hpp"
#include "rwre/exact.hpp"
#include "rwre/random.hpp"
#include "rwre/stats.hpp"

namespace rwre {

// Environment {omega_x} of an Environment, materialized on demand as the
// walk visits sites. Values agree with sample_window for the same seed.
class SiteCache {
 public:
  explicit SiteCache(Environment env) : env_(std::move(env)) {}

  double omega(std::int64_t x) {
    if (x >= 0) {
      const auto i = static_cast<std::size_t>(x);
      while (right_.size() <= i) right_.push_back(env_.omega(static_cast<std::int64_t>(right_.size())));
      return right_[i];
    }
    const auto i = static_cast<std::size_t>(-(x + 1));
    while (left_.size() <= i) left_.push_back(env_.omega(-static_cast<std::int64_t>(left_.size()) - 1));
    return left_[i];
  }

  const Environment& environment() const noexcept { return env_; }

 private:
  Environment env_;
  std::vector<double> right_;  // x = 0, 1, 2, ...
  std::vector<double> left_;   // x = -1, -2, ...
};

struct WalkResult {
  bool hit = false;  // false: censored at cap
  std::int64_t site = 0;
  std::int64_t steps = 0;
};

// Steps the nearest-neighbour chain from `start` until it sits on a target or
// `cap` steps have been taken. One uniform per step. Leaving the window is an
// error.
WalkResult simulate_until(const EnvWindow& env, std::int64_t start, std::span<const std::int64_t> targets,
                          std::int64_t cap, SplitMix64& rng);
WalkResult simulate_until(SiteCache& env, std::int64_t start, std::span<const std::int64_t> targets,
                          std::int64_t cap, SplitMix64& rng);

struct ReturnOutcome {
  enum class Status { kReturned, kEscaped, kCensored };
  Status status = Status::kCensored;
  std::int64_t steps = 0;       // return time when kReturned
  double escape_bound = 0.0;    // P^M(T_0 < inf) certifying kEscaped
  std::int64_t cap = 0;
  int first_step = 0;           // +1 or -1
};

// First return to 0 of the walk started at 0. Reaching the window's right
// edge M counts as an escape, certified by P^M(T_0 < inf) <= escape_eps.
// Requires a window sampled from a law; sites left of the window are drawn
// from the same per-site keys.
ReturnOutcome sample_first_return(const EnvWindow& env, std::int64_t cap, double escape_eps,
                                  SplitMix64& rng);

// Smallest M in {16, 32, 64, ...} with P^M(T_0 < inf) <= eps.
std::int64_t certified_escape_level(const Environment& env, double eps,
                                    const SeriesOptions& opt = {});

// Smallest H in {16, 32, ...} such that the conditioned walk from 1 reaches H
// before 0 with probability <= eps.
std::int64_t conditioned_escape_level(const Environment& env, double eps,
                                      const SeriesOptions& opt = {});

enum class ConditionedMode { kHTransform, kRejection };

struct ConditionedOptions {
  ConditionedMode mode = ConditionedMode::kHTransform;
  std::int64_t cap = 100'000'000;
  double escape_eps = 1e-12;
  SeriesOptions series{};
  unsigned workers = 1;
};

struct ConditionedSamples {
  std::vector<std::int64_t> times;  // T_0 from 1, one per slot
  std::int64_t censored = 0;        // cap exhaustion (slot left empty)
  std::int64_t edge_hits = 0;       // h-transform walks that reached the window edge
  std::int64_t discarded = 0;       // rejection-mode escapes
  std::int64_t edge = 0;            // window edge used (H or M)
};

// Samples of T_0 | T_0 < inf from start 1 in the environment.
ConditionedSamples conditioned_sampler(const Environment& env, std::int64_t n, std::uint64_t seed,
                                       const ConditionedOptions& opt = {});

enum class ReturnMode { kQuenched, kAveraged };
// kFormula: 1 + (1-w0) E^{-1}[T_0] + w0 P^1(T_0<inf) E^1[T_0|T_0<inf] per environment.
// kWalk: the same with leading term P(r < inf), i.e. E[r; r < inf].
enum class ReturnStatistic { kFormula, kWalk };

struct ReturnConditionalOptions {
  ReturnMode mode = ReturnMode::kAveraged;
  ReturnStatistic statistic = ReturnStatistic::kFormula;
  std::uint64_t env_seed = 0;  // quenched mode
  std::int64_t n_env = 1000;   // averaged mode
  std::int64_t n_walk = 0;     // quenched mode walk-level cross-check
  SeriesOptions series{};
  std::int64_t cap = 100'000'000;
  double escape_eps = 1e-12;
  unsigned workers = 1;
};

struct ReturnConditionalResult {
  Estimate estimate;
  bool theory_infinite = false;
  std::int64_t failed_environments = 0;
  std::optional<ReturnDecomposition> quenched;
  // Quenched mode with n_walk > 0: MC of E[r | r < inf] (walk-level) and P(r < inf).
  std::optional<Estimate> walk_conditional;
  std::optional<Estimate> walk_p_return;
};

// Averaged mode: ratio-of-means over environments with delta-method error.
// Fails with kNotConverged if more than 0.1% of environments fail.
ReturnConditionalResult estimate_return_conditional(const EnvLaw& law, std::uint64_t seed,
                                                    const ReturnConditionalOptions& opt);

struct DivergenceOptions {
  std::vector<std::int64_t> schedule{1000, 10000, 100000};
  std::vector<double> tail_grid{10.0, 100.0, 1000.0};
  double hill_fraction = 0.01;
  SeriesOptions series{1e-10, 1'000'000, 32};
  unsigned workers = 1;
};

struct RunningMeanPoint {
  std::int64_t n;
  double mean;  // sum w_i c_i / sum w_i
  double std_error;
};

struct TailPoint {
  double t;
  double p_hat;   // P-hat(R_1 >= t)
  double scaled;  // t * p_hat
};

struct DivergenceReport {
  std::vector<RunningMeanPoint> running_mean;
  HillEstimate hill;
  std::vector<TailPoint> r1_tail;
  double tail_floor = 0.0;  // min over the grid of t * P-hat(R_1 >= t)
  LineFit r1_loglog;         // slope of log P-hat(R_1 > t) against log t
  std::optional<double> kappa;
  std::int64_t failed_environments = 0;
  bool theory_infinite = false;
};

// Per environment i (seed derived from (seed, i)): w_i = P^1(T_0 < inf),
// c_i = E^1[T_0 | T_0 < inf] (the exact mean of the h-transform sampler) and
// R_1. Reports the running weighted mean of c at each schedule point, the Hill
// index of c, and tail diagnostics of R_1.
DivergenceReport divergence_diagnostic(const EnvLaw& law, std::uint64_t seed,
                                       const DivergenceOptions& opt = {});

// Mean of X_horizon / horizon over `reps` fresh environments.
Estimate speed_estimate(const EnvLaw& law, std::int64_t horizon, std::int64_t reps, std::uint64_t seed,
                        unsigned workers = 1);

}  // namespace rwre
