#pragma once

#include <cstdint>
#include <vector>

#include "rwre/env.hpp"

namespace rwre {

// Truncated non-negative series. When converged, the true sum is taken to lie
// in [value, value + remainder_bound]; the bound is a geometric extrapolation,
// not a certificate.
struct SeriesValue {
  double value = 0.0;
  double remainder_bound = 0.0;
  std::int64_t terms_used = 0;
  bool converged = false;
  bool heuristic_bound = true;
};

// Stop once `quiet_run` consecutive terms are each below tol * (running sum),
// or after `horizon` terms.
struct SeriesOptions {
  double tol = 1e-12;
  std::int64_t horizon = 1'000'000;
  int quiet_run = 32;
};

struct CascadeValue {
  double pi;      // Pi_{i,j}
  double r;       // R_{i,j}
  double log_pi;  // log Pi_{i,j}
};

// Pi_{i,j} = prod_{x=i..j} rho_x and R_{i,j} = sum_{k=i..j} Pi_{i,k}.
CascadeValue cascade(const EnvWindow& env, std::int64_t i, std::int64_t j);

struct HittingProbability {
  double p_left;   // P^x(T_a < T_b)
  double p_right;  // P^x(T_b < T_a)
};

// Requires a < b, a <= x <= b, lo <= a and b - 1 <= hi.
HittingProbability hitting_prob(const EnvWindow& env, std::int64_t x, std::int64_t a,
                                std::int64_t b);

struct Absorption {
  double p_left;         // P^x(T_a < T_b)
  double expected_time;  // E^x[min(T_a, T_b)]
};

// Direct tridiagonal elimination of the absorption equations on (a, b).
// Independent of the Pi/R formulas; used to validate them.
Absorption absorption_oracle(const EnvWindow& env, std::int64_t a, std::int64_t b, std::int64_t x);

// R_i = sum_{k>=i} Pi_{i,k} along the environment's rightward extension.
SeriesValue r_tail(const Environment& env, std::int64_t i, const SeriesOptions& opt = {});

enum class HitDirection { kRight, kLeft };

// kRight: E^x[T_{x+1}] = 1 + 2 sum_{i<=x} Pi_{i,x}.
// kLeft:  E^x[T_{x-1}] = 1 + 2 sum_{i>=x} 1/Pi_{x,i}.
// A law whose drift makes the series diverge yields value = +inf, converged = false.
SeriesValue expected_hit(const Environment& env, std::int64_t x, HitDirection dir,
                         const SeriesOptions& opt = {});
// Same series restricted to the sites of a finite window.
SeriesValue expected_hit(const EnvWindow& env, std::int64_t x, HitDirection dir,
                         const SeriesOptions& opt = {});

// Environment of the walk conditioned on hitting 0, on [0, hi]:
// omega~_x = omega_x for x <= 0 and omega_x R_{x+1} / (1 + R_{x+1}) for x >= 1.
EnvWindow conditioned_env(const Environment& env, std::int64_t hi, const SeriesOptions& opt = {});

// E^1[T_0 | T_0 < inf] = 1 + 2 sum_{n>=1} Pi_{1,n} (1+R_{n+1}) R_{n+1} / ((1+R_1) R_1).
SeriesValue conditioned_return_expectation(const Environment& env, const SeriesOptions& opt = {});

struct ConditionedIdentityResidual {
  double rho_tilde_max_rel;  // (1-w~)/w~ against (1+R_x)/R_{x+1}
  double pi_tilde_max_rel;   // prod rho~ against the telescoped closed form
};

// Consistency of the conditioned window on [1, hi] with its R-based closed forms.
ConditionedIdentityResidual conditioned_identity_residual(const Environment& env, std::int64_t hi,
                                                          const SeriesOptions& opt = {});

// First-step decomposition of the return time r = inf{n >= 1 : X_n = 0}.
struct ReturnDecomposition {
  double omega0 = 0.0;
  double p_return = 0.0;            // P(r < inf)
  double e_return_indicator = 0.0;  // 1 + (1-w0) e_left_hit + w0 p_right_return e_cond_right
  double e_left_hit = 0.0;          // E^{-1}[T_0]
  double p_right_return = 0.0;      // P^1(T_0 < inf) = R_1 / (1 + R_1)
  double e_cond_right = 0.0;        // E^1[T_0 | T_0 < inf]
  double e_return_given_return = 0.0;  // e_return_indicator / p_return
  double r1 = 0.0;
  // Walk-level first-step expansion, whose leading term is p_return rather than 1:
  // E[r; r < inf] and E[r | r < inf] exactly.
  double e_return_walk = 0.0;
  double e_return_given_return_walk = 0.0;
  bool converged = false;
};

ReturnDecomposition return_decomposition(const Environment& env, const SeriesOptions& opt = {});

struct SpeedEt1 {
  double speed;
  double e_t1;  // averaged E[T_1]; +inf unless E[rho] < 1
};

SpeedEt1 speed_and_et1(const EnvLaw& law);

// Exact P^m(T_0 < inf) for m >= 1 in a right-transient environment, with the
// R_m tail remainder added so the value is an upper bound.
double escape_return_bound(const Environment& env, std::int64_t m, const SeriesOptions& opt = {});

}  // namespace rwre
