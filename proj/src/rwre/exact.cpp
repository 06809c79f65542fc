#include "rwre/exact.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "rwre/error.hpp"
#include "rwre/numerics.hpp"

namespace rwre {
namespace {

// Running sum with the quiet-run stopping rule.
class QuietRunSeries {
 public:
  explicit QuietRunSeries(const SeriesOptions& opt) : opt_(opt) {}

  // True once the stopping rule is met.
  bool add(double term) {
    sum_.add(term);
    ++terms_;
    if (quiet_ == 0) run_start_term_ = term;
    last_ = term;
    if (term <= opt_.tol * sum_.value()) {
      if (++quiet_ >= opt_.quiet_run) return true;
    } else {
      quiet_ = 0;
    }
    return false;
  }

  double sum() const { return sum_.value(); }
  double last() const { return last_; }
  std::int64_t terms() const { return terms_; }

  // Geometric extrapolation from the decay observed across the quiet run.
  double observed_ratio() const {
    if (quiet_ < 2 || !(run_start_term_ > 0.0)) return kInf;
    return std::pow(last_ / run_start_term_, 1.0 / static_cast<double>(quiet_ - 1));
  }

 private:
  SeriesOptions opt_;
  CompensatedSum sum_;
  std::int64_t terms_ = 0;
  int quiet_ = 0;
  double last_ = 0.0;
  double run_start_term_ = 0.0;
};

double geometric_tail(double last, double ratio) {
  if (!(ratio < 1.0)) return kInf;
  return last * ratio / (1.0 - ratio);
}

SeriesValue diverged() {
  SeriesValue s;
  s.value = kInf;
  s.remainder_bound = kInf;
  s.converged = false;
  return s;
}

void require_right_transient(const EnvLaw& law, const char* what) {
  if (!(mean_log_rho(law) < 0.0)) {
    fail(ErrorCode::kPrecondition, std::string(what) + " needs E[log rho] < 0");
  }
}

// Forward accumulation of R_from; returns the last site whose term was used.
struct TailScan {
  SeriesValue series;
  std::int64_t last_site;
};

TailScan scan_tail(const Environment& env, std::int64_t from, const SeriesOptions& opt) {
  QuietRunSeries acc(opt);
  double log_pi = 0.0;
  bool stopped = false;
  std::int64_t k = from;
  for (; k < from + opt.horizon; ++k) {
    log_pi += env.log_rho(k);
    if (acc.add(std::exp(log_pi))) {
      stopped = true;
      break;
    }
  }
  TailScan out;
  out.last_site = stopped ? k : k - 1;
  out.series.value = acc.sum();
  out.series.terms_used = acc.terms();
  out.series.converged = stopped && std::isfinite(acc.sum());
  const double ratio = std::exp(0.5 * mean_log_rho(env.law()));
  out.series.remainder_bound = out.series.converged ? geometric_tail(acc.last(), ratio) : kInf;
  return out;
}

// Truncated tails R_x for x in [first, last + 1] with R_{last+1} = 0, by the
// backward recursion R_x = rho_x (1 + R_{x+1}).
class TailTable {
 public:
  TailTable(const Environment& env, std::int64_t first, std::int64_t last)
      : first_(first), r_(static_cast<std::size_t>(last - first + 2), 0.0),
        log_rho_(static_cast<std::size_t>(last - first + 1)) {
    for (std::int64_t x = first; x <= last; ++x) log_rho_[idx(x)] = env.log_rho(x);
    for (std::int64_t x = last; x >= first; --x) {
      r_[idx(x)] = std::exp(log_rho_[idx(x)]) * (1.0 + r_[idx(x + 1)]);
    }
  }
  double r(std::int64_t x) const { return r_[idx(x)]; }
  double log_rho(std::int64_t x) const { return log_rho_[idx(x)]; }
  std::int64_t last() const { return first_ + static_cast<std::int64_t>(log_rho_.size()) - 1; }

 private:
  std::size_t idx(std::int64_t x) const { return static_cast<std::size_t>(x - first_); }
  std::int64_t first_;
  std::vector<double> r_;
  std::vector<double> log_rho_;
};

// Table over [1, last] where every R_x with x <= accurate_through is as
// accurate as the tail scan from accurate_through.
TailTable conditioned_tails(const Environment& env, std::int64_t accurate_through,
                            const SeriesOptions& opt) {
  const TailScan scan = scan_tail(env, accurate_through, opt);
  if (!scan.series.converged) {
    fail(ErrorCode::kNotConverged, "R tail from site " + std::to_string(accurate_through) +
                                       " did not converge within the horizon");
  }
  return TailTable(env, 1, scan.last_site);
}

}  // namespace

CascadeValue cascade(const EnvWindow& env, std::int64_t i, std::int64_t j) {
  if (i > j || !env.contains(i) || !env.contains(j)) {
    fail(ErrorCode::kOutOfRange, "cascade indices [" + std::to_string(i) + "," +
                                     std::to_string(j) + "] not inside the window");
  }
  double log_pi = 0.0;
  CompensatedSum r;
  for (std::int64_t k = i; k <= j; ++k) {
    log_pi += env.log_rho(k);
    r.add(std::exp(log_pi));
  }
  return {std::exp(log_pi), r.value(), log_pi};
}

HittingProbability hitting_prob(const EnvWindow& env, std::int64_t x, std::int64_t a,
                                std::int64_t b) {
  if (!(a < b && a <= x && x <= b)) {
    fail(ErrorCode::kOutOfRange, "hitting_prob needs a < b and a <= x <= b");
  }
  if (a < env.lo() || b - 1 > env.hi()) {
    fail(ErrorCode::kOutOfRange, "hitting_prob interval [" + std::to_string(a) + "," +
                                     std::to_string(b) + "] exceeds the window");
  }
  // log Pi_{a,k} for k in [a, b-1]; sums are rescaled by the largest term.
  std::vector<double> log_pi(static_cast<std::size_t>(b - a));
  double acc = 0.0;
  for (std::int64_t k = a; k < b; ++k) {
    acc += env.log_rho(k);
    log_pi[static_cast<std::size_t>(k - a)] = acc;
  }
  const double top = *std::max_element(log_pi.begin(), log_pi.end());
  CompensatedSum below, above;  // k < x contributes to R_{a,x-1}
  for (std::int64_t k = a; k < b; ++k) {
    const double term = std::exp(log_pi[static_cast<std::size_t>(k - a)] - top);
    (k < x ? below : above).add(term);
  }
  const double total = below.value() + above.value();
  return {above.value() / total, below.value() / total};
}

Absorption absorption_oracle(const EnvWindow& env, std::int64_t a, std::int64_t b, std::int64_t x) {
  if (!(a < b && a <= x && x <= b)) {
    fail(ErrorCode::kOutOfRange, "absorption_oracle needs a < b and a <= x <= b");
  }
  if (x == a) return {1.0, 0.0};
  if (x == b) return {0.0, 0.0};
  if (!env.contains(a + 1) || !env.contains(b - 1)) {
    fail(ErrorCode::kOutOfRange, "absorption_oracle interior exceeds the window");
  }
  // Row for site y: h_y - w_y h_{y+1} - (1-w_y) h_{y-1} = rhs_y.
  const auto n = static_cast<std::size_t>(b - a - 1);
  std::vector<double> c(n), dp(n), dt(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double w = env.omega(a + 1 + static_cast<std::int64_t>(i));
    const double sub = -(1.0 - w);
    const double sup = -w;
    const double rhs_p = i == 0 ? (1.0 - w) : 0.0;
    const double rhs_t = 1.0;
    double pivot = 1.0;
    double prev_dp = 0.0, prev_dt = 0.0;
    if (i > 0) {
      pivot -= sub * c[i - 1];
      prev_dp = dp[i - 1];
      prev_dt = dt[i - 1];
    }
    c[i] = sup / pivot;
    dp[i] = (rhs_p - (i > 0 ? sub * prev_dp : 0.0)) / pivot;
    dt[i] = (rhs_t - (i > 0 ? sub * prev_dt : 0.0)) / pivot;
  }
  for (std::size_t i = n - 1; i-- > 0;) {
    dp[i] -= c[i] * dp[i + 1];
    dt[i] -= c[i] * dt[i + 1];
  }
  const auto k = static_cast<std::size_t>(x - a - 1);
  return {dp[k], dt[k]};
}

SeriesValue r_tail(const Environment& env, std::int64_t i, const SeriesOptions& opt) {
  require_right_transient(env.law(), "r_tail");
  return scan_tail(env, i, opt).series;
}

SeriesValue expected_hit(const Environment& env, std::int64_t x, HitDirection dir,
                         const SeriesOptions& opt) {
  const double drift = mean_log_rho(env.law());
  const bool right = dir == HitDirection::kRight;
  if (right ? !(drift < 0.0) : !(drift > 0.0)) return diverged();

  QuietRunSeries acc(opt);
  double log_pi = 0.0;
  bool stopped = false;
  for (std::int64_t n = 0; n < opt.horizon; ++n) {
    if (right) {
      log_pi += env.log_rho(x - n);
    } else {
      log_pi -= env.log_rho(x + n);
    }
    if (acc.add(std::exp(log_pi))) {
      stopped = true;
      break;
    }
  }
  SeriesValue s;
  s.value = 1.0 + 2.0 * acc.sum();
  s.terms_used = acc.terms();
  s.converged = stopped && std::isfinite(s.value);
  s.remainder_bound =
      s.converged ? 2.0 * geometric_tail(acc.last(), std::exp(-0.5 * std::fabs(drift))) : kInf;
  return s;
}

SeriesValue expected_hit(const EnvWindow& env, std::int64_t x, HitDirection dir,
                         const SeriesOptions& opt) {
  if (!env.contains(x)) fail(ErrorCode::kOutOfRange, "expected_hit start outside the window");
  const bool right = dir == HitDirection::kRight;
  const std::int64_t available = right ? x - env.lo() + 1 : env.hi() - x + 1;
  QuietRunSeries acc(opt);
  double log_pi = 0.0;
  bool stopped = false;
  for (std::int64_t n = 0; n < std::min(available, opt.horizon); ++n) {
    if (right) {
      log_pi += env.log_rho(x - n);
    } else {
      log_pi -= env.log_rho(x + n);
    }
    if (acc.add(std::exp(log_pi))) {
      stopped = true;
      break;
    }
  }
  SeriesValue s;
  s.value = 1.0 + 2.0 * acc.sum();
  s.terms_used = acc.terms();
  s.converged = stopped && std::isfinite(s.value);
  s.remainder_bound = s.converged ? 2.0 * geometric_tail(acc.last(), acc.observed_ratio()) : kInf;
  return s;
}

EnvWindow conditioned_env(const Environment& env, std::int64_t hi, const SeriesOptions& opt) {
  require_right_transient(env.law(), "conditioned_env");
  if (hi < 1) fail(ErrorCode::kInvalidArgument, "conditioned_env needs hi >= 1");
  const TailTable tails = conditioned_tails(env, hi + 1, opt);
  std::vector<double> omega(static_cast<std::size_t>(hi + 1));
  omega[0] = env.omega(0);
  for (std::int64_t x = 1; x <= hi; ++x) {
    const double r_next = tails.r(x + 1);
    omega[static_cast<std::size_t>(x)] = env.omega(x) * r_next / (1.0 + r_next);
  }
  return EnvWindow(0, std::move(omega));
}

SeriesValue conditioned_return_expectation(const Environment& env, const SeriesOptions& opt) {
  require_right_transient(env.law(), "conditioned_return_expectation");
  const TailScan scan = scan_tail(env, 1, opt);
  if (!scan.series.converged) {
    SeriesValue s;
    s.value = kInf;
    s.remainder_bound = kInf;
    s.terms_used = scan.series.terms_used;
    return s;
  }
  const std::int64_t decay = scan.last_site;
  std::int64_t last = 2 * decay + 64;
  for (;;) {
    const TailTable tails(env, 1, last);
    const double r1 = tails.r(1);
    const double log_norm = std::log(r1) + std::log1p(r1);
    QuietRunSeries acc(opt);
    double log_pi = 0.0;
    bool stopped = false;
    std::int64_t n = 1;
    for (; n <= last; ++n) {
      log_pi += tails.log_rho(n);
      const double r_next = tails.r(n + 1);
      const double term =
          r_next > 0.0 ? std::exp(log_pi + std::log(r_next) + std::log1p(r_next) - log_norm) : 0.0;
      if (acc.add(term)) {
        stopped = true;
        break;
      }
    }
    // R_{n+1} near the cut is short of its true value; demand a margin of
    // one decay length between the stopping index and the cut.
    if (stopped && n + decay <= last) {
      SeriesValue s;
      s.value = 1.0 + 2.0 * acc.sum();
      s.terms_used = acc.terms();
      s.converged = std::isfinite(s.value);
      s.remainder_bound = 2.0 * geometric_tail(acc.last(), std::exp(0.5 * mean_log_rho(env.law())));
      return s;
    }
    if (last >= opt.horizon) {
      SeriesValue s;
      s.value = 1.0 + 2.0 * acc.sum();
      s.remainder_bound = kInf;
      s.terms_used = acc.terms();
      s.converged = false;
      return s;
    }
    last = std::min(2 * last, opt.horizon);
  }
}

ConditionedIdentityResidual conditioned_identity_residual(const Environment& env, std::int64_t hi,
                                                          const SeriesOptions& opt) {
  const EnvWindow tilde = conditioned_env(env, hi, opt);
  const TailTable tails = conditioned_tails(env, hi + 1, opt);
  ConditionedIdentityResidual out{0.0, 0.0};
  double log_pi_tilde = 0.0;
  double log_pi = 0.0;
  const double r1 = tails.r(1);
  for (std::int64_t x = 1; x <= hi; ++x) {
    const double rho_t = tilde.rho(x);
    const double closed = (1.0 + tails.r(x)) / tails.r(x + 1);
    out.rho_tilde_max_rel = std::max(out.rho_tilde_max_rel, std::fabs(rho_t / closed - 1.0));

    log_pi_tilde += std::log(rho_t);
    log_pi += tails.log_rho(x);
    const double r_next = tails.r(x + 1);
    const double log_closed = std::log1p(r1) + std::log(r1) - log_pi - std::log1p(r_next) - std::log(r_next);
    out.pi_tilde_max_rel =
        std::max(out.pi_tilde_max_rel, std::fabs(std::expm1(log_pi_tilde - log_closed)));
  }
  return out;
}

ReturnDecomposition return_decomposition(const Environment& env, const SeriesOptions& opt) {
  require_right_transient(env.law(), "return_decomposition");
  ReturnDecomposition d;
  d.omega0 = env.omega(0);
  const SeriesValue left = expected_hit(env, -1, HitDirection::kRight, opt);
  const SeriesValue r1 = r_tail(env, 1, opt);
  const SeriesValue cond = conditioned_return_expectation(env, opt);
  d.e_left_hit = left.value;
  d.r1 = r1.value;
  d.p_right_return = r1.value / (1.0 + r1.value);
  d.e_cond_right = cond.value;

  const double q0 = 1.0 - d.omega0;
  d.p_return = q0 + d.omega0 * d.p_right_return;
  const double continuation = q0 * d.e_left_hit + d.omega0 * d.p_right_return * d.e_cond_right;
  d.e_return_indicator = 1.0 + continuation;
  d.e_return_given_return = d.e_return_indicator / d.p_return;
  d.e_return_walk = d.p_return + continuation;
  d.e_return_given_return_walk = d.e_return_walk / d.p_return;
  d.converged = left.converged && r1.converged && cond.converged;
  return d;
}

SpeedEt1 speed_and_et1(const EnvLaw& law) {
  const RegimeReport r = classify_regime(law);
  const double e_t1 =
      r.mean_rho < 1.0 - kBoundaryTol ? (1.0 + r.mean_rho) / (1.0 - r.mean_rho) : kInf;
  return {r.speed, e_t1};
}

double escape_return_bound(const Environment& env, std::int64_t m, const SeriesOptions& opt) {
  if (m < 1) fail(ErrorCode::kInvalidArgument, "escape_return_bound needs m >= 1");
  const SeriesValue tail = r_tail(env, m, opt);
  if (!tail.converged) return 1.0;
  const double rm = tail.value + tail.remainder_bound;
  double log_pi = 0.0;  // log Pi_{1,m-1}
  CompensatedSum r_block;  // R_{1,m-1}
  for (std::int64_t k = 1; k < m; ++k) {
    log_pi += env.log_rho(k);
    r_block.add(std::exp(log_pi));
  }
  const double num = std::exp(log_pi) * rm;
  return num / (1.0 + r_block.value() + num);
}

}  // namespace rwre
