#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <optional>

namespace rwre {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

// Neumaier compensated summation.
class CompensatedSum {
 public:
  void add(double x) noexcept {
    const double t = sum_ + x;
    if (std::fabs(sum_) >= std::fabs(x)) {
      comp_ += (sum_ - t) + x;
    } else {
      comp_ += (x - t) + sum_;
    }
    sum_ = t;
  }
  double value() const noexcept { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

struct RootSearchOptions {
  double tol = 1e-12;    // on |f(u)|
  double first = 1.0;    // first bracket probe
  double cap = 64.0;     // give up past this u
  int max_bisections = 400;
};

enum class RootSearchOutcome { kFound, kNeverCrossed, kToleranceNotMet };

struct RootSearchResult {
  RootSearchOutcome outcome;
  double root = 0.0;
  double residual = 0.0;
};

// Positive root of a convex function g with g(0) = 0 and g'(0) < 0, given as
// moment(u) = g(u) + 1. Probes u = first, 2*first, 4*first, ... until the
// moment exceeds 1 (a +inf moment counts as exceeding), then bisects.
inline RootSearchResult positive_moment_root(const std::function<double(double)>& moment,
                                             const RootSearchOptions& opt) {
  double lo = 0.0;
  double hi = opt.first;
  for (;;) {
    const double m = moment(hi);
    if (m > 1.0) break;
    if (m == 1.0) return {RootSearchOutcome::kFound, hi, 0.0};
    lo = hi;
    hi *= 2.0;
    if (hi > opt.cap) return {RootSearchOutcome::kNeverCrossed, 0.0, 0.0};
  }
  // Invariant: moment(lo) <= 1 < moment(hi).
  double mid = 0.5 * (lo + hi);
  double resid = kInf;
  for (int it = 0; it < opt.max_bisections; ++it) {
    mid = 0.5 * (lo + hi);
    if (!(mid > lo && mid < hi)) break;
    const double m = moment(mid);
    resid = m - 1.0;
    if (resid == 0.0) break;
    if (m > 1.0) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  const double m = moment(mid);
  resid = std::isfinite(m) ? m - 1.0 : kInf;
  if (!(std::fabs(resid) <= opt.tol)) return {RootSearchOutcome::kToleranceNotMet, mid, resid};
  return {RootSearchOutcome::kFound, mid, resid};
}

// log(exp(a) + exp(b)) without overflow.
inline double log_add_exp(double a, double b) noexcept {
  if (a == -kInf) return b;
  if (b == -kInf) return a;
  const double hi = a > b ? a : b;
  const double lo = a > b ? b : a;
  return hi + std::log1p(std::exp(lo - hi));
}

}  // namespace rwre
