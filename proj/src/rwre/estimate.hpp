#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>

namespace rwre {

// Monte Carlo result. error_budget carries certified censoring bias and is
// never folded into std_error.
struct Estimate {
  double value = 0.0;
  double std_error = 0.0;
  std::int64_t n = 0;
  std::string method;
  std::uint64_t seed = 0;
  double error_budget = 0.0;
  unsigned workers = 1;
  double sample_min = 0.0;
  double sample_max = 0.0;
};

// Welford running moments with Chan's pairwise merge. Identical inputs keep
// m2 at exactly zero.
class RunningStats {
 public:
  void add(double x) noexcept {
    ++n_;
    const double delta = x - mean_;
    mean_ += delta / static_cast<double>(n_);
    m2_ += delta * (x - mean_);
    min_ = std::min(min_, x);
    max_ = std::max(max_, x);
  }

  void merge(const RunningStats& o) noexcept {
    if (o.n_ == 0) return;
    if (n_ == 0) {
      *this = o;
      return;
    }
    const double na = static_cast<double>(n_);
    const double nb = static_cast<double>(o.n_);
    const double delta = o.mean_ - mean_;
    const double n = na + nb;
    mean_ += delta * nb / n;
    m2_ += o.m2_ + delta * delta * na * nb / n;
    n_ += o.n_;
    min_ = std::min(min_, o.min_);
    max_ = std::max(max_, o.max_);
  }

  std::int64_t count() const noexcept { return n_; }
  double mean() const noexcept { return mean_; }
  double variance() const noexcept { return n_ > 1 ? m2_ / static_cast<double>(n_ - 1) : 0.0; }
  double std_error() const noexcept {
    return n_ > 1 ? std::sqrt(variance() / static_cast<double>(n_)) : 0.0;
  }
  double min() const noexcept { return min_; }
  double max() const noexcept { return max_; }

 private:
  std::int64_t n_ = 0;
  double mean_ = 0.0;
  double m2_ = 0.0;
  double min_ = HUGE_VAL;
  double max_ = -HUGE_VAL;
};

inline Estimate to_estimate(const RunningStats& s, std::string method, std::uint64_t seed,
                            unsigned workers, double error_budget = 0.0) {
  Estimate e;
  e.value = s.mean();
  e.std_error = s.std_error();
  e.n = s.count();
  e.method = std::move(method);
  e.seed = seed;
  e.error_budget = error_budget;
  e.workers = workers;
  e.sample_min = s.count() ? s.min() : 0.0;
  e.sample_max = s.count() ? s.max() : 0.0;
  return e;
}

}  // namespace rwre
