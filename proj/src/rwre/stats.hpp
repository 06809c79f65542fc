#pragma once

#include <cstdint>
#include <vector>

namespace rwre {

// Two-sample Kolmogorov-Smirnov statistic sup |F_a - F_b|; ties handled by
// stepping both empirical CDFs through each distinct value.
double ks_two_sample(std::vector<double> a, std::vector<double> b);

// Asymptotic critical value c(alpha) sqrt((n+m)/(n m)), c(alpha) = sqrt(-ln(alpha/2)/2).
double ks_critical_value(std::size_t n, std::size_t m, double alpha);

struct HillEstimate {
  double tail_index = 0.0;  // alpha-hat = 1 / xi-hat
  double xi = 0.0;
  std::int64_t k = 0;       // order statistics used
  double threshold = 0.0;   // X_(k+1)
};

// Hill estimator over the largest ceil(top_fraction * n) strictly positive samples.
HillEstimate hill_tail_index(std::vector<double> samples, double top_fraction = 0.01);

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  std::size_t points = 0;
};

LineFit least_squares(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace rwre
