#include "rwre/stats.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

#include "rwre/error.hpp"

namespace rwre {

double ks_two_sample(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty()) fail(ErrorCode::kInvalidArgument, "KS test needs two non-empty samples");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double v = std::min(a[i], b[j]);
    while (i < a.size() && a[i] == v) ++i;
    while (j < b.size() && b[j] == v) ++j;
    d = std::max(d, std::fabs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  return d;
}

double ks_critical_value(std::size_t n, std::size_t m, double alpha) {
  const double c = std::sqrt(-0.5 * std::log(alpha / 2.0));
  const double dn = static_cast<double>(n), dm = static_cast<double>(m);
  return c * std::sqrt((dn + dm) / (dn * dm));
}

HillEstimate hill_tail_index(std::vector<double> samples, double top_fraction) {
  std::erase_if(samples, [](double v) { return !(v > 0.0) || !std::isfinite(v); });
  if (samples.size() < 2) fail(ErrorCode::kInvalidArgument, "Hill estimator needs at least two positive samples");
  std::sort(samples.begin(), samples.end(), std::greater<>());
  auto k = static_cast<std::size_t>(std::ceil(top_fraction * static_cast<double>(samples.size())));
  k = std::clamp<std::size_t>(k, 1, samples.size() - 1);
  HillEstimate h;
  h.k = static_cast<std::int64_t>(k);
  h.threshold = samples[k];
  double s = 0.0;
  for (std::size_t i = 0; i < k; ++i) s += std::log(samples[i] / h.threshold);
  h.xi = s / static_cast<double>(k);
  h.tail_index = h.xi > 0.0 ? 1.0 / h.xi : std::numeric_limits<double>::infinity();
  return h;
}

LineFit least_squares(const std::vector<double>& x, const std::vector<double>& y) {
  LineFit f;
  f.points = x.size();
  if (x.size() != y.size() || x.size() < 2) return f;
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  f.slope = sxx > 0.0 ? sxy / sxx : 0.0;
  f.intercept = my - f.slope * mx;
  return f;
}

}  // namespace rwre
