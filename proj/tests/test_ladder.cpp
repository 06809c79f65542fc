#include <doctest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "fixtures.hpp"
#include "rwre/error.hpp"
#include "rwre/ladder.hpp"

using namespace rwre;

namespace {

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::kInternal;
}

// phi(t) for the +-1 walk with up-probability p and integer t >= 0.
// g(y) = exp(-y) + p g(y+1) + q g(y-1) on y > -t, g = 0 at y <= -t,
// reflected far above; phi(t) = 1 + p g(1) + q g(-1).
double phi_pm1(double p, int t) {
  const double q = 1.0 - p;
  const int lo = -t + 1, hi = 600;
  const int n = hi - lo + 1;
  std::vector<double> a(n, -q), b(n, 1.0), c(n, -p), d(n);
  for (int i = 0; i < n; ++i) d[i] = std::exp(-static_cast<double>(lo + i));
  a[0] = 0.0;
  b[n - 1] = 1.0 - p;  // g(hi+1) = g(hi)
  c[n - 1] = 0.0;
  for (int i = 1; i < n; ++i) {
    const double m = a[i] / b[i - 1];
    b[i] -= m * c[i - 1];
    d[i] -= m * d[i - 1];
  }
  std::vector<double> g(n);
  g[n - 1] = d[n - 1] / b[n - 1];
  for (int i = n - 2; i >= 0; --i) g[i] = (d[i] - c[i] * g[i + 1]) / b[i];
  auto at = [&](int y) { return y < lo ? 0.0 : g[y - lo]; };
  return 1.0 + p * at(1) + q * at(-1);
}

StepLaw fix_f_step() { return StepLaw::log_rho(fix::f()); }

}  // namespace

TEST_CASE("tilt root") {
  CHECK(std::fabs(gamma_root(fix::skip_free()) - std::log(7.0 / 3.0)) <= 1e-12);
  CHECK(std::fabs(gamma_root(fix_f_step()) - std::log2(std::numbers::phi)) <= 1e-9);
  for (const EnvLaw& law : {fix::c(), fix::f()}) {
    CHECK(std::fabs(gamma_root(StepLaw::log_rho(law)) - *kappa_root(law)) <= 1e-9);
  }
  CHECK(code_of([] { gamma_root(StepLaw::discrete({{1.0, -1.0}})); }) == ErrorCode::kNoRoot);
  CHECK(code_of([] { gamma_root(StepLaw::lattice({0.6, 0.4}, {1, -1}, 1.0)); }) == ErrorCode::kPrecondition);
}

TEST_CASE("tilted law") {
  const StepLaw s = fix::skip_free();
  const TiltedLaw t = tilt(s, std::log(7.0 / 3.0));
  REQUIRE(t.q_weights.size() == 2);
  CHECK(t.q_weights[0] == doctest::Approx(0.7).epsilon(1e-13));
  CHECK(t.mean_q == doctest::Approx(0.4).epsilon(1e-12));
  const TiltedLaw id = tilt(s, 0.0);
  CHECK(id.q_weights[0] == 0.3);
  CHECK(id.q_weights[1] == 0.7);
  CHECK(code_of([&] { tilt(s, 0.3); }) == ErrorCode::kInvalidArgument);

  const StepLaw f = fix_f_step();
  const TiltedLaw tf = tilt(f, gamma_root(f));
  double sum = 0.0;
  for (double q : tf.q_weights) sum += q;
  CHECK(std::fabs(sum - 1.0) <= 1e-12);
  CHECK(tf.mean_q > 0.0);
}

TEST_CASE("lattice detection and grammar") {
  const StepLaw f = fix_f_step();
  REQUIRE(f.is_lattice());
  CHECK(*f.spacing() == doctest::Approx(std::log(2.0)).epsilon(1e-12));
  CHECK(f.units() == std::vector<std::int64_t>{-2, 1});
  CHECK(f.is_upward_skip_free());
  CHECK_FALSE(detect_lattice({1.0, -std::numbers::sqrt2}).has_value());
  CHECK(*detect_lattice({1.0, -1.5}) == doctest::Approx(0.5));

  const StepLaw p = StepLaw::parse("lattice:0.3@+1,0.7@-1");
  CHECK(p == fix::skip_free());
  CHECK(StepLaw::parse(p.to_string()) == p);
  CHECK(StepLaw::parse("logrho:discrete:0.5@0.8,0.5@1/3") == f);
  CHECK(StepLaw::parse(f.to_string()) == f);
  const StepLaw d = StepLaw::parse("discrete:0.5@1,0.5@-1.5");
  CHECK(d.is_lattice());
  CHECK(StepLaw::parse(d.to_string()) == d);
  CHECK(code_of([] { StepLaw::parse("lattice:0.3@1.5,0.7@-1"); }) == ErrorCode::kParse);
  CHECK(code_of([] { StepLaw::parse("lattice:0.3@1,0.6@-1"); }) == ErrorCode::kInvalidArgument);
  CHECK(code_of([] { StepLaw::parse("uniform:1"); }) == ErrorCode::kParse);
}

TEST_CASE("level crossing: skip-free law is exact") {
  const Estimate e = sup_tail(fix::skip_free(), 10.0, 1000, 5);
  CHECK(std::fabs(e.value - std::pow(3.0 / 7.0, 10)) <= 1e-15);
  CHECK(e.sample_max - e.sample_min <= 1e-12);
  CHECK(e.std_error == 0.0);
  CHECK(e.method == "importance");

  const StepLaw f = fix_f_step();
  const double a = *f.spacing();
  for (int k : {1, 5, 12}) {
    const Estimate s = sup_tail(f, k * a, 500, 9);
    CHECK(s.sample_max - s.sample_min <= 1e-12);
    CHECK(s.value == doctest::Approx(std::exp(-gamma_root(f) * k * a)).epsilon(1e-12));
  }
}

TEST_CASE("level crossing: naive against importance") {
  const StepLaw s = StepLaw::parse("discrete:0.25@1.3,0.75@-0.7");
  const Estimate is = sup_tail(s, 4.0, 100000, 1);
  SupTailOptions naive;
  naive.method = SupTailMethod::kNaive;
  const Estimate nv = sup_tail(s, 4.0, 100000, 2, naive);
  CHECK(nv.error_budget == 1e-12);
  CHECK(is.error_budget == 0.0);
  const double se = std::hypot(is.std_error, nv.std_error);
  CHECK(std::fabs(is.value - nv.value) <= 3.0 * se + nv.error_budget);
}

TEST_CASE("level crossing: monotone in t with common random numbers") {
  const StepLaw s = StepLaw::parse("discrete:0.25@1.3,0.75@-0.7");
  SupTailOptions naive;
  naive.method = SupTailMethod::kNaive;
  double prev_is = 2.0, prev_nv = 2.0;
  for (double t = 0.5; t <= 6.0; t += 0.5) {
    const double is = sup_tail(s, t, 4000, 3).value;
    const double nv = sup_tail(s, t, 4000, 3, naive).value;
    CHECK(is <= prev_is);
    CHECK(nv <= prev_nv);
    prev_is = is;
    prev_nv = nv;
  }
}

TEST_CASE("overshoot constant") {
  const OvershootResult sf = overshoot_constant(fix::skip_free(), 1, 6, 200, 4);
  for (const OvershootRow& r : sf.rows) CHECK(r.scaled.value == 1.0);
  CHECK(sf.overshoot_pmf.size() == 1);

  const StepLaw g = StepLaw::lattice({0.2, 0.1, 0.7}, {2, 1, -1}, 1.0);
  const OvershootResult o = overshoot_constant(g, 8, 12, 20000, 6);
  CHECK(o.rows.size() == 5);
  for (std::size_t i = 0; i < o.rows.size(); ++i) {
    for (std::size_t j = i + 1; j < o.rows.size(); ++j) {
      const double se = std::hypot(o.rows[i].scaled.std_error, o.rows[j].scaled.std_error);
      CHECK(std::fabs(o.rows[i].scaled.value - o.rows[j].scaled.value) <= 4.0 * se);
    }
  }
  CHECK(std::fabs(o.wald.mean_residual) <= 4.0 * o.wald.residual_se);
  double total = 0.0;
  for (const auto& [u, p] : o.overshoot_pmf) {
    CHECK((u == 0 || u == 1));
    total += p;
  }
  CHECK(total == doctest::Approx(1.0));
  CHECK(code_of([] { overshoot_constant(StepLaw::parse("discrete:0.5@1,0.5@-1.41421356"), 1, 2, 10, 1); }) ==
        ErrorCode::kInvalidArgument);
}

TEST_CASE("phi against the tridiagonal oracle") {
  for (int t : {0, 1, 2, 3}) {
    const Estimate e = phi_estimate(fix::skip_free(), t, 100000, 17);
    CHECK(std::fabs(e.value - phi_pm1(0.3, t)) <= 4.0 * e.std_error);
  }
  CHECK(phi_estimate(fix::skip_free(), 0.0, 1000, 1).value >= 1.0);
}

TEST_CASE("phi growth bounds") {
  const StepLaw f = fix_f_step();
  std::vector<Estimate> phi;
  for (int k = 0; k <= 4; ++k) phi.push_back(phi_estimate(f, k, 20000, 23));
  for (int k = 1; k <= 4; ++k) {
    const double se = std::hypot(phi[k].std_error, phi[k - 1].std_error);
    CHECK(phi[k].value >= phi[k - 1].value - 3.0 * se);
    const double rec_se = std::sqrt(phi[k].std_error * phi[k].std_error + phi[k - 1].std_error * phi[k - 1].std_error +
                                    std::exp(2.0 * k) * phi[1].std_error * phi[1].std_error);
    CHECK(phi[k].value <= phi[k - 1].value + std::exp(k) * phi[1].value + 3.0 * rec_se);
    const double factor = (std::exp(k + 1.0) - 1.0) / (std::numbers::e - 1.0);
    CHECK(phi[k].value <= factor * phi[1].value + 3.0 * std::hypot(phi[k].std_error, factor * phi[1].std_error));
  }
}

TEST_CASE("estimators are deterministic and worker independent") {
  const StepLaw f = fix_f_step();
  const StepLaw s = StepLaw::parse("discrete:0.25@1.3,0.75@-0.7");
  SupTailOptions one, three;
  three.workers = 3;
  const Estimate a = sup_tail(s, 3.0, 5000, 8, one);
  const Estimate b = sup_tail(s, 3.0, 5000, 8, one);
  const Estimate c = sup_tail(s, 3.0, 5000, 8, three);
  CHECK(a.value == b.value);
  CHECK(a.std_error == b.std_error);
  CHECK(a.value == doctest::Approx(c.value).epsilon(1e-13));
  CHECK(phi_estimate(f, 2.0, 3000, 4).value == phi_estimate(f, 2.0, 3000, 4).value);
}
