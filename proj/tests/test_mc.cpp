#include <doctest.h>

#include <array>
#include <cmath>
#include <memory>

#include "fixtures.hpp"
#include "rwre/error.hpp"
#include "rwre/exact.hpp"
#include "rwre/mc.hpp"

using namespace rwre;

TEST_CASE("simulate_until basics") {
  const EnvWindow w = sample_window(EnvLaw::constant(0.999), 1, -50, 20);
  SplitMix64 rng(3);
  const std::array<std::int64_t, 1> ten{10};
  const WalkResult r = simulate_until(w, 0, ten, 1000, rng);
  CHECK(r.hit);
  CHECK(r.site == 10);
  CHECK(r.steps >= 10);
  CHECK(r.steps <= 20);
  const std::array<std::int64_t, 2> here{0, 5};
  const WalkResult z = simulate_until(w, 0, here, 1000, rng);
  CHECK(z.steps == 0);
  CHECK(z.site == 0);

  const EnvWindow tiny = sample_window(EnvLaw::constant(0.1), 1, -3, 3);
  const std::array<std::int64_t, 1> three{3};
  CHECK_THROWS_AS(simulate_until(tiny, 0, three, 1000, rng), Error);

  const std::array<std::int64_t, 1> far{1000};
  const WalkResult c = simulate_until(w, 0, far, 5, rng);
  CHECK_FALSE(c.hit);
  CHECK(c.steps == 5);
}

TEST_CASE("mean hitting time matches the exact series") {
  const EnvWindow w = sample_window(EnvLaw::constant(0.7), 1, -400, 1);
  const std::array<std::int64_t, 1> one{1};
  RunningStats st;
  for (std::uint64_t i = 0; i < 100000; ++i) {
    SplitMix64 rng(11, stream::kWalk, i);
    st.add(static_cast<double>(simulate_until(w, 0, one, 1'000'000, rng).steps));
  }
  CHECK(std::fabs(st.mean() - 2.5) <= 3.0 * st.std_error());

  const Environment env(fix::a(), 8);
  const double exact = expected_hit(env, 0, HitDirection::kRight).value;
  const EnvWindow wa = env.window(-2000, 1);
  RunningStats sa;
  for (std::uint64_t i = 0; i < 50000; ++i) {
    SplitMix64 rng(12, stream::kWalk, i);
    sa.add(static_cast<double>(simulate_until(wa, 0, one, 1'000'000, rng).steps));
  }
  CHECK(std::fabs(sa.mean() - exact) <= 3.0 * sa.std_error());
}

TEST_CASE("first return sampling") {
  for (const auto& [p, target] : {std::pair{0.7, 0.6}, std::pair{0.9, 0.2}}) {
    const EnvLaw law = EnvLaw::constant(p);
    const Environment env(law, 0);
    const std::int64_t m = certified_escape_level(env, 1e-12);
    CHECK(escape_return_bound(env, m) <= 1e-12);
    const EnvWindow w = sample_window(law, 0, -5, m);
    RunningStats st;
    bool parity_ok = true, bounds_ok = true;
    for (std::uint64_t i = 0; i < 100000; ++i) {
      SplitMix64 rng(5, stream::kWalk, i);
      const ReturnOutcome o = sample_first_return(w, 1'000'000, 1e-12, rng);
      REQUIRE(o.status != ReturnOutcome::Status::kCensored);
      if (o.status == ReturnOutcome::Status::kReturned) {
        parity_ok = parity_ok && o.steps >= 2 && o.steps % 2 == 0;
      } else {
        bounds_ok = bounds_ok && o.escape_bound <= 1e-12;
      }
      st.add(o.status == ReturnOutcome::Status::kReturned ? 1.0 : 0.0);
    }
    CHECK(parity_ok);
    CHECK(bounds_ok);
    CHECK(std::fabs(st.mean() - target) <= 3.0 * st.std_error());
  }
  const EnvWindow small = sample_window(EnvLaw::constant(0.7), 0, -5, 8);
  SplitMix64 rng(1);
  CHECK_THROWS_AS(sample_first_return(small, 1000, 1e-12, rng), Error);
  const EnvWindow bare(0, std::vector<double>(100, 0.7));
  CHECK_THROWS_AS(sample_first_return(bare, 1000, 1e-12, rng), Error);
}

TEST_CASE("conditioned sampler") {
  const Environment env(EnvLaw::constant(0.7), 0);
  const ConditionedSamples s = conditioned_sampler(env, 100000, 3);
  RunningStats st;
  bool odd = true;
  for (std::int64_t t : s.times) {
    st.add(static_cast<double>(t));
    odd = odd && t % 2 == 1;
  }
  CHECK(odd);
  CHECK(s.censored == 0);
  CHECK(s.times.size() == 100000);
  CHECK(std::fabs(st.mean() - 2.5) <= 3.0 * st.std_error());

  ConditionedOptions rej;
  rej.mode = ConditionedMode::kRejection;
  const ConditionedSamples r = conditioned_sampler(env, 20000, 4, rej);
  CHECK(r.times.size() == 20000);
  CHECK(r.discarded > 0);
  RunningStats sr;
  for (std::int64_t t : r.times) sr.add(static_cast<double>(t));
  CHECK(std::fabs(sr.mean() - 2.5) <= 3.0 * sr.std_error());
}

TEST_CASE("conditioned samplers agree in distribution") {
  for (const EnvLaw& law : {fix::a(), fix::c(), fix::d(), fix::f()}) {
    const Environment env(law, 21);
    ConditionedOptions h, rej;
    rej.mode = ConditionedMode::kRejection;
    const ConditionedSamples a = conditioned_sampler(env, 10000, 1, h);
    const ConditionedSamples b = conditioned_sampler(env, 10000, 2, rej);
    std::vector<double> va(a.times.begin(), a.times.end()), vb(b.times.begin(), b.times.end());
    CHECK(ks_two_sample(va, vb) < ks_critical_value(va.size(), vb.size(), 0.01));
    RunningStats st;
    for (double v : va) st.add(v);
    const double exact = conditioned_return_expectation(env).value;
    CHECK(std::fabs(st.mean() - exact) <= 4.0 * st.std_error());
  }
}

TEST_CASE("conditioned sampler is worker independent") {
  const Environment env(fix::c(), 2);
  ConditionedOptions one, four;
  four.workers = 4;
  CHECK(conditioned_sampler(env, 3000, 9, one).times == conditioned_sampler(env, 3000, 9, four).times);
}

TEST_CASE("conditional return time estimates") {
  ReturnConditionalOptions q;
  q.mode = ReturnMode::kQuenched;
  const ReturnConditionalResult a = estimate_return_conditional(EnvLaw::constant(0.7), 1, q);
  CHECK(std::fabs(a.estimate.value - 25.0 / 6.0) <= 1e-10);
  CHECK(a.estimate.std_error == 0.0);
  CHECK_FALSE(a.theory_infinite);

  ReturnConditionalOptions av;
  av.n_env = 50;
  const ReturnConditionalResult b = estimate_return_conditional(EnvLaw::constant(0.7), 1, av);
  CHECK(std::fabs(b.estimate.value - 25.0 / 6.0) <= 1e-10);
  CHECK(b.estimate.std_error <= 1e-12);

  av.statistic = ReturnStatistic::kWalk;
  const ReturnConditionalResult w = estimate_return_conditional(EnvLaw::constant(0.7), 1, av);
  CHECK(w.estimate.value == doctest::Approx(3.5).epsilon(1e-12));

  ReturnConditionalOptions c;
  c.n_env = 200;
  const ReturnConditionalResult fc = estimate_return_conditional(fix::c(), 4, c);
  CHECK(fc.theory_infinite);
  CHECK(std::isfinite(fc.estimate.value));
}

TEST_CASE("averaged estimate is stable for a ballistic law") {
  ReturnConditionalOptions small, large;
  small.n_env = 1000;
  large.n_env = 10000;
  const ReturnConditionalResult s = estimate_return_conditional(fix::a(), 31, small);
  const ReturnConditionalResult l = estimate_return_conditional(fix::a(), 32, large);
  CHECK_FALSE(s.theory_infinite);
  CHECK(std::fabs(s.estimate.value - l.estimate.value) <= 3.0 * std::hypot(s.estimate.std_error, l.estimate.std_error));
}

TEST_CASE("quenched walk-level cross-check") {
  for (const EnvLaw& law : {EnvLaw::constant(0.7), fix::a(), fix::c()}) {
    ReturnConditionalOptions q;
    q.mode = ReturnMode::kQuenched;
    q.env_seed = 6;
    q.n_walk = 40000;
    const ReturnConditionalResult r = estimate_return_conditional(law, 77, q);
    REQUIRE(r.walk_p_return.has_value());
    REQUIRE(r.walk_conditional.has_value());
    CHECK(r.failed_environments == 0);
    CHECK(std::fabs(r.walk_p_return->value - r.quenched->p_return) <= 3.0 * r.walk_p_return->std_error);
    CHECK(std::fabs(r.walk_conditional->value - r.quenched->e_return_given_return_walk) <=
          3.0 * r.walk_conditional->std_error);
  }
}

TEST_CASE("speed estimate") {
  const Estimate s = speed_estimate(EnvLaw::constant(0.7), 20000, 60, 3);
  CHECK(std::fabs(s.value - 0.4) <= 3.0 * s.std_error);
  const Estimate a = speed_estimate(fix::a(), 20000, 60, 4, 2);
  CHECK(std::fabs(a.value - 13.0 / 35.0) <= 3.0 * a.std_error);
  CHECK(a.value == speed_estimate(fix::a(), 20000, 60, 4, 3).value);
}

TEST_CASE("divergence diagnostic on a ballistic law") {
  DivergenceOptions opt;
  opt.schedule = {1000, 10000};
  opt.tail_grid = {1.5};
  const DivergenceReport r = divergence_diagnostic(fix::a(), 5, opt);
  REQUIRE(r.running_mean.size() == 2);
  const auto& [n0, m0, s0] = r.running_mean[0];
  const auto& [n1, m1, s1] = r.running_mean[1];
  CHECK(n0 == 1000);
  CHECK(n1 == 10000);
  CHECK(std::fabs(m0 - m1) <= 3.0 * std::hypot(s0, s1));
  CHECK(r.hill.tail_index > 2.0);
  CHECK_FALSE(r.kappa.has_value());
  CHECK_FALSE(r.theory_infinite);
  CHECK(r.failed_environments == 0);
  const DivergenceReport again = divergence_diagnostic(fix::a(), 5, opt);
  CHECK(again.running_mean[1].mean == m1);
  CHECK(again.hill.tail_index == r.hill.tail_index);
}
