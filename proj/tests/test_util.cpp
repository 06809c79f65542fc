#include <doctest.h>

#include <cmath>
#include <random>
#include <set>

#include "rwre/error.hpp"
#include "rwre/estimate.hpp"
#include "rwre/numerics.hpp"
#include "rwre/parallel.hpp"
#include "rwre/random.hpp"
#include "rwre/stats.hpp"
#include "rwre/text.hpp"

using namespace rwre;

TEST_CASE("number grammar") {
  CHECK(text::parse_number("0.25") == 0.25);
  CHECK(text::parse_number("+1") == 1.0);
  CHECK(text::parse_number(" 1/3 ") == 1.0 / 3.0);
  CHECK(text::parse_number("-2/4") == -0.5);
  CHECK_THROWS_AS(text::parse_number("1/0"), Error);
  CHECK_THROWS_AS(text::parse_number("x"), Error);
  CHECK_THROWS_AS(text::parse_number("1.5e"), Error);
  for (double v : {0.1, 1.0 / 3.0, 2.0 / 3.0, 1e-300, 123456.789}) {
    CHECK(text::parse_number(text::format_shortest(v)) == v);
  }
}

TEST_CASE("derived streams are distinct and reproducible") {
  std::set<std::uint64_t> seen;
  for (std::uint64_t tag : {stream::kSite, stream::kEnvironment, stream::kReplicate, stream::kWalk}) {
    for (std::uint64_t i = 0; i < 1000; ++i) seen.insert(derive_seed(42, tag, i));
  }
  CHECK(seen.size() == 4000);
  SplitMix64 a(1, stream::kWalk, 7), b(1, stream::kWalk, 7);
  for (int i = 0; i < 10; ++i) CHECK(a() == b());
  RunningStats u;
  SplitMix64 g(99);
  for (int i = 0; i < 200000; ++i) {
    const double x = g.uniform01();
    CHECK_FALSE((x < 0.0 || x >= 1.0));
    u.add(x);
  }
  CHECK(std::fabs(u.mean() - 0.5) <= 4.0 * u.std_error());
}

TEST_CASE("running statistics merge") {
  std::mt19937_64 gen(3);
  std::normal_distribution<double> nd(2.0, 3.0);
  std::vector<double> xs(10007);
  for (double& x : xs) x = nd(gen);
  RunningStats whole, left, right;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    whole.add(xs[i]);
    (i < 4000 ? left : right).add(xs[i]);
  }
  left.merge(right);
  CHECK(left.count() == whole.count());
  CHECK(left.mean() == doctest::Approx(whole.mean()).epsilon(1e-13));
  CHECK(left.variance() == doctest::Approx(whole.variance()).epsilon(1e-12));
  RunningStats flat, other;
  for (int i = 0; i < 100; ++i) (i % 3 ? flat : other).add(0.125);
  flat.merge(other);
  CHECK(flat.std_error() == 0.0);
  const Estimate e = to_estimate(whole, "x", 5, 1);
  CHECK(e.std_error == doctest::Approx(whole.std_error()));
  CHECK(e.n == 10007);
}

TEST_CASE("sharded runs merge in shard order") {
  auto sum_range = [](std::int64_t b, std::int64_t e) {
    std::int64_t s = 0;
    for (std::int64_t i = b; i < e; ++i) s += i;
    return s;
  };
  for (unsigned w : {1u, 2u, 5u, 16u}) {
    const auto parts = run_sharded<std::int64_t>(1000, w, sum_range);
    std::int64_t total = 0;
    for (auto p : parts) total += p;
    CHECK(total == 999 * 1000 / 2);
  }
  CHECK_THROWS_AS(run_sharded<int>(10, 2, [](std::int64_t, std::int64_t) -> int {
                    fail(ErrorCode::kInternal, "boom");
                  }),
                  Error);
}

TEST_CASE("moment root search") {
  RootSearchOptions opt;
  const RootSearchResult r = positive_moment_root([](double u) { return 0.5 * (std::pow(0.25, u) + std::pow(2.0, u)); }, opt);
  CHECK(r.outcome == RootSearchOutcome::kFound);
  CHECK(r.root == doctest::Approx(std::log2((1 + std::sqrt(5.0)) / 2)).epsilon(1e-12));
  const RootSearchResult never = positive_moment_root([](double u) { return std::pow(0.5, u); }, opt);
  CHECK(never.outcome == RootSearchOutcome::kNeverCrossed);
  // +inf past u = 3 brackets the crossing at 2.5
  const RootSearchResult jump =
      positive_moment_root([](double u) { return u < 3.0 ? 1.0 - 0.1 * u * (2.5 - u) : kInf; }, opt);
  CHECK(jump.outcome == RootSearchOutcome::kFound);
  CHECK(jump.root == doctest::Approx(2.5).epsilon(1e-10));
  const RootSearchResult wall =
      positive_moment_root([](double u) { return u < 3.0 ? 1.0 - 0.1 * u * (3.0 - u) : kInf; }, opt);
  CHECK(wall.outcome == RootSearchOutcome::kToleranceNotMet);
}

TEST_CASE("two-sample KS") {
  CHECK(ks_two_sample({1, 2, 3}, {1, 2, 3}) == 0.0);
  CHECK(ks_two_sample({1, 2}, {3, 4}) == 1.0);
  CHECK(ks_two_sample({1, 2, 3, 4}, {3, 4, 5, 6}) == doctest::Approx(0.5));
  CHECK(ks_critical_value(10000, 10000, 0.01) == doctest::Approx(1.6276 * std::sqrt(2.0 / 10000)).epsilon(1e-3));
}

TEST_CASE("Hill estimator on Pareto samples") {
  std::mt19937_64 gen(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> xs(200000);
  for (double& x : xs) x = std::pow(1.0 - u(gen), -1.0 / 1.5);
  const HillEstimate h = hill_tail_index(xs, 0.01);
  CHECK(h.k == 2000);
  CHECK(h.tail_index == doctest::Approx(1.5).epsilon(0.1));
  CHECK_THROWS_AS(hill_tail_index({1.0}), Error);
}

TEST_CASE("least squares") {
  const LineFit f = least_squares({0, 1, 2, 3}, {1, 3, 5, 7});
  CHECK(f.slope == doctest::Approx(2.0));
  CHECK(f.intercept == doctest::Approx(1.0));
  CHECK(f.points == 4);
}
