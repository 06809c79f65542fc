// Acceptance gate: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <charconv>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "fixtures.hpp"
#include "rwre/env.hpp"
#include "rwre/exact.hpp"
#include "rwre/ladder.hpp"
#include "rwre/mc.hpp"
#include "rwre/stats.hpp"

using namespace rwre;

namespace {

constexpr std::uint64_t kSeed = 20261018;

std::string num(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

// Rows in the same shape the CLI writes: quantity,input,value,std_error.
struct Outcome {
  bool pass = true;
  std::string detail;
  std::vector<std::string> rows;

  void row(const std::string& q, const std::string& in, double v, double se = 0.0) {
    rows.push_back(q + "," + in + "," + num(v) + "," + num(se));
  }
  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail += (detail.empty() ? "" : "; ") + what;
    }
  }
  std::string csv() const {
    std::string s;
    for (const auto& r : rows) s += r + "\n";
    return s;
  }
};

Outcome c1_oracle(unsigned) {
  Outcome o;
  double worst = 0.0;
  for (std::uint64_t s = 0; s < 100; ++s) {
    const EnvWindow w = sample_window(fix::c(), kSeed + s, -10, 10);
    for (std::int64_t x = -9; x <= 9; ++x) {
      const HittingProbability h = hitting_prob(w, x, -10, 10);
      const Absorption a = absorption_oracle(w, -10, 10, x);
      worst = std::max({worst, std::fabs(h.p_left - a.p_left), std::fabs(h.p_right - (1.0 - a.p_left))});
    }
  }
  o.row("max_abs_diff", "100 windows", worst);
  o.require(worst <= 1e-10, "max diff " + num(worst));
  o.detail = o.detail.empty() ? "max |htform - oracle| = " + num(worst) : o.detail;
  return o;
}

Outcome c2_closed_forms(unsigned) {
  Outcome o;
  const Environment env(EnvLaw::constant(0.7), kSeed);
  const SeriesValue hit = expected_hit(env, 0, HitDirection::kRight);
  const ReturnDecomposition d = return_decomposition(env);
  const EnvWindow cw = conditioned_env(env, 64);
  double worst_w = 0.0;
  for (std::int64_t x = 1; x <= 48; ++x) worst_w = std::max(worst_w, std::fabs(cw.omega(x) - 0.3));
  o.row("expected_hit_right", "x=0", hit.value);
  o.row("p_return", "", d.p_return);
  o.row("e_return_given_return", "", d.e_return_given_return);
  o.row("conditioned_omega_max_err", "x=1..48", worst_w);
  o.require(std::fabs(hit.value - 2.5) <= 1e-12, "E[T_1] = " + num(hit.value));
  o.require(std::fabs(d.p_return - 0.6) <= 1e-10, "p_return = " + num(d.p_return));
  o.require(std::fabs(d.e_return_given_return - 25.0 / 6.0) <= 1e-10,
            "E[r|r<inf] = " + num(d.e_return_given_return));
  o.require(worst_w <= 1e-12, "omega~ err " + num(worst_w));
  if (o.pass) {
    o.detail = "E[T_1]=" + num(hit.value) + " p_return=" + num(d.p_return) +
               " E[r|r<inf]=" + num(d.e_return_given_return) + " max|omega~-0.3|=" + num(worst_w);
  }
  return o;
}

Outcome c3_h_transform(unsigned) {
  Outcome o;
  const std::vector<std::pair<const char*, EnvLaw>> laws{
      {"A", fix::a()}, {"C", fix::c()}, {"D", fix::d()}, {"F", fix::f()}};
  double worst = 0.0;
  for (const auto& [name, law] : laws) {
    double law_worst = 0.0;
    for (std::uint64_t s = 0; s < 50; ++s) {
      const Environment env(law, kSeed + s);
      const SeriesValue direct = conditioned_return_expectation(env);
      SeriesValue via;
      bool ok = direct.converged;
      for (std::int64_t h = 256; ok; h *= 2) {
        via = expected_hit(conditioned_env(env, h), 1, HitDirection::kLeft);
        if (via.converged) break;
        ok = h < (std::int64_t{1} << 22);
      }
      if (!ok) {
        o.require(false, std::string(name) + " seed " + std::to_string(s) + " did not converge");
        continue;
      }
      law_worst = std::max(law_worst, std::fabs(direct.value - via.value));
    }
    o.row("max_abs_diff", name, law_worst);
    worst = std::max(worst, law_worst);
  }
  o.require(worst <= 1e-8, "max diff " + num(worst));
  if (o.pass) o.detail = "max |direct - conditioned E[T_0]| = " + num(worst) + " over 200 environments";
  return o;
}

Outcome c4_samplers(unsigned workers) {
  Outcome o;
  const Environment env(fix::c(), kSeed);
  ConditionedOptions h, r;
  h.workers = r.workers = workers;
  r.mode = ConditionedMode::kRejection;
  const ConditionedSamples a = conditioned_sampler(env, 10000, kSeed + 1, h);
  const ConditionedSamples b = conditioned_sampler(env, 10000, kSeed + 2, r);
  bool odd = a.censored == 0 && b.censored == 0;
  for (auto t : a.times) odd = odd && t % 2 == 1;
  for (auto t : b.times) odd = odd && t % 2 == 1;
  const std::vector<double> va(a.times.begin(), a.times.end()), vb(b.times.begin(), b.times.end());
  const double d = ks_two_sample(va, vb);
  const double crit = ks_critical_value(va.size(), vb.size(), 0.01);
  o.row("ks_statistic", "", d);
  o.row("ks_critical_1pct", "", crit);
  o.row("all_odd", "", odd ? 1.0 : 0.0);
  o.row("h_samples", "", static_cast<double>(va.size()));
  o.row("rejection_samples", "", static_cast<double>(vb.size()));
  o.require(va.size() == 10000 && vb.size() == 10000, "short sample");
  o.require(d < crit, "KS " + num(d) + " >= " + num(crit));
  o.require(odd, "parity");
  if (o.pass) o.detail = "KS D=" + num(d) + " < " + num(crit) + ", all 20000 return times odd";
  return o;
}

Outcome c5_speed(unsigned workers) {
  Outcome o;
  const Estimate a = speed_estimate(fix::a(), 100000, 100, kSeed, workers);
  const Estimate p = speed_estimate(EnvLaw::constant(0.7), 100000, 100, kSeed + 1, workers);
  o.row("speed", "FIX-A", a.value, a.std_error);
  o.row("speed", "constant:0.7", p.value, p.std_error);
  const double za = (a.value - 13.0 / 35.0) / a.std_error;
  const double zp = (p.value - 0.4) / p.std_error;
  o.require(std::fabs(za) <= 3.0, "FIX-A z=" + num(za));
  o.require(std::fabs(zp) <= 3.0, "p=0.7 z=" + num(zp));
  if (o.pass) {
    o.detail = "FIX-A " + num(a.value) + " (z=" + num(za) + "), p=0.7 " + num(p.value) + " (z=" + num(zp) + ")";
  }
  return o;
}

Outcome c6_classification(unsigned) {
  Outcome o;
  const RegimeReport a = classify_regime(fix::a());
  o.require(a.direction == Direction::kRight && a.ballistic &&
                a.averaged_strongly_transient == AveragedStrength::kYes,
            "FIX-A");
  const RegimeReport c = classify_regime(fix::c());
  o.require(c.direction == Direction::kRight && c.speed == 0.0 && !c.ballistic && c.quenched_strongly_transient &&
                c.averaged_strongly_transient == AveragedStrength::kNo,
            "FIX-C");
  const RegimeReport e = classify_regime(fix::e());
  o.require(std::fabs(e.mean_rho - 1.0) <= 1e-12 && e.rho_log_rho_finite.value_or(false) &&
                e.averaged_strongly_transient == AveragedStrength::kNo,
            "FIX-E");
  const RegimeReport h = classify_regime(EnvLaw::constant(0.5));
  o.require(h.direction == Direction::kRecurrent, "constant 0.5");
  for (const auto& [name, r] : {std::pair{"FIX-A", a}, std::pair{"FIX-C", c}, std::pair{"FIX-E", e},
                                std::pair{"constant:0.5", h}}) {
    o.rows.push_back(std::string(name) + "," + to_string(r.direction) + "," + num(r.speed) + "," +
                     to_string(r.averaged_strongly_transient));
  }
  if (o.pass) o.detail = "A right/ballistic/strong, C right/zero speed/weak, E E[rho]=1 finite rho log rho/weak, 0.5 recurrent";
  return o;
}

// Independent bisection for E[rho^k] = 1 on a two-atom law.
double bisect_kappa(double r1, double r2) {
  double lo = 1e-6, hi = 10.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (0.5 * (std::pow(r1, mid) + std::pow(r2, mid)) < 1.0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

Outcome c7_kappa(unsigned) {
  Outcome o;
  const auto kc = kappa_root(fix::c());
  const auto kf = kappa_root(fix::f());
  const auto kd = kappa_root(fix::d());
  const auto ka = kappa_root(fix::a());
  const double oracle = bisect_kappa(1.0 / 3.0, 2.0);
  const double golden = std::log2(std::numbers::phi);
  o.row("kappa", "FIX-C", kc.value_or(NAN));
  o.row("kappa", "FIX-F", kf.value_or(NAN));
  o.row("kappa", "beta:5,2", kd.value_or(NAN));
  o.row("kappa_found", "FIX-A", ka ? 1.0 : 0.0);
  o.require(kc && std::fabs(*kc - 0.524) <= 0.001 && std::fabs(*kc - oracle) <= 1e-9, "FIX-C");
  o.require(kf && std::fabs(*kf - golden) <= 1e-9, "FIX-F");
  o.require(kd && std::fabs(*kd - 3.0) <= 1e-9, "Beta(5,2)");
  o.require(!ka, "FIX-A has a root");
  if (o.pass) {
    o.detail = "C " + num(*kc) + " (bisection " + num(oracle) + "), F " + num(*kf) + ", Beta " + num(*kd) + ", A none";
  }
  return o;
}

Outcome c8_tilting(unsigned workers) {
  Outcome o;
  const StepLaw s = fix::skip_free();
  const double g = gamma_root(s);
  SupTailOptions is, naive;
  is.workers = naive.workers = workers;
  naive.method = SupTailMethod::kNaive;
  const Estimate e10 = sup_tail(s, 10.0, 10000, kSeed, is);
  const Estimate i4 = sup_tail(s, 4.0, 1000000, kSeed + 1, is);
  const Estimate n4 = sup_tail(s, 4.0, 1000000, kSeed + 2, naive);
  const double exact = std::pow(3.0 / 7.0, 10);
  const double spread = e10.sample_max - e10.sample_min;
  const double se = std::hypot(i4.std_error, n4.std_error);
  o.row("gamma", "", g);
  o.row("sup_tail_importance", "t=10", e10.value, e10.std_error);
  o.row("sample_spread", "t=10", spread);
  o.row("sup_tail_importance", "t=4", i4.value, i4.std_error);
  o.row("sup_tail_naive", "t=4", n4.value, n4.std_error);
  o.require(std::fabs(g - std::log(7.0 / 3.0)) <= 1e-12, "gamma " + num(g));
  o.require(std::fabs(e10.value - exact) <= 1e-12 * exact, "IS t=10 " + num(e10.value));
  o.require(spread <= 1e-12, "spread " + num(spread));
  o.require(std::fabs(i4.value - n4.value) <= 3.0 * se + n4.error_budget, "naive vs IS at t=4");
  if (o.pass) {
    o.detail = "gamma=" + num(g) + ", IS(10)=" + num(e10.value) + " spread " + num(spread) + ", t=4 IS " +
               num(i4.value) + " naive " + num(n4.value) + " +- " + num(n4.std_error);
  }
  return o;
}

Outcome c9_overshoot(unsigned workers) {
  Outcome o;
  const OvershootResult r = overshoot_constant(StepLaw::log_rho(fix::f()), 10, 20, 100000, kSeed, workers);
  double worst_z = 0.0;
  for (std::size_t i = 0; i < r.rows.size(); ++i) {
    o.row("scaled", "k=" + std::to_string(r.rows[i].k), r.rows[i].scaled.value, r.rows[i].scaled.std_error);
    for (std::size_t j = i + 1; j < r.rows.size(); ++j) {
      const double diff = std::fabs(r.rows[i].scaled.value - r.rows[j].scaled.value);
      const double se = std::hypot(r.rows[i].scaled.std_error, r.rows[j].scaled.std_error);
      o.require(diff <= 3.0 * se, "k=" + std::to_string(r.rows[i].k) + " vs k=" + std::to_string(r.rows[j].k));
      if (se > 0.0) worst_z = std::max(worst_z, diff / se);
    }
  }
  o.row("wald_residual", "k=20", r.wald.mean_residual, r.wald.residual_se);
  o.require(r.rows.size() == 11, "rows");
  o.require(std::fabs(r.wald.mean_residual) <= 3.0 * r.wald.residual_se, "Wald residual " + num(r.wald.mean_residual));
  if (o.pass) {
    o.detail = "C~" + num(r.rows.back().scaled.value) + ", worst pairwise z=" + num(worst_z) + ", Wald residual " +
               num(r.wald.mean_residual) + " +- " + num(r.wald.residual_se);
  }
  return o;
}

Outcome c10_phi(unsigned workers) {
  Outcome o;
  const StepLaw f = StepLaw::log_rho(fix::f());
  std::vector<Estimate> phi;
  for (int k = 0; k <= 6; ++k) {
    phi.push_back(phi_estimate(f, k, 100000, kSeed, workers));
    o.row("phi", "t=" + std::to_string(k), phi.back().value, phi.back().std_error);
  }
  for (int k = 1; k <= 6; ++k) {
    const double ek = std::exp(static_cast<double>(k));
    const double se1 = std::sqrt(phi[k].std_error * phi[k].std_error + phi[k - 1].std_error * phi[k - 1].std_error +
                                 ek * ek * phi[1].std_error * phi[1].std_error);
    o.require(phi[k].value <= phi[k - 1].value + ek * phi[1].value + 3.0 * se1, "recursive bound k=" + std::to_string(k));
    const double factor = (std::exp(k + 1.0) - 1.0) / (std::numbers::e - 1.0);
    const double se2 = std::hypot(phi[k].std_error, factor * phi[1].std_error);
    o.require(phi[k].value <= factor * phi[1].value + 3.0 * se2, "geometric bound k=" + std::to_string(k));
  }
  if (o.pass) o.detail = "phi(1)=" + num(phi[1].value) + " phi(6)=" + num(phi[6].value) + ", both bounds hold for k=1..6";
  return o;
}

Outcome c11_divergence(unsigned workers) {
  Outcome o;
  DivergenceOptions opt;
  opt.schedule = {1000, 10000, 100000};
  opt.tail_grid = {10.0, 100.0, 1000.0};
  opt.workers = workers;
  const DivergenceReport r = divergence_diagnostic(fix::c(), kSeed, opt);
  std::string means;
  for (const auto& p : r.running_mean) {
    o.row("running_mean", "n=" + std::to_string(p.n), p.mean, p.std_error);
    means += (means.empty() ? "" : " < ") + num(p.mean);
  }
  o.row("hill_index", "", r.hill.tail_index);
  o.row("tail_floor", "", r.tail_floor);
  o.row("failed_environments", "", static_cast<double>(r.failed_environments));
  bool increasing = r.running_mean.size() == 3;
  for (std::size_t i = 1; i < r.running_mean.size(); ++i) {
    increasing = increasing && r.running_mean[i].mean > r.running_mean[i - 1].mean;
  }
  o.require(increasing, "running mean not strictly increasing: " + means);
  o.require(r.hill.tail_index < 0.9, "Hill " + num(r.hill.tail_index));
  o.require(r.tail_floor >= 0.05, "floor " + num(r.tail_floor));
  o.require(r.failed_environments * 1000 <= 100000, "failed environments");
  if (o.pass) o.detail = "running mean " + means + ", Hill " + num(r.hill.tail_index) + ", floor " + num(r.tail_floor);
  return o;
}

struct Criterion {
  int id;
  const char* name;
  std::function<Outcome(unsigned)> run;
};

}  // namespace

int main() {
  const std::vector<Criterion> all{
      {1, "oracle equivalence", c1_oracle},
      {2, "constant-environment closed forms", c2_closed_forms},
      {3, "h-transform identity", c3_h_transform},
      {4, "sampler equivalence", c4_samplers},
      {5, "speed reproduction", c5_speed},
      {6, "classification table", c6_classification},
      {7, "kappa roots", c7_kappa},
      {8, "tilting", c8_tilting},
      {9, "overshoot constant", c9_overshoot},
      {10, "phi bounds", c10_phi},
      {11, "weak-transience diagnostics", c11_divergence},
  };
  int failures = 0;
  std::vector<std::string> first;
  for (const Criterion& c : all) {
    Outcome o;
    try {
      o = c.run(1);
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("threw: ") + e.what();
    }
    first.push_back(o.csv());
    failures += o.pass ? 0 : 1;
    std::printf("criterion %2d %-34s %s  %s\n", c.id, c.name, o.pass ? "PASS" : "FAIL", o.detail.c_str());
    std::fflush(stdout);
  }

  // Second pass at workers = 1 must match the first byte for byte; two passes
  // at workers = 3 must match each other.
  std::string mismatch;
  for (std::size_t i = 0; i < all.size(); ++i) {
    try {
      if (all[i].run(1).csv() != first[i]) mismatch += " " + std::to_string(all[i].id) + "(w=1)";
      if (all[i].run(3).csv() != all[i].run(3).csv()) mismatch += " " + std::to_string(all[i].id) + "(w=3)";
    } catch (const std::exception& e) {
      mismatch += " " + std::to_string(all[i].id) + "(threw)";
    }
  }
  const bool det = mismatch.empty();
  failures += det ? 0 : 1;
  std::printf("criterion %2d %-34s %s  %s\n", 12, "determinism", det ? "PASS" : "FAIL",
              det ? "criteria 1-11 rerun bit-identical (workers 1 and 3)" : ("differs:" + mismatch).c_str());
  std::printf("%d of 12 criteria passed\n", 12 - failures);
  return failures == 0 ? 0 : 1;
}
