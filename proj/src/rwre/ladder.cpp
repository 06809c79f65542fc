#include "rwre/ladder.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <map>
#include <numeric>

#include "rwre/error.hpp"
#include "rwre/numerics.hpp"
#include "rwre/parallel.hpp"
#include "rwre/random.hpp"
#include "rwre/text.hpp"

namespace rwre {
namespace {

constexpr std::int64_t kMaxPathSteps = 1'000'000'000;

std::int64_t parse_integer(std::string_view s) {
  s = text::trim(s);
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  std::int64_t v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size()) {
    fail(ErrorCode::kParse, "malformed integer '" + std::string(s) + "'");
  }
  return v;
}

// Best rational approximation p/q of x with q <= max_den, by continued fractions.
std::optional<std::int64_t> denominator_of(double x, double tol, std::int64_t max_den) {
  double rem = x;
  std::int64_t h_prev = 1, h = static_cast<std::int64_t>(std::floor(rem));
  std::int64_t k_prev = 0, k = 1;
  for (int it = 0; it < 64; ++it) {
    if (std::fabs(x - static_cast<double>(h) / static_cast<double>(k)) <= tol * std::max(1.0, std::fabs(x))) {
      return k;
    }
    const double frac = rem - std::floor(rem);
    if (frac == 0.0) break;
    rem = 1.0 / frac;
    const auto a = static_cast<std::int64_t>(std::floor(rem));
    const std::int64_t h_next = a * h + h_prev;
    const std::int64_t k_next = a * k + k_prev;
    if (k_next > max_den) break;
    h_prev = h;
    h = h_next;
    k_prev = k;
    k = k_next;
  }
  return std::nullopt;
}

void check_weights(const std::vector<double>& weights) {
  if (weights.empty()) fail(ErrorCode::kInvalidArgument, "step law needs at least one atom");
  CompensatedSum total;
  for (double w : weights) {
    if (!(w > 0.0)) fail(ErrorCode::kInvalidArgument, "step weights must be strictly positive");
    total.add(w);
  }
  if (std::fabs(total.value() - 1.0) > 1e-12) {
    fail(ErrorCode::kInvalidArgument,
         "step weights sum to " + text::format_shortest(total.value()) + ", not 1");
  }
}

class Picker {
 public:
  explicit Picker(const std::vector<double>& weights) {
    double c = 0.0;
    for (double w : weights) cum_.push_back(c += w);
  }
  std::size_t pick(double u) const {
    for (std::size_t i = 0; i + 1 < cum_.size(); ++i) {
      if (u < cum_[i]) return i;
    }
    return cum_.size() - 1;
  }

 private:
  std::vector<double> cum_;
};

std::vector<double> weights_of(const StepLaw& step) {
  std::vector<double> w;
  for (const StepAtom& a : step.atoms()) w.push_back(a.weight);
  return w;
}

// Smallest lattice index L with L * a >= t.
std::int64_t lattice_level(double t, double a) {
  return static_cast<std::int64_t>(std::ceil(t / a - 1e-9));
}

[[noreturn]] void path_too_long() {
  fail(ErrorCode::kNotConverged, "sample path exceeded the step cap");
}

RunningStats merge_all(const std::vector<RunningStats>& parts) {
  RunningStats out;
  for (const RunningStats& p : parts) out.merge(p);
  return out;
}

}  // namespace

std::optional<double> detect_lattice(const std::vector<double>& values, double tol) {
  double base = kInf;
  for (double v : values) {
    if (v != 0.0) base = std::min(base, std::fabs(v));
  }
  if (!std::isfinite(base)) return std::nullopt;
  std::int64_t den = 1;
  for (double v : values) {
    const auto q = denominator_of(v / base, tol, 4096);
    if (!q) return std::nullopt;
    den = std::lcm(den, *q);
    if (den > 4096) return std::nullopt;
  }
  const double a = base / static_cast<double>(den);
  for (double v : values) {
    const double r = v / a;
    if (std::fabs(r - std::round(r)) > tol * std::max(1.0, std::fabs(r))) return std::nullopt;
  }
  return a;
}

StepLaw StepLaw::discrete(std::vector<StepAtom> atoms) {
  std::vector<double> weights, values;
  for (const StepAtom& a : atoms) {
    if (!std::isfinite(a.value)) fail(ErrorCode::kInvalidArgument, "step values must be finite");
    weights.push_back(a.weight);
    values.push_back(a.value);
  }
  check_weights(weights);
  if (const auto a = detect_lattice(values)) {
    std::vector<std::int64_t> units;
    for (double v : values) units.push_back(static_cast<std::int64_t>(std::llround(v / *a)));
    return lattice(std::move(weights), std::move(units), *a);
  }
  StepLaw law;
  law.atoms_ = std::move(atoms);
  return law;
}

StepLaw StepLaw::lattice(std::vector<double> weights, std::vector<std::int64_t> units, double spacing) {
  check_weights(weights);
  if (weights.size() != units.size()) fail(ErrorCode::kInvalidArgument, "weights/units size mismatch");
  if (!(spacing > 0.0 && std::isfinite(spacing))) {
    fail(ErrorCode::kInvalidArgument, "lattice spacing must be positive");
  }
  StepLaw law;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    law.atoms_.push_back({weights[i], static_cast<double>(units[i]) * spacing});
  }
  law.units_ = std::move(units);
  law.spacing_ = spacing;
  return law;
}

StepLaw StepLaw::log_rho(const EnvLaw& law) {
  if (law.kind() == EnvLaw::Kind::kBeta) {
    fail(ErrorCode::kInvalidArgument, "log-rho step law needs a finite-support environment law");
  }
  std::vector<StepAtom> atoms;
  for (const Atom& a : law.atoms()) atoms.push_back({a.weight, log_rho_of(a.omega)});
  return discrete(std::move(atoms));
}

StepLaw StepLaw::parse(std::string_view input) {
  const std::string_view s = text::trim(input);
  const std::size_t colon = s.find(':');
  if (colon == std::string_view::npos) {
    fail(ErrorCode::kParse, "step law '" + std::string(s) + "' lacks a 'kind:' prefix");
  }
  const std::string_view kind = text::trim(s.substr(0, colon));
  std::string_view body = s.substr(colon + 1);
  if (kind == "logrho") return log_rho(EnvLaw::parse(body));
  if (kind == "discrete") {
    std::vector<StepAtom> atoms;
    for (std::string_view item : text::split(body, ',')) {
      const std::size_t at = item.find('@');
      if (at == std::string_view::npos) fail(ErrorCode::kParse, "step atom '" + std::string(item) + "' is not w@v");
      atoms.push_back({text::parse_number(item.substr(0, at)), text::parse_number(item.substr(at + 1))});
    }
    return discrete(std::move(atoms));
  }
  if (kind == "lattice") {
    double spacing = 1.0;
    const std::size_t semi = body.find(';');
    if (semi != std::string_view::npos) {
      std::string_view opt = text::trim(body.substr(semi + 1));
      body = body.substr(0, semi);
      if (opt.substr(0, 2) != "a=") fail(ErrorCode::kParse, "lattice option must be a=<spacing>");
      opt.remove_prefix(2);
      if (opt.substr(0, 3) == "ln:") {
        spacing = std::log(text::parse_number(opt.substr(3)));
      } else {
        spacing = text::parse_number(opt);
      }
    }
    std::vector<double> weights;
    std::vector<std::int64_t> units;
    for (std::string_view item : text::split(body, ',')) {
      const std::size_t at = item.find('@');
      if (at == std::string_view::npos) fail(ErrorCode::kParse, "lattice atom '" + std::string(item) + "' is not w@k");
      weights.push_back(text::parse_number(item.substr(0, at)));
      units.push_back(parse_integer(item.substr(at + 1)));
    }
    return lattice(std::move(weights), std::move(units), spacing);
  }
  fail(ErrorCode::kParse, "unknown step law kind '" + std::string(kind) + "'");
}

std::string StepLaw::to_string() const {
  std::string out = is_lattice() ? "lattice:" : "discrete:";
  for (std::size_t i = 0; i < atoms_.size(); ++i) {
    if (i) out += ',';
    out += text::format_shortest(atoms_[i].weight) + "@";
    if (is_lattice()) {
      out += (units_[i] > 0 ? "+" : "") + std::to_string(units_[i]);
    } else {
      out += text::format_shortest(atoms_[i].value);
    }
  }
  if (is_lattice()) out += ";a=" + text::format_shortest(*spacing_);
  return out;
}

double StepLaw::mean() const {
  CompensatedSum s;
  for (const StepAtom& a : atoms_) s.add(a.weight * a.value);
  return s.value();
}

double StepLaw::mgf(double u) const {
  CompensatedSum s;
  for (const StepAtom& a : atoms_) s.add(a.weight * std::exp(u * a.value));
  return s.value();
}

bool StepLaw::has_positive_support() const {
  return std::any_of(atoms_.begin(), atoms_.end(), [](const StepAtom& a) { return a.value > 0.0; });
}

bool StepLaw::is_upward_skip_free() const {
  if (!is_lattice()) return false;
  bool any = false;
  for (std::int64_t u : units_) {
    if (u > 1) return false;
    any = any || u == 1;
  }
  return any;
}

double gamma_root(const StepLaw& step, double tol, double cap) {
  if (!(step.mean() < 0.0)) fail(ErrorCode::kPrecondition, "gamma_root needs E[xi] < 0");
  if (!step.has_positive_support()) {
    fail(ErrorCode::kNoRoot, "no gamma > 0 solves E[exp(gamma xi)] = 1: xi has no positive support");
  }
  RootSearchOptions opt;
  opt.tol = tol;
  opt.cap = cap;
  const RootSearchResult r = positive_moment_root([&](double u) { return step.mgf(u); }, opt);
  if (r.outcome == RootSearchOutcome::kNeverCrossed) {
    fail(ErrorCode::kNoRoot, "gamma root lies beyond the bracket cap " + text::format_shortest(cap));
  }
  if (r.outcome == RootSearchOutcome::kToleranceNotMet) {
    fail(ErrorCode::kNotConverged, "gamma bisection stalled with residual " + text::format_shortest(r.residual));
  }
  if (!(step.mgf(0.5 * r.root) < 1.0)) {
    fail(ErrorCode::kInternal, "convexity check E[exp(gamma xi / 2)] < 1 failed");
  }
  return r.root;
}

TiltedLaw tilt(const StepLaw& step, double gamma) {
  TiltedLaw t{step, gamma, {}, 0.0};
  CompensatedSum total;
  for (const StepAtom& a : step.atoms()) {
    t.q_weights.push_back(a.weight * std::exp(gamma * a.value));
    total.add(t.q_weights.back());
  }
  if (std::fabs(total.value() - 1.0) > 1e-9) {
    fail(ErrorCode::kInvalidArgument, "tilted weights sum to " + text::format_shortest(total.value()) +
                                          "; gamma is not a root of E[exp(gamma xi)] = 1");
  }
  CompensatedSum mean;
  for (std::size_t i = 0; i < t.q_weights.size(); ++i) {
    t.q_weights[i] /= total.value();
    mean.add(t.q_weights[i] * step.atoms()[i].value);
  }
  t.mean_q = mean.value();
  return t;
}

Estimate sup_tail(const StepLaw& step, double t, std::int64_t n, std::uint64_t seed,
                  const SupTailOptions& opt) {
  if (n < 1) fail(ErrorCode::kInvalidArgument, "sup_tail needs n >= 1");
  const double gamma = gamma_root(step);
  const bool importance = opt.method == SupTailMethod::kImportance;
  const Picker picker(importance ? tilt(step, gamma).q_weights : weights_of(step));
  const bool lattice = step.is_lattice();
  const double a = lattice ? *step.spacing() : 1.0;
  const std::int64_t level = lattice ? lattice_level(t, a) : 0;
  // Lundberg: from height s < t the crossing probability is at most exp(-gamma (t - s)).
  const double censor_gap = -std::log(opt.censor_eps) / gamma;

  auto one_path = [&](SplitMix64& rng) -> double {
    std::int64_t m = 0;
    double s = 0.0;
    for (std::int64_t steps = 1; steps <= kMaxPathSteps; ++steps) {
      const std::size_t i = picker.pick(rng.uniform01());
      if (lattice) {
        m += step.units()[i];
        s = static_cast<double>(m) * a;
      } else {
        s += step.atoms()[i].value;
      }
      const bool crossed = lattice ? m >= level : s >= t;
      if (crossed) return importance ? std::exp(-gamma * s) : 1.0;
      if (!importance && s < t - censor_gap) return 0.0;
    }
    path_too_long();
  };

  const auto parts = run_sharded<RunningStats>(n, opt.workers, [&](std::int64_t b, std::int64_t e) {
    RunningStats st;
    for (std::int64_t r = b; r < e; ++r) {
      SplitMix64 rng(seed, stream::kReplicate, static_cast<std::uint64_t>(r));
      st.add(one_path(rng));
    }
    return st;
  });
  return to_estimate(merge_all(parts), importance ? "importance" : "naive", seed, opt.workers,
                     importance ? 0.0 : opt.censor_eps);
}

OvershootResult overshoot_constant(const StepLaw& step, std::int64_t k_lo, std::int64_t k_hi,
                                   std::int64_t n, std::uint64_t seed, unsigned workers) {
  if (!step.is_lattice()) {
    fail(ErrorCode::kInvalidArgument, "overshoot_constant needs a lattice step law");
  }
  if (!(1 <= k_lo && k_lo <= k_hi) || n < 1) {
    fail(ErrorCode::kInvalidArgument, "overshoot_constant needs 1 <= k_lo <= k_hi and n >= 1");
  }
  OvershootResult out;
  out.gamma = gamma_root(step);
  out.spacing = *step.spacing();
  const TiltedLaw q = tilt(step, out.gamma);
  const Picker picker(q.q_weights);
  const double a = out.spacing;

  struct Acc {
    RunningStats scaled, ladder, tau, residual;
    std::map<std::int64_t, std::int64_t> overshoot;
  };

  for (std::int64_t k = k_lo; k <= k_hi; ++k) {
    const std::uint64_t level_seed = derive_seed(seed, stream::kLevel, static_cast<std::uint64_t>(k));
    const bool last = k == k_hi;
    const auto parts = run_sharded<Acc>(n, workers, [&](std::int64_t b, std::int64_t e) {
      Acc acc;
      for (std::int64_t r = b; r < e; ++r) {
        SplitMix64 rng(level_seed, stream::kReplicate, static_cast<std::uint64_t>(r));
        std::int64_t m = 0;
        std::int64_t steps = 0;
        while (m < k) {
          if (++steps > kMaxPathSteps) path_too_long();
          m += step.units()[picker.pick(rng.uniform01())];
        }
        const std::int64_t excess = m - k;
        acc.scaled.add(std::exp(-out.gamma * a * static_cast<double>(excess)));
        if (last) {
          const double ladder = static_cast<double>(m) * a;
          acc.ladder.add(ladder);
          acc.tau.add(static_cast<double>(steps));
          acc.residual.add(ladder - q.mean_q * static_cast<double>(steps));
          ++acc.overshoot[excess];
        }
      }
      return acc;
    });
    Acc total;
    for (const Acc& p : parts) {
      total.scaled.merge(p.scaled);
      total.ladder.merge(p.ladder);
      total.tau.merge(p.tau);
      total.residual.merge(p.residual);
      for (const auto& [u, c] : p.overshoot) total.overshoot[u] += c;
    }
    out.rows.push_back({k, to_estimate(total.scaled, "importance-scaled", level_seed, workers)});
    if (last) {
      for (const auto& [u, c] : total.overshoot) {
        out.overshoot_pmf.emplace_back(u, static_cast<double>(c) / static_cast<double>(n));
      }
      out.wald = {total.ladder.mean(), total.tau.mean(), q.mean_q, total.residual.mean(),
                  total.residual.std_error()};
    }
  }
  return out;
}

Estimate phi_estimate(const StepLaw& step, double t, std::int64_t n, std::uint64_t seed,
                      unsigned workers) {
  if (!(step.mean() < 0.0)) fail(ErrorCode::kPrecondition, "phi_estimate needs E[xi] < 0");
  if (!(t >= 0.0) || n < 1) fail(ErrorCode::kInvalidArgument, "phi_estimate needs t >= 0 and n >= 1");
  const Picker picker(weights_of(step));
  const bool lattice = step.is_lattice();
  const double a = lattice ? *step.spacing() : 1.0;

  const auto parts = run_sharded<RunningStats>(n, workers, [&](std::int64_t b, std::int64_t e) {
    RunningStats st;
    for (std::int64_t r = b; r < e; ++r) {
      SplitMix64 rng(seed, stream::kReplicate, static_cast<std::uint64_t>(r));
      CompensatedSum total;
      total.add(1.0);
      std::int64_t m = 0;
      double s = 0.0;
      for (std::int64_t steps = 1;; ++steps) {
        if (steps > kMaxPathSteps) path_too_long();
        const std::size_t i = picker.pick(rng.uniform01());
        if (lattice) {
          m += step.units()[i];
          s = static_cast<double>(m) * a;
        } else {
          s += step.atoms()[i].value;
        }
        if (s <= -t) break;
        total.add(std::exp(-s));
      }
      st.add(total.value());
    }
    return st;
  });
  return to_estimate(merge_all(parts), "path-functional", seed, workers);
}

}  // namespace rwre
