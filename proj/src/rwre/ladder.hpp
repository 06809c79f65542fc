#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "rwre/env.hpp"
#include "rwre/estimate.hpp"

namespace rwre {

struct StepAtom {
  double weight;
  double value;
  bool operator==(const StepAtom&) const = default;
};

// Finite-support increment law of a one-dimensional random walk S_n.
class StepLaw {
 public:
  // Arbitrary real values; a lattice spacing is derived when every value is
  // an integer multiple of a common a (tolerance 1e-9).
  static StepLaw discrete(std::vector<StepAtom> atoms);
  // Values units[i] * spacing.
  static StepLaw lattice(std::vector<double> weights, std::vector<std::int64_t> units, double spacing);
  // xi = log rho_0 for a finite-support environment law.
  static StepLaw log_rho(const EnvLaw& law);

  // Grammar:
  //   discrete:w1@v1,w2@v2,...
  //   lattice:w1@k1,w2@k2,...[;a=<spacing>|;a=ln:<x>]   (k integers, a defaults to 1)
  //   logrho:<environment law>
  static StepLaw parse(std::string_view text);
  std::string to_string() const;

  const std::vector<StepAtom>& atoms() const noexcept { return atoms_; }
  bool is_lattice() const noexcept { return spacing_.has_value(); }
  std::optional<double> spacing() const noexcept { return spacing_; }
  // Integer multiples of spacing(); empty for non-lattice laws.
  const std::vector<std::int64_t>& units() const noexcept { return units_; }

  double mean() const;
  // E[exp(u xi)]
  double mgf(double u) const;
  bool has_positive_support() const;
  // True when +spacing is the only positive support point.
  bool is_upward_skip_free() const;

  bool operator==(const StepLaw&) const = default;

 private:
  StepLaw() = default;
  std::vector<StepAtom> atoms_;
  std::vector<std::int64_t> units_;
  std::optional<double> spacing_;
};

// Largest a with every value in a*Z (within tol), found by continued-fraction
// rational reconstruction of the value ratios.
std::optional<double> detect_lattice(const std::vector<double>& values, double tol = 1e-9);

// gamma > 0 with E[exp(gamma xi)] = 1. Also checks E[exp(gamma xi / 2)] < 1.
double gamma_root(const StepLaw& step, double tol = 1e-12, double cap = 64.0);

struct TiltedLaw {
  StepLaw base;
  double gamma;
  std::vector<double> q_weights;  // p_i exp(gamma x_i), normalized
  double mean_q;
};

TiltedLaw tilt(const StepLaw& step, double gamma);

enum class SupTailMethod { kImportance, kNaive };

struct SupTailOptions {
  SupTailMethod method = SupTailMethod::kImportance;
  double censor_eps = 1e-12;  // naive only
  unsigned workers = 1;
};

// P(sup_{n>=1} S_n >= t). Replicate r draws from stream (seed, r), so runs at
// different t with the same seed use common random numbers.
Estimate sup_tail(const StepLaw& step, double t, std::int64_t n, std::uint64_t seed,
                  const SupTailOptions& opt = {});

struct OvershootRow {
  std::int64_t k;
  Estimate scaled;  // exp(gamma k a) P(sup S_n >= k a)
};

struct WaldCheck {
  double mean_ladder = 0.0;     // mean of S_tau
  double mean_tau = 0.0;
  double drift_q = 0.0;         // E_Q[xi]
  double mean_residual = 0.0;   // mean of S_tau - E_Q[xi] tau
  double residual_se = 0.0;
};

struct OvershootResult {
  double gamma = 0.0;
  double spacing = 0.0;
  std::vector<OvershootRow> rows;
  // Empirical law of (S_tau - k a) / a at the largest k: (units, frequency).
  std::vector<std::pair<std::int64_t, double>> overshoot_pmf;
  WaldCheck wald;
};

// Level k uses stream derive_seed(seed, level, k), so rows are independent.
OvershootResult overshoot_constant(const StepLaw& step, std::int64_t k_lo, std::int64_t k_hi,
                                   std::int64_t n, std::uint64_t seed, unsigned workers = 1);

// phi(t) = E[sum_{n=0}^{nu(t)-1} exp(-S_n)], nu(t) = inf{n >= 1 : S_n <= -t}.
// Common random numbers across t for a fixed seed.
Estimate phi_estimate(const StepLaw& step, double t, std::int64_t n, std::uint64_t seed,
                      unsigned workers = 1);

}  // namespace rwre
