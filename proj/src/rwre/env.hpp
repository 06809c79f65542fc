#pragma once

#include <cmath>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "rwre/random.hpp"

namespace rwre {

inline double rho_of(double omega) noexcept { return (1.0 - omega) / omega; }
inline double log_rho_of(double omega) noexcept { return std::log1p(-omega) - std::log(omega); }

// Absolute tolerance used to decide E[rho] == 1 and E[log rho] == 0.
inline constexpr double kBoundaryTol = 1e-12;

struct Atom {
  double weight;
  double omega;
  bool operator==(const Atom&) const = default;
};

// I.i.d. law of one site's right-step probability omega_0.
class EnvLaw {
 public:
  enum class Kind { kConstant, kDiscrete, kBeta };

  static EnvLaw constant(double p);
  static EnvLaw discrete(std::vector<Atom> atoms);
  static EnvLaw beta(double alpha, double beta);

  // Grammar: constant:p | discrete:w1@o1,w2@o2,... | beta:a,b
  // Numbers may be decimals or rationals n/d.
  static EnvLaw parse(std::string_view text);
  // Shortest round-trip representation; parse(to_string()) == *this.
  std::string to_string() const;

  Kind kind() const noexcept { return kind_; }
  // Constant laws expose a single atom of weight 1. Empty for beta.
  const std::vector<Atom>& atoms() const noexcept { return atoms_; }
  double alpha() const noexcept { return alpha_; }
  double beta() const noexcept { return beta_; }

  // Law of 1 - omega_0 (the mirror-image environment).
  EnvLaw reflected() const;

  double sample_omega(SplitMix64& rng) const;

  bool operator==(const EnvLaw&) const = default;

 private:
  EnvLaw() = default;
  Kind kind_ = Kind::kConstant;
  std::vector<Atom> atoms_;
  double alpha_ = 0.0;
  double beta_ = 0.0;
};

// E[rho_0^u]; +inf when the moment diverges.
double moment_rho(const EnvLaw& law, double u);
// E[rho_0^u log rho_0]; +inf when it diverges.
double moment_rho_log_rho(const EnvLaw& law, double u);
double mean_log_rho(const EnvLaw& law);

// Positive kappa with E[rho^kappa] = 1. Requires mean_log_rho(law) < 0.
// Empty when no crossing is found below `cap`.
std::optional<double> kappa_root(const EnvLaw& law, double tol = 1e-12, double cap = 64.0);

enum class Direction { kRight, kLeft, kRecurrent };
enum class AveragedStrength { kYes, kNo, kBoundaryUnresolved, kNotApplicable };

const char* to_string(Direction d) noexcept;
const char* to_string(AveragedStrength s) noexcept;

struct RegimeReport {
  double mean_log_rho = 0.0;
  double mean_rho = 0.0;
  double mean_inv_rho = 0.0;
  Direction direction = Direction::kRecurrent;
  double speed = 0.0;
  bool ballistic = false;
  bool quenched_strongly_transient = false;
  AveragedStrength averaged_strongly_transient = AveragedStrength::kNotApplicable;
  // Tail exponent in the direction of transience (E[rho^k] = 1 for right,
  // E[rho^-k] = 1 for left).
  std::optional<double> kappa;
  // Set only at the boundary E[rho] = 1 (E[1/rho] = 1 for left-transient).
  std::optional<bool> rho_log_rho_finite;
  std::optional<double> rho_log_rho;
};

RegimeReport classify_regime(const EnvLaw& law);

// Counter-based site draw: omega_x depends only on (law, seed, x).
double site_omega(const EnvLaw& law, std::uint64_t seed, std::int64_t x);

// Realized environment on [lo, hi]. Windows built from a law remember it so
// that series code can extend past the edges with the same per-site keys.
class EnvWindow {
 public:
  EnvWindow(std::int64_t lo, std::vector<double> omega,
            std::shared_ptr<const EnvLaw> law = nullptr, std::uint64_t seed = 0);

  std::int64_t lo() const noexcept { return lo_; }
  std::int64_t hi() const noexcept { return lo_ + static_cast<std::int64_t>(omega_.size()) - 1; }
  std::size_t size() const noexcept { return omega_.size(); }
  bool contains(std::int64_t x) const noexcept { return x >= lo_ && x <= hi(); }

  double omega(std::int64_t x) const;
  double rho(std::int64_t x) const { return rho_of(omega(x)); }
  double log_rho(std::int64_t x) const { return log_rho_of(omega(x)); }
  double omega_unchecked(std::int64_t x) const noexcept {
    return omega_[static_cast<std::size_t>(x - lo_)];
  }

  std::span<const double> values() const noexcept { return omega_; }
  const std::shared_ptr<const EnvLaw>& law() const noexcept { return law_; }
  std::uint64_t seed() const noexcept { return seed_; }

 private:
  std::int64_t lo_;
  std::vector<double> omega_;
  std::shared_ptr<const EnvLaw> law_;
  std::uint64_t seed_;
};

EnvWindow sample_window(const EnvLaw& law, std::uint64_t seed, std::int64_t lo, std::int64_t hi);

// The whole-line environment {omega_x} determined by (law, seed), evaluated
// lazily site by site.
class Environment {
 public:
  Environment(EnvLaw law, std::uint64_t seed);
  Environment(std::shared_ptr<const EnvLaw> law, std::uint64_t seed);

  double omega(std::int64_t x) const { return site_omega(*law_, seed_, x); }
  double rho(std::int64_t x) const { return rho_of(omega(x)); }
  double log_rho(std::int64_t x) const { return log_rho_of(omega(x)); }

  const EnvLaw& law() const noexcept { return *law_; }
  const std::shared_ptr<const EnvLaw>& law_ptr() const noexcept { return law_; }
  std::uint64_t seed() const noexcept { return seed_; }

  EnvWindow window(std::int64_t lo, std::int64_t hi) const;

 private:
  std::shared_ptr<const EnvLaw> law_;
  std::uint64_t seed_;
};

}  // namespace rwre
