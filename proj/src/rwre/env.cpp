#include "rwre/env.hpp"

#include <boost/math/special_functions/digamma.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include <cmath>
#include <random>

#include "rwre/error.hpp"
#include "rwre/numerics.hpp"
#include "rwre/text.hpp"

namespace rwre {
namespace {

void check_omega(double omega) {
  if (!(omega > 0.0 && omega < 1.0)) {
    fail(ErrorCode::kInvalidArgument,
         "site probability " + text::format_shortest(omega) + " is not inside (0,1)");
  }
}

double beta_log_moment(double alpha, double beta, double u) {
  using boost::math::lgamma;
  return lgamma(alpha - u) + lgamma(beta + u) - lgamma(alpha) - lgamma(beta);
}

}  // namespace

EnvLaw EnvLaw::constant(double p) {
  check_omega(p);
  EnvLaw law;
  law.kind_ = Kind::kConstant;
  law.atoms_ = {{1.0, p}};
  return law;
}

EnvLaw EnvLaw::discrete(std::vector<Atom> atoms) {
  if (atoms.empty()) fail(ErrorCode::kInvalidArgument, "discrete law needs at least one atom");
  CompensatedSum total;
  for (const Atom& a : atoms) {
    check_omega(a.omega);
    if (!(a.weight > 0.0)) {
      fail(ErrorCode::kInvalidArgument, "atom weight " + text::format_shortest(a.weight) +
                                            " is not strictly positive");
    }
    total.add(a.weight);
  }
  if (std::fabs(total.value() - 1.0) > 1e-12) {
    fail(ErrorCode::kInvalidArgument,
         "atom weights sum to " + text::format_shortest(total.value()) + ", not 1");
  }
  EnvLaw law;
  law.kind_ = Kind::kDiscrete;
  law.atoms_ = std::move(atoms);
  return law;
}

EnvLaw EnvLaw::beta(double alpha, double beta) {
  if (!(alpha > 0.0 && beta > 0.0 && std::isfinite(alpha) && std::isfinite(beta))) {
    fail(ErrorCode::kInvalidArgument, "beta law needs alpha > 0 and beta > 0");
  }
  EnvLaw law;
  law.kind_ = Kind::kBeta;
  law.alpha_ = alpha;
  law.beta_ = beta;
  return law;
}

EnvLaw EnvLaw::parse(std::string_view input) {
  const std::string_view s = text::trim(input);
  const std::size_t colon = s.find(':');
  if (colon == std::string_view::npos) {
    fail(ErrorCode::kParse, "law '" + std::string(s) + "' lacks a 'kind:' prefix");
  }
  const std::string_view kind = text::trim(s.substr(0, colon));
  const std::string_view body = s.substr(colon + 1);
  if (kind == "constant") return constant(text::parse_number(body));
  if (kind == "beta") {
    const auto parts = text::split(body, ',');
    if (parts.size() != 2) fail(ErrorCode::kParse, "beta law takes exactly two parameters");
    return beta(text::parse_number(parts[0]), text::parse_number(parts[1]));
  }
  if (kind == "discrete") {
    std::vector<Atom> atoms;
    for (std::string_view item : text::split(body, ',')) {
      const std::size_t at = item.find('@');
      if (at == std::string_view::npos) {
        fail(ErrorCode::kParse, "discrete atom '" + std::string(item) + "' is not weight@omega");
      }
      atoms.push_back({text::parse_number(item.substr(0, at)), text::parse_number(item.substr(at + 1))});
    }
    return discrete(std::move(atoms));
  }
  fail(ErrorCode::kParse, "unknown law kind '" + std::string(kind) + "'");
}

std::string EnvLaw::to_string() const {
  switch (kind_) {
    case Kind::kConstant:
      return "constant:" + text::format_shortest(atoms_.front().omega);
    case Kind::kBeta:
      return "beta:" + text::format_shortest(alpha_) + "," + text::format_shortest(beta_);
    case Kind::kDiscrete: {
      std::string out = "discrete:";
      for (std::size_t i = 0; i < atoms_.size(); ++i) {
        if (i) out += ',';
        out += text::format_shortest(atoms_[i].weight) + "@" + text::format_shortest(atoms_[i].omega);
      }
      return out;
    }
  }
  return {};
}

EnvLaw EnvLaw::reflected() const {
  EnvLaw out = *this;
  for (Atom& a : out.atoms_) a.omega = 1.0 - a.omega;
  std::swap(out.alpha_, out.beta_);
  return out;
}

double EnvLaw::sample_omega(SplitMix64& rng) const {
  switch (kind_) {
    case Kind::kConstant:
      return atoms_.front().omega;
    case Kind::kDiscrete: {
      const double u = rng.uniform01();
      double cum = 0.0;
      for (const Atom& a : atoms_) {
        cum += a.weight;
        if (u < cum) return a.omega;
      }
      return atoms_.back().omega;
    }
    case Kind::kBeta: {
      std::gamma_distribution<double> ga(alpha_, 1.0);
      std::gamma_distribution<double> gb(beta_, 1.0);
      for (;;) {
        const double x = ga(rng);
        const double y = gb(rng);
        const double w = x / (x + y);
        if (w > 0.0 && w < 1.0) return w;
      }
    }
  }
  return 0.5;
}

double moment_rho(const EnvLaw& law, double u) {
  if (law.kind() == EnvLaw::Kind::kBeta) {
    if (!(u < law.alpha() && u > -law.beta())) return kInf;
    return std::exp(beta_log_moment(law.alpha(), law.beta(), u));
  }
  CompensatedSum s;
  for (const Atom& a : law.atoms()) s.add(a.weight * std::pow(rho_of(a.omega), u));
  return s.value();
}

double moment_rho_log_rho(const EnvLaw& law, double u) {
  if (law.kind() == EnvLaw::Kind::kBeta) {
    if (!(u < law.alpha() && u > -law.beta())) return kInf;
    using boost::math::digamma;
    return moment_rho(law, u) * (digamma(law.beta() + u) - digamma(law.alpha() - u));
  }
  CompensatedSum s;
  for (const Atom& a : law.atoms()) {
    s.add(a.weight * std::pow(rho_of(a.omega), u) * log_rho_of(a.omega));
  }
  return s.value();
}

double mean_log_rho(const EnvLaw& law) {
  if (law.kind() == EnvLaw::Kind::kBeta) {
    using boost::math::digamma;
    return digamma(law.beta()) - digamma(law.alpha());
  }
  CompensatedSum s;
  for (const Atom& a : law.atoms()) s.add(a.weight * log_rho_of(a.omega));
  return s.value();
}

std::optional<double> kappa_root(const EnvLaw& law, double tol, double cap) {
  if (!(mean_log_rho(law) < 0.0)) {
    fail(ErrorCode::kPrecondition, "kappa_root needs E[log rho] < 0");
  }
  RootSearchOptions opt;
  opt.tol = tol;
  opt.cap = cap;
  const RootSearchResult r = positive_moment_root([&](double u) { return moment_rho(law, u); }, opt);
  switch (r.outcome) {
    case RootSearchOutcome::kFound:
      return r.root;
    case RootSearchOutcome::kNeverCrossed:
      return std::nullopt;
    case RootSearchOutcome::kToleranceNotMet:
      break;
  }
  fail(ErrorCode::kNotConverged, "kappa bisection stalled with residual " +
                                     text::format_shortest(r.residual));
}

const char* to_string(Direction d) noexcept {
  switch (d) {
    case Direction::kRight: return "right";
    case Direction::kLeft: return "left";
    case Direction::kRecurrent: return "recurrent";
  }
  return "?";
}

const char* to_string(AveragedStrength s) noexcept {
  switch (s) {
    case AveragedStrength::kYes: return "yes";
    case AveragedStrength::kNo: return "no";
    case AveragedStrength::kBoundaryUnresolved: return "boundary-unresolved";
    case AveragedStrength::kNotApplicable: return "not-applicable";
  }
  return "?";
}

RegimeReport classify_regime(const EnvLaw& law) {
  RegimeReport r;
  r.mean_log_rho = mean_log_rho(law);
  if (!std::isfinite(r.mean_log_rho)) {
    fail(ErrorCode::kPrecondition, "E[log rho] is not finite");
  }
  r.mean_rho = moment_rho(law, 1.0);
  r.mean_inv_rho = moment_rho(law, -1.0);

  if (r.mean_rho < 1.0 - kBoundaryTol) {
    r.speed = (1.0 - r.mean_rho) / (1.0 + r.mean_rho);
  } else if (r.mean_inv_rho < 1.0 - kBoundaryTol) {
    r.speed = -(1.0 - r.mean_inv_rho) / (1.0 + r.mean_inv_rho);
  }
  r.ballistic = r.speed != 0.0;

  if (std::fabs(r.mean_log_rho) <= kBoundaryTol) {
    r.direction = Direction::kRecurrent;
    return r;
  }
  r.direction = r.mean_log_rho < 0.0 ? Direction::kRight : Direction::kLeft;
  r.quenched_strongly_transient = true;

  // Everything below is phrased for right-transience; mirror for left.
  const EnvLaw oriented = r.direction == Direction::kRight ? law : law.reflected();
  const double m = r.direction == Direction::kRight ? r.mean_rho : r.mean_inv_rho;
  if (m < 1.0 - kBoundaryTol) {
    r.averaged_strongly_transient = AveragedStrength::kYes;
  } else if (m <= 1.0 + kBoundaryTol) {
    r.rho_log_rho = moment_rho_log_rho(oriented, 1.0);
    r.rho_log_rho_finite = std::isfinite(*r.rho_log_rho);
    r.averaged_strongly_transient =
        *r.rho_log_rho_finite ? AveragedStrength::kNo : AveragedStrength::kBoundaryUnresolved;
  } else {
    r.averaged_strongly_transient = AveragedStrength::kNo;
  }
  r.kappa = kappa_root(oriented);
  return r;
}

double site_omega(const EnvLaw& law, std::uint64_t seed, std::int64_t x) {
  if (law.kind() == EnvLaw::Kind::kConstant) return law.atoms().front().omega;
  SplitMix64 rng(seed, stream::kSite, static_cast<std::uint64_t>(x));
  return law.sample_omega(rng);
}

EnvWindow::EnvWindow(std::int64_t lo, std::vector<double> omega,
                     std::shared_ptr<const EnvLaw> law, std::uint64_t seed)
    : lo_(lo), omega_(std::move(omega)), law_(std::move(law)), seed_(seed) {
  if (omega_.empty()) fail(ErrorCode::kInvalidArgument, "environment window is empty");
  for (double w : omega_) check_omega(w);
}

double EnvWindow::omega(std::int64_t x) const {
  if (!contains(x)) {
    fail(ErrorCode::kOutOfRange, "site " + std::to_string(x) + " outside window [" +
                                     std::to_string(lo_) + "," + std::to_string(hi()) + "]");
  }
  return omega_unchecked(x);
}

EnvWindow sample_window(const EnvLaw& law, std::uint64_t seed, std::int64_t lo, std::int64_t hi) {
  return Environment(law, seed).window(lo, hi);
}

Environment::Environment(EnvLaw law, std::uint64_t seed)
    : law_(std::make_shared<const EnvLaw>(std::move(law))), seed_(seed) {}

Environment::Environment(std::shared_ptr<const EnvLaw> law, std::uint64_t seed)
    : law_(std::move(law)), seed_(seed) {
  if (!law_) fail(ErrorCode::kInvalidArgument, "environment needs a law");
}

EnvWindow Environment::window(std::int64_t lo, std::int64_t hi) const {
  if (lo > hi) fail(ErrorCode::kInvalidArgument, "window needs lo <= hi");
  std::vector<double> omega;
  omega.reserve(static_cast<std::size_t>(hi - lo + 1));
  for (std::int64_t x = lo; x <= hi; ++x) omega.push_back(this->omega(x));
  return EnvWindow(lo, std::move(omega), law_, seed_);
}

}  // namespace rwre
