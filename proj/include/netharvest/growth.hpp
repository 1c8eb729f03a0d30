#pragma once

#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <string_view>

#include <Eigen/Dense>

#include "netharvest/error.hpp"
#include "netharvest/network.hpp"

namespace netharvest {

/// Saturation families phi(m) of the per-unit growth rate, each paired with
/// its utility:
///   kLogistic  phi = Gamma (1 - m^(sigma-1) / K), sigma > 1, CRRA utility
///   kPower     phi = m^(sigma-1) - delta,        0 < sigma < 1, CRRA utility
///   kLogType   phi = Gamma (1 - ln(m) / K),                       log utility
enum class Family { kLogistic, kPower, kLogType };

enum class Regime { kPlanner, kGame };

inline std::string_view to_string(Family f) {
  switch (f) {
    case Family::kLogistic: return "S1";
    case Family::kPower: return "S2";
    case Family::kLogType: return "S3";
  }
  return "?";
}

inline std::string_view to_string(Regime r) {
  return r == Regime::kPlanner ? "planner" : "game";
}

template <typename Scalar>
class GrowthModel {
 public:
  static GrowthModel logistic(Scalar growth_rate, Scalar capacity, Scalar sigma) {
    require(growth_rate > 0, "S1 requires Gamma > 0");
    require(capacity > 0, "S1 requires K > 0");
    require(sigma > 1, "S1 requires sigma > 1");
    return GrowthModel(Family::kLogistic, growth_rate, capacity, sigma, nan());
  }

  static GrowthModel power(Scalar sigma, Scalar decay) {
    require(sigma > 0 && sigma < 1, "S2 requires 0 < sigma < 1");
    require(decay > 0, "S2 requires delta > 0");
    return GrowthModel(Family::kPower, nan(), nan(), sigma, decay);
  }

  static GrowthModel log_type(Scalar growth_rate, Scalar log_capacity) {
    require(growth_rate > 0, "S3 requires Gamma > 0");
    // K <= 0 turns the long-run mass e^K into a repeller.
    require(log_capacity > 0, "S3 requires K > 0");
    return GrowthModel(Family::kLogType, growth_rate, log_capacity, Scalar(1), nan());
  }

  Family family() const { return family_; }
  Scalar growth_rate() const { return gamma_; }
  Scalar capacity() const { return capacity_; }
  Scalar decay() const { return decay_; }
  /// CRRA curvature; 1 for log utility.
  Scalar sigma() const { return sigma_; }
  bool log_utility() const { return family_ == Family::kLogType; }

  Scalar phi(Scalar m) const {
    using std::log;
    using std::pow;
    if (!(m > 0)) throw Error(ErrorCode::kNonpositiveMass, "phi needs m > 0");
    switch (family_) {
      case Family::kLogistic: return gamma_ * (Scalar(1) - pow(m, sigma_ - 1) / capacity_);
      case Family::kPower: return pow(m, sigma_ - 1) - decay_;
      case Family::kLogType: return gamma_ * (Scalar(1) - log(m) / capacity_);
    }
    return nan();
  }

  /// Mass at which phi equals `rate`; phi is strictly decreasing in every
  /// family. Returns 0 when the rate exceeds sup phi (logistic only).
  Scalar inverse_phi(Scalar rate) const {
    using std::exp;
    using std::pow;
    switch (family_) {
      case Family::kLogistic: {
        const Scalar base = capacity_ * (Scalar(1) - rate / gamma_);
        return base > 0 ? pow(base, Scalar(1) / (sigma_ - 1)) : Scalar(0);
      }
      case Family::kPower:
        return pow(rate + decay_, Scalar(1) / (sigma_ - 1));
      case Family::kLogType:
        return exp(capacity_ * (Scalar(1) - rate / gamma_));
    }
    return nan();
  }

  Scalar utility(Scalar c) const {
    using std::log;
    using std::pow;
    if (!(c > 0)) {
      throw Error(ErrorCode::kNonpositiveConsumption, "utility needs c > 0");
    }
    if (log_utility()) return log(c);
    return pow(c, Scalar(1) - sigma_) / (Scalar(1) - sigma_);
  }

  Scalar marginal_utility(Scalar c) const {
    using std::pow;
    return log_utility() ? Scalar(1) / c : pow(c, -sigma_);
  }

  /// Maximizer of u(c) - c p over c > 0, i.e. (u')^{-1}(p).
  Scalar maximizer(Scalar p) const {
    using std::pow;
    return log_utility() ? Scalar(1) / p : pow(p, -Scalar(1) / sigma_);
  }

  /// H(p) = sup_{c > 0} u(c) - c p for p > 0.
  Scalar hamiltonian(Scalar p) const {
    using std::log;
    using std::pow;
    if (log_utility()) return -log(p) - Scalar(1);
    return sigma_ / (Scalar(1) - sigma_) * pow(p, Scalar(1) - Scalar(1) / sigma_);
  }

 private:
  GrowthModel(Family family, Scalar gamma, Scalar capacity, Scalar sigma, Scalar decay)
      : family_(family), gamma_(gamma), capacity_(capacity), sigma_(sigma), decay_(decay) {}

  static Scalar nan() { return std::numeric_limits<Scalar>::quiet_NaN(); }
  static void require(bool ok, const char* what) {
    if (!ok) throw Error(ErrorCode::kInvalidParameter, what);
  }

  Family family_;
  Scalar gamma_;
  Scalar capacity_;
  Scalar sigma_;
  Scalar decay_;
};

template <typename Scalar>
Scalar phi_eval(const GrowthModel<Scalar>& g, Scalar m) {
  return g.phi(m);
}

template <typename Scalar>
Scalar utility_eval(const GrowthModel<Scalar>& g, Scalar c) {
  return g.utility(c);
}

/// Feedback c_i = theta <e, x> on active nodes, with value function
/// V(x) = A u(<e, x>) + B.
template <typename Scalar>
struct PolicyCoefficients {
  Regime regime = Regime::kPlanner;
  Scalar theta = 0;
  Scalar A = 0;
  Scalar B = 0;
  bool interior = false;
  /// theta below the inflow threshold; unset when no network was supplied.
  std::optional<bool> globally_admissible;

  Scalar value(const GrowthModel<Scalar>& g, Scalar mass) const {
    return A * g.utility(mass) + B;
  }
};

namespace detail {

template <typename Scalar>
void check_policy_inputs(Eigen::Index f) {
  if (f < 1) throw Error(ErrorCode::kInvalidParameter, "need at least one active node");
}

template <typename Scalar>
PolicyCoefficients<Scalar> finish_policy(PolicyCoefficients<Scalar> pc,
                                         std::optional<Scalar> threshold) {
  if (!(pc.theta > 0)) {
    throw Error(ErrorCode::kNoninteriorPolicy,
                std::string(to_string(pc.regime)) + " extraction rate is not positive");
  }
  pc.interior = true;
  if (threshold) pc.globally_admissible = pc.theta < *threshold;
  return pc;
}

}  // namespace detail

/// Closed-form optimal feedback of the centralized planner. Aggregate
/// extraction f * theta does not depend on f.
template <typename Scalar>
PolicyCoefficients<Scalar> planner_policy(const GrowthModel<Scalar>& g, Eigen::Index f,
                                          Scalar rho,
                                          std::optional<Scalar> inflow_thr = std::nullopt) {
  using std::log;
  using std::pow;
  detail::check_policy_inputs<Scalar>(f);
  const Scalar fs = static_cast<Scalar>(f);
  const Scalar sigma = g.sigma();
  PolicyCoefficients<Scalar> pc;
  pc.regime = Regime::kPlanner;
  switch (g.family()) {
    case Family::kLogistic:
      pc.theta = (rho + g.growth_rate() * (sigma - 1)) / (sigma * fs);
      if (pc.theta > 0) {
        pc.A = pow(pc.theta, -sigma);
        pc.B = -g.growth_rate() * pc.A / (g.capacity() * rho);
      }
      break;
    case Family::kPower:
      pc.theta = (rho + g.decay() * (1 - sigma)) / (sigma * fs);
      if (pc.theta > 0) {
        pc.A = pow(pc.theta, -sigma);
        pc.B = pc.A / rho;
      }
      break;
    case Family::kLogType:
      pc.theta = (rho + g.growth_rate() / g.capacity()) / fs;
      if (pc.theta > 0) {
        pc.A = 1 / pc.theta;
        pc.B = (g.growth_rate() - fs * pc.theta + fs * pc.theta * log(pc.theta)) /
               (pc.theta * rho);
      }
      break;
  }
  return detail::finish_policy(pc, inflow_thr);
}

/// Symmetric Markov equilibrium feedback of the f-player game. Coincides with
/// planner_policy when f = 1.
template <typename Scalar>
PolicyCoefficients<Scalar> game_policy(const GrowthModel<Scalar>& g, Eigen::Index f,
                                       Scalar rho,
                                       std::optional<Scalar> inflow_thr = std::nullopt) {
  using std::log;
  using std::pow;
  detail::check_policy_inputs<Scalar>(f);
  if (f == 1) {
    auto pc = planner_policy(g, f, rho, inflow_thr);
    pc.regime = Regime::kGame;
    return pc;
  }
  const Scalar fs = static_cast<Scalar>(f);
  const Scalar sigma = g.sigma();
  PolicyCoefficients<Scalar> pc;
  pc.regime = Regime::kGame;
  switch (g.family()) {
    case Family::kLogistic:
      pc.theta = (rho + g.growth_rate() * (sigma - 1)) / (1 + fs * (sigma - 1));
      if (pc.theta > 0) {
        pc.A = pow(pc.theta, -sigma);
        pc.B = -g.growth_rate() * pc.A / (g.capacity() * rho);
      }
      break;
    case Family::kPower:
      if (!(fs * (1 - sigma) < 1)) {
        throw Error(ErrorCode::kNoninteriorPolicy,
                    "S2 game needs f < 1 / (1 - sigma)");
      }
      pc.theta = (rho + g.decay() * (1 - sigma)) / (1 - fs * (1 - sigma));
      if (pc.theta > 0) {
        pc.A = pow(pc.theta, -sigma);
        pc.B = pc.A / rho;
      }
      break;
    case Family::kLogType:
      pc.theta = rho + g.growth_rate() / g.capacity();
      if (pc.theta > 0) {
        pc.A = 1 / pc.theta;
        // From rho B = -ln A - 1 + A Gamma - (f - 1).
        pc.B = (g.growth_rate() + pc.theta * log(pc.theta) - fs * pc.theta) /
               (pc.theta * rho);
      }
      break;
  }
  return detail::finish_policy(pc, inflow_thr);
}

/// The log-type game intercept in the form (Gamma K - f theta + theta ln theta)
/// / (theta rho). It differs from game_policy's intercept unless K = 1 and is
/// kept only so the player HJB residual can arbitrate between the two.
template <typename Scalar>
Scalar alternate_log_game_intercept(const GrowthModel<Scalar>& g, Eigen::Index f, Scalar rho) {
  using std::log;
  if (g.family() != Family::kLogType) {
    throw Error(ErrorCode::kInvalidParameter, "intercept variant exists only for S3");
  }
  const Scalar theta = rho + g.growth_rate() / g.capacity();
  return (g.growth_rate() * g.capacity() - static_cast<Scalar>(f) * theta +
          theta * log(theta)) /
         (theta * rho);
}

template <typename Scalar>
struct SteadyStates {
  Scalar m_bar;    // no extraction
  Scalar m_star;   // planner
  Scalar m_hat;    // game
  Scalar delta_f;  // f (theta_hat - theta_star)
  /// Set when extraction exceeds the maximal growth rate and the mass dies
  /// out (logistic family with f rho >= Gamma); the mass is then reported 0.
  bool planner_extinct = false;
  bool game_extinct = false;
};

/// Long-run masses: each solves phi(m) = aggregate extraction rate.
template <typename Scalar>
SteadyStates<Scalar> steady_masses(const GrowthModel<Scalar>& g, Eigen::Index f, Scalar rho) {
  const auto planner = planner_policy(g, f, rho);
  const auto game = game_policy(g, f, rho);
  const Scalar fs = static_cast<Scalar>(f);
  SteadyStates<Scalar> out;
  out.m_bar = g.inverse_phi(Scalar(0));
  out.m_star = g.inverse_phi(fs * planner.theta);
  out.m_hat = g.inverse_phi(fs * game.theta);
  out.delta_f = fs * game.theta - fs * planner.theta;
  out.planner_extinct = !(out.m_star > 0);
  out.game_extinct = !(out.m_hat > 0);
  return out;
}

/// Total mass m(t) solving m' = (phi(m) - f theta) m, m(0) = m0, in closed
/// form. Substituting mu = m^(1 - sigma) (or mu = ln m for the log-type
/// family) makes the equation linear.
template <typename Scalar>
Scalar mass_closed_form(const GrowthModel<Scalar>& g, Scalar m0, Eigen::Index f,
                        Scalar theta, Scalar t) {
  using std::exp;
  using std::log;
  using std::pow;
  if (!(m0 > 0)) throw Error(ErrorCode::kNonpositiveMass, "initial mass must be positive");
  if (t == Scalar(0)) return m0;
  const Scalar extraction = static_cast<Scalar>(f) * theta;
  const Scalar sigma = g.sigma();
  switch (g.family()) {
    case Family::kLogistic: {
      const Scalar net = g.growth_rate() - extraction;
      if (!(net > 0)) {
        throw Error(ErrorCode::kSideConditionViolated, "S1 closed form needs Gamma > f theta");
      }
      const Scalar mu_inf = g.growth_rate() / (g.capacity() * net);
      const Scalar mu0 = pow(m0, 1 - sigma);
      const Scalar mu = exp(-net * (sigma - 1) * t) * (mu0 - mu_inf) + mu_inf;
      return pow(mu, 1 / (1 - sigma));
    }
    case Family::kPower: {
      const Scalar rate = g.decay() + extraction;
      if (!(rate > 0)) {
        throw Error(ErrorCode::kSideConditionViolated, "S2 closed form needs delta + f theta > 0");
      }
      const Scalar mu_inf = 1 / rate;
      const Scalar mu0 = pow(m0, 1 - sigma);
      const Scalar mu = exp(-rate * (1 - sigma) * t) * (mu0 - mu_inf) + mu_inf;
      return pow(mu, 1 / (1 - sigma));
    }
    case Family::kLogType: {
      const Scalar mu_inf = g.capacity() * (1 - extraction / g.growth_rate());
      const Scalar mu = exp(-g.growth_rate() / g.capacity() * t) * (log(m0) - mu_inf) + mu_inf;
      return exp(mu);
    }
  }
  return std::numeric_limits<Scalar>::quiet_NaN();
}

/// Exponential rate at which the linearizing variable of mass_closed_form
/// approaches its limit. Nonpositive when the side condition fails.
template <typename Scalar>
Scalar mass_relaxation_rate(const GrowthModel<Scalar>& g, Eigen::Index f, Scalar theta) {
  const Scalar extraction = static_cast<Scalar>(f) * theta;
  switch (g.family()) {
    case Family::kLogistic: return (g.growth_rate() - extraction) * (g.sigma() - 1);
    case Family::kPower: return (g.decay() + extraction) * (1 - g.sigma());
    case Family::kLogType: return g.growth_rate() / g.capacity();
  }
  return std::numeric_limits<Scalar>::quiet_NaN();
}

/// A u(<e, x>) + B.
template <typename Scalar, typename Derived>
Scalar candidate_value(const GrowthModel<Scalar>& g, const PolicyCoefficients<Scalar>& pc,
                       const Eigen::MatrixBase<Derived>& x) {
  const Scalar mass = x.sum();
  if (!(mass > 0)) throw Error(ErrorCode::kZeroTotalMass, "value needs <e, x> > 0");
  return pc.value(g, mass);
}

template <typename Scalar, typename Derived>
VectorX<Scalar> feedback_control(const PolicyCoefficients<Scalar>& pc,
                                 const ExtractionPattern& pat,
                                 const Eigen::MatrixBase<Derived>& x) {
  return pat.indicator<Scalar>() * (pc.theta * x.sum());
}

using GrowthModeld = GrowthModel<double>;
using PolicyCoefficientsd = PolicyCoefficients<double>;

}  // namespace netharvest
