#pragma once

#include <cmath>
#include <complex>
#include <cstdio>
#include <limits>
#include <optional>
#include <ostream>
#include <string>
#include <utility>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "netharvest/error.hpp"
#include "netharvest/growth.hpp"
#include "netharvest/network.hpp"
#include "netharvest/ode.hpp"
#include "netharvest/spectral.hpp"

namespace netharvest {

/// Network, extractors, growth law, discount rate and initial stock.
template <typename Scalar>
class Scenario {
 public:
  Scenario(Network<Scalar> network, ExtractionPattern pattern, GrowthModel<Scalar> growth,
           Scalar rho, VectorX<Scalar> x0)
      : network(std::move(network)),
        migration(migration_operator(this->network)),
        pattern(std::move(pattern)),
        growth(std::move(growth)),
        rho(rho),
        x0(std::move(x0)) {
    if (this->pattern.size() != this->network.size()) {
      throw Error(ErrorCode::kDimensionMismatch, "active-node pattern sized for another network");
    }
    if (this->x0.size() != this->network.size()) {
      throw Error(ErrorCode::kDimensionMismatch, "initial stock has wrong length");
    }
    for (Eigen::Index i = 0; i < this->x0.size(); ++i) {
      if (!(this->x0(i) >= 0)) {
        throw Error(ErrorCode::kInvalidParameter,
                    "initial stock is negative at node " + std::to_string(i + 1), i);
      }
    }
    if (!(this->x0.sum() > 0)) throw Error(ErrorCode::kZeroTotalMass, "initial stock is zero");
  }

  Eigen::Index size() const { return network.size(); }
  Eigen::Index active_count() const { return pattern.count(); }
  Scalar initial_mass() const { return x0.sum(); }

  Network<Scalar> network;
  MigrationOperator<Scalar> migration;
  ExtractionPattern pattern;
  GrowthModel<Scalar> growth;
  Scalar rho;
  VectorX<Scalar> x0;
};

template <typename Scalar>
struct SimConfig {
  Scalar horizon = Scalar(100);
  Scalar rel_tol = Scalar(1e-9);
  Scalar abs_tol = Scalar(1e-12);
  Scalar max_step = Scalar(0);  // 0: horizon / 100
  Scalar negativity_tol = Scalar(1e-9);
  Eigen::Index intervals = 2048;  // uniform resampling grid, even

  void validate() const {
    if (!(horizon > 0)) throw Error(ErrorCode::kHorizonNonpositive, "horizon must be positive");
    if (!(rel_tol > 0) || !(abs_tol > 0) || !(negativity_tol > 0) || max_step < 0) {
      throw Error(ErrorCode::kInvalidParameter, "tolerances must be positive");
    }
    if (intervals < 2 || intervals % 2 != 0) {
      throw Error(ErrorCode::kInvalidParameter, "resampling intervals must be even and >= 2");
    }
  }

  OdeOptions<Scalar> ode_options() const {
    OdeOptions<Scalar> opt;
    opt.rel_tol = rel_tol;
    opt.abs_tol = abs_tol;
    opt.max_step = max_step > 0 ? max_step : horizon / Scalar(100);
    return opt;
  }
};

/// Sampled closed-loop path on a uniform time grid. Row k of every matrix is
/// time times(k).
template <typename Scalar>
struct Trajectory {
  VectorX<Scalar> times;
  MatrixX<Scalar> states;    // X_i(t)
  VectorX<Scalar> masses;    // <e, X(t)>
  MatrixX<Scalar> shares;    // X(t) / m(t)
  MatrixX<Scalar> controls;  // c_i(t), all n nodes
  /// Running discounted utility int_0^t e^{-rho s} u(c_i(s)) ds, one column
  /// per active node in pattern order.
  MatrixX<Scalar> payoff_partials;
  bool admissible = true;
  std::optional<Scalar> first_violation_time;
  std::optional<Eigen::Index> violation_node;
  OdeStats stats;

  Eigen::Index points() const { return times.size(); }
  Scalar horizon() const { return times(times.size() - 1); }
};

/// Affine-in-mass feedback c = k <e, x>.
template <typename Scalar>
struct AffineFeedback {
  VectorX<Scalar> coefficients;

  template <typename Derived>
  VectorX<Scalar> operator()(const Eigen::MatrixBase<Derived>& x) const {
    return coefficients * x.sum();
  }

  static AffineFeedback uniform(const ExtractionPattern& pat, Scalar theta) {
    return {pat.indicator<Scalar>() * theta};
  }
};

/// X' = phi(<e, x>) x + (D + B^T) x - c.
template <typename Scalar, typename DerivedX, typename DerivedC>
VectorX<Scalar> vector_field(const Scenario<Scalar>& sc, const Eigen::MatrixBase<DerivedX>& x,
                             const Eigen::MatrixBase<DerivedC>& c) {
  const Scalar mass = x.sum();
  if (!(mass > 0)) throw Error(ErrorCode::kZeroTotalMass, "vector field needs <e, x> > 0");
  return sc.growth.phi(mass) * x + sc.migration.matrix * x - c;
}

namespace detail {

template <typename Scalar>
Scalar safe_utility(const GrowthModel<Scalar>& g, Scalar c) {
  if (c > 0) return g.utility(c);
  // u(0) is finite only for CRRA with sigma < 1.
  if (!g.log_utility() && g.sigma() < 1) return Scalar(0);
  return -std::numeric_limits<Scalar>::infinity();
}

// Running integral of uniformly spaced samples: composite Simpson at even
// indices, Simpson plus a one-interval quadratic correction at odd ones.
template <typename Scalar>
VectorX<Scalar> cumulative_simpson(const VectorX<Scalar>& f, Scalar h) {
  const Eigen::Index n = f.size();
  VectorX<Scalar> out = VectorX<Scalar>::Zero(n);
  for (Eigen::Index k = 1; k < n; ++k) {
    if (k % 2 == 0) {
      out(k) = out(k - 2) + h / 3 * (f(k - 2) + 4 * f(k - 1) + f(k));
    } else if (k + 1 < n) {
      out(k) = out(k - 1) + h / 12 * (5 * f(k - 1) + 8 * f(k) - f(k + 1));
    } else if (k >= 2) {
      out(k) = out(k - 1) + h / 12 * (-f(k - 2) + 8 * f(k - 1) + 5 * f(k));
    } else {
      out(k) = h / 2 * (f(0) + f(1));
    }
  }
  return out;
}

// Fills masses/shares/controls/payoffs once `times` and `states` are set.
template <typename Scalar, typename Law>
void finish_trajectory(const Scenario<Scalar>& sc, const Law& law, Trajectory<Scalar>& traj) {
  using std::exp;
  const Eigen::Index points = traj.times.size();
  const Eigen::Index n = sc.size();
  if (traj.masses.size() != points) traj.masses = traj.states.rowwise().sum();
  if (traj.shares.rows() != points) {
    traj.shares.resize(points, n);
    for (Eigen::Index k = 0; k < points; ++k) traj.shares.row(k) = traj.states.row(k) / traj.masses(k);
  }
  traj.controls.resize(points, n);
  for (Eigen::Index k = 0; k < points; ++k) {
    traj.controls.row(k) = law(traj.states.row(k).transpose()).transpose();
  }
  const auto& active = sc.pattern.active();
  traj.payoff_partials.resize(points, static_cast<Eigen::Index>(active.size()));
  const Scalar h = traj.times(points - 1) / static_cast<Scalar>(points - 1);
  VectorX<Scalar> integrand(points);
  for (std::size_t a = 0; a < active.size(); ++a) {
    for (Eigen::Index k = 0; k < points; ++k) {
      integrand(k) = exp(-sc.rho * traj.times(k)) *
                     safe_utility(sc.growth, traj.controls(k, active[a]));
    }
    traj.payoff_partials.col(static_cast<Eigen::Index>(a)) = cumulative_simpson(integrand, h);
  }
}

// Integrates with dense-output resampling onto the uniform grid, tracking the
// first time a tracked component drops below -tol. `tracked(y)` maps the ODE
// state to the vector whose sign is monitored.
template <typename Scalar, typename Rhs, typename Tracked>
std::pair<MatrixX<Scalar>, OdeStats> sample_solution(Rhs&& rhs, const VectorX<Scalar>& y0,
                                                     const SimConfig<Scalar>& cfg,
                                                     Tracked&& tracked,
                                                     Trajectory<Scalar>& traj) {
  cfg.validate();
  const Eigen::Index points = cfg.intervals + 1;
  traj.times = VectorX<Scalar>::LinSpaced(points, Scalar(0), cfg.horizon);
  MatrixX<Scalar> samples(points, y0.size());
  samples.row(0) = y0.transpose();
  Eigen::Index next = 1;

  auto check_initial = tracked(y0);
  for (Eigen::Index i = 0; i < check_initial.size(); ++i) {
    if (check_initial(i) < -cfg.negativity_tol && traj.admissible) {
      traj.admissible = false;
      traj.first_violation_time = Scalar(0);
      traj.violation_node = i;
    }
  }

  auto on_step = [&](const DenseStep<Scalar>& step) {
    while (next < points && traj.times(next) <= step.t_end) {
      samples.row(next) =
          (next == points - 1 ? step.y_end : step(traj.times(next))).transpose();
      ++next;
    }
    if (!traj.admissible) return;
    const auto end = tracked(step.y_end);
    for (Eigen::Index i = 0; i < end.size(); ++i) {
      if (!(end(i) < -cfg.negativity_tol)) continue;
      // Bisect the continuous extension for the crossing time.
      Scalar lo = step.t_begin, hi = step.t_end;
      for (int it = 0; it < 60; ++it) {
        const Scalar mid = Scalar(0.5) * (lo + hi);
        (tracked(step(mid))(i) < -cfg.negativity_tol ? hi : lo) = mid;
      }
      if (!traj.first_violation_time || hi < *traj.first_violation_time) {
        traj.first_violation_time = hi;
        traj.violation_node = i;
      }
      traj.admissible = false;
    }
  };
  auto stats = integrate_dopri5<Scalar>(rhs, Scalar(0), cfg.horizon, y0, cfg.ode_options(), on_step);
  return {std::move(samples), stats};
}

}  // namespace detail

/// Integrates X' = phi(<e, X>) X + (D + B^T) X - law(X) from sc.x0. States are
/// never clamped: leaving the orthant clears `admissible` and records when.
template <typename Scalar, typename Law>
Trajectory<Scalar> integrate_feedback(const Scenario<Scalar>& sc, const Law& law,
                                      const SimConfig<Scalar>& cfg) {
  Trajectory<Scalar> traj;
  auto rhs = [&](Scalar, const VectorX<Scalar>& x, VectorX<Scalar>& dx) {
    dx = vector_field(sc, x, law(x));
  };
  auto identity = [](const VectorX<Scalar>& y) -> const VectorX<Scalar>& { return y; };
  auto [samples, stats] = detail::sample_solution<Scalar>(rhs, sc.x0, cfg, identity, traj);
  traj.states = std::move(samples);
  traj.stats = stats;
  detail::finish_trajectory(sc, law, traj);
  return traj;
}

/// Closed loop under the common feedback c_i = theta <e, X> on active nodes.
template <typename Scalar>
Trajectory<Scalar> integrate_closed_loop(const Scenario<Scalar>& sc, Scalar theta,
                                         const SimConfig<Scalar>& cfg) {
  if (!(theta >= 0)) throw Error(ErrorCode::kInvalidParameter, "theta must be nonnegative");
  return integrate_feedback(sc, AffineFeedback<Scalar>::uniform(sc.pattern, theta), cfg);
}

/// Same closed loop through the decoupled mass/share system
///   m' = (phi(m) - f theta) m,   Y' = (D + B^T - theta E + f theta I) Y,
/// reporting X = m Y.
template <typename Scalar>
Trajectory<Scalar> integrate_share_dynamics(const Scenario<Scalar>& sc, Scalar theta,
                                            const SimConfig<Scalar>& cfg) {
  if (!(theta >= 0)) throw Error(ErrorCode::kInvalidParameter, "theta must be nonnegative");
  const Eigen::Index n = sc.size();
  const Scalar f_theta = static_cast<Scalar>(sc.active_count()) * theta;
  const MatrixX<Scalar> shifted = detail::shift(sc.migration.matrix, sc.pattern, theta);
  auto rhs = [&](Scalar, const VectorX<Scalar>& z, VectorX<Scalar>& dz) {
    dz.resize(n + 1);
    const Scalar m = z(0);
    if (!(m > 0)) throw Error(ErrorCode::kZeroTotalMass, "mass reached zero");
    dz(0) = (sc.growth.phi(m) - f_theta) * m;
    dz.tail(n) = shifted * z.tail(n);
  };
  VectorX<Scalar> z0(n + 1);
  z0(0) = sc.initial_mass();
  z0.tail(n) = sc.x0 / sc.initial_mass();
  auto shares_of = [n](const VectorX<Scalar>& z) -> VectorX<Scalar> { return z.tail(n); };

  Trajectory<Scalar> traj;
  auto [samples, stats] = detail::sample_solution<Scalar>(rhs, z0, cfg, shares_of, traj);
  traj.stats = stats;
  traj.masses = samples.col(0);
  traj.shares = samples.rightCols(n);
  traj.states = traj.shares.array().colwise() * traj.masses.array();
  detail::finish_trajectory(sc, AffineFeedback<Scalar>::uniform(sc.pattern, theta), traj);
  return traj;
}

/// Shares Y(t) = exp(M_theta t) y0 through the eigendecomposition of M_theta.
/// Empty when the eigenvector basis is too ill-conditioned to trust.
template <typename Scalar>
std::optional<VectorX<Scalar>> shares_by_eigen_expansion(const MigrationOperator<Scalar>& op,
                                                         const ExtractionPattern& pat,
                                                         Scalar theta,
                                                         const VectorX<Scalar>& y0, Scalar t) {
  using Complex = std::complex<Scalar>;
  using CMatrix = Eigen::Matrix<Complex, Eigen::Dynamic, Eigen::Dynamic>;
  using CVector = Eigen::Matrix<Complex, Eigen::Dynamic, 1>;
  Eigen::EigenSolver<MatrixX<Scalar>> solver(detail::shift(op.matrix, pat, theta));
  if (solver.info() != Eigen::Success) return std::nullopt;
  const CMatrix v = solver.eigenvectors();
  Eigen::JacobiSVD<CMatrix> svd(v);
  const auto& sv = svd.singularValues();
  if (!(sv(sv.size() - 1) > sv(0) * Scalar(1e-8))) return std::nullopt;
  const CVector coeffs = v.partialPivLu().solve(y0.template cast<Complex>());
  CVector growth(coeffs.size());
  for (Eigen::Index i = 0; i < coeffs.size(); ++i) {
    growth(i) = std::exp(solver.eigenvalues()(i) * t) * coeffs(i);
  }
  return VectorX<Scalar>((v * growth).real());
}

/// Discounted utility per active node (pattern order): Simpson on the grid
/// plus the tail e^{-rho T} V(X(T)) when coefficients are supplied. Planner
/// tails are split evenly over the f nodes so the total equals V. Returns
/// -inf entries when an active control vanishes under log or sigma > 1
/// utility.
template <typename Scalar>
VectorX<Scalar> discounted_payoff_per_player(const Trajectory<Scalar>& traj,
                                             const Scenario<Scalar>& sc,
                                             const std::optional<PolicyCoefficients<Scalar>>& tail) {
  using std::exp;
  if (!(sc.rho > 0)) {
    throw Error(ErrorCode::kNonconvergentTail, "discounted payoff needs rho > 0");
  }
  VectorX<Scalar> out = traj.payoff_partials.row(traj.points() - 1).transpose();
  if (tail) {
    const Scalar mass = traj.masses(traj.points() - 1);
    Scalar v = exp(-sc.rho * traj.horizon()) * tail->value(sc.growth, mass);
    if (tail->regime == Regime::kPlanner) v /= static_cast<Scalar>(sc.active_count());
    out.array() += v;
  }
  return out;
}

template <typename Scalar>
Scalar discounted_payoff(const Trajectory<Scalar>& traj, const Scenario<Scalar>& sc,
                         const std::optional<PolicyCoefficients<Scalar>>& tail) {
  return discounted_payoff_per_player(traj, sc, tail).sum();
}

namespace detail {
inline std::string format_number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}
}  // namespace detail

/// CSV with header: time, X_1..X_n, m, Y_1..Y_n, c_1..c_n, payoff, where
/// payoff is the running discounted utility summed over active nodes.
template <typename Scalar>
void write_trajectory_csv(std::ostream& os, const Trajectory<Scalar>& traj) {
  const Eigen::Index n = traj.states.cols();
  os << "time";
  for (Eigen::Index i = 1; i <= n; ++i) os << ",X_" << i;
  os << ",m";
  for (Eigen::Index i = 1; i <= n; ++i) os << ",Y_" << i;
  for (Eigen::Index i = 1; i <= n; ++i) os << ",c_" << i;
  os << ",payoff\n";
  for (Eigen::Index k = 0; k < traj.points(); ++k) {
    os << detail::format_number(static_cast<double>(traj.times(k)));
    for (Eigen::Index i = 0; i < n; ++i) os << ',' << detail::format_number(static_cast<double>(traj.states(k, i)));
    os << ',' << detail::format_number(static_cast<double>(traj.masses(k)));
    for (Eigen::Index i = 0; i < n; ++i) os << ',' << detail::format_number(static_cast<double>(traj.shares(k, i)));
    for (Eigen::Index i = 0; i < n; ++i) os << ',' << detail::format_number(static_cast<double>(traj.controls(k, i)));
    os << ',' << detail::format_number(static_cast<double>(traj.payoff_partials.row(k).sum())) << '\n';
  }
}

using Scenariod = Scenario<double>;
using SimConfigd = SimConfig<double>;
using Trajectoryd = Trajectory<double>;

}  // namespace netharvest
