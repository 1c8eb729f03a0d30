#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "netharvest/dynamics.hpp"
#include "netharvest/growth.hpp"
#include "netharvest/network.hpp"

namespace netharvest {

/// HJB residual of V = A u(m) + B sampled on a grid of total masses. The
/// relative residual divides by the largest magnitude among the equation's
/// terms at each point.
struct ResidualReport {
  std::vector<double> grid;
  std::vector<double> residuals;
  double max_abs_residual = 0;
  double max_rel_residual = 0;
  double tolerance = 0;
  bool pass = false;
  std::string context;
};

/// Log-spaced points in [lo, hi].
std::vector<double> log_grid(double lo, double hi, int points);

/// rho V = f H(V') + V' phi(m) m on the grid. The migration term is absent
/// because grad V is parallel to e; migration_term_gap checks that part.
ResidualReport hjb_residual_planner(const GrowthModeld& g, Eigen::Index f, double rho,
                                    const PolicyCoefficientsd& pc, std::span<const double> grid,
                                    double tolerance = 1e-10);
ResidualReport hjb_residual_planner(const Scenariod& sc, const PolicyCoefficientsd& pc,
                                    std::span<const double> grid, double tolerance = 1e-10);

/// rho V = H(V') + V' phi(m) m - (f - 1) V' theta m: one player's HJB when
/// the other f - 1 players extract theta <e, x>.
ResidualReport hjb_residual_player(const GrowthModeld& g, Eigen::Index f, double rho,
                                   const PolicyCoefficientsd& pc, std::span<const double> grid,
                                   double tolerance = 1e-10);
ResidualReport hjb_residual_player(const Scenariod& sc, const PolicyCoefficientsd& pc,
                                   std::span<const double> grid, double tolerance = 1e-10);

/// Two candidate intercepts for the log-type game value; the one whose player
/// HJB residual passes is adopted.
struct InterceptArbitration {
  double derived_intercept = 0;
  double alternate_intercept = 0;
  ResidualReport derived;
  ResidualReport alternate;
  bool derived_adopted = false;
  bool exactly_one_passes = false;
};

InterceptArbitration arbitrate_log_game_intercept(const GrowthModeld& g, Eigen::Index f,
                                                  double rho, std::span<const double> grid,
                                                  double tolerance = 1e-10);

/// max over random x >= 0 of |<grad V(x), (D + B^T) x>| / (|grad V| |(D + B^T) x|).
double migration_term_gap(const Scenariod& sc, const PolicyCoefficientsd& pc, int samples,
                          std::uint64_t seed);

/// Full-state HJB residual at random states, with grad V from central finite
/// differences of candidate_value and the migration term kept. Relative to the
/// largest term.
double finite_difference_hjb_residual(const Scenariod& sc, const PolicyCoefficientsd& pc,
                                      int samples, std::uint64_t seed);

/// V(x0) - int e^{-rho s}[H - h] - int e^{-rho s} sum u(c_i) - e^{-rho T} V(X(T))
/// on every grid time T, relative to |V(x0)|. Planner coefficients use the
/// planner Hamiltonian over all active nodes. Game coefficients use the first
/// active node as the player and fold the other players' departures from
/// theta <e, x> into the H - h integrand, so the identity holds for any
/// trajectory.
struct FundamentalIdentityReport {
  std::vector<double> gaps;
  double max_gap = 0;
  double hamiltonian_gap_integral = 0;  // int_0^T e^{-rho s}[H - h] ds
};

FundamentalIdentityReport fundamental_identity(const Trajectoryd& traj, const Scenariod& sc,
                                               const PolicyCoefficientsd& pc);
double fundamental_identity_gap(const Trajectoryd& traj, const Scenariod& sc,
                                const PolicyCoefficientsd& pc);

struct Deviation {
  double multiplier = 1;
  double theta = 0;
  double payoff = 0;              // with tail e^{-rho T} V(X(T))
  double payoff_uncorrected = 0;  // horizon 2T, no tail
  double gain = 0;
  double gain_uncorrected = 0;
  bool trajectory_admissible = true;
  bool strategy_admissible = true;  // kappa theta <= min inflow into the node
};

struct DeviationReport {
  double theta_hat = 0;
  Eigen::Index player = 0;
  double baseline_payoff = 0;
  double baseline_uncorrected = 0;
  std::vector<Deviation> deviations;
  double max_gain = 0;           // over admissible trajectories
  double max_relative_gain = 0;  // max_gain / |baseline|
  double tolerance = 0;
  bool pass = false;
  std::string scope;
};

/// Unilateral deviation of the first active player to kappa theta_hat <e, x>
/// while the others keep theta_hat. Only the affine one-parameter family is
/// searched. Requires theta_hat below the inflow threshold.
DeviationReport deviation_test(const Scenariod& sc, std::span<const double> multipliers,
                               const SimConfigd& cfg, double tolerance = 1e-4);

struct NodeAdmissibility {
  Eigen::Index node = 0;
  bool active = false;
  double min_inflow = 0;
  Eigen::Index binding_source = -1;
  bool pass_threshold = true;
  bool pass_sampled = true;
};

struct AdmissibilityReport {
  double theta = 0;
  std::vector<NodeAdmissibility> nodes;
  int samples = 0;
  bool pass = true;
  bool agree = true;  // threshold and sampled verdicts match on every node
};

/// Boundary condition of the admissible strategy set for c_i = theta <e, x>:
/// at x >= 0 with x_i = 0 the extraction may not exceed the inflow
/// <(D + B^T) x, e_i>. Checked in threshold form and on sampled boundary
/// points (face vertices plus uniform draws).
AdmissibilityReport strategy_admissibility(const Networkd& net, const ExtractionPattern& pat,
                                           double theta, int samples = 1000,
                                           std::uint64_t seed = 7);

struct ConeProbeResult {
  double radius = 0;
  int samples = 0;
  int violations = 0;
  bool verified = false;
};

struct ConeProbeReport {
  double theta = 0;
  Eigen::VectorXd limit_shares;
  bool precondition = false;  // theta < min(theta1, theta2)
  std::vector<ConeProbeResult> results;
  double largest_verified = 0;
};

/// Monte Carlo lower bound on the radius L of the admissible cone around the
/// limiting shares zeta_theta / <e, zeta_theta>.
ConeProbeReport cone_admissibility_probe(const Scenariod& sc, double theta,
                                         std::span<const double> radii, const SimConfigd& cfg,
                                         int samples = 16, std::uint64_t seed = 11);

/// max_k |m(t_k) - closed form| / closed form along a trajectory.
double mass_closed_form_gap(const Trajectoryd& traj, const Scenariod& sc, double theta);

inline constexpr double kSimplexDiameter = 1.4142135623730951;

}  // namespace netharvest
