#include "netharvest/verify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "netharvest/spectral.hpp"

namespace netharvest {

namespace {

double max_abs(std::initializer_list<double> xs) {
  double out = 0;
  for (double x : xs) out = std::max(out, std::abs(x));
  return out;
}

void finalize(ResidualReport& report) {
  report.pass = report.max_rel_residual <= report.tolerance;
}

std::string context_of(const GrowthModeld& g, const PolicyCoefficientsd& pc) {
  return std::string(to_string(pc.regime)) + "/" + std::string(to_string(g.family()));
}

void require_interior(const PolicyCoefficientsd& pc) {
  if (!pc.interior || !(pc.theta > 0)) {
    throw Error(ErrorCode::kNoninteriorPolicy, "residual needs interior coefficients");
  }
}

Eigen::VectorXd dirichlet_point(std::mt19937_64& rng, Eigen::Index n) {
  std::exponential_distribution<double> expo(1.0);
  Eigen::VectorXd x(n);
  for (Eigen::Index i = 0; i < n; ++i) x(i) = expo(rng);
  return x / x.sum();
}

}  // namespace

std::vector<double> log_grid(double lo, double hi, int points) {
  if (!(lo > 0) || !(hi >= lo) || points < 1) {
    throw Error(ErrorCode::kInvalidParameter, "log grid needs 0 < lo <= hi and points >= 1");
  }
  std::vector<double> out(static_cast<std::size_t>(points));
  if (points == 1) {
    out[0] = lo;
    return out;
  }
  const double step = std::log(hi / lo) / (points - 1);
  for (int k = 0; k < points; ++k) out[static_cast<std::size_t>(k)] = lo * std::exp(step * k);
  out.back() = hi;
  return out;
}

ResidualReport hjb_residual_planner(const GrowthModeld& g, Eigen::Index f, double rho,
                                    const PolicyCoefficientsd& pc, std::span<const double> grid,
                                    double tolerance) {
  require_interior(pc);
  ResidualReport report;
  report.tolerance = tolerance;
  report.context = "planner HJB " + context_of(g, pc);
  const double fs = static_cast<double>(f);
  for (double m : grid) {
    const double p = pc.A * g.marginal_utility(m);
    const double lhs = rho * pc.value(g, m);
    const double hamiltonian = fs * g.hamiltonian(p);
    const double growth = p * g.phi(m) * m;
    const double r = lhs - hamiltonian - growth;
    const double scale = std::max(max_abs({lhs, hamiltonian, growth}),
                                  std::numeric_limits<double>::min());
    report.grid.push_back(m);
    report.residuals.push_back(r);
    report.max_abs_residual = std::max(report.max_abs_residual, std::abs(r));
    report.max_rel_residual = std::max(report.max_rel_residual, std::abs(r) / scale);
  }
  finalize(report);
  return report;
}

ResidualReport hjb_residual_planner(const Scenariod& sc, const PolicyCoefficientsd& pc,
                                    std::span<const double> grid, double tolerance) {
  return hjb_residual_planner(sc.growth, sc.active_count(), sc.rho, pc, grid, tolerance);
}

ResidualReport hjb_residual_player(const GrowthModeld& g, Eigen::Index f, double rho,
                                   const PolicyCoefficientsd& pc, std::span<const double> grid,
                                   double tolerance) {
  require_interior(pc);
  ResidualReport report;
  report.tolerance = tolerance;
  report.context = "player HJB " + context_of(g, pc);
  const double others = static_cast<double>(f - 1);
  for (double m : grid) {
    const double p = pc.A * g.marginal_utility(m);
    const double lhs = rho * pc.value(g, m);
    const double hamiltonian = g.hamiltonian(p);
    const double growth = p * g.phi(m) * m;
    const double rivals = others * p * pc.theta * m;
    const double r = lhs - hamiltonian - growth + rivals;
    const double scale = std::max(max_abs({lhs, hamiltonian, growth, rivals}),
                                  std::numeric_limits<double>::min());
    report.grid.push_back(m);
    report.residuals.push_back(r);
    report.max_abs_residual = std::max(report.max_abs_residual, std::abs(r));
    report.max_rel_residual = std::max(report.max_rel_residual, std::abs(r) / scale);
  }
  finalize(report);
  return report;
}

ResidualReport hjb_residual_player(const Scenariod& sc, const PolicyCoefficientsd& pc,
                                   std::span<const double> grid, double tolerance) {
  return hjb_residual_player(sc.growth, sc.active_count(), sc.rho, pc, grid, tolerance);
}

InterceptArbitration arbitrate_log_game_intercept(const GrowthModeld& g, Eigen::Index f,
                                                  double rho, std::span<const double> grid,
                                                  double tolerance) {
  InterceptArbitration out;
  auto pc = game_policy(g, f, rho);
  out.derived_intercept = pc.B;
  out.derived = hjb_residual_player(g, f, rho, pc, grid, tolerance);
  pc.B = alternate_log_game_intercept(g, f, rho);
  out.alternate_intercept = pc.B;
  out.alternate = hjb_residual_player(g, f, rho, pc, grid, tolerance);
  out.alternate.context += " (alternate intercept)";
  out.derived_adopted = out.derived.pass;
  out.exactly_one_passes = out.derived.pass != out.alternate.pass;
  return out;
}

double migration_term_gap(const Scenariod& sc, const PolicyCoefficientsd& pc, int samples,
                          std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  double worst = 0;
  const Eigen::Index n = sc.size();
  for (int s = 0; s < samples; ++s) {
    Eigen::VectorXd x(n);
    for (Eigen::Index i = 0; i < n; ++i) x(i) = unit(rng) * 10.0;
    const double m = x.sum();
    const Eigen::VectorXd grad = Eigen::VectorXd::Constant(n, pc.A * sc.growth.marginal_utility(m));
    const Eigen::VectorXd flow = sc.migration.matrix * x;
    const double denom = grad.norm() * flow.norm();
    if (denom > 0) worst = std::max(worst, std::abs(grad.dot(flow)) / denom);
  }
  return worst;
}

double finite_difference_hjb_residual(const Scenariod& sc, const PolicyCoefficientsd& pc,
                                      int samples, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.2, 1.0);
  const Eigen::Index n = sc.size();
  const auto& g = sc.growth;
  const auto& active = sc.pattern.active();
  double worst = 0;
  for (int s = 0; s < samples; ++s) {
    Eigen::VectorXd x(n);
    for (Eigen::Index i = 0; i < n; ++i) x(i) = unit(rng);
    x *= 2.0 * g.inverse_phi(0.0) / x.sum() * unit(rng);
    const double m = x.sum();
    const double h = 1e-5 * m;
    Eigen::VectorXd grad(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      Eigen::VectorXd up = x, down = x;
      up(i) += h;
      down(i) -= h;
      grad(i) = (candidate_value(g, pc, up) - candidate_value(g, pc, down)) / (2 * h);
    }
    const double lhs = sc.rho * candidate_value(g, pc, x);
    const double drift = grad.dot(sc.migration.matrix * x + g.phi(m) * x);
    double hamiltonian = 0;
    double rivals = 0;
    if (pc.regime == Regime::kPlanner) {
      for (auto i : active) hamiltonian += g.hamiltonian(grad(i));
    } else {
      hamiltonian = g.hamiltonian(grad(active.front()));
      for (std::size_t a = 1; a < active.size(); ++a) rivals += grad(active[a]) * pc.theta * m;
    }
    const double r = lhs - hamiltonian - drift + rivals;
    worst = std::max(worst, std::abs(r) / max_abs({lhs, hamiltonian, drift, rivals}));
  }
  return worst;
}

FundamentalIdentityReport fundamental_identity(const Trajectoryd& traj, const Scenariod& sc,
                                               const PolicyCoefficientsd& pc) {
  if (!(sc.rho > 0)) {
    throw Error(ErrorCode::kNonconvergentTail, "fundamental identity needs rho > 0");
  }
  const auto& g = sc.growth;
  const auto& active = sc.pattern.active();
  const Eigen::Index points = traj.points();
  Eigen::VectorXd gap_integrand(points), utility_integrand(points);
  for (Eigen::Index k = 0; k < points; ++k) {
    const double m = traj.masses(k);
    const double p = pc.A * g.marginal_utility(m);
    const double discount = std::exp(-sc.rho * traj.times(k));
    double gap = 0, utility = 0;
    if (pc.regime == Regime::kPlanner) {
      for (auto i : active) {
        const double c = traj.controls(k, i);
        const double u = detail::safe_utility(g, c);
        gap += g.hamiltonian(p) - (u - c * p);
        utility += u;
      }
    } else {
      const double c = traj.controls(k, active.front());
      const double u = detail::safe_utility(g, c);
      gap = g.hamiltonian(p) - (u - c * p);
      for (std::size_t a = 1; a < active.size(); ++a) {
        gap -= p * (pc.theta * m - traj.controls(k, active[a]));
      }
      utility = u;
    }
    gap_integrand(k) = discount * gap;
    utility_integrand(k) = discount * utility;
  }
  const double h = traj.horizon() / static_cast<double>(points - 1);
  const Eigen::VectorXd gap_cum = detail::cumulative_simpson(gap_integrand, h);
  const Eigen::VectorXd utility_cum = detail::cumulative_simpson(utility_integrand, h);

  FundamentalIdentityReport report;
  const double v0 = pc.value(g, traj.masses(0));
  report.gaps.resize(static_cast<std::size_t>(points));
  for (Eigen::Index k = 0; k < points; ++k) {
    const double tail = std::exp(-sc.rho * traj.times(k)) * pc.value(g, traj.masses(k));
    const double gap = std::abs(v0 - gap_cum(k) - utility_cum(k) - tail) / std::abs(v0);
    report.gaps[static_cast<std::size_t>(k)] = gap;
    report.max_gap = std::max(report.max_gap, gap);
  }
  report.hamiltonian_gap_integral = gap_cum(points - 1);
  return report;
}

double fundamental_identity_gap(const Trajectoryd& traj, const Scenariod& sc,
                                const PolicyCoefficientsd& pc) {
  return fundamental_identity(traj, sc, pc).max_gap;
}

DeviationReport deviation_test(const Scenariod& sc, std::span<const double> multipliers,
                               const SimConfigd& cfg, double tolerance) {
  const double threshold = inflow_threshold(sc.network, sc.pattern);
  const auto pc = game_policy(sc.growth, sc.active_count(), sc.rho, std::optional{threshold});
  if (!*pc.globally_admissible) {
    throw Error(ErrorCode::kSideConditionViolated,
                "deviation test needs theta_hat below the inflow threshold");
  }
  DeviationReport report;
  report.theta_hat = pc.theta;
  report.player = sc.pattern.active().front();
  report.tolerance = tolerance;
  report.scope = "unilateral deviations restricted to kappa * theta_hat * <e, x>";

  const auto& b = sc.network.weights();
  double player_inflow = std::numeric_limits<double>::infinity();
  for (Eigen::Index j = 0; j < sc.size(); ++j) {
    if (j != report.player) player_inflow = std::min(player_inflow, b(j, report.player));
  }

  SimConfigd doubled = cfg;
  doubled.horizon = 2 * cfg.horizon;
  doubled.intervals = 2 * cfg.intervals;
  auto run = [&](double kappa) {
    AffineFeedback<double> law = AffineFeedback<double>::uniform(sc.pattern, pc.theta);
    law.coefficients(report.player) = kappa * pc.theta;
    Deviation d;
    d.multiplier = kappa;
    d.theta = kappa * pc.theta;
    d.strategy_admissible = d.theta <= player_inflow + 1e-12;
    const auto traj = integrate_feedback(sc, law, cfg);
    d.trajectory_admissible = traj.admissible;
    d.payoff = discounted_payoff_per_player(traj, sc, std::optional{pc})(0);
    const auto longer = integrate_feedback(sc, law, doubled);
    d.payoff_uncorrected =
        discounted_payoff_per_player(longer, sc, std::optional<PolicyCoefficientsd>{})(0);
    return d;
  };

  const Deviation baseline = run(1.0);
  report.baseline_payoff = baseline.payoff;
  report.baseline_uncorrected = baseline.payoff_uncorrected;
  report.max_gain = -std::numeric_limits<double>::infinity();
  for (double kappa : multipliers) {
    Deviation d = kappa == 1.0 ? baseline : run(kappa);
    d.gain = d.payoff - baseline.payoff;
    d.gain_uncorrected = d.payoff_uncorrected - baseline.payoff_uncorrected;
    if (d.trajectory_admissible) report.max_gain = std::max(report.max_gain, d.gain);
    report.deviations.push_back(d);
  }
  if (!std::isfinite(report.max_gain)) report.max_gain = 0;
  report.max_relative_gain = report.max_gain / std::abs(baseline.payoff);
  report.pass = report.max_relative_gain <= tolerance;
  return report;
}

AdmissibilityReport strategy_admissibility(const Networkd& net, const ExtractionPattern& pat,
                                           double theta, int samples, std::uint64_t seed) {
  constexpr double kSlack = 1e-12;
  const Eigen::Index n = net.size();
  const auto& b = net.weights();
  const Eigen::MatrixXd op = migration_operator(net).matrix;
  std::mt19937_64 rng(seed);

  AdmissibilityReport report;
  report.theta = theta;
  report.samples = samples;
  for (Eigen::Index i = 0; i < n; ++i) {
    NodeAdmissibility node;
    node.node = i;
    node.active = pat.contains(i);
    if (!node.active) {
      report.nodes.push_back(node);
      continue;
    }
    node.min_inflow = std::numeric_limits<double>::infinity();
    for (Eigen::Index j = 0; j < n; ++j) {
      if (j != i && b(j, i) < node.min_inflow) {
        node.min_inflow = b(j, i);
        node.binding_source = j;
      }
    }
    node.pass_threshold = theta <= node.min_inflow + kSlack;

    // Face x_i = 0: its vertices, then uniform draws.
    auto satisfies = [&](const Eigen::VectorXd& x) {
      return theta * x.sum() <= op.row(i).dot(x) + kSlack * x.sum();
    };
    int drawn = 0;
    for (Eigen::Index j = 0; j < n && drawn < samples; ++j) {
      if (j == i) continue;
      Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
      x(j) = 1;
      node.pass_sampled = node.pass_sampled && satisfies(x);
      ++drawn;
    }
    for (; drawn < samples; ++drawn) {
      Eigen::VectorXd x = dirichlet_point(rng, n);
      x(i) = 0;
      node.pass_sampled = node.pass_sampled && satisfies(x);
    }
    report.pass = report.pass && node.pass_threshold;
    report.agree = report.agree && (node.pass_threshold == node.pass_sampled);
    report.nodes.push_back(node);
  }
  return report;
}

ConeProbeReport cone_admissibility_probe(const Scenariod& sc, double theta,
                                         std::span<const double> radii, const SimConfigd& cfg,
                                         int samples, std::uint64_t seed) {
  ConeProbeReport report;
  report.theta = theta;
  const auto limits = theta_limits(sc.migration, sc.pattern);
  report.precondition = theta < std::min(limits.theta1, limits.theta2);
  report.limit_shares = shifted_null_vector(sc.migration, sc.pattern, theta).first;
  const Eigen::Index n = sc.size();
  const double mass = sc.initial_mass();

  std::vector<double> sorted(radii.begin(), radii.end());
  std::sort(sorted.begin(), sorted.end());
  std::mt19937_64 rng(seed);
  bool all_so_far = true;
  for (double radius : sorted) {
    ConeProbeResult result;
    result.radius = radius;
    // Directions toward every simplex vertex, then toward uniform draws.
    std::vector<Eigen::VectorXd> targets;
    for (Eigen::Index j = 0; j < n; ++j) targets.push_back(Eigen::VectorXd::Unit(n, j));
    while (static_cast<int>(targets.size()) < n + samples) targets.push_back(dirichlet_point(rng, n));
    for (const auto& target : targets) {
      const Eigen::VectorXd dir = target - report.limit_shares;
      const double dist = dir.norm();
      Eigen::VectorXd y = dist > radius ? Eigen::VectorXd(report.limit_shares + radius / dist * dir)
                                        : target;
      y = y.cwiseMax(0.0);
      y /= y.sum();
      const Scenariod start(sc.network, sc.pattern, sc.growth, sc.rho, mass * y);
      const auto traj = integrate_closed_loop(start, theta, cfg);
      ++result.samples;
      if (!traj.admissible) ++result.violations;
    }
    result.verified = result.violations == 0;
    if (result.verified && all_so_far) report.largest_verified = radius;
    all_so_far = all_so_far && result.verified;
    report.results.push_back(result);
  }
  return report;
}

double mass_closed_form_gap(const Trajectoryd& traj, const Scenariod& sc, double theta) {
  double worst = 0;
  const double m0 = traj.masses(0);
  for (Eigen::Index k = 0; k < traj.points(); ++k) {
    const double exact = mass_closed_form(sc.growth, m0, sc.active_count(), theta, traj.times(k));
    worst = std::max(worst, std::abs(traj.masses(k) - exact) / exact);
  }
  return worst;
}

}  // namespace netharvest
