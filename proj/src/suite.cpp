#include "netharvest/suite.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>

#include "netharvest/spectral.hpp"

namespace netharvest {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

Check verdict(std::string name, double value, double tolerance, std::string note = {}) {
  Check c;
  c.name = std::move(name);
  c.value = value;
  c.tolerance = tolerance;
  c.status = value <= tolerance ? CheckStatus::kPass : CheckStatus::kFail;
  c.note = std::move(note);
  return c;
}

Check skipped(std::string name, std::string why) {
  Check c;
  c.name = std::move(name);
  c.status = CheckStatus::kSkip;
  c.note = std::move(why);
  return c;
}

// Runs one check; library errors turn into a failed check carrying the message.
void run_check(std::vector<Check>& out, const std::string& name,
               const std::function<Check()>& body) {
  try {
    out.push_back(body());
  } catch (const Error& e) {
    Check c;
    c.name = name;
    c.status = CheckStatus::kFail;
    c.value = kInf;
    c.note = e.what();
    out.push_back(std::move(c));
  }
}

template <typename Policy>
std::optional<PolicyCoefficientsd> try_policy(Policy&& make, std::string& why) {
  try {
    return make();
  } catch (const Error& e) {
    why = e.what();
    return std::nullopt;
  }
}

double relative_gap(double a, double b) { return std::abs(a - b) / std::abs(b); }

}  // namespace

void VerifySettings::validate() const {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw Error(ErrorCode::kInvalidParameter, what);
  };
  require(grid_points >= 2, "verify grid needs at least 2 points");
  require(grid_low_factor > 0 && grid_high_factor > grid_low_factor,
          "verify grid factors need 0 < low < high");
  require(!multipliers.empty(), "verify multipliers must not be empty");
  for (double k : multipliers) require(k >= 0, "verify multipliers must be nonnegative");
  require(!cone_radii.empty(), "verify cone radii must not be empty");
  for (double r : cone_radii) require(r >= 0, "verify cone radii must be nonnegative");
  require(boundary_samples >= 1 && cone_samples >= 0 && state_samples >= 1,
          "verify sample counts must be positive");
  for (double t : {hjb_tol, gradient_tol, finite_difference_tol, steady_state_tol, mass_tol,
                   payoff_tol, identity_tol, deviation_tol, shares_tol}) {
    require(t > 0, "verify tolerances must be positive");
  }
}

std::string_view to_string(CheckStatus s) {
  switch (s) {
    case CheckStatus::kPass: return "PASS";
    case CheckStatus::kFail: return "FAIL";
    case CheckStatus::kSkip: return "SKIP";
  }
  return "?";
}

bool VerificationSuite::passed() const {
  return std::none_of(checks.begin(), checks.end(),
                      [](const Check& c) { return c.status == CheckStatus::kFail; });
}

int VerificationSuite::count(CheckStatus s) const {
  return static_cast<int>(std::count_if(checks.begin(), checks.end(),
                                        [s](const Check& c) { return c.status == s; }));
}

double relaxation_horizon(const Scenariod& sc, double theta, double target) {
  const auto spectrum = eigen_decompose(sc.migration);
  const double share_rate = spectrum.spectral_gap - static_cast<double>(sc.active_count()) * theta;
  const double mass_rate = mass_relaxation_rate(sc.growth, sc.active_count(), theta);
  const double rate = std::min(share_rate, mass_rate);
  if (!(rate > 0)) return kInf;
  return std::log(1.0 / target) / rate;
}

VerificationSuite run_verification(const Scenariod& sc, const SimConfigd& cfg,
                                   const VerifySettings& vs) {
  cfg.validate();
  vs.validate();
  VerificationSuite suite;
  auto& out = suite.checks;
  const auto& g = sc.growth;
  const Eigen::Index f = sc.active_count();
  const double fs = static_cast<double>(f);
  const double threshold = inflow_threshold(sc.network, sc.pattern);

  std::string planner_why, game_why;
  const auto planner = try_policy([&] { return planner_policy(g, f, sc.rho, std::optional{threshold}); },
                                  planner_why);
  const auto game = try_policy([&] { return game_policy(g, f, sc.rho, std::optional{threshold}); },
                               game_why);

  // Spectrum.
  std::optional<SpectralData<double>> spectrum;
  run_check(out, "spectral.dominant_eigenvalue", [&] {
    spectrum = eigen_decompose(sc.migration);
    return verdict("spectral.dominant_eigenvalue", std::abs(spectrum->eigenvalues[0]),
                   spectral_tol::kZeroEigenvalue,
                   "gap " + detail::format_number(spectrum->spectral_gap));
  });
  if (spectrum) {
    Check c;
    c.name = "spectral.zeta_positive";
    c.value = spectrum->zeta.minCoeff();
    c.status = c.value > 0 ? CheckStatus::kPass : CheckStatus::kFail;
    c.note = "smallest entry";
    out.push_back(std::move(c));
  } else {
    out.push_back(skipped("spectral.zeta_positive", "no spectral decomposition"));
  }
  for (const auto& [name, pc, why] :
       {std::tuple{"spectral.shift_identity.planner", &planner, &planner_why},
        std::tuple{"spectral.shift_identity.game", &game, &game_why}}) {
    if (!*pc) {
      out.push_back(skipped(name, *why));
      continue;
    }
    run_check(out, name, [&, name = std::string(name), theta = (*pc)->theta] {
      const auto r = verify_spectral_shift(sc.migration, sc.pattern, theta);
      return verdict(name, r.max_deviation, r.tolerance);
    });
  }

  // Steady states.
  run_check(out, "steady_state.identities", [&] {
    if (!planner || !game) return skipped("steady_state.identities", "policy not interior");
    const auto ss = steady_masses(g, f, sc.rho);
    double worst = std::abs(g.phi(ss.m_bar));
    if (!ss.planner_extinct) worst = std::max(worst, std::abs(g.phi(ss.m_star) - fs * planner->theta));
    if (!ss.game_extinct) worst = std::max(worst, std::abs(g.phi(ss.m_hat) - fs * game->theta));
    Check c = verdict("steady_state.identities", worst, vs.steady_state_tol);
    if (!(ss.delta_f >= 0) || ss.m_hat > ss.m_star) {
      c.status = CheckStatus::kFail;
      c.note = "ordering m_hat <= m_star violated";
    }
    return c;
  });

  // HJB residuals.
  const double m_bar = g.inverse_phi(0.0);
  const auto grid = log_grid(vs.grid_low_factor * m_bar, vs.grid_high_factor * m_bar, vs.grid_points);
  if (planner) {
    run_check(out, "hjb.planner", [&] {
      const auto r = hjb_residual_planner(sc, *planner, grid, vs.hjb_tol);
      return verdict("hjb.planner", r.max_rel_residual, vs.hjb_tol);
    });
    run_check(out, "hjb.gradient_parallel", [&] {
      return verdict("hjb.gradient_parallel",
                     migration_term_gap(sc, *planner, vs.state_samples, vs.seed), vs.gradient_tol);
    });
    run_check(out, "hjb.finite_difference.planner", [&] {
      return verdict("hjb.finite_difference.planner",
                     finite_difference_hjb_residual(sc, *planner, vs.state_samples, vs.seed),
                     vs.finite_difference_tol);
    });
  } else {
    for (const char* name : {"hjb.planner", "hjb.gradient_parallel", "hjb.finite_difference.planner"}) {
      out.push_back(skipped(name, planner_why));
    }
  }
  if (game) {
    run_check(out, "hjb.player", [&] {
      const auto r = hjb_residual_player(sc, *game, grid, vs.hjb_tol);
      return verdict("hjb.player", r.max_rel_residual, vs.hjb_tol);
    });
    run_check(out, "hjb.finite_difference.player", [&] {
      return verdict("hjb.finite_difference.player",
                     finite_difference_hjb_residual(sc, *game, vs.state_samples, vs.seed + 1),
                     vs.finite_difference_tol);
    });
  } else {
    for (const char* name : {"hjb.player", "hjb.finite_difference.player"}) {
      out.push_back(skipped(name, game_why));
    }
  }
  if (g.family() == Family::kLogType && game) {
    run_check(out, "hjb.log_game_intercept", [&] {
      const auto arb = arbitrate_log_game_intercept(g, f, sc.rho, grid, vs.hjb_tol);
      Check c = verdict("hjb.log_game_intercept", arb.derived.max_rel_residual, vs.hjb_tol);
      c.note = "alternate intercept residual " +
               detail::format_number(arb.alternate.max_rel_residual) +
               (arb.alternate.pass ? " (also passes)" : " (rejected)");
      return c;
    });
  } else {
    out.push_back(skipped("hjb.log_game_intercept", "log-type game only"));
  }

  // Mass closed form under 0, theta*, theta_hat.
  run_check(out, "dynamics.mass_closed_form", [&] {
    double worst = 0;
    std::string note;
    std::vector<std::pair<const char*, double>> rates{{"0", 0.0}};
    if (planner) rates.emplace_back("theta*", planner->theta);
    if (game) rates.emplace_back("theta_hat", game->theta);
    for (const auto& [label, theta] : rates) {
      if (!(mass_relaxation_rate(g, f, theta) > 0) && g.family() != Family::kLogType) {
        note += std::string(note.empty() ? "" : "; ") + label + " outside closed-form range";
        continue;
      }
      const auto traj = integrate_closed_loop(sc, theta, cfg);
      worst = std::max(worst, mass_closed_form_gap(traj, sc, theta));
    }
    return verdict("dynamics.mass_closed_form", worst, vs.mass_tol, note);
  });

  // Long-run shares.
  run_check(out, "dynamics.long_run_shares", [&] {
    if (!planner) return skipped("dynamics.long_run_shares", planner_why);
    const auto limits = theta_limits(sc.migration, sc.pattern);
    const double theta = planner->theta;
    if (!(theta < std::min(limits.theta1, limits.theta2))) {
      return skipped("dynamics.long_run_shares", "theta* not below min(theta1, theta2)");
    }
    const double horizon = relaxation_horizon(sc, theta, 1e-8);
    if (!std::isfinite(horizon)) {
      return skipped("dynamics.long_run_shares", "no exponential relaxation");
    }
    SimConfigd long_cfg = cfg;
    long_cfg.horizon = std::max(cfg.horizon, horizon);
    long_cfg.max_step = 0;
    const auto traj = integrate_closed_loop(sc, theta, long_cfg);
    const auto target = shifted_null_vector(sc.migration, sc.pattern, theta).first;
    const Eigen::VectorXd last = traj.shares.row(traj.points() - 1).transpose();
    return verdict("dynamics.long_run_shares", (last - target).norm(), vs.shares_tol,
                   "T = " + detail::format_number(long_cfg.horizon));
  });
  run_check(out, "dynamics.long_run_state_unharvested", [&] {
    const double horizon = relaxation_horizon(sc, 0.0, 1e-10);
    if (!std::isfinite(horizon)) {
      return skipped("dynamics.long_run_state_unharvested", "no exponential relaxation");
    }
    SimConfigd long_cfg = cfg;
    long_cfg.horizon = std::max(cfg.horizon, horizon);
    long_cfg.max_step = 0;
    const auto traj = integrate_closed_loop(sc, 0.0, long_cfg);
    const Eigen::VectorXd target = m_bar * eigen_decompose(sc.migration).zeta;
    const Eigen::VectorXd last = traj.states.row(traj.points() - 1).transpose();
    return verdict("dynamics.long_run_state_unharvested", (last - target).norm(), vs.shares_tol,
                   "T = " + detail::format_number(long_cfg.horizon));
  });

  // Value against simulated payoff, and the fundamental identity.
  if (planner) {
    run_check(out, "value.planner_payoff", [&] {
      const auto traj = integrate_closed_loop(sc, planner->theta, cfg);
      const double j = discounted_payoff(traj, sc, std::optional{*planner});
      const double v = planner->value(g, sc.initial_mass());
      return verdict("value.planner_payoff", relative_gap(j, v), vs.payoff_tol,
                     traj.admissible ? "" : "trajectory leaves the orthant");
    });
    run_check(out, "identity.planner_optimal", [&] {
      const auto traj = integrate_closed_loop(sc, planner->theta, cfg);
      return verdict("identity.planner_optimal", fundamental_identity_gap(traj, sc, *planner),
                     vs.identity_tol);
    });
    run_check(out, "identity.planner_suboptimal", [&] {
      const auto traj = integrate_closed_loop(sc, 0.5 * planner->theta, cfg);
      const auto r = fundamental_identity(traj, sc, *planner);
      return verdict("identity.planner_suboptimal", r.max_gap, vs.identity_tol,
                     "H - h integral " + detail::format_number(r.hamiltonian_gap_integral));
    });
  } else {
    for (const char* name :
         {"value.planner_payoff", "identity.planner_optimal", "identity.planner_suboptimal"}) {
      out.push_back(skipped(name, planner_why));
    }
  }
  if (game) {
    run_check(out, "value.game_payoff", [&] {
      const auto traj = integrate_closed_loop(sc, game->theta, cfg);
      const double j = discounted_payoff_per_player(traj, sc, std::optional{*game})(0);
      const double v = game->value(g, sc.initial_mass());
      return verdict("value.game_payoff", relative_gap(j, v), vs.payoff_tol,
                     traj.admissible ? "" : "trajectory leaves the orthant");
    });
    run_check(out, "identity.game_suboptimal", [&] {
      const auto law = AffineFeedback<double>::uniform(sc.pattern, 0.5 * game->theta);
      const auto traj = integrate_feedback(sc, law, cfg);
      const auto r = fundamental_identity(traj, sc, *game);
      return verdict("identity.game_suboptimal", r.max_gap, vs.identity_tol);
    });
  } else {
    for (const char* name : {"value.game_payoff", "identity.game_suboptimal"}) {
      out.push_back(skipped(name, game_why));
    }
  }

  // Equilibrium deviations.
  if (!game) {
    out.push_back(skipped("equilibrium.deviation", game_why));
  } else if (!*game->globally_admissible) {
    out.push_back(skipped("equilibrium.deviation", "theta_hat not below the inflow threshold"));
  } else {
    run_check(out, "equilibrium.deviation", [&] {
      const auto r = deviation_test(sc, vs.multipliers, cfg, vs.deviation_tol);
      return verdict("equilibrium.deviation", r.max_relative_gain, vs.deviation_tol, r.scope);
    });
  }

  // Admissibility.
  for (const auto& [name, pc, why] :
       {std::tuple{"admissibility.planner", &planner, &planner_why},
        std::tuple{"admissibility.game", &game, &game_why}}) {
    if (!*pc) {
      out.push_back(skipped(name, *why));
      continue;
    }
    run_check(out, name, [&, name = std::string(name), theta = (*pc)->theta] {
      const auto r = strategy_admissibility(sc.network, sc.pattern, theta, vs.boundary_samples, vs.seed);
      Check c;
      c.name = name;
      c.value = theta;
      c.tolerance = threshold;
      c.note = "inflow threshold as tolerance; ";
      c.status = r.agree ? CheckStatus::kPass : CheckStatus::kFail;
      c.note += std::string(r.pass ? "globally admissible" : "not globally admissible") +
               (r.agree ? "" : "; sampled boundary disagrees with threshold");
      return c;
    });
  }
  run_check(out, "admissibility.cone", [&] {
    if (!planner) return skipped("admissibility.cone", planner_why);
    const auto r = cone_admissibility_probe(sc, planner->theta, vs.cone_radii, cfg,
                                            vs.cone_samples, vs.seed);
    if (!r.precondition) return skipped("admissibility.cone", "theta* not below min(theta1, theta2)");
    Check c;
    c.name = "admissibility.cone";
    c.value = r.largest_verified;
    c.status = !r.results.empty() && r.results.front().verified ? CheckStatus::kPass
                                                                 : CheckStatus::kFail;
    c.note = "largest verified radius, theta*";
    return c;
  });

  return suite;
}

}  // namespace netharvest
