#include "netharvest/runner.hpp"

#include <cmath>
#include <fstream>

#include "netharvest/spectral.hpp"
#include "netharvest/suite.hpp"

namespace netharvest {

namespace {

const Cell kNA = std::string("n/a");

std::string yes_no(bool b) { return b ? "yes" : "no"; }

std::string node_list(const ExtractionPattern& pat) {
  std::string out;
  for (auto i : pat.active()) out += (out.empty() ? "" : ",") + std::to_string(i + 1);
  return out;
}

template <typename Make>
std::optional<PolicyCoefficientsd> maybe_policy(Make&& make) {
  try {
    return make();
  } catch (const Error& e) {
    if (e.code() != ErrorCode::kNoninteriorPolicy) throw;
    return std::nullopt;
  }
}

struct Policies {
  std::optional<PolicyCoefficientsd> planner;
  std::optional<PolicyCoefficientsd> game;
};

Policies policies_of(const Scenariod& sc) {
  const double thr = inflow_threshold(sc.network, sc.pattern);
  const auto f = sc.active_count();
  return {maybe_policy([&] { return planner_policy(sc.growth, f, sc.rho, std::optional{thr}); }),
          maybe_policy([&] { return game_policy(sc.growth, f, sc.rho, std::optional{thr}); })};
}

void add_scenario(RunReport& r, const ScenarioConfig& cfg) {
  const auto& sc = cfg.scenario;
  const auto& g = sc.growth;
  auto& s = r.add("scenario", "Scenario");
  s.field("nodes", static_cast<double>(sc.size()))
      .field("active nodes", node_list(sc.pattern))
      .field("family", std::string(to_string(g.family())));
  switch (g.family()) {
    case Family::kLogistic:
      s.field("Gamma", g.growth_rate()).field("K", g.capacity()).field("sigma", g.sigma());
      break;
    case Family::kPower:
      s.field("sigma", g.sigma()).field("delta", g.decay());
      break;
    case Family::kLogType:
      s.field("Gamma", g.growth_rate()).field("K", g.capacity());
      break;
  }
  s.field("rho", sc.rho).field("initial mass", sc.initial_mass());
}

void add_analysis(RunReport& r, const ScenarioConfig& cfg) {
  const auto& sc = cfg.scenario;
  const auto spectrum = eigen_decompose(sc.migration);
  const auto limits = theta_limits(sc.migration, sc.pattern);
  const double inflow = inflow_threshold(sc.network, sc.pattern);

  auto& s = r.add("spectral", "Spectrum of the migration operator");
  s.field("spectral gap", spectrum.spectral_gap)
      .field("theta1", limits.theta1)
      .field("theta2", limits.theta2)
      .field("inflow threshold", inflow)
      .field("outflow threshold", outflow_threshold(sc.network, sc.pattern));
  auto& ev = r.add("eigenvalue", "Eigenvalues");
  ev.columns = {"k", "real", "imag"};
  for (std::size_t k = 0; k < spectrum.eigenvalues.size(); ++k) {
    ev.row({std::to_string(k + 1), spectrum.eigenvalues[k].real(), spectrum.eigenvalues[k].imag()});
  }
  auto& z = r.add("zeta", "Dominant null vector (sums to 1)");
  z.columns = {"node", "zeta"};
  for (Eigen::Index i = 0; i < spectrum.zeta.size(); ++i) z.row({std::to_string(i + 1), spectrum.zeta(i)});

  const auto pol = policies_of(sc);
  const double fs = static_cast<double>(sc.active_count());
  auto& p = r.add("policy", "Feedback policies c_i = theta <e, x>");
  p.columns = {"regime", "theta", "f_theta", "A", "B", "admissible"};
  for (const auto& [name, pc] : {std::pair{"planner", &pol.planner}, std::pair{"game", &pol.game}}) {
    if (*pc) {
      p.row({std::string(name), (*pc)->theta, fs * (*pc)->theta, (*pc)->A, (*pc)->B,
             yes_no(*(*pc)->globally_admissible)});
    } else {
      p.row({std::string(name), kNA, kNA, kNA, kNA, kNA});
    }
  }

  auto& st = r.add("steady", "Long-run total mass");
  st.field("m_bar", sc.growth.inverse_phi(0.0));
  if (pol.planner && pol.game) {
    const auto ss = steady_masses(sc.growth, sc.active_count(), sc.rho);
    st.field("m_star", ss.m_star).field("m_hat", ss.m_hat).field("delta_f", ss.delta_f);
  }

  auto& a = r.add("admissibility", "Boundary admissibility per node");
  a.columns = {"node", "active", "min_inflow", "binding_source", "planner", "game"};
  std::optional<AdmissibilityReport> ap, ag;
  if (pol.planner) ap = strategy_admissibility(sc.network, sc.pattern, pol.planner->theta, cfg.verify.boundary_samples, cfg.verify.seed);
  if (pol.game) ag = strategy_admissibility(sc.network, sc.pattern, pol.game->theta, cfg.verify.boundary_samples, cfg.verify.seed);
  const auto base = strategy_admissibility(sc.network, sc.pattern, 0.0, 1, cfg.verify.seed);
  auto verdict = [](const std::optional<AdmissibilityReport>& rep, std::size_t i) -> Cell {
    if (!rep) return kNA;
    return rep->nodes[i].pass_threshold ? std::string("pass") : std::string("fail");
  };
  for (Eigen::Index i = 0; i < sc.size(); ++i) {
    const auto k = static_cast<std::size_t>(i);
    if (!sc.pattern.contains(i)) {
      a.row({std::to_string(i + 1), std::string("no"), kNA, kNA, kNA, kNA});
      continue;
    }
    const auto& node = base.nodes[k];
    a.row({std::to_string(i + 1), std::string("yes"), node.min_inflow,
           std::to_string(node.binding_source + 1), verdict(ap, k), verdict(ag, k)});
  }
}

void add_verification(RunReport& r, const VerificationSuite& suite) {
  auto& v = r.add("verify", "Verification");
  v.field("passed", static_cast<double>(suite.count(CheckStatus::kPass)))
      .field("failed", static_cast<double>(suite.count(CheckStatus::kFail)))
      .field("skipped", static_cast<double>(suite.count(CheckStatus::kSkip)))
      .field("deviation scope", std::string("affine family kappa * theta_hat * <e, x>"));
  v.columns = {"check", "status", "value", "tolerance", "note"};
  for (const auto& c : suite.checks) {
    const bool has_value = c.status != CheckStatus::kSkip;
    v.row({c.name, std::string(to_string(c.status)), has_value ? Cell(c.value) : kNA,
           has_value && !std::isnan(c.tolerance) ? Cell(c.tolerance) : kNA, c.note.empty() ? kNA : Cell(c.note)});
  }
}

std::ofstream open_output(const std::filesystem::path& dir, const std::string& name) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::kIoError, "cannot create " + dir.string() + ": " + ec.message());
  std::ofstream out(dir / name);
  if (!out) throw Error(ErrorCode::kIoError, "cannot write " + (dir / name).string());
  return out;
}

void emit_csv(RunReport& r, const RunOptions& opt, const std::string& name, const Trajectoryd& traj) {
  if (!opt.out_dir) return;
  auto out = open_output(*opt.out_dir, name);
  write_trajectory_csv(out, traj);
  if (!out) throw Error(ErrorCode::kIoError, "failed writing " + name);
  r.artifacts.push_back(name);
}

void add_run_summary(Section& s, const Scenariod& sc, const Trajectoryd& traj,
                     const std::optional<PolicyCoefficientsd>& tail) {
  const auto payoff = discounted_payoff_per_player(traj, sc, tail);
  s.field("horizon", traj.horizon())
      .field("final mass", traj.masses(traj.points() - 1))
      .field("admissible", yes_no(traj.admissible));
  if (traj.first_violation_time) {
    s.field("first violation time", *traj.first_violation_time)
        .field("violation node", std::to_string(*traj.violation_node + 1));
  }
  for (std::size_t a = 0; a < sc.pattern.active().size(); ++a) {
    s.field("payoff node " + std::to_string(sc.pattern.active()[a] + 1),
            payoff(static_cast<Eigen::Index>(a)));
  }
  s.field("payoff total", payoff.sum())
      .field("tail correction", std::string(tail ? "yes" : "no"))
      .field("steps accepted", static_cast<double>(traj.stats.accepted))
      .field("steps rejected", static_cast<double>(traj.stats.rejected));
}

void run_simulate(RunReport& r, const ScenarioConfig& cfg, const RunOptions& opt) {
  const auto& sc = cfg.scenario;
  const auto pol = policies_of(sc);
  const auto& pc = opt.regime == Regime::kPlanner ? pol.planner : pol.game;
  if (!opt.theta && !pc) {
    throw Error(ErrorCode::kNoninteriorPolicy,
                std::string(to_string(opt.regime)) + " policy is not interior; pass --theta");
  }
  const double theta = opt.theta ? *opt.theta : pc->theta;
  const auto traj = integrate_closed_loop(sc, theta, cfg.sim);
  const double extraction = static_cast<double>(sc.active_count()) * theta;
  auto& s = r.add("simulate", "Closed-loop simulation");
  s.field("regime", std::string(opt.theta ? "fixed theta" : to_string(opt.regime)))
      .field("theta", theta)
      .field("limit mass", sc.growth.inverse_phi(extraction));
  add_run_summary(s, sc, traj, opt.theta ? std::nullopt : pc);
  if (!opt.theta) s.field("value at x0", pc->value(sc.growth, sc.initial_mass()));
  emit_csv(r, opt, "trajectory.csv", traj);
}

void run_compare(RunReport& r, const ScenarioConfig& cfg, const RunOptions& opt) {
  const auto& sc = cfg.scenario;
  const auto pol = policies_of(sc);
  if (!pol.planner || !pol.game) {
    throw Error(ErrorCode::kNoninteriorPolicy, "compare needs interior planner and game policies");
  }
  const auto ss = steady_masses(sc.growth, sc.active_count(), sc.rho);
  const double fs = static_cast<double>(sc.active_count());
  auto& t = r.add("compare", "Planner against game");
  t.columns = {"f", "theta_star", "theta_hat", "f_theta_star", "f_theta_hat", "delta_f", "m_star", "m_hat"};
  t.row({std::to_string(sc.active_count()), pol.planner->theta, pol.game->theta, fs * pol.planner->theta,
         fs * pol.game->theta, ss.delta_f, ss.m_star, ss.m_hat});
  for (const auto& [name, pc] : {std::pair{"planner", &pol.planner}, std::pair{"game", &pol.game}}) {
    const auto traj = integrate_closed_loop(sc, (*pc)->theta, cfg.sim);
    auto& s = r.add(std::string(name), std::string(name == std::string("planner") ? "Planner" : "Game") +
                                           " trajectory from x0");
    add_run_summary(s, sc, traj, **pc);
    emit_csv(r, opt, std::string(name) + ".csv", traj);
  }
}

GrowthModeld with_parameter(const GrowthModeld& g, SweepParameter p, double v) {
  const auto fam = g.family();
  switch (fam) {
    case Family::kLogistic:
      return GrowthModeld::logistic(p == SweepParameter::kGamma ? v : g.growth_rate(),
                                    p == SweepParameter::kK ? v : g.capacity(),
                                    p == SweepParameter::kSigma ? v : g.sigma());
    case Family::kPower:
      return GrowthModeld::power(p == SweepParameter::kSigma ? v : g.sigma(),
                                 p == SweepParameter::kDelta ? v : g.decay());
    case Family::kLogType:
      return GrowthModeld::log_type(p == SweepParameter::kGamma ? v : g.growth_rate(),
                                    p == SweepParameter::kK ? v : g.capacity());
  }
  return g;
}

void check_sweep_applies(const GrowthModeld& g, SweepParameter p) {
  bool ok = true;
  switch (g.family()) {
    case Family::kLogistic: ok = p != SweepParameter::kDelta; break;
    case Family::kPower: ok = p != SweepParameter::kGamma && p != SweepParameter::kK; break;
    case Family::kLogType: ok = p != SweepParameter::kDelta && p != SweepParameter::kSigma; break;
  }
  if (!ok) {
    throw Error(ErrorCode::kInvalidParameter, std::string(to_string(p)) + " is not a parameter of " +
                                                  std::string(to_string(g.family())));
  }
}

void run_sweep(RunReport& r, const ScenarioConfig& cfg, const RunOptions& opt) {
  const auto& sc = cfg.scenario;
  const auto param = cfg.sweep.parameter;
  check_sweep_applies(sc.growth, param);
  const std::vector<std::string> columns{std::string(to_string(param)), "theta_star", "theta_hat",
                                         "f_theta_star", "f_theta_hat", "delta_f", "m_star", "m_hat",
                                         "note"};
  auto& t = r.add("sweep", "Sweep over " + std::string(to_string(param)));
  t.columns = columns;
  for (double v : cfg.sweep.values) {
    std::vector<Cell> row{v};
    try {
      Eigen::Index f = sc.active_count();
      double rho = sc.rho;
      GrowthModeld g = sc.growth;
      if (param == SweepParameter::kF) {
        if (!(v >= 1) || v != std::floor(v)) throw Error(ErrorCode::kInvalidParameter, "f must be a positive integer");
        f = static_cast<Eigen::Index>(v);
      } else if (param == SweepParameter::kRho) {
        if (!(v > 0)) throw Error(ErrorCode::kInvalidParameter, "rho must be positive");
        rho = v;
      } else {
        g = with_parameter(g, param, v);
      }
      const auto planner = planner_policy(g, f, rho);
      const auto game = game_policy(g, f, rho);
      const auto ss = steady_masses(g, f, rho);
      const double fs = static_cast<double>(f);
      row.insert(row.end(), {planner.theta, game.theta, fs * planner.theta, fs * game.theta, ss.delta_f,
                             ss.m_star, ss.m_hat, kNA});
    } catch (const Error& e) {
      row.insert(row.end(), {kNA, kNA, kNA, kNA, kNA, kNA, kNA, e.detail()});
    }
    t.row(std::move(row));
  }
  if (!opt.out_dir) return;
  const std::string name = "sweep_" + std::string(to_string(param)) + ".csv";
  auto out = open_output(*opt.out_dir, name);
  for (std::size_t c = 0; c + 1 < columns.size(); ++c) out << (c ? "," : "") << columns[c];
  out << '\n';
  for (const auto& row : t.rows) {
    for (std::size_t c = 0; c + 1 < row.size(); ++c) {
      out << (c ? "," : "");
      if (const auto* d = std::get_if<double>(&row[c])) {
        out << format_significant(*d, 12);
      } else {
        out << "nan";
      }
    }
    out << '\n';
  }
  r.artifacts.push_back(name);
}

}  // namespace

std::string_view to_string(Command c) {
  switch (c) {
    case Command::kAnalyze: return "analyze";
    case Command::kSimulate: return "simulate";
    case Command::kVerify: return "verify";
    case Command::kCompare: return "compare";
    case Command::kSweep: return "sweep";
  }
  return "?";
}

Command parse_command(const std::string& name) {
  for (auto c : {Command::kAnalyze, Command::kSimulate, Command::kVerify, Command::kCompare, Command::kSweep}) {
    if (name == to_string(c)) return c;
  }
  throw Error(ErrorCode::kInvalidParameter, "unknown subcommand '" + name + "'");
}

RunOutcome run_scenario(Command command, const ScenarioConfig& cfg, const RunOptions& opt) {
  RunOutcome outcome;
  auto& r = outcome.report;
  r.command = std::string(to_string(command));
  r.scenario = cfg.name;
  add_scenario(r, cfg);
  switch (command) {
    case Command::kAnalyze:
      add_analysis(r, cfg);
      break;
    case Command::kVerify: {
      add_analysis(r, cfg);
      const auto suite = run_verification(cfg.scenario, cfg.sim, cfg.verify);
      add_verification(r, suite);
      if (!suite.passed()) outcome.exit_code = kExitVerification;
      break;
    }
    case Command::kSimulate:
      run_simulate(r, cfg, opt);
      break;
    case Command::kCompare:
      run_compare(r, cfg, opt);
      break;
    case Command::kSweep:
      run_sweep(r, cfg, opt);
      break;
  }
  if (opt.out_dir) {
    const std::string name = r.command + (opt.format == ReportFormat::kText ? ".txt" : ".kv");
    r.artifacts.push_back(name);
    auto out = open_output(*opt.out_dir, name);
    write_report(out, r, opt.format);
    if (!out) throw Error(ErrorCode::kIoError, "failed writing " + name);
  }
  return outcome;
}

int exit_code_for(const Error& e) {
  return is_validation_error(e.code()) ? kExitValidation : kExitRuntime;
}

}  // namespace netharvest
