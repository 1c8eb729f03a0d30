// Acceptance checks: one PASS/FAIL line per criterion. Tolerances are fixed
// here. Usage: acceptance <path-to-netharvest> <reference-config> <scratch-dir>

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>

#include "netharvest/suite.hpp"
#include "netharvest/verify.hpp"
#include "oracles.hpp"

namespace nh = netharvest;

namespace {

constexpr double kMassTol = 1e-6;
constexpr double kMassSeconds = 1.0;
constexpr double kSteadyTol = 1e-10;
constexpr double kReferenceDigits = 1e-12;
constexpr double kZeroEigenvalueTol = 1e-9;
constexpr double kShiftTol = 1e-8;
constexpr double kSpectralSeconds = 5.0;
constexpr double kHjbTol = 1e-10;
constexpr double kPayoffTol = 1e-4;
constexpr double kPayoffSeconds = 2.0;
constexpr double kDeviationTol = 1e-4;
constexpr double kDeviationSeconds = 10.0;
constexpr double kSharesTol = 1e-4;
constexpr double kDecayTarget = 1e-5;
constexpr double kIdentityTol = 1e-4;

struct Outcome {
  bool pass = true;
  std::string detail;
};

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

std::string sci(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

nh::Scenariod three_node(const nh::GrowthModeld& g, std::vector<Eigen::Index> active, double scale = 2.0,
                         double rho = 0.05, Eigen::Vector3d x0 = Eigen::Vector3d(0.4, 0.3, 0.3)) {
  return nh::Scenariod(nh::Networkd::build(scale * oracle::reference_weights()),
                       nh::ExtractionPattern::build(3, std::move(active)), g, rho, x0);
}

const nh::GrowthModeld kS1 = nh::GrowthModeld::logistic(1.0, 10.0, 2.0);
const nh::GrowthModeld kS2 = nh::GrowthModeld::power(0.5, 0.1);
const nh::GrowthModeld kS3 = nh::GrowthModeld::log_type(1.0, 2.0);

// S2 with sigma = 0.5 has an interior game only for f = 1.
std::vector<Eigen::Index> active_for(const nh::GrowthModeld& g) {
  return g.family() == nh::Family::kPower ? std::vector<Eigen::Index>{0} : std::vector<Eigen::Index>{0, 1};
}

Outcome mass_closed_form() {
  Outcome o;
  double worst = 0, slowest = 0;
  for (const auto* g : {&kS1, &kS2, &kS3}) {
    const auto sc = three_node(*g, active_for(*g));
    const auto f = sc.active_count();
    const double thetas[] = {0.0, nh::planner_policy(*g, f, 0.05).theta, nh::game_policy(*g, f, 0.05).theta};
    for (double theta : thetas) {
      Stopwatch clock;
      nh::SimConfigd cfg;
      cfg.horizon = 50;
      const auto traj = nh::integrate_closed_loop(sc, theta, cfg);
      const double gap = nh::mass_closed_form_gap(traj, sc, theta);
      const double secs = clock.seconds();
      worst = std::max(worst, gap);
      slowest = std::max(slowest, secs);
      if (!(gap <= kMassTol) || secs >= kMassSeconds) o.pass = false;
    }
  }
  o.detail = "max rel gap " + sci(worst) + " <= " + sci(kMassTol) + ", slowest case " + sci(slowest) + " s";
  return o;
}

Outcome steady_states() {
  Outcome o;
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double worst = 0;
  int draws = 0;
  for (int d = 0; d < 50; ++d) {
    const double rho = 0.01 + 0.1 * u(rng);
    const nh::GrowthModeld models[] = {
        nh::GrowthModeld::logistic(0.5 + 2 * u(rng), 1 + 20 * u(rng), 1.1 + 2 * u(rng)),
        nh::GrowthModeld::power(0.2 + 0.6 * u(rng), 0.02 + 0.3 * u(rng)),
        nh::GrowthModeld::log_type(0.5 + 2 * u(rng), 0.5 + 4 * u(rng))};
    for (const auto& g : models) {
      ++draws;
      for (Eigen::Index f = 1; f <= 4; ++f) {
        if (g.family() == nh::Family::kPower && !(f * (1 - g.sigma()) < 1)) continue;
        const auto ss = nh::steady_masses(g, f, rho);
        const double fs = static_cast<double>(f);
        worst = std::max(worst, std::abs(g.phi(ss.m_bar)));
        if (!ss.planner_extinct) {
          worst = std::max(worst, std::abs(g.phi(ss.m_star) - fs * nh::planner_policy(g, f, rho).theta));
        }
        if (!ss.game_extinct) {
          worst = std::max(worst, std::abs(g.phi(ss.m_hat) - fs * nh::game_policy(g, f, rho).theta));
        }
        if (f == 1) {
          if (ss.delta_f != 0 || std::abs(ss.m_hat - ss.m_star) > 1e-12 * ss.m_star) o.pass = false;
        } else if (!(ss.delta_f > 0) || !(ss.m_hat < ss.m_star || ss.planner_extinct)) {
          o.pass = false;
        }
      }
    }
  }
  if (!(worst <= kSteadyTol)) o.pass = false;
  o.detail = std::to_string(draws) + " draws, max |phi - f theta| " + sci(worst) + " <= " + sci(kSteadyTol);
  return o;
}

Outcome reference_arithmetic() {
  const auto p = nh::planner_policy(kS1, 2, 0.05);
  const auto q = nh::game_policy(kS1, 2, 0.05);
  const auto ss = nh::steady_masses(kS1, 2, 0.05);
  const std::pair<double, double> pairs[] = {
      {p.theta, 0.2625}, {q.theta, 0.35}, {ss.delta_f, 0.175}, {ss.m_star, 4.75}, {ss.m_hat, 3.0}};
  Outcome o;
  double worst = 0;
  for (const auto& [got, want] : pairs) {
    const double err = std::abs(got - want) / std::max(1.0, std::abs(want));
    worst = std::max(worst, err);
    if (!(err <= kReferenceDigits)) o.pass = false;
  }
  o.detail = "theta*, theta_hat, delta_f, m*, m_hat max error " + sci(worst) + " <= " + sci(kReferenceDigits);
  return o;
}

Outcome spectral_suite() {
  Outcome o;
  Stopwatch clock;
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double worst_shift = 0, worst_zero = 0;
  for (int trial = 0; trial < 50; ++trial) {
    const Eigen::Index n = 2 + trial % 9;
    const auto net = nh::Networkd::build(oracle::random_network(rng, n));
    const auto op = nh::migration_operator(net);
    const auto spectrum = nh::eigen_decompose(op);
    int zeros = 0;
    for (const auto& ev : spectrum.eigenvalues) {
      if (std::abs(ev) <= kZeroEigenvalueTol) {
        ++zeros;
        worst_zero = std::max(worst_zero, std::abs(ev));
      } else if (!(ev.real() < 0)) {
        o.pass = false;
      }
    }
    if (zeros != 1 || !(spectrum.zeta.minCoeff() > 0)) o.pass = false;
    std::vector<Eigen::Index> active{static_cast<Eigen::Index>(trial) % n};
    for (Eigen::Index i = 0; i < n; ++i) {
      if (u(rng) < 0.4) active.push_back(i);
    }
    const auto pat = nh::ExtractionPattern::build(n, active);
    const auto rep = nh::verify_spectral_shift(op, pat, 3.0 * u(rng), kShiftTol);
    worst_shift = std::max(worst_shift, rep.max_deviation);
    if (!rep.pass) o.pass = false;
  }
  const double secs = clock.seconds();
  if (secs >= kSpectralSeconds) o.pass = false;
  o.detail = "50 networks, |lambda_1| max " + sci(worst_zero) + ", shift identity max " + sci(worst_shift) +
             " <= " + sci(kShiftTol) + ", " + sci(secs) + " s";
  return o;
}

Outcome hjb_residuals() {
  Outcome o;
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double worst = 0;
  for (int seed = 0; seed < 20; ++seed) {
    const double rho = 0.01 + 0.1 * u(rng);
    const nh::GrowthModeld models[] = {
        nh::GrowthModeld::logistic(0.5 + 2 * u(rng), 1 + 20 * u(rng), 1.1 + 2 * u(rng)),
        nh::GrowthModeld::power(0.2 + 0.6 * u(rng), 0.02 + 0.3 * u(rng)),
        nh::GrowthModeld::log_type(0.5 + 2 * u(rng), 0.5 + 4 * u(rng))};
    for (const auto& g : models) {
      const double m_bar = g.inverse_phi(0.0);
      const auto grid = nh::log_grid(m_bar / 100, 100 * m_bar, 41);
      for (Eigen::Index f = 1; f <= 3; ++f) {
        const auto r = nh::hjb_residual_planner(g, f, rho, nh::planner_policy(g, f, rho), grid, kHjbTol);
        worst = std::max(worst, r.max_rel_residual);
        if (!r.pass) o.pass = false;
        if (g.family() == nh::Family::kPower && !(f * (1 - g.sigma()) < 1)) continue;
        const auto s = nh::hjb_residual_player(g, f, rho, nh::game_policy(g, f, rho), grid, kHjbTol);
        worst = std::max(worst, s.max_rel_residual);
        if (!s.pass) o.pass = false;
      }
    }
  }
  const auto grid = nh::log_grid(std::exp(2.0) / 100, 100 * std::exp(2.0), 41);
  const auto arb = nh::arbitrate_log_game_intercept(kS3, 2, 0.05, grid, kHjbTol);
  if (!arb.derived.pass || arb.alternate.pass) o.pass = false;
  o.detail = "max rel residual " + sci(worst) + " <= " + sci(kHjbTol) + "; log-type game intercept: derived " +
             sci(arb.derived.max_rel_residual) + " passes, alternate " + sci(arb.alternate.max_rel_residual) +
             " fails";
  return o;
}

Outcome value_equals_payoff() {
  Stopwatch clock;
  const auto sc = three_node(kS1, {0, 1}, 2.0, 0.05, Eigen::Vector3d(0.4, 0.3, 0.3));
  const auto pc = nh::planner_policy(kS1, 2, 0.05);
  const auto traj = nh::integrate_closed_loop(sc, pc.theta, nh::SimConfigd{});
  const double j = nh::discounted_payoff(traj, sc, std::optional{pc});
  const double v = pc.value(kS1, 1.0);
  const double secs = clock.seconds();
  const double rel = std::abs(j - v) / std::abs(v);
  Outcome o;
  o.pass = rel <= kPayoffTol && secs < kPayoffSeconds && std::abs(v + 43.5374) < 1e-4;
  char buf[160];
  std::snprintf(buf, sizeof buf, "payoff %.6f vs A u(m0) + B = %.6f, rel %s <= %s, %s s", j, v, sci(rel).c_str(),
                sci(kPayoffTol).c_str(), sci(secs).c_str());
  o.detail = buf;
  return o;
}

Outcome equilibrium_deviation() {
  Stopwatch clock;
  const auto sc = three_node(kS1, {0, 1});
  const std::vector<double> mult{0.5, 0.9, 1.1, 1.5};
  const auto r = nh::deviation_test(sc, mult, nh::SimConfigd{}, kDeviationTol);
  const double secs = clock.seconds();
  Outcome o;
  o.pass = r.pass && secs < kDeviationSeconds;
  o.detail = "theta_hat " + sci(r.theta_hat) + " < threshold 0.5, max relative gain " + sci(r.max_relative_gain) +
             " <= " + sci(kDeviationTol) + ", " + sci(secs) + " s";
  return o;
}

Outcome long_run_shares() {
  Outcome o;
  double worst_shares = 0, worst_state = 0;
  for (const auto* g : {&kS1, &kS2, &kS3}) {
    const auto sc = three_node(*g, active_for(*g), 2.0, 0.05, Eigen::Vector3d(0.7, 0.2, 0.1));
    const auto f = sc.active_count();
    const double theta = nh::planner_policy(*g, f, 0.05).theta;
    const auto limits = nh::theta_limits(sc.migration, sc.pattern);
    if (!(theta < std::min(limits.theta1, limits.theta2))) {
      o.pass = false;
      continue;
    }
    const auto spectrum = nh::eigen_decompose(sc.migration);
    const double rate = spectrum.spectral_gap - static_cast<double>(f) * theta;
    nh::SimConfigd cfg;
    cfg.horizon = 1.01 * std::log(1 / kDecayTarget) / rate;
    const auto traj = nh::integrate_share_dynamics(sc, theta, cfg);
    const auto target = nh::shifted_null_vector(sc.migration, sc.pattern, theta).first;
    const Eigen::VectorXd y = traj.shares.row(traj.points() - 1).transpose();
    worst_shares = std::max(worst_shares, (y - target).norm());

    nh::SimConfigd free_cfg;
    free_cfg.horizon = nh::relaxation_horizon(sc, 0.0, 1e-8);
    const auto free = nh::integrate_closed_loop(sc, 0.0, free_cfg);
    const Eigen::VectorXd x = free.states.row(free.points() - 1).transpose();
    worst_state = std::max(worst_state, (x - g->inverse_phi(0.0) * spectrum.zeta).norm());
  }
  if (!(worst_shares <= kSharesTol) || !(worst_state <= kSharesTol)) o.pass = false;
  o.detail = "|Y(T) - zeta_theta| " + sci(worst_shares) + ", unharvested |X(T) - m_bar zeta| " + sci(worst_state) +
             " <= " + sci(kSharesTol);
  return o;
}

Outcome fundamental_identity() {
  Outcome o;
  double worst = 0;
  for (const auto* g : {&kS1, &kS2, &kS3}) {
    const auto sc = three_node(*g, {0, 1});
    const auto pc = nh::planner_policy(*g, 2, 0.05);
    const double thr = nh::inflow_threshold(sc.network, sc.pattern);
    for (double theta : {pc.theta, 0.5 * pc.theta, 0.5 * (pc.theta + thr)}) {
      const auto traj = nh::integrate_closed_loop(sc, theta, nh::SimConfigd{});
      if (!traj.admissible) o.pass = false;
      worst = std::max(worst, nh::fundamental_identity_gap(traj, sc, pc));
    }
    if (g->family() != nh::Family::kPower) {
      const auto game = nh::game_policy(*g, 2, 0.05);
      nh::AffineFeedback<double> law{Eigen::Vector3d(0.6 * game.theta, 1.2 * game.theta, 0.0)};
      const auto traj = nh::integrate_feedback(sc, law, nh::SimConfigd{});
      if (!traj.admissible) o.pass = false;
      worst = std::max(worst, nh::fundamental_identity_gap(traj, sc, game));
    }
  }
  if (!(worst <= kIdentityTol)) o.pass = false;
  o.detail = "optimal and suboptimal affine feedbacks, max gap " + sci(worst) + " <= " + sci(kIdentityTol);
  return o;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

Outcome determinism(const std::string& cli, const std::string& config, const std::filesystem::path& scratch) {
  Outcome o;
  if (cli.empty()) {
    o.pass = false;
    o.detail = "no CLI path given";
    return o;
  }
  std::filesystem::create_directories(scratch);
  std::string outputs[2];
  std::string files[2];
  for (int run = 0; run < 2; ++run) {
    const auto dir = scratch / ("run" + std::to_string(run));
    std::filesystem::remove_all(dir);
    const auto stdout_path = scratch / ("stdout" + std::to_string(run) + ".txt");
    const std::string cmd = "\"" + cli + "\" verify --config \"" + config + "\" --out \"" + dir.string() +
                            "\" > \"" + stdout_path.string() + "\"";
    const int rc = std::system(cmd.c_str());
    if (rc != 0) o.pass = false;
    outputs[run] = slurp(stdout_path);
    files[run] = slurp(dir / "verify.txt");
  }
  const bool same = !outputs[0].empty() && outputs[0] == outputs[1] && files[0] == files[1];
  if (!same) o.pass = false;
  o.detail = std::string("two verify runs ") + (same ? "byte-identical" : "differ") + " (" +
             std::to_string(outputs[0].size()) + " bytes)";
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  const std::string cli = argc > 1 ? argv[1] : "";
  const std::string config = argc > 2 ? argv[2] : "";
  const std::filesystem::path scratch = argc > 3 ? argv[3] : "acceptance_scratch";

  const std::pair<const char*, std::function<Outcome()>> criteria[] = {
      {"closed-form mass", mass_closed_form},
      {"steady-state identities", steady_states},
      {"reference arithmetic", reference_arithmetic},
      {"spectral suite", spectral_suite},
      {"HJB residuals", hjb_residuals},
      {"value equals payoff", value_equals_payoff},
      {"equilibrium deviation", equilibrium_deviation},
      {"long-run shares", long_run_shares},
      {"fundamental identity", fundamental_identity},
      {"determinism", [&] { return determinism(cli, config, scratch); }},
  };
  int failures = 0;
  int index = 0;
  for (const auto& [name, check] : criteria) {
    ++index;
    Outcome o;
    try {
      o = check();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("threw: ") + e.what();
    }
    if (!o.pass) ++failures;
    std::cout << (o.pass ? "PASS" : "FAIL") << " criterion " << index << " (" << name << "): " << o.detail
              << std::endl;
  }
  return failures == 0 ? 0 : 1;
}
