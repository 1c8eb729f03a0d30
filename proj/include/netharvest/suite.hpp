#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "netharvest/dynamics.hpp"
#include "netharvest/verify.hpp"

namespace netharvest {

struct VerifySettings {
  int grid_points = 41;
  double grid_low_factor = 0.01;    // grid spans [low * m_bar, high * m_bar]
  double grid_high_factor = 100.0;
  std::vector<double> multipliers{0.5, 0.9, 1.1, 1.5};
  std::vector<double> cone_radii{0.0, 0.05, 0.1, 0.25, 0.5, 1.0, kSimplexDiameter};
  std::uint64_t seed = 7;
  int boundary_samples = 1000;
  int cone_samples = 16;
  int state_samples = 20;

  double hjb_tol = 1e-10;
  double gradient_tol = 1e-10;
  double finite_difference_tol = 1e-6;
  double steady_state_tol = 1e-10;
  double mass_tol = 1e-6;
  double payoff_tol = 1e-4;
  double identity_tol = 1e-4;
  double deviation_tol = 1e-4;
  double shares_tol = 1e-4;

  void validate() const;
};

enum class CheckStatus { kPass, kFail, kSkip };

std::string_view to_string(CheckStatus s);

struct Check {
  std::string name;
  CheckStatus status = CheckStatus::kSkip;
  double value = 0;
  double tolerance = std::numeric_limits<double>::quiet_NaN();  // NaN: informational
  std::string note;
};

struct VerificationSuite {
  std::vector<Check> checks;
  bool passed() const;
  int count(CheckStatus s) const;
};

/// Every numerical check that applies to the scenario, in a fixed order.
/// Checks whose preconditions fail are recorded as skipped with the reason.
VerificationSuite run_verification(const Scenariod& sc, const SimConfigd& cfg,
                                   const VerifySettings& vs);

/// Horizon T at which e^{-rate T} drops below `target` for the slower of the
/// share and mass relaxations under theta. Infinite when either rate is not
/// positive.
double relaxation_horizon(const Scenariod& sc, double theta, double target);

}  // namespace netharvest
