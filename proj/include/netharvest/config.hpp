#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "netharvest/dynamics.hpp"
#include "netharvest/suite.hpp"

namespace netharvest {

enum class SweepParameter { kF, kRho, kGamma, kK, kDelta, kSigma };

std::string_view to_string(SweepParameter p);
SweepParameter parse_sweep_parameter(const std::string& name);

struct SweepSettings {
  SweepParameter parameter = SweepParameter::kF;
  std::vector<double> values{1, 2, 3, 4, 5};
};

/// Everything one YAML scenario file describes. Node labels in the file are
/// 1-based.
struct ScenarioConfig {
  std::string name;
  Scenariod scenario;
  SimConfigd sim;
  VerifySettings verify;
  SweepSettings sweep;
};

/// Parses and validates a scenario document. Syntax and schema problems throw
/// Error(kParseError) naming the line and field; model problems are rethrown
/// with their own code and the field prefixed.
ScenarioConfig parse_config_string(const std::string& text, const std::string& origin = "<string>");
ScenarioConfig parse_config(const std::filesystem::path& path);

}  // namespace netharvest
