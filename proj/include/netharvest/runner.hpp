#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include "netharvest/config.hpp"
#include "netharvest/report.hpp"

namespace netharvest {

enum class Command { kAnalyze, kSimulate, kVerify, kCompare, kSweep };

std::string_view to_string(Command c);
Command parse_command(const std::string& name);

struct RunOptions {
  std::optional<std::filesystem::path> out_dir;  // CSVs and the report file go here
  Regime regime = Regime::kPlanner;
  std::optional<double> theta;  // overrides the regime's rate in simulate
  ReportFormat format = ReportFormat::kText;
};

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 2;
inline constexpr int kExitVerification = 3;
inline constexpr int kExitRuntime = 4;

struct RunOutcome {
  RunReport report;
  int exit_code = kExitOk;
};

/// Builds the report for one subcommand and writes its CSVs (when an output
/// directory is set).
RunOutcome run_scenario(Command command, const ScenarioConfig& config, const RunOptions& options);

/// Maps an error to the CLI exit code.
int exit_code_for(const Error& e);

}  // namespace netharvest
