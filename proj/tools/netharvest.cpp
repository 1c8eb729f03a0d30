// Command-line front end: netharvest <subcommand> --config <file> [options].

#include <iostream>
#include <map>

#include <CLI11.hpp>

#include "netharvest/runner.hpp"

int main(int argc, char** argv) {
  using namespace netharvest;

  CLI::App app{"Harvesting on migration networks: analysis, simulation and verification"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  std::string regime = "planner";
  std::string format = "text";
  std::optional<double> theta;
  std::string sweep_param;
  std::vector<double> sweep_values;

  const std::map<std::string, std::string> help{
      {"analyze", "Spectrum, policies, steady states and admissibility"},
      {"simulate", "Integrate one closed loop and write its trajectory CSV"},
      {"verify", "Run every numerical check; exit 3 on failure"},
      {"compare", "Planner against game from the same initial stock"},
      {"sweep", "Policy and steady-state scalars against one parameter"},
  };
  for (const auto& name : {"analyze", "simulate", "verify", "compare", "sweep"}) {
    auto* sub = app.add_subcommand(name, help.at(name));
    sub->add_option("-c,--config", config_path, "Scenario YAML file")->required()->check(CLI::ExistingFile);
    sub->add_option("-o,--out", out_dir, "Directory for the report file and CSVs");
    sub->add_option("--format", format, "Report format")->check(CLI::IsMember({"text", "keyvalue"}));
    if (std::string(name) == "simulate") {
      sub->add_option("--regime", regime, "Which policy drives the simulation")
          ->check(CLI::IsMember({"planner", "game"}));
      sub->add_option("--theta", theta, "Common extraction rate, overriding the regime's")
          ->check(CLI::NonNegativeNumber);
    }
    if (std::string(name) == "sweep") {
      sub->add_option("--param", sweep_param, "f, rho, Gamma, K, delta or sigma");
      sub->add_option("--values", sweep_values, "Values for the swept parameter")->delimiter(',');
    }
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitValidation;
  }

  try {
    const auto command = parse_command(app.get_subcommands().front()->get_name());
    auto config = parse_config(config_path);
    if (!sweep_param.empty()) config.sweep.parameter = parse_sweep_parameter(sweep_param);
    if (!sweep_values.empty()) config.sweep.values = sweep_values;

    RunOptions options;
    if (!out_dir.empty()) options.out_dir = out_dir;
    options.regime = regime == "game" ? Regime::kGame : Regime::kPlanner;
    options.theta = theta;
    options.format = format == "keyvalue" ? ReportFormat::kKeyValue : ReportFormat::kText;

    const auto outcome = run_scenario(command, config, options);
    write_report(std::cout, outcome.report, options.format);
    return outcome.exit_code;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code_for(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
}
