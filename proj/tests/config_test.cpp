#include <sstream>

#include <gtest/gtest.h>

#include "netharvest/config.hpp"
#include "netharvest/report.hpp"
#include "netharvest/runner.hpp"

namespace netharvest {
namespace {

const char* kMinimal = R"(
network:
  fick:
    - [0, 1]
    - [1, 0]
active_nodes: [1]
growth:
  family: S3
  Gamma: 1
  K: 2
rho: 0.05
initial_stock: [1, 1]
)";

Error parse_error(const std::string& text) {
  try {
    parse_config_string(text, "test.yaml");
  } catch (const Error& e) {
    return e;
  }
  ADD_FAILURE() << "parse succeeded";
  return Error(ErrorCode::kIoError, "none");
}

TEST(ConfigTest, MinimalDefaults) {
  const auto cfg = parse_config_string(kMinimal);
  EXPECT_EQ(cfg.scenario.size(), 2);
  EXPECT_EQ(cfg.scenario.active_count(), 1);
  EXPECT_EQ(cfg.scenario.pattern.active().front(), 0);
  EXPECT_EQ(cfg.sim.horizon, 100.0);
  EXPECT_EQ(cfg.sim.rel_tol, 1e-9);
  EXPECT_EQ(cfg.verify.seed, 7u);
  EXPECT_EQ(cfg.scenario.growth.family(), Family::kLogType);
  EXPECT_EQ(cfg.name, "scenario");
}

TEST(ConfigTest, PairingRuleIsValidationError) {
  const std::string text = R"(
network:
  weights: [[0, 1], [1, 0]]
active_nodes: [1]
growth: {family: S1, Gamma: 1, K: 10, sigma: 0.5}
rho: 0.05
initial_stock: [1, 1]
)";
  const auto e = parse_error(text);
  EXPECT_EQ(e.code(), ErrorCode::kInvalidParameter);
  EXPECT_TRUE(is_validation_error(e.code()));
  EXPECT_NE(std::string(e.what()).find("growth"), std::string::npos) << e.what();
  EXPECT_NE(std::string(e.what()).find("sigma"), std::string::npos) << e.what();
}

TEST(ConfigTest, DisconnectedNetworkNamesNode) {
  const std::string text = R"(
network:
  weights:
    - [0, 1, 0]
    - [1, 0, 0]
    - [1, 1, 0]
active_nodes: [1]
growth: {family: S3, Gamma: 1, K: 2}
rho: 0.05
initial_stock: [1, 1, 1]
)";
  const auto e = parse_error(text);
  EXPECT_EQ(e.code(), ErrorCode::kNotStronglyConnected);
  EXPECT_NE(std::string(e.what()).find("node 3"), std::string::npos) << e.what();
  EXPECT_NE(std::string(e.what()).find("test.yaml:4"), std::string::npos) << e.what();
}

TEST(ConfigTest, ParseErrorsCarryLineAndField) {
  std::string text = kMinimal;
  text += "sim:\n  horizon: ten\n";
  auto e = parse_error(text);
  EXPECT_EQ(e.code(), ErrorCode::kParseError);
  EXPECT_NE(std::string(e.what()).find("sim.horizon"), std::string::npos) << e.what();
  ASSERT_TRUE(e.index().has_value());
  EXPECT_EQ(*e.index(), 14);

  e = parse_error(std::string(kMinimal) + "colour: blue\n");
  EXPECT_NE(std::string(e.what()).find("unknown key"), std::string::npos);
  EXPECT_EQ(*e.index(), 13);

  e = parse_error("network: [unclosed\n");
  EXPECT_EQ(e.code(), ErrorCode::kParseError);

  e = parse_error("rho: 0.05\n");
  EXPECT_NE(std::string(e.what()).find("network"), std::string::npos);
}

TEST(ConfigTest, ActiveNodeRangeChecked) {
  std::string text = kMinimal;
  text.replace(text.find("[1]\n"), 3, "[3]");
  const auto e = parse_error(text);
  EXPECT_EQ(e.code(), ErrorCode::kParseError);
  EXPECT_NE(std::string(e.what()).find("active_nodes[1]"), std::string::npos) << e.what();
}

TEST(ConfigTest, StockLengthChecked) {
  std::string text = kMinimal;
  text.replace(text.find("[1, 1]\n"), 6, "[1, 1, 1]");
  EXPECT_EQ(parse_error(text).code(), ErrorCode::kParseError);
}

TEST(ConfigTest, ForeignGrowthParameterRejected) {
  std::string text = kMinimal;
  text.replace(text.find("  K: 2"), 6, "  K: 2\n  delta: 0.1");
  const auto e = parse_error(text);
  EXPECT_NE(std::string(e.what()).find("growth.delta"), std::string::npos) << e.what();
}

TEST(ReportTest, KeyValueSortedAndTextFixedWidth) {
  RunReport r;
  r.command = "analyze";
  r.scenario = "demo";
  r.add("zeta", "Z").field("b", 1.0 / 3.0).field("a", 2.0);
  auto& t = r.add("table", "T");
  t.columns = {"id", "value"};
  t.row({std::string("x"), 123456789.0});
  r.add("empty", "Never shown");

  std::ostringstream kv;
  write_keyvalue(kv, r);
  EXPECT_EQ(kv.str(),
            "command=analyze\n"
            "scenario=demo\n"
            "table.x.value=123456789\n"
            "zeta.a=2\n"
            "zeta.b=0.333333333333\n");

  std::ostringstream text;
  write_text(text, r);
  const auto s = text.str();
  EXPECT_NE(s.find("0.333333\n"), std::string::npos) << s;
  EXPECT_NE(s.find("1.23457e+08"), std::string::npos) << s;
  EXPECT_EQ(s.find("Never shown"), std::string::npos);
}

TEST(ReportTest, FormatsSpecialValues) {
  EXPECT_EQ(format_significant(-0.0, 6), "0");
  EXPECT_EQ(format_significant(std::numeric_limits<double>::infinity(), 6), "inf");
  EXPECT_EQ(format_significant(0.1234567, 6), "0.123457");
}

TEST(RunnerTest, AnalyzeOmitsVerification) {
  const auto cfg = parse_config_string(kMinimal);
  const auto out = run_scenario(Command::kAnalyze, cfg, RunOptions{});
  std::ostringstream os;
  write_text(os, out.report);
  EXPECT_EQ(os.str().find("Verification"), std::string::npos);
  EXPECT_EQ(out.exit_code, kExitOk);
}

TEST(RunnerTest, CompareReferenceRow) {
  const std::string text = R"(
network:
  weights: [[0, 0.6, 0.4], [0.8, 0, 0.2], [0.5, 0.7, 0]]
active_nodes: [1, 2]
growth: {family: S1, Gamma: 1, K: 10, sigma: 2}
rho: 0.05
initial_stock: [0.4, 0.3, 0.3]
)";
  const auto out = run_scenario(Command::kCompare, parse_config_string(text), RunOptions{});
  std::ostringstream os;
  write_keyvalue(os, out.report);
  const auto s = os.str();
  for (const char* want : {"compare.2.theta_star=0.2625\n", "compare.2.theta_hat=0.35\n",
                           "compare.2.delta_f=0.175\n", "compare.2.m_star=4.75\n", "compare.2.m_hat=3\n"}) {
    EXPECT_NE(s.find(want), std::string::npos) << want << "\n" << s;
  }
}

TEST(RunnerTest, SweepOverFMatchesClosedForm) {
  auto cfg = parse_config_string(kMinimal);
  cfg.sweep.parameter = SweepParameter::kF;
  cfg.sweep.values = {1, 2, 3, 4, 5};
  const auto out = run_scenario(Command::kSweep, cfg, RunOptions{});
  const auto& sec = out.report.sections.back();
  ASSERT_EQ(sec.rows.size(), 5u);
  for (const auto& row : sec.rows) {
    const double f = std::get<double>(row[0]);
    const double delta = std::get<double>(row[5]);
    EXPECT_NEAR(delta, (f - 1) * (0.05 + 1.0 / 2.0), 1e-12);
  }
}

TEST(RunnerTest, SweepRejectsForeignParameter) {
  auto cfg = parse_config_string(kMinimal);
  cfg.sweep.parameter = SweepParameter::kDelta;
  EXPECT_THROW(run_scenario(Command::kSweep, cfg, RunOptions{}), Error);
}

TEST(RunnerTest, ExitCodes) {
  EXPECT_EQ(exit_code_for(Error(ErrorCode::kParseError, "x")), kExitValidation);
  EXPECT_EQ(exit_code_for(Error(ErrorCode::kNotStronglyConnected, "x")), kExitValidation);
  EXPECT_EQ(exit_code_for(Error(ErrorCode::kStepSizeUnderflow, "x")), kExitRuntime);
  EXPECT_THROW(parse_command("plot"), Error);
}

}  // namespace
}  // namespace netharvest
