#include <cmath>

#include <gtest/gtest.h>

#include "netharvest/ode.hpp"

namespace netharvest {
namespace {

TEST(OdeTest, ExponentialDecay) {
  Eigen::VectorXd y0(1);
  y0 << 1.0;
  Eigen::VectorXd last;
  OdeOptions<double> opt;
  const auto stats = integrate_dopri5<double>(
      [](double, const Eigen::VectorXd& y, Eigen::VectorXd& dy) { dy = -y; }, 0.0, 10.0, y0, opt,
      [&](const DenseStep<double>& s) { last = s.y_end; });
  EXPECT_NEAR(last(0), std::exp(-10.0), 1e-12);
  EXPECT_GT(stats.accepted, 0);
}

TEST(OdeTest, DenseOutputOnOscillator) {
  Eigen::VectorXd y0(2);
  y0 << 1.0, 0.0;
  OdeOptions<double> opt;
  opt.rel_tol = 1e-10;
  opt.abs_tol = 1e-13;
  double worst = 0;
  double last_t = 0;
  integrate_dopri5<double>(
      [](double, const Eigen::VectorXd& y, Eigen::VectorXd& dy) {
        dy.resize(2);
        dy << y(1), -y(0);
      },
      0.0, 20.0, y0, opt,
      [&](const DenseStep<double>& s) {
        EXPECT_DOUBLE_EQ(s.t_begin, last_t);
        last_t = s.t_end;
        for (double a : {0.1, 0.37, 0.5, 0.81}) {
          const double t = s.t_begin + a * (s.t_end - s.t_begin);
          const Eigen::VectorXd y = s(t);
          worst = std::max(worst, std::abs(y(0) - std::cos(t)) + std::abs(y(1) + std::sin(t)));
        }
        EXPECT_LT((s(s.t_end) - s.y_end).norm(), 1e-14);
        EXPECT_LT((s(s.t_begin) - s.y_begin).norm(), 1e-14);
      });
  EXPECT_EQ(last_t, 20.0);
  EXPECT_LT(worst, 1e-8);
}

TEST(OdeTest, EmptyIntervalRejected) {
  Eigen::VectorXd y0 = Eigen::VectorXd::Ones(1);
  try {
    integrate_dopri5<double>([](double, const Eigen::VectorXd& y, Eigen::VectorXd& dy) { dy = y; },
                             1.0, 1.0, y0, OdeOptions<double>{}, [](const DenseStep<double>&) {});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kHorizonNonpositive);
  }
}

TEST(OdeTest, BlowUpReportsUnderflow) {
  // y' = y^2 from y(0) = 1 blows up at t = 1.
  Eigen::VectorXd y0 = Eigen::VectorXd::Ones(1);
  try {
    integrate_dopri5<double>(
        [](double, const Eigen::VectorXd& y, Eigen::VectorXd& dy) { dy = y.array().square(); }, 0.0,
        2.0, y0, OdeOptions<double>{}, [](const DenseStep<double>&) {});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kStepSizeUnderflow);
  }
}

TEST(OdeTest, MaxStepHonoured) {
  Eigen::VectorXd y0 = Eigen::VectorXd::Ones(1);
  OdeOptions<double> opt;
  opt.max_step = 0.25;
  integrate_dopri5<double>([](double, const Eigen::VectorXd&, Eigen::VectorXd& dy) { dy.setZero(1); },
                           0.0, 3.0, y0, opt, [&](const DenseStep<double>& s) {
                             EXPECT_LE(s.t_end - s.t_begin, 0.25 * 1.0100001);
                           });
}

}  // namespace
}  // namespace netharvest
