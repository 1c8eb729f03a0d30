#include <random>

#include <gtest/gtest.h>

#include "netharvest/spectral.hpp"
#include "oracles.hpp"

namespace netharvest {
namespace {

MigrationOperatord reference_operator(double scale = 1.0) {
  return migration_operator(Networkd::build(scale * oracle::reference_weights()));
}

// Largest distance from any library eigenvalue to its nearest oracle root.
double spectrum_mismatch(const ComplexVector<double>& got, const std::vector<oracle::Complex>& want) {
  double worst = 0;
  for (const auto& g : got) {
    double best = 1e300;
    for (const auto& w : want) {
      best = std::min(best, static_cast<double>(std::abs(oracle::Complex(g.real(), g.imag()) - w)));
    }
    worst = std::max(worst, best);
  }
  return worst;
}

TEST(SpectralTest, ReferenceEigenvalues) {
  const auto spectrum = eigen_decompose(reference_operator());
  ASSERT_EQ(spectrum.eigenvalues.size(), 3u);
  EXPECT_NEAR(std::abs(spectrum.eigenvalues[0]), 0.0, 1e-12);
  // trace = -1.6 and the remaining pair has modulus^2 = 0.645.
  EXPECT_NEAR(spectrum.eigenvalues[1].real(), -0.8, 1e-12);
  EXPECT_NEAR(spectrum.eigenvalues[2].real(), -0.8, 1e-12);
  EXPECT_NEAR(std::abs(spectrum.eigenvalues[1].imag()), std::sqrt(0.005), 1e-12);
  EXPECT_GT(spectrum.eigenvalues[1].imag(), 0.0);
  EXPECT_NEAR(spectrum.spectral_gap, 0.8, 1e-12);

  const auto doubled = eigen_decompose(reference_operator(2.0));
  EXPECT_NEAR(doubled.spectral_gap, 1.6, 1e-12);
}

TEST(SpectralTest, ZetaMatchesEliminationOracle) {
  const auto op = reference_operator();
  const auto spectrum = eigen_decompose(op);
  const auto want = oracle::null_vector(oracle::migration(oracle::reference_weights()));
  EXPECT_LT((spectrum.zeta - want.cast<double>()).cwiseAbs().maxCoeff(), 1e-14);
  EXPECT_NEAR(spectrum.zeta.sum(), 1.0, 1e-15);
  EXPECT_GT(spectrum.zeta.minCoeff(), 0.0);
}

TEST(SpectralTest, RandomNetworksProperties) {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    const Eigen::Index n = 2 + trial % 9;
    const Eigen::MatrixXd b = oracle::random_network(rng, n);
    const auto op = migration_operator(Networkd::build(b));
    const auto spectrum = eigen_decompose(op);
    const double tol = 1e-9;
    int near_zero = 0;
    for (const auto& ev : spectrum.eigenvalues) {
      if (std::abs(ev) < tol) {
        ++near_zero;
      } else {
        EXPECT_LT(ev.real(), 0.0);
      }
    }
    EXPECT_EQ(near_zero, 1) << "trial " << trial;
    EXPECT_GT(spectrum.zeta.minCoeff(), 0.0);
    EXPECT_LT((op.matrix * spectrum.zeta).cwiseAbs().maxCoeff(), 1e-13);

    const auto roots = oracle::eigenvalues(oracle::migration(b));
    EXPECT_LT(spectrum_mismatch(spectrum.eigenvalues, roots), 1e-7) << "trial " << trial;

    // Shift identity at a random theta and a random extraction pattern.
    std::vector<Eigen::Index> active{0};
    for (Eigen::Index i = 1; i < n; ++i) {
      if (unit(rng) < 0.5) active.push_back(i);
    }
    const auto pat = ExtractionPattern::build(n, active);
    const double theta = 2.0 * unit(rng);
    const auto rep = verify_spectral_shift(op, pat, theta);
    EXPECT_TRUE(rep.pass) << "trial " << trial << " deviation " << rep.max_deviation;
  }
}

TEST(SpectralTest, ShiftedOperatorAnnihilatesOnes) {
  const auto op = reference_operator(2.0);
  const auto pat = ExtractionPattern::build(3, {0, 1});
  const auto s = shifted_matrix(op, pat, 0.3);
  EXPECT_LT(s.matrix.colwise().sum().cwiseAbs().maxCoeff(), 1e-14);
  EXPECT_LT((s.matrix * s.zeta_theta).cwiseAbs().maxCoeff(), 1e-13);
  EXPECT_TRUE(s.positive);
  EXPECT_THROW(shifted_matrix(op, pat, -0.1), Error);
}

TEST(SpectralTest, ThetaLimitsReference) {
  const auto pat = ExtractionPattern::build(3, {0, 1});
  const auto doubled = theta_limits(reference_operator(2.0), pat);
  EXPECT_NEAR(doubled.theta1, 0.8, 1e-12);

  // On the original weights the shifted null vector is no longer positive at 0.35.
  const auto op = reference_operator();
  const auto at = shifted_null_vector(op, pat, 0.35);
  EXPECT_FALSE(at.second);
  const auto limits = theta_limits(op, pat);
  EXPECT_LT(limits.theta2, 0.35);
  EXPECT_TRUE(shifted_null_vector(op, pat, 0.999 * limits.theta2).second);
  EXPECT_FALSE(shifted_null_vector(op, pat, limits.theta2 + 1e-6).second);
}

TEST(SpectralTest, ZeroThetaRecoversZeta) {
  const auto op = reference_operator();
  const auto pat = ExtractionPattern::build(3, {1});
  const auto z0 = shifted_null_vector(op, pat, 0.0).first;
  EXPECT_LT((z0 - eigen_decompose(op).zeta).cwiseAbs().maxCoeff(), 1e-14);
}

}  // namespace
}  // namespace netharvest
