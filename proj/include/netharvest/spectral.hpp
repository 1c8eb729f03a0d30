#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "netharvest/error.hpp"
#include "netharvest/network.hpp"

namespace netharvest {

template <typename Scalar>
using ComplexVector = std::vector<std::complex<Scalar>>;

/// Spectrum of the migration operator D + B^T and its dominant null vector.
template <typename Scalar>
struct SpectralData {
  ComplexVector<Scalar> eigenvalues;  // descending real part; eigenvalues[0] ~ 0
  VectorX<Scalar> zeta;               // > 0, sums to 1
  Scalar lambda2_real;
  Scalar spectral_gap;                // |Re lambda_2|
};

/// Extraction-shifted operator M_theta = D + B^T - theta E + f theta I.
template <typename Scalar>
struct ShiftedSpectralData {
  Scalar theta;
  MatrixX<Scalar> matrix;
  VectorX<Scalar> zeta_theta;  // null vector, sums to 1
  ComplexVector<Scalar> eigenvalues;
  bool metzler;
  bool positive;
};

template <typename Scalar>
struct ThetaLimits {
  Scalar theta1;
  Scalar theta2;        // +inf when positivity survives up to `scan_cap`
  Scalar scan_cap;
};

template <typename Scalar>
struct SpectralShiftReport {
  Scalar theta;
  Scalar max_deviation;
  Scalar tolerance;
  bool pass;
};

namespace spectral_tol {
inline constexpr double kZeroEigenvalue = 1e-9;
inline constexpr double kClampNegative = 1e-9;
inline constexpr double kMetzler = 1e-12;
inline constexpr double kTheta2Bisection = 1e-8;
inline constexpr double kShiftIdentity = 1e-8;
inline constexpr double kRank = 1e-10;
}  // namespace spectral_tol

namespace detail {

template <typename Scalar>
void sort_by_real_part(ComplexVector<Scalar>& values) {
  // Descending real part; equal real parts (conjugate pairs) ordered by
  // descending imaginary part.
  std::sort(values.begin(), values.end(),
            [](const std::complex<Scalar>& a, const std::complex<Scalar>& b) {
              if (a.real() != b.real()) return a.real() > b.real();
              return a.imag() > b.imag();
            });
}

template <typename Scalar>
ComplexVector<Scalar> eigenvalues_of(const MatrixX<Scalar>& m) {
  Eigen::EigenSolver<MatrixX<Scalar>> solver(m, /*computeEigenvectors=*/false);
  const auto& ev = solver.eigenvalues();
  ComplexVector<Scalar> out(ev.data(), ev.data() + ev.size());
  sort_by_real_part(out);
  return out;
}

// Null vector of `m` normalized by <e, z> = 1, from the bordered system
// [m; e^T] z = [0; 1]. That system has full column rank iff the null space of
// m is one-dimensional and not orthogonal to e.
template <typename Scalar>
VectorX<Scalar> normalized_null_vector(const MatrixX<Scalar>& m) {
  const Eigen::Index n = m.rows();
  MatrixX<Scalar> bordered(n + 1, n);
  bordered.topRows(n) = m;
  bordered.row(n).setOnes();
  VectorX<Scalar> rhs = VectorX<Scalar>::Zero(n + 1);
  rhs(n) = Scalar(1);
  Eigen::ColPivHouseholderQR<MatrixX<Scalar>> qr(bordered);
  qr.setThreshold(Scalar(spectral_tol::kRank));
  if (qr.rank() < n) {
    throw Error(ErrorCode::kNullSpaceDimensionNot1,
                "null space of the operator is not one-dimensional");
  }
  return qr.solve(rhs);
}

// Clamp entries in (-kClampNegative, 0) to zero and renormalize. Returns the
// smallest entry seen before clamping.
template <typename Scalar>
Scalar clamp_and_renormalize(VectorX<Scalar>& z) {
  const Scalar smallest = z.minCoeff();
  if (smallest < Scalar(0) && smallest > -Scalar(spectral_tol::kClampNegative)) {
    z = z.cwiseMax(Scalar(0));
    z /= z.sum();
  }
  return smallest;
}

template <typename Scalar>
Scalar inflow_threshold_from_operator(const MatrixX<Scalar>& op,
                                      const ExtractionPattern& pat) {
  Scalar best = std::numeric_limits<Scalar>::infinity();
  for (auto i : pat.active()) {
    for (Eigen::Index j = 0; j < op.cols(); ++j) {
      if (j != i) best = std::min(best, op(i, j));  // op(i, j) = b_ji
    }
  }
  return best;
}

template <typename Scalar>
MatrixX<Scalar> shift(const MatrixX<Scalar>& op, const ExtractionPattern& pat,
                      Scalar theta) {
  const Scalar f = static_cast<Scalar>(pat.count());
  MatrixX<Scalar> m = op - theta * pat.e_matrix<Scalar>();
  m.diagonal().array() += f * theta;
  return m;
}

}  // namespace detail

template <typename Scalar>
SpectralData<Scalar> eigen_decompose(const MigrationOperator<Scalar>& op) {
  using std::abs;
  const auto& m = op.matrix;
  const Scalar tol = Scalar(spectral_tol::kZeroEigenvalue) *
                     std::max(Scalar(1), m.cwiseAbs().rowwise().sum().maxCoeff());

  SpectralData<Scalar> out;
  out.eigenvalues = detail::eigenvalues_of(m);

  auto nearness = [](const std::complex<Scalar>& z) {
    return abs(z.real()) + abs(z.imag());
  };
  std::size_t zero_at = 0;
  for (std::size_t k = 1; k < out.eigenvalues.size(); ++k) {
    if (nearness(out.eigenvalues[k]) < nearness(out.eigenvalues[zero_at])) zero_at = k;
  }
  if (nearness(out.eigenvalues[zero_at]) > tol) {
    throw Error(ErrorCode::kDominantEigenvalueNotZero, "no eigenvalue within tolerance of 0");
  }
  for (std::size_t k = 0; k < out.eigenvalues.size(); ++k) {
    if (k == zero_at) continue;
    if (nearness(out.eigenvalues[k]) <= tol) {
      throw Error(ErrorCode::kDominantEigenvalueNotZero, "eigenvalue 0 is not simple");
    }
    if (out.eigenvalues[k].real() >= -tol) {
      throw Error(ErrorCode::kDominantEigenvalueNotZero,
                  "an eigenvalue other than 0 has nonnegative real part");
    }
  }
  // Sorting puts the zero eigenvalue first once all others are left of it.
  std::rotate(out.eigenvalues.begin(), out.eigenvalues.begin() + zero_at,
              out.eigenvalues.begin() + zero_at + 1);

  out.zeta = detail::normalized_null_vector(m);
  detail::clamp_and_renormalize(out.zeta);
  if (!(out.zeta.minCoeff() > Scalar(0))) {
    throw Error(ErrorCode::kDominantVectorNotPositive,
                "dominant vector of the migration operator has a nonpositive entry");
  }
  out.lambda2_real = out.eigenvalues.size() > 1 ? out.eigenvalues[1].real() : Scalar(0);
  out.spectral_gap = abs(out.lambda2_real);
  return out;
}

/// Null vector of M_theta normalized to sum 1, and whether it is positive.
template <typename Scalar>
std::pair<VectorX<Scalar>, bool> shifted_null_vector(const MigrationOperator<Scalar>& op,
                                                     const ExtractionPattern& pat,
                                                     Scalar theta) {
  VectorX<Scalar> z = detail::normalized_null_vector(detail::shift(op.matrix, pat, theta));
  const Scalar smallest = detail::clamp_and_renormalize(z);
  return {std::move(z), smallest > -Scalar(spectral_tol::kClampNegative)};
}

template <typename Scalar>
ShiftedSpectralData<Scalar> shifted_matrix(const MigrationOperator<Scalar>& op,
                                           const ExtractionPattern& pat, Scalar theta) {
  if (!(theta >= Scalar(0))) {
    throw Error(ErrorCode::kInvalidParameter, "theta must be nonnegative");
  }
  if (pat.size() != op.size()) {
    throw Error(ErrorCode::kDimensionMismatch, "pattern and operator sizes differ");
  }
  ShiftedSpectralData<Scalar> out;
  out.theta = theta;
  out.matrix = detail::shift(op.matrix, pat, theta);
  out.eigenvalues = detail::eigenvalues_of(out.matrix);
  auto [z, positive] = shifted_null_vector(op, pat, theta);
  out.zeta_theta = std::move(z);
  out.positive = positive;
  out.metzler = true;
  for (Eigen::Index i = 0; i < out.matrix.rows(); ++i) {
    for (Eigen::Index j = 0; j < out.matrix.cols(); ++j) {
      if (i != j && out.matrix(i, j) < -Scalar(spectral_tol::kMetzler)) out.metzler = false;
    }
  }
  return out;
}

/// theta1 = |Re lambda_2| / f, the largest theta keeping 0 the dominant
/// eigenvalue of M_theta. theta2 = sup{r : zeta_theta > 0 on [0, r]}, found by
/// a geometric scan up to a cap followed by bisection.
template <typename Scalar>
ThetaLimits<Scalar> theta_limits(const MigrationOperator<Scalar>& op,
                                 const ExtractionPattern& pat) {
  const auto spectrum = eigen_decompose(op);
  const Scalar f = static_cast<Scalar>(pat.count());
  ThetaLimits<Scalar> out;
  out.theta1 = spectrum.spectral_gap / f;
  out.scan_cap = Scalar(10) * detail::inflow_threshold_from_operator(op.matrix, pat) +
                 Scalar(10) * out.theta1;
  out.theta2 = std::numeric_limits<Scalar>::infinity();
  if (!(out.scan_cap > Scalar(0))) return out;

  auto positive_at = [&](Scalar theta) {
    try {
      return shifted_null_vector(op, pat, theta).second;
    } catch (const Error&) {
      return false;  // degenerate null space at an eigenvalue crossing
    }
  };

  Scalar lo = Scalar(0);
  Scalar hi = out.scan_cap * Scalar(1e-6);
  bool lost = false;
  while (true) {
    if (!positive_at(hi)) {
      lost = true;
      break;
    }
    if (hi >= out.scan_cap) break;
    lo = hi;
    hi = std::min(out.scan_cap, hi * Scalar(1.5));
  }
  if (!lost) return out;
  while (hi - lo > Scalar(spectral_tol::kTheta2Bisection)) {
    const Scalar mid = Scalar(0.5) * (lo + hi);
    (positive_at(mid) ? lo : hi) = mid;
  }
  out.theta2 = lo;
  return out;
}

/// Checks that the nonzero spectrum of M_theta is the spectrum of D + B^T
/// shifted by f theta. Eigenvalues are matched greedily by nearest distance.
template <typename Scalar>
SpectralShiftReport<Scalar> verify_spectral_shift(
    const MigrationOperator<Scalar>& op, const ExtractionPattern& pat, Scalar theta,
    Scalar tolerance = Scalar(spectral_tol::kShiftIdentity)) {
  const auto base = eigen_decompose(op);
  const auto shifted = detail::eigenvalues_of(detail::shift(op.matrix, pat, theta));
  if (base.eigenvalues.size() != shifted.size()) {
    throw Error(ErrorCode::kMatchingFailed, "eigenvalue counts differ");
  }
  const Scalar f_theta = static_cast<Scalar>(pat.count()) * theta;
  ComplexVector<Scalar> expected;
  expected.reserve(base.eigenvalues.size());
  expected.emplace_back(Scalar(0), Scalar(0));
  for (std::size_t k = 1; k < base.eigenvalues.size(); ++k) {
    expected.push_back(base.eigenvalues[k] + f_theta);
  }
  std::vector<bool> used(shifted.size(), false);
  Scalar worst = Scalar(0);
  for (const auto& want : expected) {
    std::size_t best = shifted.size();
    Scalar best_dist = std::numeric_limits<Scalar>::infinity();
    for (std::size_t k = 0; k < shifted.size(); ++k) {
      if (used[k]) continue;
      const Scalar d = std::abs(shifted[k] - want);
      if (d < best_dist) {
        best_dist = d;
        best = k;
      }
    }
    if (best == shifted.size()) {
      throw Error(ErrorCode::kMatchingFailed, "ran out of eigenvalues to match");
    }
    used[best] = true;
    worst = std::max(worst, best_dist);
  }
  return {theta, worst, tolerance, worst <= tolerance};
}

}  // namespace netharvest
