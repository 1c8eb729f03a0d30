#pragma once

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Dense>

#include "netharvest/error.hpp"
#include "netharvest/network.hpp"

namespace netharvest {

template <typename Scalar>
struct OdeOptions {
  Scalar rel_tol = Scalar(1e-9);
  Scalar abs_tol = Scalar(1e-12);
  Scalar max_step = std::numeric_limits<Scalar>::infinity();
  Scalar initial_step = Scalar(0);  // 0: automatic
  long max_steps = 10'000'000;
};

struct OdeStats {
  long accepted = 0;
  long rejected = 0;
  long evaluations = 0;
};

/// One accepted Dormand-Prince step with its 4th-order continuous extension.
template <typename Scalar>
class DenseStep {
 public:
  Scalar t_begin = 0;
  Scalar t_end = 0;
  VectorX<Scalar> y_begin;
  VectorX<Scalar> y_end;

  VectorX<Scalar> operator()(Scalar t) const {
    const Scalar h = t_end - t_begin;
    const Scalar s = (t - t_begin) / h;
    const Scalar s1 = Scalar(1) - s;
    return y_begin + s * (r2_ + s1 * (r3_ + s * (r4_ + s1 * r5_)));
  }

 private:
  template <typename S, typename Rhs, typename Observer>
  friend OdeStats integrate_dopri5(Rhs&&, S, S, VectorX<S>, const OdeOptions<S>&, Observer&&);

  VectorX<Scalar> r2_, r3_, r4_, r5_;
};

namespace detail {

template <typename Scalar>
Scalar scaled_rms(const VectorX<Scalar>& v, const VectorX<Scalar>& y0,
                  const VectorX<Scalar>& y1, const OdeOptions<Scalar>& opt) {
  const auto scale =
      (opt.abs_tol + opt.rel_tol * y0.cwiseAbs().cwiseMax(y1.cwiseAbs()).array());
  return std::sqrt((v.array() / scale).square().mean());
}

}  // namespace detail

/// Integrates y' = rhs(t, y) from t0 to t1 (t1 > t0) with the Dormand-Prince
/// 5(4) pair and PI step-size control. `rhs(t, y, dydt)` writes into dydt.
/// `on_step(const DenseStep&)` sees every accepted step in order; the last
/// step ends exactly at t1.
template <typename Scalar, typename Rhs, typename Observer>
OdeStats integrate_dopri5(Rhs&& rhs, Scalar t0, Scalar t1, VectorX<Scalar> y,
                          const OdeOptions<Scalar>& opt, Observer&& on_step) {
  using std::abs;
  using std::max;
  using std::min;
  using std::pow;
  if (!(t1 > t0)) throw Error(ErrorCode::kHorizonNonpositive, "integration interval is empty");

  // Butcher tableau.
  constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
  constexpr double a21 = 1.0 / 5;
  constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
  constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                   a54 = -212.0 / 729;
  constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                   a64 = 49.0 / 176, a65 = -5103.0 / 18656;
  constexpr double a71 = 35.0 / 384, a73 = 500.0 / 1113, a74 = 125.0 / 192,
                   a75 = -2187.0 / 6784, a76 = 11.0 / 84;
  constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                   e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;
  // Dense output.
  constexpr double d1 = -12715105075.0 / 11282082432, d3 = 87487479700.0 / 32700410799,
                   d4 = -10690763975.0 / 1880347072, d5 = 701980252875.0 / 199316789632,
                   d6 = -1453857185.0 / 822651844, d7 = 69997945.0 / 29380423;
  // PI control.
  constexpr double beta = 0.04, expo = 0.2 - 0.75 * beta, safety = 0.9;
  constexpr double grow_limit = 10.0, shrink_limit = 0.2;

  const Eigen::Index n = y.size();
  OdeStats stats;
  VectorX<Scalar> k1(n), k2(n), k3(n), k4(n), k5(n), k6(n), k7(n), y_new(n), tmp(n);
  auto eval = [&](Scalar t, const VectorX<Scalar>& state, VectorX<Scalar>& out) {
    rhs(t, state, out);
    ++stats.evaluations;
  };

  Scalar t = t0;
  eval(t, y, k1);

  Scalar h = opt.initial_step;
  if (!(h > 0)) {
    const Scalar d0 = detail::scaled_rms(y, y, y, opt);
    const Scalar d1n = detail::scaled_rms(k1, y, y, opt);
    Scalar h0 = (d0 < Scalar(1e-10) || d1n < Scalar(1e-10)) ? Scalar(1e-6) : Scalar(0.01) * d0 / d1n;
    h0 = min({h0, opt.max_step, t1 - t0});
    tmp = y + h0 * k1;
    eval(t + h0, tmp, k2);
    const Scalar d2 = detail::scaled_rms(VectorX<Scalar>(k2 - k1), y, y, opt) / h0;
    const Scalar dmax = max(d1n, d2);
    const Scalar h1 = dmax <= Scalar(1e-15) ? max(Scalar(1e-6), h0 * Scalar(1e-3))
                                            : pow(Scalar(0.01) / dmax, Scalar(0.2));
    h = min({Scalar(100) * h0, h1, opt.max_step});
  }

  Scalar err_old = Scalar(1e-4);
  bool last_rejected = false;
  DenseStep<Scalar> step;
  while (t < t1) {
    if (stats.accepted + stats.rejected >= opt.max_steps) {
      throw Error(ErrorCode::kStepSizeUnderflow, "step budget exhausted");
    }
    const Scalar floor = Scalar(16) * std::numeric_limits<Scalar>::epsilon() * max(abs(t), Scalar(1));
    if (h < floor) throw Error(ErrorCode::kStepSizeUnderflow, "step size fell below resolution");
    bool final_step = false;
    if (t + h >= t1 || t + Scalar(1.01) * h >= t1) {
      h = t1 - t;
      final_step = true;
    }

    tmp = y + h * (a21 * k1);
    eval(t + c2 * h, tmp, k2);
    tmp = y + h * (a31 * k1 + a32 * k2);
    eval(t + c3 * h, tmp, k3);
    tmp = y + h * (a41 * k1 + a42 * k2 + a43 * k3);
    eval(t + c4 * h, tmp, k4);
    tmp = y + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4);
    eval(t + c5 * h, tmp, k5);
    tmp = y + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5);
    eval(t + h, tmp, k6);
    y_new = y + h * (a71 * k1 + a73 * k3 + a74 * k4 + a75 * k5 + a76 * k6);
    eval(t + h, y_new, k7);

    tmp = h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
    const Scalar err = detail::scaled_rms(tmp, y, y_new, opt);
    if (!std::isfinite(static_cast<double>(err))) {
      ++stats.rejected;
      h *= Scalar(0.25);
      last_rejected = true;
      continue;
    }

    const Scalar fac_err = pow(err, Scalar(expo));
    if (err <= Scalar(1)) {
      step.t_begin = t;
      step.t_end = final_step ? t1 : t + h;
      step.y_begin = y;
      step.y_end = y_new;
      step.r2_ = y_new - y;
      step.r3_ = h * k1 - step.r2_;
      step.r4_ = step.r2_ - h * k7 - step.r3_;
      step.r5_ = h * (d1 * k1 + d3 * k3 + d4 * k4 + d5 * k5 + d6 * k6 + d7 * k7);
      ++stats.accepted;
      on_step(static_cast<const DenseStep<Scalar>&>(step));

      t = step.t_end;
      y.swap(y_new);
      k1.swap(k7);  // first-same-as-last

      Scalar fac = fac_err / pow(err_old, Scalar(beta)) / Scalar(safety);
      fac = max(Scalar(1) / Scalar(grow_limit), min(Scalar(1) / Scalar(shrink_limit), fac));
      Scalar h_next = h / fac;
      if (last_rejected) h_next = min(h_next, h);
      h = min(h_next, opt.max_step);
      err_old = max(err, Scalar(1e-4));
      last_rejected = false;
    } else {
      ++stats.rejected;
      h /= min(Scalar(1) / Scalar(shrink_limit), fac_err / Scalar(safety));
      last_rejected = true;
    }
  }
  return stats;
}

}  // namespace netharvest
