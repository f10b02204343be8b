#pragma once

// Linear inverted pendulum (LIP) with ZMP-velocity input and an additive
// CoM-acceleration disturbance:
//
//   x_c'' = eta^2 (x_c - x_z) + d(t),   x_z' = u
//
// Every propagation here is the exact flow for a constant ZMP velocity and a
// disturbance that is affine over the step. The flow is computed through the
// divergent/convergent split x_u = x_c + x_c'/eta, x_s = x_c - x_c'/eta,
// each of which obeys a scalar linear ODE.

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>

namespace ismpc {

template <typename Scalar>
class LipParams {
 public:
  LipParams() : LipParams(Scalar(9.81), Scalar(0.33)) {}

  LipParams(Scalar gravity, Scalar com_height) : gravity_(gravity), com_height_(com_height) {
    if (!(gravity > Scalar(0)) || !(com_height > Scalar(0)) || !std::isfinite(gravity) ||
        !std::isfinite(com_height))
      throw std::invalid_argument("LipParams: gravity and CoM height must be positive and finite");
  }

  Scalar gravity() const { return gravity_; }
  Scalar comHeight() const { return com_height_; }
  Scalar eta() const { return std::sqrt(gravity_ / com_height_); }
  Scalar eta2() const { return gravity_ / com_height_; }

 private:
  Scalar gravity_;
  Scalar com_height_;
};

/// Per-axis LIP state.
template <typename Scalar>
struct AxisState {
  Scalar com_pos = Scalar(0);
  Scalar com_vel = Scalar(0);
  Scalar zmp_pos = Scalar(0);

  Eigen::Matrix<Scalar, 3, 1> vector() const { return {com_pos, com_vel, zmp_pos}; }
  static AxisState fromVector(const Eigen::Matrix<Scalar, 3, 1>& v) { return {v(0), v(1), v(2)}; }
  bool isFinite() const {
    return std::isfinite(com_pos) && std::isfinite(com_vel) && std::isfinite(zmp_pos);
  }
};

template <typename Scalar>
struct DecomposedState {
  Scalar unstable = Scalar(0);  // divergent component of motion
  Scalar stable = Scalar(0);
};

/// d(t0 + s) = value + slope * s over one step.
template <typename Scalar>
struct AffineDisturbance {
  Scalar value = Scalar(0);
  Scalar slope = Scalar(0);
};

template <typename Scalar>
DecomposedState<Scalar> decompose(const AxisState<Scalar>& state, const LipParams<Scalar>& params) {
  const Scalar eta = params.eta();
  return {state.com_pos + state.com_vel / eta, state.com_pos - state.com_vel / eta};
}

template <typename Scalar>
AxisState<Scalar> recompose(const DecomposedState<Scalar>& dec, Scalar zmp,
                            const LipParams<Scalar>& params) {
  const Scalar eta = params.eta();
  return {(dec.unstable + dec.stable) / Scalar(2), eta * (dec.unstable - dec.stable) / Scalar(2),
          zmp};
}

namespace detail {

// (e^x - 1) / x and (e^x - 1 - x) / x^2, accurate near x = 0.
template <typename Scalar>
Scalar expm1Ratio(Scalar x) {
  if (std::abs(x) < Scalar(1e-5)) return Scalar(1) + x / Scalar(2) + x * x / Scalar(6);
  return std::expm1(x) / x;
}

template <typename Scalar>
Scalar expm1Ratio2(Scalar x) {
  if (std::abs(x) < Scalar(1e-3))
    return Scalar(0.5) + x / Scalar(6) + x * x / Scalar(24) + x * x * x / Scalar(120);
  return (std::expm1(x) - x) / (x * x);
}

// Exact solution at t of  x' = lambda (x - z0 - v s) + f0 + f1 s,  x(0) = x0.
template <typename Scalar>
Scalar scalarAffineFlow(Scalar lambda, Scalar x0, Scalar z0, Scalar v, Scalar f0, Scalar f1,
                        Scalar t) {
  const Scalar lt = lambda * t;
  const Scalar alpha = f0 - lambda * z0;
  const Scalar beta = f1 - lambda * v;
  return std::exp(lt) * x0 + t * expm1Ratio(lt) * alpha + t * t * expm1Ratio2(lt) * beta;
}

}  // namespace detail

/// Divergent component after dt under  x_u' = eta (x_u - x_z) + d / eta.
template <typename Scalar>
Scalar unstableFlow(Scalar unstable, Scalar zmp, Scalar zmp_vel,
                    const AffineDisturbance<Scalar>& disturbance, Scalar dt,
                    const LipParams<Scalar>& params) {
  const Scalar eta = params.eta();
  return detail::scalarAffineFlow(eta, unstable, zmp, zmp_vel, disturbance.value / eta,
                                  disturbance.slope / eta, dt);
}

template <typename Scalar>
Scalar stableFlow(Scalar stable, Scalar zmp, Scalar zmp_vel,
                  const AffineDisturbance<Scalar>& disturbance, Scalar dt,
                  const LipParams<Scalar>& params) {
  const Scalar eta = params.eta();
  return detail::scalarAffineFlow(-eta, stable, zmp, zmp_vel, -disturbance.value / eta,
                                  -disturbance.slope / eta, dt);
}

template <typename Scalar>
AxisState<Scalar> stepExact(const AxisState<Scalar>& state, Scalar zmp_vel,
                            const AffineDisturbance<Scalar>& disturbance, Scalar dt,
                            const LipParams<Scalar>& params) {
  if (!(dt > Scalar(0))) throw std::invalid_argument("stepExact: dt must be positive");
  const DecomposedState<Scalar> dec = decompose(state, params);
  const DecomposedState<Scalar> next{
      unstableFlow(dec.unstable, state.zmp_pos, zmp_vel, disturbance, dt, params),
      stableFlow(dec.stable, state.zmp_pos, zmp_vel, disturbance, dt, params)};
  return recompose(next, state.zmp_pos + zmp_vel * dt, params);
}

/// Discrete-time matrices of the undisturbed model:  s+ = A s + B u  with
/// s = (x_c, x_c', x_z). Uses the cosh/sinh form, independent of stepExact.
template <typename Scalar>
struct LipDiscreteModel {
  Eigen::Matrix<Scalar, 3, 3> A;
  Eigen::Matrix<Scalar, 3, 1> B;

  LipDiscreteModel(const LipParams<Scalar>& params, Scalar dt) {
    const Scalar eta = params.eta();
    const Scalar ch = std::cosh(eta * dt);
    const Scalar sh = std::sinh(eta * dt);
    A << ch, sh / eta, Scalar(1) - ch,  //
        eta * sh, ch, -eta * sh,        //
        Scalar(0), Scalar(0), Scalar(1);
    B << dt - sh / eta, Scalar(1) - ch, dt;
  }

  Eigen::Matrix<Scalar, 3, 1> step(const Eigen::Matrix<Scalar, 3, 1>& s, Scalar u) const {
    return A * s + B * u;
  }
};

using LipParamsd = LipParams<double>;
using AxisStated = AxisState<double>;
using DecomposedStated = DecomposedState<double>;
using AffineDisturbanced = AffineDisturbance<double>;

}  // namespace ismpc
