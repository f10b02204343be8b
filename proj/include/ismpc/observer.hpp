#pragma once

// Extended-state disturbance observer for one axis.
//
// State x = (x_c, x_c', x_z, d, d'), measured output y = (x_c, x_z), input the
// ZMP velocity. The exosystem d'' = 0 makes piecewise-linear disturbances
// asymptotically reconstructible.
//
//   x_hat' = A x_hat + B u + G (C x_hat - y)

#include "ismpc/lip.hpp"

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

#include <algorithm>
#include <complex>
#include <stdexcept>
#include <vector>

namespace ismpc {

template <typename Scalar>
struct ObserverModel {
  using Matrix5 = Eigen::Matrix<Scalar, 5, 5>;
  Matrix5 A;
  Eigen::Matrix<Scalar, 5, 1> B;
  Eigen::Matrix<Scalar, 2, 5> C;

  explicit ObserverModel(const LipParams<Scalar>& params) {
    const Scalar e2 = params.eta2();
    A.setZero();
    A(0, 1) = Scalar(1);
    A(1, 0) = e2;
    A(1, 2) = -e2;
    A(1, 3) = Scalar(1);
    A(3, 4) = Scalar(1);
    B.setZero();
    B(2) = Scalar(1);
    C.setZero();
    C(0, 0) = Scalar(1);
    C(1, 2) = Scalar(1);
  }

  Eigen::Matrix<Scalar, 10, 5> observabilityMatrix() const {
    Eigen::Matrix<Scalar, 10, 5> O;
    Eigen::Matrix<Scalar, 2, 5> row = C;
    for (int k = 0; k < 5; ++k) {
      O.template block<2, 5>(2 * k, 0) = row;
      row = row * A;
    }
    return O;
  }
};

template <typename Scalar>
struct ObserverGain {
  Eigen::Matrix<Scalar, 5, 2> G = Eigen::Matrix<Scalar, 5, 2>::Zero();
  std::vector<std::complex<Scalar>> poles;
  Scalar max_pole_magnitude = Scalar(0);
};

namespace detail {

// Monic characteristic polynomial coefficients (highest degree first) of a
// conjugate-closed root set.
template <typename Scalar>
std::vector<Scalar> realPolynomial(const std::vector<std::complex<Scalar>>& roots) {
  std::vector<std::complex<Scalar>> c{std::complex<Scalar>(1)};
  for (const auto& r : roots) {
    std::vector<std::complex<Scalar>> next(c.size() + 1, std::complex<Scalar>(0));
    for (std::size_t i = 0; i < c.size(); ++i) {
      next[i] += c[i];
      next[i + 1] -= r * c[i];
    }
    c = std::move(next);
  }
  std::vector<Scalar> out(c.size());
  for (std::size_t i = 0; i < c.size(); ++i) out[i] = c[i].real();
  return out;
}

template <typename Scalar>
void checkConjugateClosed(const std::vector<std::complex<Scalar>>& poles) {
  std::vector<bool> used(poles.size(), false);
  for (std::size_t i = 0; i < poles.size(); ++i) {
    if (used[i]) continue;
    const auto& p = poles[i];
    const Scalar tol = Scalar(1e-9) * std::max(Scalar(1), std::abs(p));
    if (std::abs(p.imag()) <= tol) {
      used[i] = true;
      continue;
    }
    bool found = false;
    for (std::size_t j = i + 1; j < poles.size() && !found; ++j)
      if (!used[j] && std::abs(poles[j] - std::conj(p)) <= tol) used[j] = found = true;
    if (!found) throw std::invalid_argument("designObserverGain: pole set is not closed under conjugation");
    used[i] = true;
  }
}

}  // namespace detail

/// Pole placement for  eig(A + G C) = poles.
///
/// The ZMP row is measured directly with a known input, so the x_z channel
/// gets a scalar gain (the most negative real pole) and the measured ZMP is
/// fed to the CoM acceleration row, which decouples it from the rest. The
/// remaining (x_c, x_c', d, d') subsystem with output x_c is placed by
/// Ackermann's formula.
template <typename Scalar>
ObserverGain<Scalar> designObserverGain(const LipParams<Scalar>& params,
                                        std::vector<std::complex<Scalar>> poles) {
  if (poles.size() != 5) throw std::invalid_argument("designObserverGain: exactly 5 poles required");
  for (const auto& p : poles)
    if (!(p.real() < Scalar(0))) throw std::invalid_argument("designObserverGain: poles must have negative real part");
  detail::checkConjugateClosed(poles);

  const Scalar tol = Scalar(1e-9);
  auto zmp_pole = poles.end();
  for (auto it = poles.begin(); it != poles.end(); ++it)
    if (std::abs(it->imag()) <= tol * std::max(Scalar(1), std::abs(*it)) &&
        (zmp_pole == poles.end() || it->real() < zmp_pole->real()))
      zmp_pole = it;
  // Five conjugate-closed poles always contain a real one.
  const Scalar zmp_rate = zmp_pole->real();
  std::vector<std::complex<Scalar>> rest;
  for (auto it = poles.begin(); it != poles.end(); ++it)
    if (it != zmp_pole) rest.push_back(*it);

  const Scalar e2 = params.eta2();
  // Residual subsystem, states (x_c, x_c', d, d').
  Eigen::Matrix<Scalar, 4, 4> Ar = Eigen::Matrix<Scalar, 4, 4>::Zero();
  Ar(0, 1) = Scalar(1);
  Ar(1, 0) = e2;
  Ar(1, 2) = Scalar(1);
  Ar(2, 3) = Scalar(1);
  Eigen::Matrix<Scalar, 4, 4> O;
  Eigen::Matrix<Scalar, 1, 4> row = Eigen::Matrix<Scalar, 1, 4>::Zero();
  row(0) = Scalar(1);
  for (int k = 0; k < 4; ++k) {
    O.row(k) = row;
    row = row * Ar;
  }
  const std::vector<Scalar> coeffs = detail::realPolynomial(rest);  // s^4 + c1 s^3 + ...
  Eigen::Matrix<Scalar, 4, 4> pA = Eigen::Matrix<Scalar, 4, 4>::Zero();
  for (const Scalar c : coeffs) pA = pA * Ar + c * Eigen::Matrix<Scalar, 4, 4>::Identity();
  const Eigen::Matrix<Scalar, 4, 1> en(Scalar(0), Scalar(0), Scalar(0), Scalar(1));
  const Eigen::Matrix<Scalar, 4, 1> L = pA * O.fullPivLu().solve(en);  // eig(Ar - L c) = rest

  ObserverGain<Scalar> gain;
  gain.poles = std::move(poles);
  const int map[4] = {0, 1, 3, 4};
  for (int i = 0; i < 4; ++i) gain.G(map[i], 0) = -L(i);
  gain.G(1, 1) = e2;
  gain.G(2, 1) = zmp_rate;
  for (const auto& p : gain.poles) gain.max_pole_magnitude = std::max(gain.max_pole_magnitude, std::abs(p));
  return gain;
}

template <typename Scalar>
struct ObserverState {
  /// (x_c, x_c', x_z, d, d')
  Eigen::Matrix<Scalar, 5, 1> estimate = Eigen::Matrix<Scalar, 5, 1>::Zero();

  Scalar disturbance() const { return estimate(3); }
  Scalar disturbanceSlope() const { return estimate(4); }
  bool isFinite() const { return estimate.allFinite(); }
};

template <typename Scalar>
struct ObserverMeasurement {
  Scalar com_pos = Scalar(0);
  Scalar zmp_pos = Scalar(0);
};

/// Discrete observer update over dt: the model part is propagated exactly
/// (matrix exponential of A), the input and the innovation are held at their
/// start-of-interval values.
template <typename Scalar>
class DisturbanceObserver {
 public:
  static constexpr Scalar kStepGuard = Scalar(0.5);

  DisturbanceObserver(const LipParams<Scalar>& params, ObserverGain<Scalar> gain, Scalar dt)
      : model_(params), gain_(std::move(gain)), dt_(dt) {
    if (!(dt > Scalar(0))) throw std::invalid_argument("DisturbanceObserver: dt must be positive");
    if (!(dt * gain_.max_pole_magnitude < kStepGuard))
      throw std::invalid_argument("DisturbanceObserver: dt * max|pole| must stay below 0.5");
    Eigen::Matrix<Scalar, 10, 10> aug = Eigen::Matrix<Scalar, 10, 10>::Zero();
    aug.template topLeftCorner<5, 5>() = model_.A * dt;
    aug.template topRightCorner<5, 5>() = Eigen::Matrix<Scalar, 5, 5>::Identity() * dt;
    const Eigen::Matrix<Scalar, 10, 10> e = aug.exp();
    phi_ = e.template topLeftCorner<5, 5>();
    gamma_ = e.template topRightCorner<5, 5>();
  }

  const ObserverGain<Scalar>& gain() const { return gain_; }
  const ObserverModel<Scalar>& model() const { return model_; }
  Scalar dt() const { return dt_; }
  const Eigen::Matrix<Scalar, 5, 5>& transition() const { return phi_; }
  const Eigen::Matrix<Scalar, 5, 5>& inputIntegral() const { return gamma_; }

  ObserverState<Scalar> update(const ObserverState<Scalar>& state, Scalar zmp_vel,
                               const ObserverMeasurement<Scalar>& meas) const {
    const Eigen::Matrix<Scalar, 2, 1> y(meas.com_pos, meas.zmp_pos);
    const Eigen::Matrix<Scalar, 5, 1> forcing =
        model_.B * zmp_vel + gain_.G * (model_.C * state.estimate - y);
    return {phi_ * state.estimate + gamma_ * forcing};
  }

 private:
  ObserverModel<Scalar> model_;
  ObserverGain<Scalar> gain_;
  Scalar dt_;
  Eigen::Matrix<Scalar, 5, 5> phi_;
  Eigen::Matrix<Scalar, 5, 5> gamma_;
};

/// One-shot form of DisturbanceObserver::update.
template <typename Scalar>
ObserverState<Scalar> observerUpdate(const ObserverState<Scalar>& state, const ObserverGain<Scalar>& gain,
                                     Scalar zmp_vel, const ObserverMeasurement<Scalar>& meas, Scalar dt,
                                     const LipParams<Scalar>& params) {
  return DisturbanceObserver<Scalar>(params, gain, dt).update(state, zmp_vel, meas);
}

inline std::vector<std::complex<double>> defaultObserverPoles() {
  return {{-8.0, 0.0}, {-9.0, 0.0}, {-10.0, 0.0}, {-11.0, 0.0}, {-12.0, 0.0}};
}

using ObserverGaind = ObserverGain<double>;
using ObserverStated = ObserverState<double>;
using DisturbanceObserverd = DisturbanceObserver<double>;

}  // namespace ismpc
