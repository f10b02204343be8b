#pragma once

// Disturbance signals d(t) (CoM acceleration, m/s^2) for one axis, and a
// swinging-mass emulator that produces d from the CoM motion.

#include <type_traits>
#include <variant>
#include <vector>

namespace ismpc {

class DisturbanceSignal;

struct ConstantSignal {
  double value = 0.0;
};

/// offset + amplitude sin(angular_freq t + phase)
struct SinusoidSignal {
  double offset = 0.0;
  double amplitude = 0.0;
  double angular_freq = 0.0;
  double phase = 0.0;
};

/// value before start_time, then value + slope (t - start_time).
struct RampSignal {
  double value = 0.0;
  double slope = 0.0;
  double start_time = 0.0;
};

/// External force on the robot mass: d = force / mass.
struct ForceSignal {
  double force = 0.0;
  double mass = 1.0;
};

/// Linear interpolation of samples at t0 + i dt, held constant outside.
struct TableSignal {
  double t0 = 0.0;
  double dt = 0.01;
  std::vector<double> samples;
};

struct SumSignal {
  std::vector<DisturbanceSignal> terms;
};

class DisturbanceSignal {
 public:
  using Variant = std::variant<ConstantSignal, SinusoidSignal, RampSignal, ForceSignal, TableSignal, SumSignal>;

  DisturbanceSignal() : v_(ConstantSignal{}) {}
  DisturbanceSignal(Variant v);  // NOLINT: implicit by design
  template <typename T, typename = std::enable_if_t<std::is_constructible_v<Variant, T> &&
                                                    !std::is_same_v<std::decay_t<T>, DisturbanceSignal>>>
  DisturbanceSignal(T s) : v_(std::move(s)) {}  // NOLINT

  static DisturbanceSignal zero() { return DisturbanceSignal(); }

  /// Throws std::invalid_argument on non-positive mass or table spacing.
  void validate() const;
  double at(double t) const;
  /// Secant slope over [t, t + dt], so that value/slope reproduce the end points.
  double secantSlope(double t, double dt) const { return (at(t + dt) - at(t)) / dt; }
  bool isZero() const;

  const Variant& variant() const { return v_; }

 private:
  Variant v_;
};

struct PendulumParams {
  double mass = 0.2;          // kg
  double length = 0.15;       // m
  double robot_mass = 4.5;    // kg
  double damping = 0.5;       // 1/s, viscous on the swing angle
  double gravity = 9.81;
  double initial_angle = 0.0;  // rad from the downward vertical
  double initial_rate = 0.0;

  void validate() const;
};

/// A point mass hanging from the CoM, driven one-way by the pivot
/// acceleration. The horizontal reaction on the robot divided by the robot
/// mass is the disturbance.
class PendulumEmulator {
 public:
  explicit PendulumEmulator(PendulumParams params);

  /// Disturbance for the current pendulum state under pivot acceleration a.
  double disturbance(double pivot_accel) const;
  /// Advances the swing by dt with the pivot acceleration held.
  void advance(double pivot_accel, double dt);

  double angle() const { return theta_; }
  double rate() const { return rate_; }
  const PendulumParams& params() const { return p_; }

 private:
  double angularAccel(double theta, double rate, double pivot_accel) const;

  PendulumParams p_;
  double theta_;
  double rate_;
};

/// Offline form: drives the pendulum with sampled pivot accelerations
/// (spacing dt) and returns the disturbance as a table signal.
DisturbanceSignal pendulumDisturbance(const PendulumParams& params, const std::vector<double>& pivot_accel,
                                      double dt);

}  // namespace ismpc
