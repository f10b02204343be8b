#include "ismpc/disturbance.hpp"

#include <cmath>
#include <stdexcept>

namespace ismpc {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

}  // namespace

DisturbanceSignal::DisturbanceSignal(Variant v) : v_(std::move(v)) {}

void DisturbanceSignal::validate() const {
  std::visit(Overloaded{
                 [](const ForceSignal& s) {
                   if (!(s.mass > 0.0)) throw std::invalid_argument("force disturbance: mass must be positive");
                 },
                 [](const TableSignal& s) {
                   if (!(s.dt > 0.0)) throw std::invalid_argument("table disturbance: dt must be positive");
                   if (s.samples.empty()) throw std::invalid_argument("table disturbance: no samples");
                 },
                 [](const SumSignal& s) {
                   for (const auto& t : s.terms) t.validate();
                 },
                 [](const auto&) {},
             },
             v_);
}

double DisturbanceSignal::at(double t) const {
  return std::visit(Overloaded{
                        [](const ConstantSignal& s) { return s.value; },
                        [t](const SinusoidSignal& s) {
                          return s.offset + s.amplitude * std::sin(s.angular_freq * t + s.phase);
                        },
                        [t](const RampSignal& s) {
                          return t < s.start_time ? s.value : s.value + s.slope * (t - s.start_time);
                        },
                        [](const ForceSignal& s) { return s.force / s.mass; },
                        [t](const TableSignal& s) {
                          const double u = (t - s.t0) / s.dt;
                          const auto n = static_cast<double>(s.samples.size());
                          if (u <= 0.0) return s.samples.front();
                          if (u >= n - 1.0) return s.samples.back();
                          const auto i = static_cast<std::size_t>(std::floor(u));
                          const double a = u - static_cast<double>(i);
                          return (1.0 - a) * s.samples[i] + a * s.samples[i + 1];
                        },
                        [t](const SumSignal& s) {
                          double sum = 0.0;
                          for (const auto& term : s.terms) sum += term.at(t);
                          return sum;
                        },
                    },
                    v_);
}

bool DisturbanceSignal::isZero() const {
  return std::visit(Overloaded{
                        [](const ConstantSignal& s) { return s.value == 0.0; },
                        [](const SinusoidSignal& s) { return s.offset == 0.0 && s.amplitude == 0.0; },
                        [](const RampSignal& s) { return s.value == 0.0 && s.slope == 0.0; },
                        [](const ForceSignal& s) { return s.force == 0.0; },
                        [](const TableSignal& s) {
                          for (double v : s.samples)
                            if (v != 0.0) return false;
                          return true;
                        },
                        [](const SumSignal& s) {
                          for (const auto& term : s.terms)
                            if (!term.isZero()) return false;
                          return true;
                        },
                    },
                    v_);
}

void PendulumParams::validate() const {
  if (!(mass >= 0.0)) throw std::invalid_argument("pendulum: mass must be non-negative");
  if (!(length > 0.0)) throw std::invalid_argument("pendulum: length must be positive");
  if (!(robot_mass > 0.0)) throw std::invalid_argument("pendulum: robot mass must be positive");
  if (!(damping >= 0.0)) throw std::invalid_argument("pendulum: damping must be non-negative");
  if (!(gravity > 0.0)) throw std::invalid_argument("pendulum: gravity must be positive");
}

PendulumEmulator::PendulumEmulator(PendulumParams params)
    : p_(params), theta_(params.initial_angle), rate_(params.initial_rate) {
  p_.validate();
}

double PendulumEmulator::angularAccel(double theta, double rate, double pivot_accel) const {
  return -(p_.gravity * std::sin(theta) + pivot_accel * std::cos(theta)) / p_.length - p_.damping * rate;
}

double PendulumEmulator::disturbance(double pivot_accel) const {
  // Bob horizontal acceleration; the rod pushes the pivot with -m_p * that.
  const double th_dd = angularAccel(theta_, rate_, pivot_accel);
  const double bob_accel =
      pivot_accel + p_.length * (th_dd * std::cos(theta_) - rate_ * rate_ * std::sin(theta_));
  return -p_.mass * bob_accel / p_.robot_mass;
}

void PendulumEmulator::advance(double pivot_accel, double dt) {
  constexpr int kSubsteps = 10;
  const double h = dt / kSubsteps;
  for (int s = 0; s < kSubsteps; ++s) {
    const double k1t = rate_;
    const double k1r = angularAccel(theta_, rate_, pivot_accel);
    const double k2t = rate_ + 0.5 * h * k1r;
    const double k2r = angularAccel(theta_ + 0.5 * h * k1t, k2t, pivot_accel);
    const double k3t = rate_ + 0.5 * h * k2r;
    const double k3r = angularAccel(theta_ + 0.5 * h * k2t, k3t, pivot_accel);
    const double k4t = rate_ + h * k3r;
    const double k4r = angularAccel(theta_ + h * k3t, k4t, pivot_accel);
    theta_ += h / 6.0 * (k1t + 2.0 * k2t + 2.0 * k3t + k4t);
    rate_ += h / 6.0 * (k1r + 2.0 * k2r + 2.0 * k3r + k4r);
  }
}

DisturbanceSignal pendulumDisturbance(const PendulumParams& params, const std::vector<double>& pivot_accel,
                                      double dt) {
  if (!(dt > 0.0)) throw std::invalid_argument("pendulumDisturbance: dt must be positive");
  PendulumEmulator pend(params);
  TableSignal table{0.0, dt, {}};
  table.samples.reserve(pivot_accel.size());
  for (double a : pivot_accel) {
    table.samples.push_back(pend.disturbance(a));
    pend.advance(a, dt);
  }
  if (table.samples.empty()) table.samples.push_back(0.0);
  return DisturbanceSignal(std::move(table));
}

}  // namespace ismpc
