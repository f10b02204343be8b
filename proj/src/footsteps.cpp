#include "ismpc/footsteps.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace ismpc {

double wrapAngle(double angle) {
  double a = std::remainder(angle, 2.0 * std::numbers::pi);
  if (a <= -std::numbers::pi) a += 2.0 * std::numbers::pi;
  return a;
}

namespace {

int samplesOf(double duration, double dt, const char* what) {
  const double ratio = duration / dt;
  const double rounded = std::round(ratio);
  if (!(duration > 0.0) || rounded < 1.0 || std::abs(ratio - rounded) > 1e-9 * std::max(1.0, ratio))
    throw std::invalid_argument(std::string("GaitTiming: ") + what +
                                " must be a positive integer multiple of sample_dt");
  return static_cast<int>(rounded);
}

}  // namespace

void GaitTiming::validate() const {
  if (!(sample_dt > 0.0)) throw std::invalid_argument("GaitTiming: sample_dt must be positive");
  samplesOf(ss_duration, sample_dt, "ss_duration");
  samplesOf(ds_duration, sample_dt, "ds_duration");
  samplesOf(initial_ds_duration, sample_dt, "initial_ds_duration");
  if (!(footprint_x > 0.0) || !(footprint_y > 0.0))
    throw std::invalid_argument("GaitTiming: footprint dimensions must be positive");
}

int GaitTiming::ssSamples() const { return samplesOf(ss_duration, sample_dt, "ss_duration"); }
int GaitTiming::dsSamples() const { return samplesOf(ds_duration, sample_dt, "ds_duration"); }
int GaitTiming::initialDsSamples() const {
  return samplesOf(initial_ds_duration, sample_dt, "initial_ds_duration");
}

Eigen::Matrix2d ZmpRegion::rotation() const {
  const double c = std::cos(orientation);
  const double s = std::sin(orientation);
  Eigen::Matrix2d R;
  R << c, -s, s, c;
  return R;
}

double ZmpRegion::violation(const Eigen::Vector2d& p) const {
  const Eigen::Vector2d local = toLocal(p);
  return (local.cwiseAbs() - half).maxCoeff();
}

FootstepPlan::FootstepPlan(std::vector<Footstep> steps, GaitTiming timing, Footstep initial_stance,
                           PlanOptions options)
    : steps_(std::move(steps)), timing_(timing), initial_(initial_stance), options_(options) {
  timing_.validate();
  if (steps_.empty()) throw std::invalid_argument("FootstepPlan: footstep list is empty");
  Eigen::Vector2d prev = initial_.position();
  for (std::size_t j = 0; j < steps_.size(); ++j) {
    const Footstep& f = steps_[j];
    if (!std::isfinite(f.x) || !std::isfinite(f.y) || !std::isfinite(f.orientation))
      throw std::invalid_argument("FootstepPlan: non-finite footstep");
    steps_[j].orientation = wrapAngle(f.orientation);
    if ((f.position() - prev).norm() > options_.max_step_displacement)
      throw std::invalid_argument("FootstepPlan: step " + std::to_string(j) +
                                  " exceeds the maximum step displacement");
    prev = f.position();
  }
  initial_.orientation = wrapAngle(initial_.orientation);
}

Footstep FootstepPlan::step(int j) const {
  const int n = plannedSteps();
  if (j < 0) throw std::out_of_range("FootstepPlan: negative step index");
  if (j < n) return steps_[static_cast<std::size_t>(j)];
  if (!options_.periodic_extension)
    throw std::out_of_range("FootstepPlan: step " + std::to_string(j) + " beyond plan end");
  if (n == 1) return steps_[0];
  const int m = j - n;
  const int base = n - 2 + (m % 2);
  const int periods = m / 2 + 1;
  Footstep stride{0.0, 0.0, 0.0};
  if (n >= 3) {
    const Footstep& a = steps_[static_cast<std::size_t>(n - 3)];
    const Footstep& b = steps_[static_cast<std::size_t>(n - 1)];
    stride = {b.x - a.x, b.y - a.y, wrapAngle(b.orientation - a.orientation)};
  }
  const Footstep& s = steps_[static_cast<std::size_t>(base)];
  return {s.x + periods * stride.x, s.y + periods * stride.y,
          wrapAngle(s.orientation + periods * stride.orientation)};
}

void FootstepPlan::materialize(int j) {
  while (plannedSteps() <= j) {
    const Footstep next = step(plannedSteps());
    steps_.push_back(next);
  }
}

void FootstepPlan::setStep(int j, const Footstep& f) {
  materialize(j);
  steps_[static_cast<std::size_t>(j)] = {f.x, f.y, wrapAngle(f.orientation)};
}

int FootstepPlan::singleSupportStart(int j) const {
  return timing_.initialDsSamples() + j * timing_.stepSamples();
}

int FootstepPlan::explicitSamples() const {
  return singleSupportStart(plannedSteps() - 1) + timing_.ssSamples();
}

PhaseInfo FootstepPlan::phaseAt(int sample) const {
  if (sample < 0) throw std::out_of_range("FootstepPlan: negative sample index");
  const int d0 = timing_.initialDsSamples();
  if (sample < d0) return {SupportPhase::InitialDouble, -1, static_cast<double>(sample) / d0};
  const int m = sample - d0;
  const int period = timing_.stepSamples();
  const int j = m / period;
  const int r = m % period;
  const int ss = timing_.ssSamples();
  if (r < ss) return {SupportPhase::Single, j, 0.0};
  return {SupportPhase::Double, j, static_cast<double>(r - ss) / timing_.dsSamples()};
}

namespace {

Footstep interpolate(const Footstep& a, const Footstep& b, double alpha) {
  return {a.x + alpha * (b.x - a.x), a.y + alpha * (b.y - a.y),
          wrapAngle(a.orientation + alpha * wrapAngle(b.orientation - a.orientation))};
}

}  // namespace

ZmpRegion FootstepPlan::regionAt(int sample) const {
  const PhaseInfo ph = phaseAt(sample);
  Footstep c;
  switch (ph.phase) {
    case SupportPhase::InitialDouble: c = interpolate(initial_, step(0), ph.alpha); break;
    case SupportPhase::Single: c = step(ph.step); break;
    case SupportPhase::Double: c = interpolate(step(ph.step), step(ph.step + 1), ph.alpha); break;
  }
  return {c.position(), timing_.halfFootprint(), c.orientation};
}

Eigen::Vector2d FootstepPlan::centerAt(int sample) const { return regionAt(sample).center; }

Eigen::MatrixX2d FootstepPlan::anticipativeTail(int from, int length) const {
  Eigen::MatrixX2d tail(length, 2);
  if (length <= 0) return tail;
  Eigen::Vector2d c = centerAt(from);
  for (int i = 0; i < length; ++i) {
    const Eigen::Vector2d next = centerAt(from + i + 1);
    tail.row(i) = ((next - c) / timing_.sample_dt).transpose();
    c = next;
  }
  return tail;
}

int defaultTailLength(double eta, double dt) {
  return static_cast<int>(std::ceil(12.0 / (eta * dt)));
}

std::vector<Footstep> GaitGenerator::generate() const {
  if (count < 1) throw std::invalid_argument("GaitGenerator: count must be at least 1");
  std::vector<Footstep> steps;
  steps.reserve(static_cast<std::size_t>(count));
  const double side0 = first_step_right ? -1.0 : 1.0;
  for (int j = 0; j < count; ++j) {
    const double side = (j % 2 == 0) ? side0 : -side0;
    steps.push_back({(j + 1) * step_length, side * step_width / 2.0, 0.0});
  }
  return steps;
}

}  // namespace ismpc
