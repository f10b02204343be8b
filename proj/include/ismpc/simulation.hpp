#pragma once

// Closed-loop scenario runner: perturbed LIP plant, disturbance observer and
// MPC, advanced one sample at a time.

#include "ismpc/disturbance.hpp"
#include "ismpc/footsteps.hpp"
#include "ismpc/lip.hpp"
#include "ismpc/mpc.hpp"
#include "ismpc/observer.hpp"

#include <Eigen/Dense>

#include <array>
#include <complex>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace ismpc {

struct AxisDisturbance {
  DisturbanceSignal signal;
  std::optional<PendulumParams> pendulum;
};

struct ObserverConfig {
  std::vector<std::complex<double>> poles = defaultObserverPoles();
  /// Per-axis initial estimate (x_c, x_c', x_z, d, d'); when absent the
  /// observer starts at the measured CoM/ZMP with zero velocity and disturbance.
  std::optional<std::array<Eigen::Matrix<double, 5, 1>, 2>> initial_estimate;
};

struct ScenarioConfig {
  std::string name = "scenario";
  LipParamsd lip;
  double robot_mass = 4.5;
  GaitTiming timing;
  std::vector<Footstep> steps;
  Footstep initial_stance;
  PlanOptions plan_options;
  MpcConfig mpc;
  ObserverConfig observer;
  std::array<AxisDisturbance, 2> disturbance;
  double duration = 10.0;
  /// Initial plant state; defaults to rest at the initial stance center.
  std::optional<std::array<AxisStated, 2>> initial_state;
  /// Half-width of uniform noise added to the observer measurements (m).
  double measurement_noise = 0.0;
  std::uint64_t seed = 0;

  /// Throws std::invalid_argument describing the first problem found.
  void validate() const;
  int samples() const;
  FootstepPlan makePlan() const;
};

enum class TerminationKind { Completed, Infeasible, Diverged };

struct Termination {
  TerminationKind kind = TerminationKind::Completed;
  int sample = -1;

  /// "completed", "infeasible_at(k)" or "diverged_at(k)".
  std::string toString() const;
};

struct SampleRecord {
  int sample = 0;
  double time = 0.0;
  std::array<AxisStated, 2> state;
  Eigen::Vector2d zmp_vel = Eigen::Vector2d::Zero();
  Eigen::Vector2d disturbance = Eigen::Vector2d::Zero();
  Eigen::Vector2d disturbance_slope = Eigen::Vector2d::Zero();
  std::array<ObserverStated, 2> estimate;
  ZmpRegion region;
  double region_violation = 0.0;
  MpcDiagnostics mpc;
  bool feasible = true;
};

struct ScenarioResult {
  std::string name;
  StabilityMode mode = StabilityMode::Nominal;
  double sample_dt = 0.01;
  LipParamsd lip;
  GaitTiming timing;
  std::vector<SampleRecord> samples;
  std::vector<Footstep> planned_steps;
  std::vector<Footstep> realized_steps;
  Footstep initial_stance;
  Termination termination;

  bool completed() const { return termination.kind == TerminationKind::Completed; }
};

/// Divergence guard: |x_c - x_z| above this multiple of the footprint.
inline constexpr double kDivergenceFactor = 10.0;

/// Called after every MPC iteration, before the plant is advanced.
using IterationHook = std::function<void(int sample, const MpcController& mpc, const MpcSolution& solution)>;

ScenarioResult runScenario(const ScenarioConfig& config, const IterationHook& hook = {});

}  // namespace ismpc
