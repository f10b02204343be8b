#pragma once

// Timed footstep plans and the per-sample ZMP admissible regions they induce.
//
// Timeline (in samples of length sample_dt):
//   [0, D0)                       initial double support, center moves from the
//                                 initial stance center to step 0
//   step j, single support        [D0 + j (S + D), D0 + j (S + D) + S)
//   step j, double support        the next D samples, center moves linearly
//                                 from step j to step j + 1
// with S = ss_duration / dt and D = ds_duration / dt. Past the last planned
// step the plan repeats its final two-step stride.

#include <Eigen/Dense>

#include <vector>

namespace ismpc {

struct Footstep {
  double x = 0.0;
  double y = 0.0;
  double orientation = 0.0;  // rad, (-pi, pi]

  Eigen::Vector2d position() const { return {x, y}; }
};

double wrapAngle(double angle);

struct GaitTiming {
  double ss_duration = 0.2;
  double ds_duration = 0.3;
  double initial_ds_duration = 0.6;
  double sample_dt = 0.01;
  double footprint_x = 0.05;
  double footprint_y = 0.05;

  /// Throws std::invalid_argument unless the phase durations are positive
  /// integer multiples of sample_dt and the footprint is non-degenerate.
  void validate() const;
  int ssSamples() const;
  int dsSamples() const;
  int initialDsSamples() const;
  int stepSamples() const { return ssSamples() + dsSamples(); }
  Eigen::Vector2d halfFootprint() const { return {footprint_x / 2.0, footprint_y / 2.0}; }
};

/// Rectangle  |R(theta)' (p - center)| <= half  componentwise.
struct ZmpRegion {
  Eigen::Vector2d center = Eigen::Vector2d::Zero();
  Eigen::Vector2d half = Eigen::Vector2d::Zero();
  double orientation = 0.0;

  Eigen::Matrix2d rotation() const;
  Eigen::Vector2d toLocal(const Eigen::Vector2d& p) const { return rotation().transpose() * (p - center); }
  /// Largest constraint violation max_i(|local_i| - half_i); <= 0 inside.
  double violation(const Eigen::Vector2d& p) const;
  bool contains(const Eigen::Vector2d& p, double tol = 0.0) const { return violation(p) <= tol; }
};

enum class SupportPhase { InitialDouble, Single, Double };

struct PhaseInfo {
  SupportPhase phase = SupportPhase::Single;
  int step = 0;        // support step (Single), or the step being left (Double); -1 for InitialDouble
  double alpha = 0.0;  // interpolation parameter in double support, in [0, 1)
};

struct PlanOptions {
  bool periodic_extension = true;
  double max_step_displacement = 0.5;
};

class FootstepPlan {
 public:
  /// `initial_stance` is the region center/orientation before step 0.
  /// Throws std::invalid_argument on an empty step list, invalid timing, or a
  /// consecutive displacement above options.max_step_displacement.
  FootstepPlan(std::vector<Footstep> steps, GaitTiming timing, Footstep initial_stance,
               PlanOptions options = {});

  const GaitTiming& timing() const { return timing_; }
  const std::vector<Footstep>& steps() const { return steps_; }
  const Footstep& initialStance() const { return initial_; }
  int plannedSteps() const { return static_cast<int>(steps_.size()); }
  bool periodic() const { return options_.periodic_extension; }

  /// Step j, with the periodic extension past the explicit list.
  /// Throws std::out_of_range if j is past the end and extension is off.
  Footstep step(int j) const;
  /// Overwrites step j, materializing the extension up to j first.
  void setStep(int j, const Footstep& f);
  /// Appends extension steps so that steps 0..j are explicit.
  void materialize(int j);

  /// First sample of step j's single support.
  int singleSupportStart(int j) const;
  /// Number of samples covered by explicit steps (end of the last step's
  /// double support); sampling beyond it needs the periodic extension.
  int explicitSamples() const;

  PhaseInfo phaseAt(int sample) const;
  ZmpRegion regionAt(int sample) const;
  Eigen::Vector2d centerAt(int sample) const;

  /// Conjectured ZMP velocities (x, y) for samples from .. from+length-1: the
  /// velocities that move the ZMP along the region centers.
  Eigen::MatrixX2d anticipativeTail(int from, int length) const;

 private:
  std::vector<Footstep> steps_;
  GaitTiming timing_;
  Footstep initial_;
  PlanOptions options_;
};

/// Tail truncation giving a residual weight exp(-eta dt T) below ~1e-5.
int defaultTailLength(double eta, double dt);

struct GaitGenerator {
  double step_length = 0.05;  // forward advance per step
  double step_width = 0.10;   // lateral distance between the feet
  int count = 20;
  bool first_step_right = false;

  /// Alternating footsteps, step j at x = (j + 1) step_length; the initial
  /// stance is the origin.
  std::vector<Footstep> generate() const;
};

}  // namespace ismpc
