#pragma once

// One iteration of intrinsically stable MPC: the decision variables are the
// ZMP velocities over the control horizon (x block, then y block), optionally
// followed by the positions of footsteps that land inside the horizon.
//
// Per axis the stability constraint is
//
//   sum_{i<C} e^{-i eta dt} u_i = -sum_{i>=C} e^{-i eta dt} v_tail_i
//                                 + eta / (1 - e^{-eta dt}) (x_u - x_z + delta_d)
//
// and each predicted ZMP sample must stay inside its admissible rectangle.

#include "ismpc/footsteps.hpp"
#include "ismpc/lip.hpp"
#include "ismpc/qp.hpp"

#include <Eigen/Dense>

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace ismpc {

enum class StabilityMode { Nominal, KnownDisturbance, ObserverBased };

const char* toString(StabilityMode mode);
StabilityMode stabilityModeFromString(const std::string& name);

struct AfsConfig {
  bool enabled = false;
  double v_ref_x = 0.0;  // in the frame of the previous footstep
  double v_ref_y = 0.0;
  double weight = 10.0;
  double max_step_length = 0.10;
  double min_step_width = 0.05;
  double max_step_width = 0.15;
  /// Pins the footstep variables to the plan with equality rows (testing aid).
  bool pin_to_plan = false;
};

struct RestrictionConfig {
  bool enabled = false;
  /// Half-size shrink per horizon sample (m); negative selects footprint_x / (2 C).
  double rate = -1.0;
};

struct MpcConfig {
  int horizon = 100;
  double sample_dt = 0.01;
  StabilityMode mode = StabilityMode::Nominal;
  AfsConfig afs;
  RestrictionConfig restriction;
  /// Tail samples after the horizon; 0 selects defaultTailLength.
  int tail_length = 0;
  /// Experimental: add d_hat'/eta^3 to the observer-based correction.
  bool observer_slope_term = false;

  void validate() const;
};

/// Restricted half-size at horizon sample i (1-based).
double restrictedHalfSize(double nominal_half, double rate, int sample);

/// Correction for a known piecewise-linear disturbance:
/// (1 - e^{-eta dt}) / eta^3 sum_i e^{-i eta dt} slopes_i + value / eta^2.
double deltaDKnown(double value, std::span<const double> slopes, double eta, double dt);

/// Correction from the current observer estimate: d_hat / eta^2.
double deltaDObserved(double d_hat, double eta);

struct StabilityRhs {
  double tail_sum = 0.0;       // sum_{i>=C} e^{-i eta dt} v_tail_i
  double boundary_term = 0.0;  // eta / (1 - e^{-eta dt}) (x_u - x_z + delta_d)
  double delta_d = 0.0;

  double value() const { return -tail_sum + boundary_term; }
};

struct StabilityConstraint {
  Eigen::VectorXd coefficients;  // e^{-i eta dt}, i = 0..C-1
  StabilityRhs rhs;
};

/// `tail` holds the conjectured ZMP velocities for horizon + 0, 1, ...
StabilityConstraint buildStabilityConstraint(const AxisStated& state, const Eigen::VectorXd& tail,
                                             double delta_d, int horizon, double dt,
                                             const LipParamsd& params);

struct InequalityBlock {
  Eigen::MatrixXd A;
  Eigen::VectorXd b;
};

/// Fixed-footstep ZMP constraints for samples k+1 .. k+C over the 2C velocity
/// variables. Rows 4(i-1) .. 4(i-1)+3 belong to horizon sample i.
InequalityBlock buildZmpConstraints(const FootstepPlan& plan, int sample, const MpcConfig& config,
                                    const Eigen::Vector2d& current_zmp);

struct KnownDisturbancePreview {
  double value = 0.0;
  std::vector<double> slopes;  // slope over [t_{k+i}, t_{k+i+1}), i = 0, 1, ...
};

struct MpcInput {
  int sample = 0;
  AxisStated x;
  AxisStated y;
  /// Current observer estimates (required in observer-based mode).
  std::optional<Eigen::Vector2d> d_hat;
  std::optional<Eigen::Vector2d> d_hat_slope;
  /// Future disturbance (required in known-disturbance mode).
  std::optional<KnownDisturbancePreview> known_x;
  std::optional<KnownDisturbancePreview> known_y;
};

struct FootstepAdjustment {
  int step = 0;
  Eigen::Vector2d position = Eigen::Vector2d::Zero();
};

struct MpcDiagnostics {
  QpStatus status = QpStatus::MaxIterations;
  int iterations = 0;
  int active_set_size = 0;
  Eigen::Vector2d delta_d = Eigen::Vector2d::Zero();
  Eigen::Vector2d rhs = Eigen::Vector2d::Zero();
  Eigen::Vector2d stability_residual = Eigen::Vector2d::Zero();
  double kkt_residual = 0.0;
};

struct MpcSolution {
  bool feasible = false;
  Eigen::VectorXd zmp_vel_x;
  Eigen::VectorXd zmp_vel_y;
  std::vector<FootstepAdjustment> footstep_adjustments;
  MpcDiagnostics diagnostics;

  Eigen::Vector2d firstInput() const { return {zmp_vel_x(0), zmp_vel_y(0)}; }
};

/// A receding-horizon session. Owns the (possibly AFS-modified) footstep plan
/// and the warm-start working set; iterations must be issued in sample order.
class MpcController {
 public:
  MpcController(MpcConfig config, FootstepPlan plan, LipParamsd params);

  const MpcConfig& config() const { return config_; }
  const FootstepPlan& plan() const { return plan_; }
  const FootstepPlan& nominalPlan() const { return nominal_plan_; }
  const LipParamsd& params() const { return params_; }
  int tailLength() const { return tail_length_; }

  /// Assembles and solves the QP for sample `input.sample`. An infeasible QP
  /// is reported through MpcSolution::feasible, not thrown.
  MpcSolution iterate(const MpcInput& input);

  /// The QP of the most recent iterate() call.
  const QpProblemd& lastProblem() const { return last_problem_; }

  /// CoM/ZMP prediction for a velocity sequence from the undisturbed model.
  static std::vector<AxisStated> predict(const AxisStated& start, const Eigen::VectorXd& zmp_vel,
                                        double dt, const LipParamsd& params);

 private:
  Eigen::Vector2d deltaD(const MpcInput& input) const;

  MpcConfig config_;
  FootstepPlan plan_;
  FootstepPlan nominal_plan_;
  LipParamsd params_;
  int tail_length_;
  std::vector<int> warm_start_;
  int last_sample_ = -1;
  QpProblemd last_problem_;
};

}  // namespace ismpc
