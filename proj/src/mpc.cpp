#include "ismpc/mpc.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>

namespace ismpc {

const char* toString(StabilityMode mode) {
  switch (mode) {
    case StabilityMode::Nominal: return "nominal";
    case StabilityMode::KnownDisturbance: return "known_disturbance";
    case StabilityMode::ObserverBased: return "observer_based";
  }
  return "unknown";
}

StabilityMode stabilityModeFromString(const std::string& name) {
  if (name == "nominal") return StabilityMode::Nominal;
  if (name == "known_disturbance") return StabilityMode::KnownDisturbance;
  if (name == "observer_based") return StabilityMode::ObserverBased;
  throw std::invalid_argument("unknown stability mode '" + name + "'");
}

void MpcConfig::validate() const {
  if (horizon < 2) throw std::invalid_argument("MpcConfig: horizon must be at least 2");
  if (!(sample_dt > 0.0)) throw std::invalid_argument("MpcConfig: sample_dt must be positive");
  if (tail_length < 0) throw std::invalid_argument("MpcConfig: tail_length must be non-negative");
  if (afs.enabled) {
    if (!(afs.weight >= 0.0)) throw std::invalid_argument("MpcConfig: AFS weight must be non-negative");
    if (!(afs.max_step_length > 0.0) || !(afs.max_step_width > 0.0) ||
        afs.min_step_width > afs.max_step_width)
      throw std::invalid_argument("MpcConfig: inconsistent AFS step bounds");
  }
}

double restrictedHalfSize(double nominal_half, double rate, int sample) {
  return std::max(nominal_half - rate * sample, 0.1 * nominal_half);
}

double deltaDKnown(double value, std::span<const double> slopes, double eta, double dt) {
  const double decay = std::exp(-eta * dt);
  double sum = 0.0;
  double w = 1.0;
  for (const double s : slopes) {
    sum += w * s;
    w *= decay;
  }
  return -std::expm1(-eta * dt) / (eta * eta * eta) * sum + value / (eta * eta);
}

double deltaDObserved(double d_hat, double eta) { return d_hat / (eta * eta); }

namespace {

double boundaryFactor(double eta, double dt) { return eta / -std::expm1(-eta * dt); }

}  // namespace

StabilityConstraint buildStabilityConstraint(const AxisStated& state, const Eigen::VectorXd& tail,
                                             double delta_d, int horizon, double dt,
                                             const LipParamsd& params) {
  const double eta = params.eta();
  const double decay = std::exp(-eta * dt);
  StabilityConstraint sc;
  sc.coefficients.resize(horizon);
  double w = 1.0;
  for (int i = 0; i < horizon; ++i) {
    sc.coefficients(i) = w;
    w *= decay;
  }
  double tail_sum = 0.0;
  for (Eigen::Index i = 0; i < tail.size(); ++i) {
    tail_sum += w * tail(i);
    w *= decay;
  }
  const DecomposedStated dec = decompose(state, params);
  sc.rhs.tail_sum = tail_sum;
  sc.rhs.delta_d = delta_d;
  sc.rhs.boundary_term = boundaryFactor(eta, dt) * (dec.unstable - state.zmp_pos + delta_d);
  return sc;
}

namespace {

// Region center at one sample as an affine function of the free footstep
// positions: c = c0 + sum_t weight_t * s_{var_t}, weights shared by x and y.
struct CenterModel {
  Eigen::Vector2d c0 = Eigen::Vector2d::Zero();
  std::array<int, 2> var{-1, -1};
  std::array<double, 2> weight{0.0, 0.0};

  void addStep(const Eigen::Vector2d& constant, int v, double w) {
    c0 += w * constant;
    if (v < 0 || w == 0.0) return;
    for (int t = 0; t < 2; ++t) {
      if (var[t] == v) {
        weight[t] += w;
        return;
      }
      if (var[t] < 0) {
        var[t] = v;
        weight[t] = w;
        return;
      }
    }
  }
};

struct FreeSteps {
  int first = 0;
  int count = 0;
  bool contains(int j) const { return count > 0 && j >= first && j < first + count; }
  int last() const { return first + count - 1; }
};

class CenterModeler {
 public:
  CenterModeler(const FootstepPlan& plan, FreeSteps free) : plan_(plan), free_(free) {}

  // Footstep j as (constant, variable index); variable index -1 if fixed.
  std::pair<Eigen::Vector2d, int> stepModel(int j) const {
    if (free_.count == 0 || j < free_.first) return {plan_.step(j).position(), -1};
    if (free_.contains(j)) return {Eigen::Vector2d::Zero(), j - free_.first};
    return {plan_.step(j).position() - plan_.step(free_.last()).position(), free_.count - 1};
  }

  CenterModel at(int sample) const {
    const PhaseInfo ph = plan_.phaseAt(sample);
    CenterModel m;
    switch (ph.phase) {
      case SupportPhase::InitialDouble: {
        m.addStep(plan_.initialStance().position(), -1, 1.0 - ph.alpha);
        const auto [c, v] = stepModel(0);
        m.addStep(c, v, ph.alpha);
        break;
      }
      case SupportPhase::Single: {
        const auto [c, v] = stepModel(ph.step);
        m.addStep(c, v, 1.0);
        break;
      }
      case SupportPhase::Double: {
        const auto [ca, va] = stepModel(ph.step);
        const auto [cb, vb] = stepModel(ph.step + 1);
        m.addStep(ca, va, 1.0 - ph.alpha);
        m.addStep(cb, vb, ph.alpha);
        break;
      }
    }
    return m;
  }

 private:
  const FootstepPlan& plan_;
  FreeSteps free_;
};

}  // namespace

InequalityBlock buildZmpConstraints(const FootstepPlan& plan, int sample, const MpcConfig& config,
                                    const Eigen::Vector2d& current_zmp) {
  const int C = config.horizon;
  const double dt = config.sample_dt;
  const Eigen::Vector2d half = plan.timing().halfFootprint();
  const double rate = config.restriction.rate >= 0.0 ? config.restriction.rate
                                                     : plan.timing().footprint_x / (2.0 * C);
  InequalityBlock blk;
  blk.A = Eigen::MatrixXd::Zero(4 * C, 2 * C);
  blk.b.resize(4 * C);
  for (int i = 1; i <= C; ++i) {
    const ZmpRegion region = plan.regionAt(sample + i);
    const Eigen::Matrix2d Rt = region.rotation().transpose();
    for (int a = 0; a < 2; ++a) {
      const double h = config.restriction.enabled ? restrictedHalfSize(half(a), rate, i) : half(a);
      const Eigen::RowVector2d r = Rt.row(a);
      const double offset = r.dot(current_zmp - region.center);
      const int row = 4 * (i - 1) + 2 * a;
      for (int l = 0; l < i; ++l) {
        blk.A(row, l) = dt * r(0);
        blk.A(row, C + l) = dt * r(1);
      }
      blk.A.row(row + 1) = -blk.A.row(row);
      blk.b(row) = h - offset;
      blk.b(row + 1) = h + offset;
    }
  }
  return blk;
}

MpcController::MpcController(MpcConfig config, FootstepPlan plan, LipParamsd params)
    : config_(config), plan_(plan), nominal_plan_(std::move(plan)), params_(params) {
  config_.validate();
  if (std::abs(config_.sample_dt - plan_.timing().sample_dt) > 1e-12)
    throw std::invalid_argument("MpcController: MPC and gait sample times differ");
  tail_length_ = config_.tail_length > 0 ? config_.tail_length
                                         : defaultTailLength(params_.eta(), config_.sample_dt);
}

Eigen::Vector2d MpcController::deltaD(const MpcInput& input) const {
  const double eta = params_.eta();
  switch (config_.mode) {
    case StabilityMode::Nominal: return Eigen::Vector2d::Zero();
    case StabilityMode::KnownDisturbance: {
      if (!input.known_x || !input.known_y)
        throw std::invalid_argument("MpcController: known-disturbance mode needs a disturbance preview");
      return {deltaDKnown(input.known_x->value, input.known_x->slopes, eta, config_.sample_dt),
              deltaDKnown(input.known_y->value, input.known_y->slopes, eta, config_.sample_dt)};
    }
    case StabilityMode::ObserverBased: {
      if (!input.d_hat) throw std::invalid_argument("MpcController: observer-based mode needs d_hat");
      Eigen::Vector2d dd(deltaDObserved((*input.d_hat)(0), eta), deltaDObserved((*input.d_hat)(1), eta));
      if (config_.observer_slope_term && input.d_hat_slope) dd += *input.d_hat_slope / (eta * eta * eta);
      return dd;
    }
  }
  return Eigen::Vector2d::Zero();
}

MpcSolution MpcController::iterate(const MpcInput& input) {
  const int k = input.sample;
  const int C = config_.horizon;
  const double dt = config_.sample_dt;
  const double eta = params_.eta();
  if (k < 0) throw std::invalid_argument("MpcController: negative sample index");

  FreeSteps free;
  if (config_.afs.enabled) {
    // Step 0 is the first support foot and stays where it is.
    int j = 1;
    while (plan_.singleSupportStart(j) <= k) ++j;
    free.first = j;
    while (plan_.singleSupportStart(free.first + free.count) <= k + C) ++free.count;
    if (free.count > 0) plan_.materialize(free.last() + 1);
  }
  const int M = free.count;
  const int nv = 2 * C + 2 * M;
  const CenterModeler modeler(plan_, free);

  const Eigen::Vector2d current_zmp(input.x.zmp_pos, input.y.zmp_pos);
  const Eigen::Vector2d half = plan_.timing().halfFootprint();
  const double rate = config_.restriction.rate >= 0.0 ? config_.restriction.rate
                                                      : plan_.timing().footprint_x / (2.0 * C);

  // ZMP rows.
  std::vector<Eigen::VectorXd> rows;
  std::vector<double> rhs;
  rows.reserve(4 * C + 4 * M);
  for (int i = 1; i <= C; ++i) {
    const int n = k + i;
    const CenterModel cm = modeler.at(n);
    const Eigen::Matrix2d Rt = plan_.regionAt(n).rotation().transpose();
    for (int a = 0; a < 2; ++a) {
      const double h = config_.restriction.enabled ? restrictedHalfSize(half(a), rate, i) : half(a);
      const Eigen::RowVector2d r = Rt.row(a);
      Eigen::VectorXd row = Eigen::VectorXd::Zero(nv);
      row.head(i).setConstant(dt * r(0));
      row.segment(C, i).setConstant(dt * r(1));
      for (int t = 0; t < 2; ++t)
        if (cm.var[t] >= 0) {
          row(2 * C + cm.var[t]) -= r(0) * cm.weight[t];
          row(2 * C + M + cm.var[t]) -= r(1) * cm.weight[t];
        }
      const double offset = r.dot(current_zmp - cm.c0);
      rows.push_back(row);
      rhs.push_back(h - offset);
      rows.push_back(-row);
      rhs.push_back(h + offset);
    }
  }

  QpProblemd qp;
  qp.H = Eigen::MatrixXd::Identity(nv, nv);
  qp.g = Eigen::VectorXd::Zero(nv);

  // AFS: stride-velocity tracking cost and kinematic bounds.
  std::vector<Eigen::VectorXd> eq_rows;
  std::vector<double> eq_rhs;
  if (M > 0) {
    // Stride-velocity error, counted once per sample of the stride.
    const double T = plan_.timing().ss_duration + plan_.timing().ds_duration;
    const double w = config_.afs.weight * plan_.timing().stepSamples() / (T * T);
    for (int f = 0; f < M; ++f) {
      const int j = free.first + f;
      const auto [cprev, vprev] = modeler.stepModel(j - 1);
      const Footstep nom_prev = nominal_plan_.step(j - 1);
      const Footstep nom_cur = nominal_plan_.step(j);
      ZmpRegion frame;
      frame.orientation = plan_.step(j - 1).orientation;
      const Eigen::Matrix2d Rp = frame.rotation();
      ZmpRegion nom_frame;
      nom_frame.orientation = nom_prev.orientation;
      const double nominal_lateral =
          (nom_frame.rotation().transpose() * (nom_cur.position() - nom_prev.position()))(1);
      const Eigen::Vector2d target_local(config_.afs.v_ref_x * T, nominal_lateral + config_.afs.v_ref_y * T);
      const Eigen::Vector2d target = Rp * target_local;

      // Residual per axis: s_f - prev - target.
      for (int axis = 0; axis < 2; ++axis) {
        Eigen::VectorXd e = Eigen::VectorXd::Zero(nv);
        const int base = 2 * C + axis * M;
        e(base + f) = 1.0;
        if (vprev >= 0) e(base + vprev) -= 1.0;
        const double e0 = -cprev(axis) - target(axis);
        qp.H += w * e * e.transpose();
        qp.g += w * e0 * e;
      }

      // Kinematic bounds on the displacement in the previous step's frame.
      for (int a = 0; a < 2; ++a) {
        const Eigen::RowVector2d r = Rp.transpose().row(a);
        Eigen::VectorXd row = Eigen::VectorXd::Zero(nv);
        row(2 * C + f) = r(0);
        row(2 * C + M + f) = r(1);
        if (vprev >= 0) {
          row(2 * C + vprev) -= r(0);
          row(2 * C + M + vprev) -= r(1);
        }
        const double c = -r.dot(cprev);  // displacement = row . z + c
        double lo = -config_.afs.max_step_length;
        double hi = config_.afs.max_step_length;
        if (a == 1) {
          if (nominal_lateral > 0.0) {
            lo = config_.afs.min_step_width;
            hi = config_.afs.max_step_width;
          } else if (nominal_lateral < 0.0) {
            lo = -config_.afs.max_step_width;
            hi = -config_.afs.min_step_width;
          } else {
            lo = -config_.afs.max_step_width;
            hi = config_.afs.max_step_width;
          }
        }
        rows.push_back(row);
        rhs.push_back(hi - c);
        rows.push_back(-row);
        rhs.push_back(c - lo);
      }
    }
    if (config_.afs.pin_to_plan) {
      for (int f = 0; f < M; ++f) {
        const Footstep s = plan_.step(free.first + f);
        for (int axis = 0; axis < 2; ++axis) {
          Eigen::VectorXd row = Eigen::VectorXd::Zero(nv);
          row(2 * C + axis * M + f) = 1.0;
          eq_rows.push_back(row);
          eq_rhs.push_back(axis == 0 ? s.x : s.y);
        }
      }
    }
  }

  // Stability rows: sum e^{-i eta dt} u_i + (tail part linear in the free
  // footsteps) = -tail_const + boundary.
  const Eigen::Vector2d dd = deltaD(input);
  const double decay = std::exp(-eta * dt);
  Eigen::Vector2d tail_const = Eigen::Vector2d::Zero();
  Eigen::VectorXd tail_var = Eigen::VectorXd::Zero(M);
  {
    double wgt = std::pow(decay, C);
    CenterModel prev = modeler.at(k + C);
    for (int i = C; i < C + tail_length_; ++i) {
      const CenterModel next = modeler.at(k + i + 1);
      const double s = wgt / dt;
      tail_const += s * (next.c0 - prev.c0);
      for (int t = 0; t < 2; ++t) {
        if (next.var[t] >= 0) tail_var(next.var[t]) += s * next.weight[t];
        if (prev.var[t] >= 0) tail_var(prev.var[t]) -= s * prev.weight[t];
      }
      prev = next;
      wgt *= decay;
    }
  }
  const Eigen::VectorXd empty_tail;
  std::array<StabilityConstraint, 2> stab{
      buildStabilityConstraint(input.x, empty_tail, dd(0), C, dt, params_),
      buildStabilityConstraint(input.y, empty_tail, dd(1), C, dt, params_)};
  for (int axis = 0; axis < 2; ++axis) {
    Eigen::VectorXd row = Eigen::VectorXd::Zero(nv);
    row.segment(axis * C, C) = stab[axis].coefficients;
    if (M > 0) row.segment(2 * C + axis * M, M) = tail_var;
    eq_rows.insert(eq_rows.begin() + axis, row);
    eq_rhs.insert(eq_rhs.begin() + axis, -tail_const(axis) + stab[axis].rhs.boundary_term);
  }

  qp.A_eq.resize(static_cast<Eigen::Index>(eq_rows.size()), nv);
  qp.b_eq.resize(static_cast<Eigen::Index>(eq_rows.size()));
  for (std::size_t r = 0; r < eq_rows.size(); ++r) {
    qp.A_eq.row(static_cast<Eigen::Index>(r)) = eq_rows[r].transpose();
    qp.b_eq(static_cast<Eigen::Index>(r)) = eq_rhs[r];
  }
  qp.A_in.resize(static_cast<Eigen::Index>(rows.size()), nv);
  qp.b_in.resize(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    qp.A_in.row(static_cast<Eigen::Index>(r)) = rows[r].transpose();
    qp.b_in(static_cast<Eigen::Index>(r)) = rhs[r];
  }

  // Warm start: the previous working set shifted by one sample.
  std::vector<int> warm;
  if (last_sample_ == k - 1) {
    for (int r : warm_start_)
      if (r >= 4 && r < 4 * C) warm.push_back(r - 4);
  }
  const QpSolutiond sol =
      warm.empty() ? solveQp(qp) : solveQp(qp, std::span<const int>(warm.data(), warm.size()));
  last_problem_ = qp;
  last_sample_ = k;

  MpcSolution out;
  out.diagnostics.status = sol.status;
  out.diagnostics.iterations = sol.iterations;
  out.diagnostics.active_set_size = static_cast<int>(sol.active_set.size());
  out.diagnostics.delta_d = dd;
  out.feasible = sol.solved();
  if (!out.feasible) {
    warm_start_.clear();
    out.zmp_vel_x = Eigen::VectorXd::Zero(C);
    out.zmp_vel_y = Eigen::VectorXd::Zero(C);
    return out;
  }
  warm_start_.assign(sol.active_set.begin(), sol.active_set.end());
  out.zmp_vel_x = sol.u.head(C);
  out.zmp_vel_y = sol.u.segment(C, C);
  for (int axis = 0; axis < 2; ++axis) {
    out.diagnostics.rhs(axis) = qp.b_eq(axis);
    out.diagnostics.stability_residual(axis) = std::abs(qp.A_eq.row(axis).dot(sol.u) - qp.b_eq(axis));
  }
  out.diagnostics.kkt_residual = checkKkt(qp, sol).maxOptimalityResidual();

  if (M > 0) {
    const Footstep last_old = plan_.step(free.last());
    for (int f = 0; f < M; ++f) {
      const int j = free.first + f;
      const Eigen::Vector2d pos(sol.u(2 * C + f), sol.u(2 * C + M + f));
      out.footstep_adjustments.push_back({j, pos});
      plan_.setStep(j, {pos.x(), pos.y(), plan_.step(j).orientation});
    }
    const Eigen::Vector2d shift = plan_.step(free.last()).position() - last_old.position();
    for (int j = free.last() + 1; j < plan_.plannedSteps(); ++j) {
      Footstep s = plan_.step(j);
      plan_.setStep(j, {s.x + shift.x(), s.y + shift.y(), s.orientation});
    }
  }
  return out;
}

std::vector<AxisStated> MpcController::predict(const AxisStated& start, const Eigen::VectorXd& zmp_vel,
                                               double dt, const LipParamsd& params) {
  const LipDiscreteModel<double> model(params, dt);
  std::vector<AxisStated> out;
  out.reserve(static_cast<std::size_t>(zmp_vel.size()) + 1);
  Eigen::Vector3d s = start.vector();
  out.push_back(start);
  for (Eigen::Index i = 0; i < zmp_vel.size(); ++i) {
    s = model.step(s, zmp_vel(i));
    out.push_back(AxisStated::fromVector(s));
  }
  return out;
}

}  // namespace ismpc
