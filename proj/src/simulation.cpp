#include "ismpc/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

namespace ismpc {

std::string Termination::toString() const {
  switch (kind) {
    case TerminationKind::Completed: return "completed";
    case TerminationKind::Infeasible: return "infeasible_at(" + std::to_string(sample) + ")";
    case TerminationKind::Diverged: return "diverged_at(" + std::to_string(sample) + ")";
  }
  return "unknown";
}

int ScenarioConfig::samples() const {
  return static_cast<int>(std::llround(duration / timing.sample_dt));
}

FootstepPlan ScenarioConfig::makePlan() const { return FootstepPlan(steps, timing, initial_stance, plan_options); }

void ScenarioConfig::validate() const {
  timing.validate();
  if (steps.empty()) throw std::invalid_argument("footstep list is empty");
  if (!(robot_mass > 0.0)) throw std::invalid_argument("robot mass must be positive");
  if (!(duration > 0.0)) throw std::invalid_argument("duration must be positive");
  if (!(measurement_noise >= 0.0)) throw std::invalid_argument("measurement noise must be non-negative");
  if (std::abs(mpc.sample_dt - timing.sample_dt) > 1e-12)
    throw std::invalid_argument("mpc sample_dt differs from gait sample_dt");
  mpc.validate();
  const FootstepPlan plan = makePlan();
  if (!plan.periodic()) {
    const int tail = mpc.tail_length > 0 ? mpc.tail_length : defaultTailLength(lip.eta(), mpc.sample_dt);
    if (plan.explicitSamples() < samples() + mpc.horizon + tail + 1)
      throw std::invalid_argument("footstep plan is too short for the run duration without periodic extension");
  }
  for (const auto& d : disturbance) {
    d.signal.validate();
    if (d.pendulum) d.pendulum->validate();
  }
  {
    const ObserverGaind gain = designObserverGain(lip, observer.poles);
    if (!(timing.sample_dt * gain.max_pole_magnitude < DisturbanceObserverd::kStepGuard))
      throw std::invalid_argument("observer poles too fast for the sample time");
  }
}

namespace {

bool finite(const AxisStated& s) { return s.isFinite(); }

}  // namespace

ScenarioResult runScenario(const ScenarioConfig& config, const IterationHook& hook) {
  config.validate();
  const double dt = config.timing.sample_dt;
  const LipParamsd& lip = config.lip;
  const double eta2 = lip.eta2();

  MpcController mpc(config.mpc, config.makePlan(), lip);
  const DisturbanceObserverd observer(lip, designObserverGain(lip, config.observer.poles), dt);

  ScenarioResult res;
  res.name = config.name;
  res.mode = config.mpc.mode;
  res.sample_dt = dt;
  res.lip = lip;
  res.timing = config.timing;
  res.initial_stance = config.initial_stance;

  std::array<AxisStated, 2> state;
  if (config.initial_state) {
    state = *config.initial_state;
  } else {
    state[0] = {config.initial_stance.x, 0.0, config.initial_stance.x};
    state[1] = {config.initial_stance.y, 0.0, config.initial_stance.y};
  }

  std::mt19937_64 rng(config.seed);
  std::uniform_real_distribution<double> noise(-config.measurement_noise, config.measurement_noise);
  auto measure = [&](const AxisStated& s) {
    ObserverMeasurement<double> m{s.com_pos, s.zmp_pos};
    if (config.measurement_noise > 0.0) {
      m.com_pos += noise(rng);
      m.zmp_pos += noise(rng);
    }
    return m;
  };

  std::array<ObserverStated, 2> est;
  for (int a = 0; a < 2; ++a) {
    if (config.observer.initial_estimate) {
      est[a].estimate = (*config.observer.initial_estimate)[a];
    } else {
      est[a].estimate.setZero();
      est[a].estimate(0) = state[a].com_pos;
      est[a].estimate(2) = state[a].zmp_pos;
    }
  }

  std::array<std::optional<PendulumEmulator>, 2> pendulum;
  for (int a = 0; a < 2; ++a)
    if (config.disturbance[a].pendulum) pendulum[a].emplace(*config.disturbance[a].pendulum);

  const int n = config.samples();
  const int preview = mpc.tailLength();
  const double guard = kDivergenceFactor * std::max(config.timing.footprint_x, config.timing.footprint_y);
  res.samples.reserve(static_cast<std::size_t>(n));

  for (int k = 0; k < n; ++k) {
    const double t = k * dt;
    SampleRecord rec;
    rec.sample = k;
    rec.time = t;
    rec.state = state;
    rec.estimate = est;
    rec.region = mpc.plan().regionAt(k);
    rec.region_violation = rec.region.violation({state[0].zmp_pos, state[1].zmp_pos});

    std::array<double, 2> pivot_accel{};
    for (int a = 0; a < 2; ++a) {
      const DisturbanceSignal& sig = config.disturbance[a].signal;
      rec.disturbance(a) = sig.at(t);
      rec.disturbance_slope(a) = sig.secantSlope(t, dt);
      if (pendulum[a]) {
        pivot_accel[a] = eta2 * (state[a].com_pos - state[a].zmp_pos);
        rec.disturbance(a) += pendulum[a]->disturbance(pivot_accel[a]);
      }
    }

    MpcInput in;
    in.sample = k;
    in.x = state[0];
    in.y = state[1];
    if (config.mpc.mode == StabilityMode::ObserverBased) {
      in.d_hat = Eigen::Vector2d(est[0].disturbance(), est[1].disturbance());
      in.d_hat_slope = Eigen::Vector2d(est[0].disturbanceSlope(), est[1].disturbanceSlope());
    } else if (config.mpc.mode == StabilityMode::KnownDisturbance) {
      std::array<KnownDisturbancePreview, 2> known;
      for (int a = 0; a < 2; ++a) {
        known[a].value = rec.disturbance(a);
        known[a].slopes.resize(static_cast<std::size_t>(preview));
        const DisturbanceSignal& sig = config.disturbance[a].signal;
        for (int i = 0; i < preview; ++i) known[a].slopes[static_cast<std::size_t>(i)] = sig.secantSlope(t + i * dt, dt);
      }
      in.known_x = known[0];
      in.known_y = known[1];
    }

    const MpcSolution sol = mpc.iterate(in);
    if (hook) hook(k, mpc, sol);
    rec.mpc = sol.diagnostics;
    rec.feasible = sol.feasible;
    if (!sol.feasible) {
      res.samples.push_back(rec);
      res.termination = {TerminationKind::Infeasible, k};
      break;
    }
    rec.zmp_vel = sol.firstInput();
    res.samples.push_back(rec);

    const std::array<ObserverMeasurement<double>, 2> meas{measure(state[0]), measure(state[1])};
    for (int a = 0; a < 2; ++a) {
      // The pendulum reaction is held over the step; the signal part is affine.
      const AffineDisturbanced d{rec.disturbance(a), rec.disturbance_slope(a)};
      state[a] = stepExact(state[a], rec.zmp_vel(a), d, dt, lip);
      est[a] = observer.update(est[a], rec.zmp_vel(a), meas[a]);
      if (pendulum[a]) pendulum[a]->advance(pivot_accel[a], dt);
    }

    bool diverged = false;
    for (int a = 0; a < 2; ++a)
      if (!finite(state[a]) || std::abs(state[a].com_pos - state[a].zmp_pos) > guard) diverged = true;
    if (diverged) {
      res.termination = {TerminationKind::Diverged, k + 1};
      break;
    }
  }

  // Steps whose single support started within the run.
  const int last_sample = res.samples.empty() ? 0 : res.samples.back().sample;
  int used = 0;
  while (mpc.plan().singleSupportStart(used) <= last_sample) ++used;
  used = std::max(used, 1);
  for (int j = 0; j < used; ++j) {
    res.planned_steps.push_back(mpc.nominalPlan().step(j));
    res.realized_steps.push_back(mpc.plan().step(j));
  }
  return res;
}

}  // namespace ismpc
