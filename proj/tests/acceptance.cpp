// Acceptance checks: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails.

#include "ismpc/mpc.hpp"
#include "ismpc/observer.hpp"
#include "ismpc/qp.hpp"
#include "ismpc/scenario_config.hpp"
#include "ismpc/simulation.hpp"
#include "ismpc/trace_io.hpp"
#include "oracles.hpp"

#include <Eigen/Eigenvalues>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <random>
#include <string>
#include <vector>

using namespace ismpc;

namespace {

const std::filesystem::path kConfigs = ISMPC_CONFIG_DIR;

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c);
  return buf;
}

ScenarioConfig standing(StabilityMode mode, double duration) {
  ScenarioConfig c;
  c.name = "standing";
  c.steps = {Footstep{}};
  c.mpc.mode = mode;
  c.duration = duration;
  return c;
}

ScenarioConfig walking(StabilityMode mode, double duration) {
  ScenarioConfig c;
  c.name = "walking";
  c.steps = GaitGenerator{}.generate();
  c.mpc.mode = mode;
  c.duration = duration;
  return c;
}

Outcome steadyStateOffset() {
  const auto t0 = std::chrono::steady_clock::now();
  const double d = 0.4;
  ScenarioConfig c = standing(StabilityMode::KnownDisturbance, 6.0);
  for (auto& ax : c.disturbance) ax.signal = ConstantSignal{d};
  const ScenarioResult r = runScenario(c);
  const double elapsed = seconds(t0);
  const double expected = d / c.lip.eta2();
  double worst = 0.0;
  int checked = 0;
  for (const auto& s : r.samples)
    if (s.time >= 5.0)
      for (int a = 0; a < 2; ++a) {
        // The CoM sits behind the ZMP, opposite to the push.
        worst = std::max(worst, std::abs((s.state[a].zmp_pos - s.state[a].com_pos) - expected));
        ++checked;
      }
  return {r.completed() && checked > 0 && worst < 1e-4 && elapsed < 5.0,
          fmt("offset error %.3g m vs d/eta^2 = %.6f m, runtime %.2f s", worst, expected, elapsed)};
}

Outcome deltaDEquivalence() {
  const auto t0 = std::chrono::steady_clock::now();
  const LipParamsd lip;
  const double eta = lip.eta(), dt = 0.01;
  std::mt19937 rng(2024);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::uniform_int_distribution<int> len(1, 400);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> slopes(static_cast<std::size_t>(len(rng)));
    for (auto& s : slopes) s = 5.0 * u(rng);
    const double v = u(rng);
    std::vector<double> knots{v};
    for (double s : slopes) knots.push_back(knots.back() + s * dt);
    std::vector<double> breaks;
    for (std::size_t i = 0; i <= slopes.size(); ++i) breaks.push_back(dt * static_cast<double>(i));
    auto d = [&](double tau) {
      const std::size_t i = std::min(static_cast<std::size_t>(tau / dt), slopes.size() - 1);
      return knots[i] + slopes[i] * (tau - dt * static_cast<double>(i));
    };
    const double T = breaks.back();
    const double head = oracle::integratePiecewise([&](double tau) { return std::exp(-eta * tau) * d(tau); }, breaks);
    const double ref = (head + std::exp(-eta * T) * knots.back() / eta) / eta;
    worst = std::max(worst, std::abs(deltaDKnown(v, slopes, eta, dt) - ref));
  }
  const double elapsed = seconds(t0);
  return {worst < 1e-6 && elapsed < 10.0, fmt("max |closed form - quadrature| = %.3g, runtime %.2f s", worst, elapsed)};
}

Outcome observerConvergence() {
  const LipParamsd lip;
  const std::vector<std::complex<double>> poles = defaultObserverPoles();
  const ObserverModel<double> model(lip);
  const ObserverGaind gain = designObserverGain(lip, poles);
  Eigen::EigenSolver<Eigen::Matrix<double, 5, 5>> es(model.A + gain.G * model.C);
  std::vector<std::complex<double>> eig(es.eigenvalues().data(), es.eigenvalues().data() + 5);
  double pole_err = 0.0;
  for (const auto& p : poles) {
    auto it = std::min_element(eig.begin(), eig.end(), [&](auto a, auto b) { return std::abs(a - p) < std::abs(b - p); });
    pole_err = std::max(pole_err, std::abs(*it - p) / std::abs(p));
    eig.erase(it);
  }

  double worst_rel = 0.0;
  bool completed = true;
  const std::vector<DisturbanceSignal> signals = {ConstantSignal{0.4}, RampSignal{0.2, 0.1, 0.0}};
  for (const auto& sig : signals) {
    // A single footprint cannot absorb the estimation transient, so the
    // estimate is checked along a walk.
    ScenarioConfig c = walking(StabilityMode::ObserverBased, 4.0);
    for (auto& ax : c.disturbance) ax.signal = sig;
    const ScenarioResult r = runScenario(c);
    completed = completed && r.completed();
    for (const auto& s : r.samples)
      if (s.time >= 2.0)
        for (int a = 0; a < 2; ++a)
          worst_rel = std::max(worst_rel, std::abs(s.estimate[a].disturbance() - s.disturbance(a)) /
                                              std::abs(s.disturbance(a)));
  }
  return {completed && worst_rel < 0.01 && pole_err < 1e-6,
          fmt("max relative estimate error after 2 s %.3g, pole mismatch %.3g", worst_rel, pole_err)};
}

Outcome knownVsObserved() {
  const ScenarioResult known = runScenario(loadScenarioConfig((kConfigs / "fig3_known_disturbance.json").string()));
  const ScenarioResult obs = runScenario(loadScenarioConfig((kConfigs / "fig4_observer_constant.json").string()));
  const TraceDifference d = compareTraces(known, obs, 2.0);
  return {known.completed() && obs.completed() && d.max_com_after < 0.005,
          fmt("max CoM difference for t > 2 s: %.4f m (overall %.4f m)", d.max_com_after, d.max_com)};
}

Outcome internalStability() {
  struct Case {
    StabilityMode mode;
    double d;
  };
  double worst_div = 0.0, worst_region = -1.0;
  bool all_completed = true;
  std::string failed;
  for (const Case& cs : {Case{StabilityMode::Nominal, 0.0}, Case{StabilityMode::KnownDisturbance, 0.4},
                         Case{StabilityMode::ObserverBased, 0.4}}) {
    ScenarioConfig c = walking(cs.mode, 40.0);
    for (auto& ax : c.disturbance) ax.signal = ConstantSignal{cs.d};
    const ScenarioResult r = runScenario(c);
    if (!r.completed()) {
      all_completed = false;
      failed += std::string(" ") + toString(cs.mode) + ":" + r.termination.toString();
    }
    const RunMetrics m = computeMetrics(r);
    worst_div = std::max(worst_div, m.max_divergence.maxCoeff());
    worst_region = std::max(worst_region, m.max_region_violation);
  }
  return {all_completed && worst_div < 0.2 && worst_region <= 1e-8,
          fmt("max |x_u - x_z| = %.4f m, max region residual %.3g", worst_div, worst_region) + failed};
}

Outcome feasibilityPhaseChange() {
  const ScenarioResult off = runScenario(loadScenarioConfig((kConfigs / "fig7_no_restriction.json").string()));
  const ScenarioResult on = runScenario(loadScenarioConfig((kConfigs / "fig7_restriction.json").string()));
  return {off.termination.kind == TerminationKind::Infeasible && on.completed(),
          "restriction off: " + off.termination.toString() + ", restriction on: " + on.termination.toString()};
}

Outcome afsLateralDisplacement() {
  const ScenarioConfig c = loadScenarioConfig((kConfigs / "fig6_afs.json").string());
  const ScenarioResult r = runScenario(c);
  // Mean lateral offset of the adjusted footsteps from the nominal plan;
  // the push is along +y, so the offset must be negative.
  double sum = 0.0;
  int n = 0;
  for (std::size_t j = 1; j < r.realized_steps.size(); ++j) {
    sum += r.realized_steps[j].y - r.planned_steps[j].y;
    ++n;
  }
  const double mean = n > 0 ? sum / n : 0.0;
  const double push = c.disturbance[1].signal.at(0.0);
  return {r.completed() && n > 0 && mean * push < 0.0,
          fmt("mean lateral footstep offset %.4f m over %.0f steps (d_y = %.2f)", mean, n, push) + ", " +
              r.termination.toString()};
}

Outcome qpOracle() {
  std::mt19937 rng(77);
  std::normal_distribution<double> nd;
  std::uniform_real_distribution<double> ud(0.0, 1.0);
  std::uniform_int_distribution<int> nn(1, 10), mm(0, 12), ee(0, 2);
  double worst_obj = 0.0, worst_kkt = 0.0;
  int solved = 0, infeasible = 0, mismatched = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const int n = nn(rng);
    const int me = std::min(ee(rng), n - 1);
    const int mi = mm(rng);
    QpProblemd p;
    const Eigen::MatrixXd L = Eigen::MatrixXd::NullaryExpr(n, n, [&]() { return nd(rng); });
    p.H = L * L.transpose() + 0.05 * Eigen::MatrixXd::Identity(n, n);
    p.g = Eigen::VectorXd::NullaryExpr(n, [&]() { return nd(rng); });
    const Eigen::VectorXd x0 = Eigen::VectorXd::NullaryExpr(n, [&]() { return nd(rng); });
    p.A_eq = Eigen::MatrixXd::NullaryExpr(me, n, [&]() { return nd(rng); });
    p.b_eq = p.A_eq * x0;
    p.A_in = Eigen::MatrixXd::NullaryExpr(mi, n, [&]() { return nd(rng); });
    const bool feasible = trial % 5 != 4;
    p.b_in = p.A_in * x0 + Eigen::VectorXd::NullaryExpr(mi, [&]() { return feasible ? ud(rng) : ud(rng) - 0.7; });

    const auto ref = oracle::enumerateQp(p.H, p.g, p.A_eq, p.b_eq, p.A_in, p.b_in);
    const auto sol = solveQp(p);
    if (!ref) {
      if (sol.status != QpStatus::Infeasible) ++mismatched;
      ++infeasible;
      continue;
    }
    if (!sol.solved()) {
      ++mismatched;
      continue;
    }
    ++solved;
    const double obj = 0.5 * sol.u.dot(p.H * sol.u) + p.g.dot(sol.u);
    worst_obj = std::max(worst_obj, std::abs(obj - ref->objective));
    worst_kkt = std::max(worst_kkt, checkKkt(p, sol).maxOptimalityResidual());
  }
  return {mismatched == 0 && worst_obj < 1e-7 && worst_kkt <= 1e-8,
          fmt("%.0f solved, %.0f infeasible, ", solved, infeasible) +
              fmt("max objective gap %.3g, max KKT residual %.3g, ", worst_obj, worst_kkt) +
              fmt("%.0f status mismatches", mismatched)};
}

Outcome nominalRegression() {
  const ScenarioResult a = runScenario(walking(StabilityMode::Nominal, 10.0));
  const ScenarioResult b = runScenario(walking(StabilityMode::ObserverBased, 10.0));
  double worst = 0.0;
  const std::size_t n = std::min(a.samples.size(), b.samples.size());
  for (std::size_t k = 0; k < n; ++k)
    for (int ax = 0; ax < 2; ++ax) {
      worst = std::max(worst, std::abs(a.samples[k].state[ax].com_pos - b.samples[k].state[ax].com_pos));
      worst = std::max(worst, std::abs(a.samples[k].state[ax].zmp_pos - b.samples[k].state[ax].zmp_pos));
    }
  return {a.completed() && b.completed() && a.samples.size() == b.samples.size() && worst < 1e-6,
          fmt("max trace difference %.3g m over %.0f samples", worst, static_cast<double>(n))};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"1 steady-state CoM/ZMP offset", steadyStateOffset},
      {"2 disturbance correction closed form vs quadrature", deltaDEquivalence},
      {"3 observer convergence and pole placement", observerConvergence},
      {"4 known vs observed disturbance traces", knownVsObserved},
      {"5 internal stability over 40 s walks", internalStability},
      {"6 feasibility recovered by constraint restriction", feasibilityPhaseChange},
      {"7 automatic footstep lateral displacement", afsLateralDisplacement},
      {"8 QP solver vs enumeration oracle", qpOracle},
      {"9 zero-disturbance observer vs nominal", nominalRegression},
  };
  int failures = 0;
  for (const auto& [name, check] : criteria) {
    Outcome o;
    try {
      o = check();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    if (!o.pass) ++failures;
    std::printf("%s criterion %s: %s\n", o.pass ? "PASS" : "FAIL", name.c_str(), o.detail.c_str());
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
