#include "ismpc/trace_io.hpp"

#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace ismpc {

using nlohmann::json;

const std::vector<std::string>& traceColumns() {
  static const std::vector<std::string> cols = {
      "sample",         "time",
      "x_com",          "x_com_vel",
      "x_zmp",          "y_com",
      "y_com_vel",      "y_zmp",
      "x_zmp_vel",      "y_zmp_vel",
      "x_dist",         "y_dist",
      "x_dist_slope",   "y_dist_slope",
      "x_est_com",      "x_est_com_vel",
      "x_est_zmp",      "x_est_dist",
      "x_est_dist_slope", "y_est_com",
      "y_est_com_vel",  "y_est_zmp",
      "y_est_dist",     "y_est_dist_slope",
      "region_x",       "region_y",
      "region_orientation", "region_violation",
      "x_delta_d",      "y_delta_d",
      "feasible",       "qp_iterations",
      "active_set_size",
  };
  return cols;
}

namespace {

void put(std::string& line, double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  if (!line.empty()) line += ',';
  line += buf;
}

void put(std::string& line, int v) {
  if (!line.empty()) line += ',';
  line += std::to_string(v);
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double toDouble(const std::string& s, int line) {
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size())
    throw std::runtime_error("trace.csv line " + std::to_string(line) + ": bad number '" + s + "'");
  return v;
}

int toInt(const std::string& s, int line) {
  const double v = toDouble(s, line);
  if (v != std::floor(v)) throw std::runtime_error("trace.csv line " + std::to_string(line) + ": expected an integer");
  return static_cast<int>(v);
}

}  // namespace

void writeTraceCsv(std::ostream& out, const ScenarioResult& result) {
  std::string header;
  for (const auto& c : traceColumns()) header += (header.empty() ? "" : ",") + c;
  out << header << '\n';
  for (const SampleRecord& r : result.samples) {
    std::string line;
    put(line, r.sample);
    put(line, r.time);
    for (int a = 0; a < 2; ++a) {
      put(line, r.state[a].com_pos);
      put(line, r.state[a].com_vel);
      put(line, r.state[a].zmp_pos);
    }
    put(line, r.zmp_vel(0));
    put(line, r.zmp_vel(1));
    put(line, r.disturbance(0));
    put(line, r.disturbance(1));
    put(line, r.disturbance_slope(0));
    put(line, r.disturbance_slope(1));
    for (int a = 0; a < 2; ++a)
      for (int i = 0; i < 5; ++i) put(line, r.estimate[a].estimate(i));
    put(line, r.region.center(0));
    put(line, r.region.center(1));
    put(line, r.region.orientation);
    put(line, r.region_violation);
    put(line, r.mpc.delta_d(0));
    put(line, r.mpc.delta_d(1));
    put(line, r.feasible ? 1 : 0);
    put(line, r.mpc.iterations);
    put(line, r.mpc.active_set_size);
    out << line << '\n';
  }
}

std::vector<SampleRecord> readTraceCsv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("trace.csv: empty input");
  const std::vector<std::string> header = split(line);
  if (header != traceColumns()) throw std::runtime_error("trace.csv: unexpected header");
  std::vector<SampleRecord> out;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const std::vector<std::string> c = split(line);
    if (c.size() != header.size())
      throw std::runtime_error("trace.csv line " + std::to_string(lineno) + ": wrong number of columns");
    std::size_t i = 0;
    auto d = [&]() { return toDouble(c[i++], lineno); };
    SampleRecord r;
    r.sample = toInt(c[i++], lineno);
    r.time = d();
    for (int a = 0; a < 2; ++a) {
      r.state[a].com_pos = d();
      r.state[a].com_vel = d();
      r.state[a].zmp_pos = d();
    }
    r.zmp_vel(0) = d();
    r.zmp_vel(1) = d();
    r.disturbance(0) = d();
    r.disturbance(1) = d();
    r.disturbance_slope(0) = d();
    r.disturbance_slope(1) = d();
    for (int a = 0; a < 2; ++a)
      for (int k = 0; k < 5; ++k) r.estimate[a].estimate(k) = d();
    r.region.center(0) = d();
    r.region.center(1) = d();
    r.region.orientation = d();
    r.region_violation = d();
    r.mpc.delta_d(0) = d();
    r.mpc.delta_d(1) = d();
    r.feasible = toInt(c[i++], lineno) != 0;
    r.mpc.iterations = toInt(c[i++], lineno);
    r.mpc.active_set_size = toInt(c[i++], lineno);
    out.push_back(r);
  }
  return out;
}

RunMetrics computeMetrics(const ScenarioResult& result) {
  RunMetrics m;
  m.max_region_violation = -std::numeric_limits<double>::infinity();
  for (const SampleRecord& r : result.samples) {
    for (int a = 0; a < 2; ++a) {
      const double div = std::abs(decompose(r.state[a], result.lip).unstable - r.state[a].zmp_pos);
      m.max_divergence(a) = std::max(m.max_divergence(a), div);
      if (r.feasible) m.max_stability_residual(a) = std::max(m.max_stability_residual(a), r.mpc.stability_residual(a));
    }
    m.max_region_violation = std::max(m.max_region_violation, r.region_violation);
    if (r.feasible) m.max_kkt_residual = std::max(m.max_kkt_residual, r.mpc.kkt_residual);
    m.total_qp_iterations += r.mpc.iterations;
  }
  if (result.samples.empty()) m.max_region_violation = 0.0;
  if (!result.samples.empty()) {
    const SampleRecord& last = result.samples.back();
    for (int a = 0; a < 2; ++a) m.final_estimate_error(a) = std::abs(last.estimate[a].disturbance() - last.disturbance(a));
  }
  return m;
}

namespace {

json vec2(const Eigen::Vector2d& v) { return json::array({v(0), v(1)}); }

json stepsJson(const std::vector<Footstep>& steps) {
  json a = json::array();
  for (const auto& s : steps) a.push_back(json::array({s.x, s.y, s.orientation}));
  return a;
}

}  // namespace

std::string summaryJson(const ScenarioResult& result, const std::string& config_json) {
  const RunMetrics m = computeMetrics(result);
  json j;
  j["name"] = result.name;
  j["mode"] = toString(result.mode);
  j["termination"] = result.termination.toString();
  j["termination_kind"] = result.termination.kind == TerminationKind::Completed    ? "completed"
                          : result.termination.kind == TerminationKind::Infeasible ? "infeasible"
                                                                                   : "diverged";
  j["termination_sample"] = result.termination.sample;
  j["samples"] = result.samples.size();
  j["sample_dt"] = result.sample_dt;
  j["simulated_time"] = static_cast<double>(result.samples.size()) * result.sample_dt;
  j["metrics"] = {{"max_divergence", vec2(m.max_divergence)},
                  {"max_region_violation", m.max_region_violation},
                  {"final_estimate_error", vec2(m.final_estimate_error)},
                  {"max_stability_residual", vec2(m.max_stability_residual)},
                  {"max_kkt_residual", m.max_kkt_residual},
                  {"total_qp_iterations", m.total_qp_iterations}};
  if (!result.samples.empty()) {
    const SampleRecord& last = result.samples.back();
    j["final"] = {{"com", json::array({last.state[0].com_pos, last.state[1].com_pos})},
                  {"zmp", json::array({last.state[0].zmp_pos, last.state[1].zmp_pos})},
                  {"disturbance", vec2(last.disturbance)},
                  {"estimate", json::array({last.estimate[0].disturbance(), last.estimate[1].disturbance()})}};
  }
  j["initial_stance"] = json::array({result.initial_stance.x, result.initial_stance.y, result.initial_stance.orientation});
  j["planned_footsteps"] = stepsJson(result.planned_steps);
  j["realized_footsteps"] = stepsJson(result.realized_steps);
  if (!config_json.empty()) j["config"] = json::parse(config_json);
  return j.dump(2);
}

void writeDiagnosticsJsonl(std::ostream& out, const ScenarioResult& result) {
  const char* mode = toString(result.mode);
  for (const SampleRecord& r : result.samples) {
    json j = {{"sample", r.sample},
              {"mode", mode},
              {"delta_d", vec2(r.mpc.delta_d)},
              {"rhs", vec2(r.mpc.rhs)},
              {"feasible", r.feasible},
              {"status", toString(r.mpc.status)},
              {"active_set_size", r.mpc.active_set_size},
              {"iterations", r.mpc.iterations},
              {"stability_residual", vec2(r.mpc.stability_residual)},
              {"kkt_residual", r.mpc.kkt_residual}};
    out << j.dump() << '\n';
  }
}

TraceDifference compareTraces(const ScenarioResult& a, const ScenarioResult& b, double after_time) {
  TraceDifference d;
  d.after_time = after_time;
  const std::size_t n = std::min(a.samples.size(), b.samples.size());
  double sq = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const SampleRecord& ra = a.samples[k];
    const SampleRecord& rb = b.samples[k];
    const double e = std::hypot(ra.state[0].com_pos - rb.state[0].com_pos, ra.state[1].com_pos - rb.state[1].com_pos);
    d.max_com = std::max(d.max_com, e);
    if (ra.time > after_time) d.max_com_after = std::max(d.max_com_after, e);
    sq += e * e;
  }
  d.compared_samples = static_cast<int>(n);
  d.rms_com = n > 0 ? std::sqrt(sq / static_cast<double>(n)) : 0.0;
  return d;
}

}  // namespace ismpc
