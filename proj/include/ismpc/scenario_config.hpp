#pragma once

// JSON scenario files. Every object is checked against its key set; unknown
// keys and wrong types are reported with their JSON path.
//
// {
//   "name": "fig4_observer_constant",
//   "duration": 10.0,
//   "lip":        { "gravity": 9.81, "com_height": 0.33, "mass": 4.5 },
//   "gait":       { "ss_duration": 0.2, "ds_duration": 0.3, "initial_ds_duration": 0.6,
//                   "sample_dt": 0.01, "footprint_x": 0.05, "footprint_y": 0.05 },
//   "footsteps":  { "generator": { "step_length": 0.05, "step_width": 0.1, "count": 20,
//                                  "first_step_right": false },
//                   "steps": [ {"x": .., "y": .., "orientation": ..}, ... ],   (instead of generator)
//                   "initial_stance": {"x": 0, "y": 0, "orientation": 0},
//                   "periodic_extension": true, "max_step_displacement": 0.5 },
//   "mpc":        { "horizon": 100, "mode": "observer_based", "tail_length": 0,
//                   "observer_slope_term": false,
//                   "restriction": { "enabled": false, "rate": 0.00025 },
//                   "afs": { "enabled": false, "v_ref_x": 0.1, "v_ref_y": 0, "weight": 10,
//                            "max_step_length": 0.1, "min_step_width": 0.05,
//                            "max_step_width": 0.15 } },
//   "observer":   { "poles": [-8, -9, -10, -11, -12]   (or [re, im] pairs),
//                   "initial_estimate": { "x": [5 values], "y": [5 values] } },
//   "disturbance": { "x": <signal>, "y": <signal> },
//   "initial_state": { "x": {"com_pos": 0, "com_vel": 0, "zmp_pos": 0}, "y": {...} },
//   "noise":      { "amplitude": 0.0, "seed": 0 }
// }
//
// <signal> is one of
//   {"type": "constant", "value": v}
//   {"type": "sinusoid", "offset": o, "amplitude": a, "angular_freq": w, "phase": p}
//   {"type": "ramp", "value": v, "slope": s, "start_time": t0}
//   {"type": "force", "force": f, "mass": m}          (mass defaults to lip.mass)
//   {"type": "pendulum", "mass": .., "length": .., "damping": .., "initial_angle": .., "initial_rate": ..}
//   {"type": "sum", "terms": [<signal>, ...]}          (at most one pendulum term)
// Every section and key is optional; omitted values take the defaults above.

#include "ismpc/simulation.hpp"

#include <stdexcept>
#include <string>

namespace ismpc {

class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string path, const std::string& message)
      : std::runtime_error(path.empty() ? message : path + ": " + message), path_(std::move(path)) {}

  const std::string& path() const { return path_; }

 private:
  std::string path_;
};

/// Parses and validates a scenario. Throws ConfigError.
ScenarioConfig parseScenarioConfig(const std::string& json_text);
ScenarioConfig loadScenarioConfig(const std::string& file_path);

/// Canonical JSON for a scenario (explicit footstep list, every key present).
std::string scenarioConfigToJson(const ScenarioConfig& config, int indent = 2);

}  // namespace ismpc
