#include "ismpc/scenario_config.hpp"

#include <json.hpp>

#include <fstream>
#include <set>
#include <sstream>

namespace ismpc {

using nlohmann::json;

namespace {

class Obj {
 public:
  Obj(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(path_, "expected an object");
  }

  std::string at(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  const json* raw(const char* key) {
    seen_.insert(key);
    const auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  double number(const char* key, double def) {
    const json* v = raw(key);
    if (!v) return def;
    if (!v->is_number()) throw ConfigError(at(key), "expected a number");
    const double d = v->get<double>();
    if (!std::isfinite(d)) throw ConfigError(at(key), "expected a finite number");
    return d;
  }

  int integer(const char* key, int def) {
    const json* v = raw(key);
    if (!v) return def;
    if (!v->is_number_integer()) throw ConfigError(at(key), "expected an integer");
    return v->get<int>();
  }

  bool boolean(const char* key, bool def) {
    const json* v = raw(key);
    if (!v) return def;
    if (!v->is_boolean()) throw ConfigError(at(key), "expected true or false");
    return v->get<bool>();
  }

  std::string string(const char* key, const std::string& def) {
    const json* v = raw(key);
    if (!v) return def;
    if (!v->is_string()) throw ConfigError(at(key), "expected a string");
    return v->get<std::string>();
  }

  std::optional<Obj> child(const char* key) {
    const json* v = raw(key);
    if (!v) return std::nullopt;
    return Obj(*v, at(key));
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!seen_.count(it.key())) throw ConfigError(at(it.key()), "unknown key");
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

Footstep parseFootstep(Obj o) {
  Footstep f;
  f.x = o.number("x", 0.0);
  f.y = o.number("y", 0.0);
  f.orientation = o.number("orientation", 0.0);
  o.finish();
  return f;
}

AxisStated parseAxisState(Obj o) {
  AxisStated s;
  s.com_pos = o.number("com_pos", 0.0);
  s.com_vel = o.number("com_vel", 0.0);
  s.zmp_pos = o.number("zmp_pos", 0.0);
  o.finish();
  return s;
}

void parseSignal(const json& j, const std::string& path, double robot_mass, AxisDisturbance& out,
                 std::vector<DisturbanceSignal>& terms) {
  Obj o(j, path);
  const std::string type = o.string("type", "");
  if (type == "constant") {
    terms.push_back(ConstantSignal{o.number("value", 0.0)});
  } else if (type == "sinusoid") {
    SinusoidSignal s;
    s.offset = o.number("offset", 0.0);
    s.amplitude = o.number("amplitude", 0.0);
    s.angular_freq = o.number("angular_freq", 0.0);
    s.phase = o.number("phase", 0.0);
    terms.push_back(s);
  } else if (type == "ramp") {
    RampSignal s;
    s.value = o.number("value", 0.0);
    s.slope = o.number("slope", 0.0);
    s.start_time = o.number("start_time", 0.0);
    terms.push_back(s);
  } else if (type == "force") {
    ForceSignal s;
    s.force = o.number("force", 0.0);
    s.mass = o.number("mass", robot_mass);
    if (!(s.mass > 0.0)) throw ConfigError(o.at("mass"), "must be positive");
    terms.push_back(s);
  } else if (type == "pendulum") {
    if (out.pendulum) throw ConfigError(path, "at most one pendulum per axis");
    PendulumParams p;
    p.mass = o.number("mass", p.mass);
    p.length = o.number("length", p.length);
    p.damping = o.number("damping", p.damping);
    p.initial_angle = o.number("initial_angle", p.initial_angle);
    p.initial_rate = o.number("initial_rate", p.initial_rate);
    p.robot_mass = robot_mass;
    try {
      p.validate();
    } catch (const std::invalid_argument& e) {
      throw ConfigError(path, e.what());
    }
    out.pendulum = p;
  } else if (type == "sum") {
    const json* t = o.raw("terms");
    if (!t || !t->is_array()) throw ConfigError(o.at("terms"), "expected an array of signals");
    for (std::size_t i = 0; i < t->size(); ++i)
      parseSignal((*t)[i], o.at("terms") + "[" + std::to_string(i) + "]", robot_mass, out, terms);
  } else if (type.empty()) {
    throw ConfigError(o.at("type"), "missing signal type");
  } else {
    throw ConfigError(o.at("type"), "unknown signal type '" + type + "'");
  }
  o.finish();
}

AxisDisturbance parseDisturbance(const json& j, const std::string& path, double robot_mass) {
  AxisDisturbance d;
  std::vector<DisturbanceSignal> terms;
  parseSignal(j, path, robot_mass, d, terms);
  if (terms.size() == 1)
    d.signal = terms.front();
  else if (!terms.empty())
    d.signal = SumSignal{std::move(terms)};
  return d;
}

std::vector<std::complex<double>> parsePoles(const json& j, const std::string& path) {
  if (!j.is_array()) throw ConfigError(path, "expected an array of poles");
  std::vector<std::complex<double>> poles;
  for (std::size_t i = 0; i < j.size(); ++i) {
    const json& p = j[i];
    const std::string at = path + "[" + std::to_string(i) + "]";
    if (p.is_number()) {
      poles.emplace_back(p.get<double>(), 0.0);
    } else if (p.is_array() && p.size() == 2 && p[0].is_number() && p[1].is_number()) {
      poles.emplace_back(p[0].get<double>(), p[1].get<double>());
    } else {
      throw ConfigError(at, "expected a number or a [re, im] pair");
    }
  }
  return poles;
}

Eigen::Matrix<double, 5, 1> parseEstimate(const json* j, const std::string& path) {
  Eigen::Matrix<double, 5, 1> v = Eigen::Matrix<double, 5, 1>::Zero();
  if (!j) return v;
  if (!j->is_array() || j->size() != 5) throw ConfigError(path, "expected 5 numbers");
  for (int i = 0; i < 5; ++i) {
    if (!(*j)[static_cast<std::size_t>(i)].is_number()) throw ConfigError(path, "expected 5 numbers");
    v(i) = (*j)[static_cast<std::size_t>(i)].get<double>();
  }
  return v;
}

}  // namespace

ScenarioConfig parseScenarioConfig(const std::string& json_text) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError("", std::string("invalid JSON: ") + e.what());
  }
  ScenarioConfig c;
  Obj o(root, "");
  c.name = o.string("name", c.name);
  c.duration = o.number("duration", c.duration);

  if (auto lip = o.child("lip")) {
    const double g = lip->number("gravity", c.lip.gravity());
    const double h = lip->number("com_height", c.lip.comHeight());
    if (!(g > 0.0)) throw ConfigError(lip->at("gravity"), "must be positive");
    if (!(h > 0.0)) throw ConfigError(lip->at("com_height"), "must be positive");
    c.lip = LipParamsd(g, h);
    c.robot_mass = lip->number("mass", c.robot_mass);
    lip->finish();
  }

  if (auto gait = o.child("gait")) {
    GaitTiming& t = c.timing;
    t.ss_duration = gait->number("ss_duration", t.ss_duration);
    t.ds_duration = gait->number("ds_duration", t.ds_duration);
    t.initial_ds_duration = gait->number("initial_ds_duration", t.initial_ds_duration);
    t.sample_dt = gait->number("sample_dt", t.sample_dt);
    t.footprint_x = gait->number("footprint_x", t.footprint_x);
    t.footprint_y = gait->number("footprint_y", t.footprint_y);
    gait->finish();
  }
  c.mpc.sample_dt = c.timing.sample_dt;

  bool have_steps = false;
  if (auto fs = o.child("footsteps")) {
    const json* steps = fs->raw("steps");
    auto gen = fs->child("generator");
    if (steps && gen) throw ConfigError(fs->at("steps"), "give either 'steps' or 'generator', not both");
    if (steps) {
      if (!steps->is_array()) throw ConfigError(fs->at("steps"), "expected an array of footsteps");
      for (std::size_t i = 0; i < steps->size(); ++i)
        c.steps.push_back(parseFootstep(Obj((*steps)[i], fs->at("steps") + "[" + std::to_string(i) + "]")));
      have_steps = true;
    }
    if (gen) {
      GaitGenerator g;
      g.step_length = gen->number("step_length", g.step_length);
      g.step_width = gen->number("step_width", g.step_width);
      g.count = gen->integer("count", g.count);
      g.first_step_right = gen->boolean("first_step_right", g.first_step_right);
      gen->finish();
      if (g.count < 1) throw ConfigError(gen->at("count"), "must be at least 1");
      c.steps = g.generate();
      have_steps = true;
    }
    if (auto init = fs->child("initial_stance")) c.initial_stance = parseFootstep(*init);
    c.plan_options.periodic_extension = fs->boolean("periodic_extension", c.plan_options.periodic_extension);
    c.plan_options.max_step_displacement = fs->number("max_step_displacement", c.plan_options.max_step_displacement);
    fs->finish();
  }
  if (!have_steps) c.steps = GaitGenerator{}.generate();

  if (auto mpc = o.child("mpc")) {
    MpcConfig& m = c.mpc;
    m.horizon = mpc->integer("horizon", m.horizon);
    m.tail_length = mpc->integer("tail_length", m.tail_length);
    m.observer_slope_term = mpc->boolean("observer_slope_term", m.observer_slope_term);
    const std::string mode = mpc->string("mode", toString(m.mode));
    try {
      m.mode = stabilityModeFromString(mode);
    } catch (const std::invalid_argument&) {
      throw ConfigError(mpc->at("mode"), "unknown mode '" + mode + "' (nominal, known_disturbance, observer_based)");
    }
    if (auto r = mpc->child("restriction")) {
      m.restriction.enabled = r->boolean("enabled", m.restriction.enabled);
      m.restriction.rate = r->number("rate", m.restriction.rate);
      r->finish();
    }
    if (auto a = mpc->child("afs")) {
      m.afs.enabled = a->boolean("enabled", m.afs.enabled);
      m.afs.v_ref_x = a->number("v_ref_x", m.afs.v_ref_x);
      m.afs.v_ref_y = a->number("v_ref_y", m.afs.v_ref_y);
      m.afs.weight = a->number("weight", m.afs.weight);
      m.afs.max_step_length = a->number("max_step_length", m.afs.max_step_length);
      m.afs.min_step_width = a->number("min_step_width", m.afs.min_step_width);
      m.afs.max_step_width = a->number("max_step_width", m.afs.max_step_width);
      m.afs.pin_to_plan = a->boolean("pin_to_plan", m.afs.pin_to_plan);
      a->finish();
    }
    mpc->finish();
  }

  if (auto ob = o.child("observer")) {
    if (const json* p = ob->raw("poles")) c.observer.poles = parsePoles(*p, ob->at("poles"));
    if (auto init = ob->child("initial_estimate")) {
      std::array<Eigen::Matrix<double, 5, 1>, 2> e;
      e[0] = parseEstimate(init->raw("x"), init->at("x"));
      e[1] = parseEstimate(init->raw("y"), init->at("y"));
      init->finish();
      c.observer.initial_estimate = e;
    }
    ob->finish();
  }

  if (auto dist = o.child("disturbance")) {
    if (const json* x = dist->raw("x")) c.disturbance[0] = parseDisturbance(*x, dist->at("x"), c.robot_mass);
    if (const json* y = dist->raw("y")) c.disturbance[1] = parseDisturbance(*y, dist->at("y"), c.robot_mass);
    dist->finish();
  }

  if (auto init = o.child("initial_state")) {
    std::array<AxisStated, 2> s{AxisStated{c.initial_stance.x, 0.0, c.initial_stance.x},
                                AxisStated{c.initial_stance.y, 0.0, c.initial_stance.y}};
    if (auto x = init->child("x")) s[0] = parseAxisState(*x);
    if (auto y = init->child("y")) s[1] = parseAxisState(*y);
    init->finish();
    c.initial_state = s;
  }

  if (auto noise = o.child("noise")) {
    c.measurement_noise = noise->number("amplitude", c.measurement_noise);
    const json* seed = noise->raw("seed");
    if (seed) {
      if (!seed->is_number_unsigned() && !(seed->is_number_integer() && seed->get<long long>() >= 0))
        throw ConfigError(noise->at("seed"), "expected a non-negative integer");
      c.seed = seed->get<std::uint64_t>();
    }
    noise->finish();
  }
  o.finish();

  try {
    c.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError("", e.what());
  } catch (const std::out_of_range& e) {
    throw ConfigError("", e.what());
  }
  return c;
}

ScenarioConfig loadScenarioConfig(const std::string& file_path) {
  std::ifstream in(file_path);
  if (!in) throw ConfigError("", "cannot read config file '" + file_path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parseScenarioConfig(ss.str());
}

namespace {

json signalToJson(const DisturbanceSignal& s, double robot_mass) {
  struct Visitor {
    double mass;
    json operator()(const ConstantSignal& c) const { return {{"type", "constant"}, {"value", c.value}}; }
    json operator()(const SinusoidSignal& c) const {
      return {{"type", "sinusoid"},
              {"offset", c.offset},
              {"amplitude", c.amplitude},
              {"angular_freq", c.angular_freq},
              {"phase", c.phase}};
    }
    json operator()(const RampSignal& c) const {
      return {{"type", "ramp"}, {"value", c.value}, {"slope", c.slope}, {"start_time", c.start_time}};
    }
    json operator()(const ForceSignal& c) const { return {{"type", "force"}, {"force", c.force}, {"mass", c.mass}}; }
    json operator()(const TableSignal&) const {
      throw std::invalid_argument("table signals have no config representation");
    }
    json operator()(const SumSignal& c) const {
      json terms = json::array();
      for (const auto& t : c.terms) terms.push_back(signalToJson(t, mass));
      return {{"type", "sum"}, {"terms", terms}};
    }
  };
  return std::visit(Visitor{robot_mass}, s.variant());
}

json disturbanceToJson(const AxisDisturbance& d, double robot_mass) {
  json sig = signalToJson(d.signal, robot_mass);
  if (!d.pendulum) return sig;
  const PendulumParams& p = *d.pendulum;
  json pend = {{"type", "pendulum"},
               {"mass", p.mass},
               {"length", p.length},
               {"damping", p.damping},
               {"initial_angle", p.initial_angle},
               {"initial_rate", p.initial_rate}};
  return {{"type", "sum"}, {"terms", json::array({sig, pend})}};
}

json axisStateToJson(const AxisStated& s) {
  return {{"com_pos", s.com_pos}, {"com_vel", s.com_vel}, {"zmp_pos", s.zmp_pos}};
}

json footstepToJson(const Footstep& f) { return {{"x", f.x}, {"y", f.y}, {"orientation", f.orientation}}; }

}  // namespace

std::string scenarioConfigToJson(const ScenarioConfig& c, int indent) {
  json steps = json::array();
  for (const auto& s : c.steps) steps.push_back(footstepToJson(s));
  json poles = json::array();
  for (const auto& p : c.observer.poles) {
    if (p.imag() == 0.0)
      poles.push_back(p.real());
    else
      poles.push_back(json::array({p.real(), p.imag()}));
  }
  json observer = {{"poles", poles}};
  if (c.observer.initial_estimate) {
    const auto& e = *c.observer.initial_estimate;
    observer["initial_estimate"] = {{"x", std::vector<double>(e[0].data(), e[0].data() + 5)},
                                    {"y", std::vector<double>(e[1].data(), e[1].data() + 5)}};
  }
  json j = {
      {"name", c.name},
      {"duration", c.duration},
      {"lip", {{"gravity", c.lip.gravity()}, {"com_height", c.lip.comHeight()}, {"mass", c.robot_mass}}},
      {"gait",
       {{"ss_duration", c.timing.ss_duration},
        {"ds_duration", c.timing.ds_duration},
        {"initial_ds_duration", c.timing.initial_ds_duration},
        {"sample_dt", c.timing.sample_dt},
        {"footprint_x", c.timing.footprint_x},
        {"footprint_y", c.timing.footprint_y}}},
      {"footsteps",
       {{"steps", steps},
        {"initial_stance", footstepToJson(c.initial_stance)},
        {"periodic_extension", c.plan_options.periodic_extension},
        {"max_step_displacement", c.plan_options.max_step_displacement}}},
      {"mpc",
       {{"horizon", c.mpc.horizon},
        {"mode", toString(c.mpc.mode)},
        {"tail_length", c.mpc.tail_length},
        {"observer_slope_term", c.mpc.observer_slope_term},
        {"restriction", {{"enabled", c.mpc.restriction.enabled}, {"rate", c.mpc.restriction.rate}}},
        {"afs",
         {{"enabled", c.mpc.afs.enabled},
          {"v_ref_x", c.mpc.afs.v_ref_x},
          {"v_ref_y", c.mpc.afs.v_ref_y},
          {"weight", c.mpc.afs.weight},
          {"max_step_length", c.mpc.afs.max_step_length},
          {"min_step_width", c.mpc.afs.min_step_width},
          {"max_step_width", c.mpc.afs.max_step_width},
          {"pin_to_plan", c.mpc.afs.pin_to_plan}}}}},
      {"observer", observer},
      {"disturbance",
       {{"x", disturbanceToJson(c.disturbance[0], c.robot_mass)},
        {"y", disturbanceToJson(c.disturbance[1], c.robot_mass)}}},
      {"noise", {{"amplitude", c.measurement_noise}, {"seed", c.seed}}},
  };
  if (c.initial_state)
    j["initial_state"] = {{"x", axisStateToJson((*c.initial_state)[0])}, {"y", axisStateToJson((*c.initial_state)[1])}};
  return j.dump(indent);
}

}  // namespace ismpc
