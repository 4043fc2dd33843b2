#include "cablelift/scenario.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <set>

#include "cablelift/presets.hpp"

namespace cablelift {

using nlohmann::json;

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

[[noreturn]] void fail(const std::string& path, const std::string& what) {
  throw ScenarioError(path + ": " + what);
}

void expect_object(const json& j, const std::string& path) {
  if (!j.is_object()) fail(path, "expected an object");
}

void check_keys(const json& j, const std::string& path, const std::set<std::string>& allowed) {
  expect_object(j, path);
  for (const auto& [key, value] : j.items()) {
    if (!allowed.count(key)) fail(path + "." + key, "unknown key");
  }
}

double number(const json& j, const std::string& key, const std::string& path, double fallback) {
  if (!j.contains(key)) return fallback;
  const json& v = j.at(key);
  if (!v.is_number()) fail(path + "." + key, "expected a number");
  const double x = v.get<double>();
  if (!std::isfinite(x)) fail(path + "." + key, "must be finite");
  return x;
}

double required_number(const json& j, const std::string& key, const std::string& path) {
  if (!j.contains(key)) fail(path + "." + key, "missing");
  return number(j, key, path, 0.0);
}

bool boolean(const json& j, const std::string& key, const std::string& path, bool fallback) {
  if (!j.contains(key)) return fallback;
  if (!j.at(key).is_boolean()) fail(path + "." + key, "expected true or false");
  return j.at(key).get<bool>();
}

std::string string(const json& j, const std::string& key, const std::string& path,
                   const std::string& fallback) {
  if (!j.contains(key)) return fallback;
  if (!j.at(key).is_string()) fail(path + "." + key, "expected a string");
  return j.at(key).get<std::string>();
}

Eigen::MatrixXd matrix(const json& j, const std::string& path, int rows, int cols) {
  if (!j.is_array() || static_cast<int>(j.size()) != rows) {
    fail(path, "expected " + std::to_string(rows) + " rows");
  }
  Eigen::MatrixXd m(rows, cols);
  for (int r = 0; r < rows; ++r) {
    const json& row = j.at(r);
    if (!row.is_array() || static_cast<int>(row.size()) != cols) {
      fail(path, "expected " + std::to_string(cols) + " columns per row");
    }
    for (int c = 0; c < cols; ++c) {
      if (!row.at(c).is_number()) fail(path, "entries must be numbers");
      m(r, c) = row.at(c).get<double>();
    }
  }
  if (!m.allFinite()) fail(path, "entries must be finite");
  return m;
}

Vec3 vec3(const json& j, const std::string& path) {
  if (!j.is_array() || j.size() != 3) fail(path, "expected [x, y, z]");
  Vec3 v;
  for (int k = 0; k < 3; ++k) {
    if (!j.at(k).is_number()) fail(path, "entries must be numbers");
    v(k) = j.at(k).get<double>();
  }
  if (!v.allFinite()) fail(path, "entries must be finite");
  return v;
}

Vec3 vec3_or(const json& j, const std::string& key, const std::string& path, const Vec3& fallback) {
  return j.contains(key) ? vec3(j.at(key), path + "." + key) : fallback;
}

// 3x3 matrix, or a 3-vector read as a diagonal.
Mat3 inertia(const json& j, const std::string& path) {
  if (j.is_array() && j.size() == 3 && j.at(0).is_number()) return vec3(j, path).asDiagonal();
  return matrix(j, path, 3, 3);
}

json to_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(row);
  }
  return rows;
}

json to_json(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }

SystemParams parse_system(const json& j, std::string& preset) {
  const std::string path = "system";
  expect_object(j, path);
  if (j.contains("preset")) {
    check_keys(j, path, {"preset"});
    preset = string(j, "preset", path, "");
    return system_preset(preset);
  }
  check_keys(j, path, {"payload_mass", "payload_inertia", "gravity", "quads"});
  preset.clear();
  SystemParams p;
  p.payload_mass = required_number(j, "payload_mass", path);
  if (!j.contains("payload_inertia")) fail(path + ".payload_inertia", "missing");
  p.payload_inertia = inertia(j.at("payload_inertia"), path + ".payload_inertia");
  p.gravity = number(j, "gravity", path, 9.81);
  if (!j.contains("quads") || !j.at("quads").is_array()) fail(path + ".quads", "expected an array");
  for (std::size_t i = 0; i < j.at("quads").size(); ++i) {
    const json& q = j.at("quads").at(i);
    const std::string qp = path + ".quads[" + std::to_string(i) + "]";
    check_keys(q, qp, {"mass", "inertia", "cable_length", "attachment"});
    QuadParams quad;
    quad.mass = number(q, "mass", qp, quad.mass);
    if (q.contains("inertia")) quad.inertia = inertia(q.at("inertia"), qp + ".inertia");
    quad.cable_length = number(q, "cable_length", qp, quad.cable_length);
    quad.attachment = vec3_or(q, "attachment", qp, quad.attachment);
    p.quads.push_back(quad);
  }
  try {
    p.validate();
  } catch (const ModelError& e) {
    fail(path, e.what());
  }
  return p;
}

json system_to_json(const Scenario& s) {
  if (!s.system_preset.empty()) return {{"preset", s.system_preset}};
  json quads = json::array();
  for (const auto& q : s.params.quads) {
    quads.push_back({{"mass", q.mass},
                     {"inertia", to_json(Eigen::MatrixXd(q.inertia))},
                     {"cable_length", q.cable_length},
                     {"attachment", to_json(q.attachment)}});
  }
  return {{"payload_mass", s.params.payload_mass},
          {"payload_inertia", to_json(Eigen::MatrixXd(s.params.payload_inertia))},
          {"gravity", s.params.gravity},
          {"quads", quads}};
}

SystemState parse_state(const json& j, const std::string& path, int n) {
  check_keys(j, path, {"x0", "v0", "R0", "Omega0", "cables", "quads"});
  SystemState s = hover_state(n);
  s.x0 = vec3_or(j, "x0", path, s.x0);
  s.v0 = vec3_or(j, "v0", path, s.v0);
  if (j.contains("R0")) s.R0 = matrix(j.at("R0"), path + ".R0", 3, 3);
  s.Omega0 = vec3_or(j, "Omega0", path, s.Omega0);
  if (j.contains("cables")) {
    const json& c = j.at("cables");
    if (!c.is_array() || static_cast<int>(c.size()) != n) fail(path + ".cables", "expected n entries");
    for (int i = 0; i < n; ++i) {
      const std::string cp = path + ".cables[" + std::to_string(i) + "]";
      check_keys(c.at(i), cp, {"q", "omega"});
      s.cables[i].q = vec3_or(c.at(i), "q", cp, s.cables[i].q);
      s.cables[i].omega = vec3_or(c.at(i), "omega", cp, s.cables[i].omega);
    }
  }
  if (j.contains("quads")) {
    const json& q = j.at("quads");
    if (!q.is_array() || static_cast<int>(q.size()) != n) fail(path + ".quads", "expected n entries");
    for (int i = 0; i < n; ++i) {
      const std::string qp = path + ".quads[" + std::to_string(i) + "]";
      check_keys(q.at(i), qp, {"rotation", "body_rate"});
      if (q.at(i).contains("rotation")) {
        s.quads[i].rotation = matrix(q.at(i).at("rotation"), qp + ".rotation", 3, 3);
      }
      s.quads[i].body_rate = vec3_or(q.at(i), "body_rate", qp, s.quads[i].body_rate);
    }
  }
  return s;
}

json state_to_json(const SystemState& s) {
  json cables = json::array(), quads = json::array();
  for (const auto& c : s.cables) cables.push_back({{"q", to_json(c.q)}, {"omega", to_json(c.omega)}});
  for (const auto& q : s.quads) {
    quads.push_back({{"rotation", to_json(Eigen::MatrixXd(q.rotation))},
                     {"body_rate", to_json(q.body_rate)}});
  }
  return {{"x0", to_json(s.x0)}, {"v0", to_json(s.v0)}, {"R0", to_json(Eigen::MatrixXd(s.R0))},
          {"Omega0", to_json(s.Omega0)}, {"cables", cables}, {"quads", quads}};
}

InitialCondition parse_initial(const json& j, int n) {
  const std::string path = "initial";
  InitialCondition ic;
  if (j.contains("state")) {
    check_keys(j, path, {"state"});
    ic.kind = InitialCondition::Kind::kExplicit;
    ic.state = parse_state(j.at("state"), path + ".state", n);
    return ic;
  }
  check_keys(j, path, {"preset", "angle_deg", "position"});
  const std::string preset = string(j, "preset", path, "hover");
  if (preset == "hover") {
    ic.kind = InitialCondition::Kind::kHover;
  } else if (preset == "tilted-cables") {
    ic.kind = InitialCondition::Kind::kTiltedCables;
  } else if (preset == "offset-payload") {
    ic.kind = InitialCondition::Kind::kOffsetPayload;
  } else {
    fail(path + ".preset", "unknown initial preset '" + preset + "'");
  }
  ic.angle_deg = number(j, "angle_deg", path, 0.0);
  ic.position = vec3_or(j, "position", path, Vec3::Zero());
  return ic;
}

json initial_to_json(const InitialCondition& ic) {
  switch (ic.kind) {
    case InitialCondition::Kind::kExplicit:
      return {{"state", state_to_json(ic.state)}};
    case InitialCondition::Kind::kTiltedCables:
      return {{"preset", "tilted-cables"}, {"angle_deg", ic.angle_deg}, {"position", to_json(ic.position)}};
    case InitialCondition::Kind::kOffsetPayload:
      return {{"preset", "offset-payload"}, {"angle_deg", ic.angle_deg}, {"position", to_json(ic.position)}};
    case InitialCondition::Kind::kHover:
      break;
  }
  return {{"preset", "hover"}, {"angle_deg", ic.angle_deg}, {"position", to_json(ic.position)}};
}

LeaderPolicy parse_leader(const json& j) {
  const std::string path = "leader";
  check_keys(j, path, {"mode", "waypoints", "arrival_radius", "script"});
  LeaderPolicy p;
  const std::string mode = string(j, "mode", path, "teleop");
  if (mode == "teleop") {
    p.mode = LeaderMode::kTeleop;
  } else if (mode == "waypoints") {
    p.mode = LeaderMode::kWaypoints;
  } else if (mode == "script") {
    p.mode = LeaderMode::kScript;
  } else {
    fail(path + ".mode", "expected teleop, waypoints or script");
  }
  p.arrival_radius = number(j, "arrival_radius", path, p.arrival_radius);
  if (j.contains("waypoints")) {
    const json& w = j.at("waypoints");
    if (!w.is_array()) fail(path + ".waypoints", "expected an array");
    for (std::size_t i = 0; i < w.size(); ++i) {
      const std::string wp = path + ".waypoints[" + std::to_string(i) + "]";
      check_keys(w.at(i), wp, {"position", "dwell"});
      if (!w.at(i).contains("position")) fail(wp + ".position", "missing");
      p.waypoints.push_back({vec3(w.at(i).at("position"), wp + ".position"), number(w.at(i), "dwell", wp, 0.0)});
    }
  }
  if (j.contains("script")) {
    const json& s = j.at("script");
    if (!s.is_array()) fail(path + ".script", "expected an array");
    for (std::size_t i = 0; i < s.size(); ++i) {
      const std::string sp = path + ".script[" + std::to_string(i) + "]";
      check_keys(s.at(i), sp, {"t", "roll", "pitch", "thrust"});
      ScriptedInput in;
      in.t = required_number(s.at(i), "t", sp);
      in.input.roll = number(s.at(i), "roll", sp, 0.0);
      in.input.pitch = number(s.at(i), "pitch", sp, 0.0);
      in.input.thrust = required_number(s.at(i), "thrust", sp);
      p.script.push_back(in);
    }
  }
  return p;
}

json leader_to_json(const LeaderPolicy& p) {
  const char* modes[] = {"teleop", "waypoints", "script"};
  json j = {{"mode", modes[static_cast<int>(p.mode)]}, {"arrival_radius", p.arrival_radius}};
  if (!p.waypoints.empty()) {
    json w = json::array();
    for (const auto& wp : p.waypoints) w.push_back({{"position", to_json(wp.position)}, {"dwell", wp.dwell}});
    j["waypoints"] = w;
  }
  if (!p.script.empty()) {
    json s = json::array();
    for (const auto& in : p.script) {
      s.push_back({{"t", in.t}, {"roll", in.input.roll}, {"pitch", in.input.pitch}, {"thrust", in.input.thrust}});
    }
    j["script"] = s;
  }
  return j;
}

PidAxisGains parse_axis(const json& j, const std::string& path, PidAxisGains g) {
  check_keys(j, path, {"kp", "ki", "kd", "integral_limit"});
  g.kp = number(j, "kp", path, g.kp);
  g.ki = number(j, "ki", path, g.ki);
  g.kd = number(j, "kd", path, g.kd);
  g.integral_limit = number(j, "integral_limit", path, g.integral_limit);
  return g;
}

json axis_to_json(const PidAxisGains& g) {
  return {{"kp", g.kp}, {"ki", g.ki}, {"kd", g.kd}, {"integral_limit", g.integral_limit}};
}

void parse_gains(const json& j, int n, Scenario& s) {
  const std::string path = "gains";
  check_keys(j, path, {"followers", "attitude", "leader", "max_tilt", "human_gain"});
  ControlGains& g = s.gains;
  if (j.contains("followers")) {
    const json& f = j.at("followers");
    if (f.is_string()) {
      if (f.get<std::string>() != "synthesize") fail(path + ".followers", "expected \"synthesize\" or a list");
      s.synthesize_followers = true;
    } else if (f.is_array()) {
      s.synthesize_followers = false;
      for (std::size_t i = 0; i < f.size(); ++i) {
        const std::string fp = path + ".followers[" + std::to_string(i) + "]";
        check_keys(f.at(i), fp, {"K_eta", "K_eta_dot", "K_xi", "K_xi_dot"});
        FollowerGains fg;
        for (const char* key : {"K_eta", "K_eta_dot", "K_xi", "K_xi_dot"}) {
          if (!f.at(i).contains(key)) fail(fp + "." + key, "missing");
        }
        fg.K_eta = matrix(f.at(i).at("K_eta"), fp + ".K_eta", 3, 3);
        fg.K_eta_dot = matrix(f.at(i).at("K_eta_dot"), fp + ".K_eta_dot", 3, 3);
        fg.K_xi = matrix(f.at(i).at("K_xi"), fp + ".K_xi", 3, 2);
        fg.K_xi_dot = matrix(f.at(i).at("K_xi_dot"), fp + ".K_xi_dot", 3, 2);
        g.followers.push_back(fg);
      }
    } else {
      fail(path + ".followers", "expected \"synthesize\" or a list");
    }
  }
  if (j.contains("attitude")) {
    const json& a = j.at("attitude");
    check_keys(a, path + ".attitude", {"roll", "pitch", "yaw"});
    if (a.contains("roll")) g.attitude.roll = parse_axis(a.at("roll"), path + ".attitude.roll", g.attitude.roll);
    if (a.contains("pitch")) g.attitude.pitch = parse_axis(a.at("pitch"), path + ".attitude.pitch", g.attitude.pitch);
    if (a.contains("yaw")) g.attitude.yaw = parse_axis(a.at("yaw"), path + ".attitude.yaw", g.attitude.yaw);
  }
  if (j.contains("leader")) {
    const json& l = j.at("leader");
    const std::string lp = path + ".leader";
    check_keys(l, lp, {"kp_xy", "kd_xy", "kp_z", "kd_z"});
    g.leader.kp_xy = number(l, "kp_xy", lp, g.leader.kp_xy);
    g.leader.kd_xy = number(l, "kd_xy", lp, g.leader.kd_xy);
    g.leader.kp_z = number(l, "kp_z", lp, g.leader.kp_z);
    g.leader.kd_z = number(l, "kd_z", lp, g.leader.kd_z);
  }
  g.max_tilt = number(j, "max_tilt", path, g.max_tilt);
  if (j.contains("human_gain")) {
    g.human_gain = matrix(j.at("human_gain"), path + ".human_gain", 3, 2 * reduced_config_dim(n));
  }
}

Vec3 tilt_axis(int i, int n) {
  const double angle = 2.0 * std::numbers::pi * i / n + std::numbers::pi / 4.0;
  return Vec3(std::cos(angle), std::sin(angle), 0.0);
}

}  // namespace

json gains_to_json(const ControlGains& g) {
  json followers = json::array();
  for (const auto& f : g.followers) {
    followers.push_back({{"K_eta", to_json(Eigen::MatrixXd(f.K_eta))},
                         {"K_eta_dot", to_json(Eigen::MatrixXd(f.K_eta_dot))},
                         {"K_xi", to_json(Eigen::MatrixXd(f.K_xi))},
                         {"K_xi_dot", to_json(Eigen::MatrixXd(f.K_xi_dot))}});
  }
  json j = {{"followers", followers},
            {"attitude",
             {{"roll", axis_to_json(g.attitude.roll)},
              {"pitch", axis_to_json(g.attitude.pitch)},
              {"yaw", axis_to_json(g.attitude.yaw)}}},
            {"leader",
             {{"kp_xy", g.leader.kp_xy}, {"kd_xy", g.leader.kd_xy}, {"kp_z", g.leader.kp_z}, {"kd_z", g.leader.kd_z}}},
            {"max_tilt", g.max_tilt}};
  if (g.human_gain) j["human_gain"] = to_json(*g.human_gain);
  return j;
}

void Scenario::validate() const {
  try {
    params.validate();
  } catch (const ModelError& e) {
    throw ScenarioError(std::string("system: ") + e.what());
  }
  if (!(dt > 0.0 && dt <= 0.01)) throw ScenarioError("dt: must lie in (0, 0.01] s");
  if (!(duration > 0.0) || !std::isfinite(duration)) throw ScenarioError("duration: must be positive");
  auto multiple = [&](double period) {
    const double ratio = period / dt;
    return ratio >= 1.0 - 1e-9 && std::abs(ratio - std::round(ratio)) <= 1e-9 * ratio;
  };
  if (!multiple(log_interval)) throw ScenarioError("log_interval: must be a positive multiple of dt");
  if (!(control_rate > 0.0) || !multiple(1.0 / control_rate)) {
    throw ScenarioError("control_rate_hz: control period must be a positive multiple of dt");
  }
  if (!(noise.angle_sigma >= 0.0) || !(noise.rate_sigma >= 0.0)) {
    throw ScenarioError("noise: sigmas must be >= 0");
  }
  const int n = params.n();
  try {
    if (synthesize_followers) {
      ControlGains probe = gains;
      probe.followers.assign(n - 1, FollowerGains{});
      probe.validate(n);
    } else {
      gains.validate(n);
    }
  } catch (const ModelError& e) {
    throw ScenarioError(std::string("gains: ") + e.what());
  }
  if (leader.mode == LeaderMode::kWaypoints) {
    if (leader.waypoints.empty()) throw ScenarioError("leader.waypoints: at least one required");
    if (!(leader.arrival_radius > 0.0)) throw ScenarioError("leader.arrival_radius: must be positive");
    for (const auto& w : leader.waypoints) {
      if (!(w.dwell >= 0.0)) throw ScenarioError("leader.waypoints: dwell must be >= 0");
    }
  }
  if (leader.mode == LeaderMode::kScript) {
    if (leader.script.empty()) throw ScenarioError("leader.script: at least one entry required");
    double last = -1.0;
    for (const auto& in : leader.script) {
      if (!(in.t > last) || in.t < 0.0) throw ScenarioError("leader.script: times must increase from 0");
      if (!(in.input.thrust >= 0.0)) throw ScenarioError("leader.script: thrust must be >= 0");
      if (std::abs(in.input.roll) > gains.max_tilt || std::abs(in.input.pitch) > gains.max_tilt) {
        throw ScenarioError("leader.script: attitude exceeds max_tilt");
      }
      last = in.t;
    }
  }
  if (initial.kind == InitialCondition::Kind::kExplicit) {
    if (initial.state.n() != n) throw ScenarioError("initial.state: cable count differs from system");
    try {
      initial.state.validate();
    } catch (const ModelError& e) {
      throw ScenarioError(std::string("initial.state: ") + e.what());
    }
  } else if (!(std::abs(initial.angle_deg) < 90.0)) {
    throw ScenarioError("initial.angle_deg: must lie in (-90, 90)");
  }
}

std::int64_t Scenario::total_steps() const { return std::llround(duration / dt); }
std::int64_t Scenario::steps_per_log() const { return std::llround(log_interval / dt); }
std::int64_t Scenario::steps_per_control() const {
  return std::llround(1.0 / (control_rate * dt));
}

SystemParams system_preset(const std::string& name) {
  if (name == "rod-2quad") return presets::rod_two_quad();
  if (name == "triangle-3quad") return presets::triangle_three_quad();
  if (name == "single-quad-pendulum") return presets::single_quad_pendulum();
  throw ScenarioError("system.preset: unknown preset '" + name + "'");
}

std::vector<std::string> system_preset_names() {
  return {"rod-2quad", "triangle-3quad", "single-quad-pendulum"};
}

Scenario parse_scenario(const json& doc) {
  check_keys(doc, "scenario",
             {"schema_version", "name", "description", "system", "initial", "leader", "gains",
              "followers_enabled", "actuation", "dt", "duration", "log_interval",
              "control_rate_hz", "seed", "noise"});
  if (!doc.contains("schema_version")) fail("schema_version", "missing");
  if (!doc.at("schema_version").is_number_integer() ||
      doc.at("schema_version").get<int>() != kScenarioSchemaVersion) {
    fail("schema_version", "unsupported (expected " + std::to_string(kScenarioSchemaVersion) + ")");
  }
  Scenario s;
  s.name = string(doc, "name", "scenario", "unnamed");
  s.description = string(doc, "description", "scenario", "");
  if (!doc.contains("system")) fail("system", "missing");
  s.params = parse_system(doc.at("system"), s.system_preset);
  const int n = s.params.n();
  if (doc.contains("initial")) s.initial = parse_initial(doc.at("initial"), n);
  if (doc.contains("leader")) s.leader = parse_leader(doc.at("leader"));
  s.synthesize_followers = n >= 2;
  if (doc.contains("gains")) parse_gains(doc.at("gains"), n, s);
  if (n < 2) s.synthesize_followers = false;
  s.followers_enabled = boolean(doc, "followers_enabled", "scenario", true);
  const std::string actuation = string(doc, "actuation", "scenario", "full");
  if (actuation == "full") {
    s.actuation = ActuationMode::kFull;
  } else if (actuation == "reduced") {
    s.actuation = ActuationMode::kReduced;
  } else {
    fail("actuation", "expected full or reduced");
  }
  s.dt = number(doc, "dt", "scenario", s.dt);
  s.duration = number(doc, "duration", "scenario", s.duration);
  s.log_interval = number(doc, "log_interval", "scenario", s.log_interval);
  s.control_rate = number(doc, "control_rate_hz", "scenario", s.control_rate);
  if (doc.contains("seed")) {
    if (!doc.at("seed").is_number_unsigned()) fail("seed", "expected a non-negative integer");
    s.seed = doc.at("seed").get<std::uint64_t>();
  }
  if (doc.contains("noise")) {
    check_keys(doc.at("noise"), "noise", {"angle_sigma", "rate_sigma"});
    s.noise.angle_sigma = number(doc.at("noise"), "angle_sigma", "noise", 0.0);
    s.noise.rate_sigma = number(doc.at("noise"), "rate_sigma", "noise", 0.0);
  }
  s.validate();
  return s;
}

json to_json(const Scenario& s) {
  json gains = gains_to_json(s.gains);
  if (s.synthesize_followers) gains["followers"] = "synthesize";
  return {{"schema_version", kScenarioSchemaVersion},
          {"name", s.name},
          {"description", s.description},
          {"system", system_to_json(s)},
          {"initial", initial_to_json(s.initial)},
          {"leader", leader_to_json(s.leader)},
          {"gains", gains},
          {"followers_enabled", s.followers_enabled},
          {"actuation", s.actuation == ActuationMode::kFull ? "full" : "reduced"},
          {"dt", s.dt},
          {"duration", s.duration},
          {"log_interval", s.log_interval},
          {"control_rate_hz", s.control_rate},
          {"seed", s.seed},
          {"noise", {{"angle_sigma", s.noise.angle_sigma}, {"rate_sigma", s.noise.rate_sigma}}}};
}

Scenario load_scenario(const std::string& path_or_name) {
  if (std::filesystem::is_regular_file(path_or_name)) {
    std::ifstream in(path_or_name);
    json doc;
    try {
      doc = json::parse(in);
    } catch (const json::parse_error& e) {
      throw ScenarioError(path_or_name + ": " + e.what());
    }
    return parse_scenario(doc);
  }
  if (auto s = find_builtin(path_or_name)) return *s;
  throw ScenarioError(path_or_name + ": no such file or built-in scenario");
}

SystemState initial_state(const Scenario& scenario) {
  const auto& ic = scenario.initial;
  if (ic.kind == InitialCondition::Kind::kExplicit) return ic.state;
  const int n = scenario.params.n();
  SystemState s = hover_state(n, ic.position);
  const double angle = ic.angle_deg * kDeg;
  if (ic.kind == InitialCondition::Kind::kTiltedCables) {
    for (int i = 0; i < n; ++i) s.cables[i].q = axis_angle(tilt_axis(i, n), angle) * (-e3());
  } else if (ic.kind == InitialCondition::Kind::kOffsetPayload) {
    s.R0 = axis_angle(e2(), angle);
  }
  return s;
}

std::vector<Waypoint> square_waypoints(double dwell) {
  return {{Vec3(1, -1, 1), dwell}, {Vec3(1, 1, 1), dwell}, {Vec3(-1, 1, 1), dwell},
          {Vec3(-1, -1, 1), dwell}};
}

std::vector<ScriptedInput> square_script(const SystemParams& params, double tilt, double push,
                                         double coast) {
  const auto& leader = params.quads.at(0);
  const double thrust = (leader.mass + params.payload_mass / params.n()) * params.gravity;
  const Vec2 sides[] = {{1, 0}, {0, 1}, {-1, 0}, {0, -1}};
  std::vector<ScriptedInput> script;
  double t = 0.0;
  script.push_back({t, {0.0, 0.0, thrust, false}});
  t += 1.0;
  for (const Vec2& d : sides) {
    // pitch accelerates along +e1, positive roll along -e2
    for (double sign : {1.0, -1.0}) {
      script.push_back({t, {-sign * tilt * d.y(), sign * tilt * d.x(), thrust / std::cos(tilt), false}});
      t += push;
    }
    script.push_back({t, {0.0, 0.0, thrust, false}});
    t += coast;
  }
  return script;
}

std::vector<NamedScenario> builtin_scenarios() {
  std::vector<NamedScenario> out;
  auto make = [](const std::string& name, const std::string& preset, const std::string& desc) {
    Scenario s;
    s.name = name;
    s.description = desc;
    s.system_preset = preset;
    s.params = system_preset(preset);
    s.synthesize_followers = s.params.n() >= 2;
    s.initial.position = Vec3(0, 0, 1);
    return s;
  };

  for (const auto& preset : system_preset_names()) {
    out.push_back({preset, "", make(preset, preset, "Hover at 1 m with a neutral teleop leader")});
  }
  for (const std::string preset : {"rod-2quad", "triangle-3quad"}) {
    Scenario s = make(preset + "-tilted", preset,
                      "All cables tilted 10 deg, payload level, leader hovering");
    s.initial.kind = InitialCondition::Kind::kTiltedCables;
    s.initial.angle_deg = 10.0;
    s.duration = 5.0;
    out.push_back({s.name, "", s});
  }
  {
    Scenario s = make("triangle-3quad-square", "triangle-3quad",
                      "Leader flies the payload around a 2 m square by waypoints");
    s.initial.position = Vec3(-1, -1, 1);
    s.leader.mode = LeaderMode::kWaypoints;
    s.leader.waypoints = square_waypoints();
    s.duration = 60.0;
    out.push_back({s.name, "", s});
  }
  {
    Scenario s = make("rod-2quad-square-script", "rod-2quad",
                      "Scripted leader command log tracing a square");
    s.leader.mode = LeaderMode::kScript;
    s.leader.script = square_script(s.params);
    s.duration = 30.0;
    out.push_back({s.name, "", s});
  }
  {
    Scenario s = make("rod-2quad-square-uncontrolled", "rod-2quad",
                      "Scripted square with PAC and CAC disabled on the follower");
    s.leader.mode = LeaderMode::kScript;
    s.leader.script = square_script(s.params);
    s.followers_enabled = false;
    s.duration = 30.0;
    out.push_back({s.name, "", s});
  }
  for (auto& entry : out) entry.description = entry.scenario.description;
  return out;
}

std::optional<Scenario> find_builtin(const std::string& name) {
  for (auto& entry : builtin_scenarios()) {
    if (entry.name == name) return entry.scenario;
  }
  return std::nullopt;
}

}  // namespace cablelift
