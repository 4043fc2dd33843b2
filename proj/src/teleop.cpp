#include "cablelift/teleop.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>

#include "cablelift/dynamics.hpp"

namespace cablelift::teleop {

using nlohmann::json;

namespace {

ProtocolError error(std::string code, std::string detail) { return {std::move(code), std::move(detail)}; }

json vec(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }

json leader_json(const LeaderInput& in) {
  return {{"roll", in.roll}, {"pitch", in.pitch}, {"thrust", in.thrust}, {"saturated", in.saturated}};
}

}  // namespace

CommandBounds bounds_for(const Simulation& sim) {
  return {sim.gains().max_tilt, 2.0 * sim.equilibrium().thrusts[0]};
}

ParseResult parse_command(std::string_view text, const CommandBounds& bounds) {
  json doc = json::parse(text, nullptr, false);
  if (doc.is_discarded()) return error("bad_json", "frame is not valid JSON");
  if (!doc.is_object()) return error("bad_type", "frame must be a JSON object");
  const auto type = doc.find("type");
  if (type == doc.end() || !type->is_string()) return error("bad_type", "missing string field type");
  if (*type != "cmd") return error("bad_type", "unsupported frame type " + type->get<std::string>());

  for (const auto& [key, value] : doc.items()) {
    static const char* known[] = {"type", "seq", "t_ms", "phi", "theta", "thrust", "arm", "disarm", "reset"};
    if (std::find(std::begin(known), std::end(known), key) == std::end(known)) {
      return error("bad_field", "unknown field " + key);
    }
  }
  CommandMessage cmd;
  for (const char* key : {"seq", "t_ms"}) {
    const auto it = doc.find(key);
    if (it == doc.end()) return error("bad_field", std::string("missing field ") + key);
    if (!it->is_number_integer()) return error("bad_field", std::string(key) + " must be an integer");
  }
  cmd.seq = doc["seq"].get<std::int64_t>();
  cmd.t_ms = doc["t_ms"].get<std::int64_t>();
  if (cmd.seq < 0) return error("out_of_range", "seq must be >= 0");
  for (const char* key : {"phi", "theta", "thrust"}) {
    const auto it = doc.find(key);
    if (it == doc.end()) return error("bad_field", std::string("missing field ") + key);
    if (!it->is_number()) return error("bad_field", std::string(key) + " must be a number");
  }
  cmd.phi = doc["phi"].get<double>();
  cmd.theta = doc["theta"].get<double>();
  cmd.thrust = doc["thrust"].get<double>();
  if (!(std::abs(cmd.phi) <= bounds.max_tilt)) return error("out_of_range", "|phi| exceeds max_tilt");
  if (!(std::abs(cmd.theta) <= bounds.max_tilt)) return error("out_of_range", "|theta| exceeds max_tilt");
  if (!(cmd.thrust >= 0.0 && cmd.thrust <= 1.0)) return error("out_of_range", "thrust must lie in [0, 1]");
  for (auto [key, flag] : {std::pair{"arm", &cmd.arm}, {"disarm", &cmd.disarm}, {"reset", &cmd.reset}}) {
    const auto it = doc.find(key);
    if (it == doc.end()) continue;
    if (!it->is_boolean()) return error("bad_field", std::string(key) + " must be a boolean");
    *flag = it->get<bool>();
  }
  if (cmd.arm && cmd.disarm) return error("bad_field", "arm and disarm are exclusive");
  return cmd;
}

ParseResult accept_command(std::string_view text, const CommandBounds& bounds, std::int64_t& last_seq) {
  ParseResult r = parse_command(text, bounds);
  if (auto* cmd = std::get_if<CommandMessage>(&r)) {
    if (cmd->seq <= last_seq) {
      return error("stale_seq", "seq " + std::to_string(cmd->seq) + " <= last " + std::to_string(last_seq));
    }
    last_seq = cmd->seq;
  }
  return r;
}

json to_json(const CommandMessage& cmd) {
  json j = {{"type", "cmd"},          {"seq", cmd.seq},     {"t_ms", cmd.t_ms},
            {"phi", cmd.phi},         {"theta", cmd.theta}, {"thrust", cmd.thrust}};
  if (cmd.arm) j["arm"] = true;
  if (cmd.disarm) j["disarm"] = true;
  if (cmd.reset) j["reset"] = true;
  return j;
}

json error_frame(const ProtocolError& e) { return {{"type", "err"}, {"code", e.code}, {"detail", e.detail}}; }

LeaderInput to_leader_input(const CommandMessage& cmd, const CommandBounds& bounds) {
  return {cmd.phi, cmd.theta, cmd.thrust * bounds.thrust_full, false};
}

void Mailbox::post(Event event) {
  std::lock_guard lock(mu_);
  events_.push_back(std::move(event));
}

std::vector<Mailbox::Event> Mailbox::drain() {
  std::vector<Event> out;
  std::lock_guard lock(mu_);
  out.swap(events_);
  return out;
}

json snapshot(const Simulation& sim, std::int64_t last_seq) {
  const SystemState& s = sim.state();
  const SystemParams& p = sim.scenario().params;
  json r0 = json::array();
  for (int r = 0; r < 3; ++r) {
    for (int k = 0; k < 3; ++k) r0.push_back(s.R0(r, k));
  }
  json quads = json::array();
  for (int i = 0; i < p.n(); ++i) {
    const auto& c = sim.commands()[i];
    quads.push_back({{"position", vec(quad_position(s, p, i))},
                     {"attitude", vec(euler_zyx(s.quads[i].rotation))},
                     {"q", vec(s.cables[i].q)},
                     {"psi_q", cable_psi(s.cables[i].q)},
                     {"cmd", {{"roll", c.roll}, {"pitch", c.pitch}, {"thrust", c.thrust}}},
                     {"saturated", c.saturated}});
  }
  return {{"type", "state"},
          {"t", sim.time()},
          {"step", sim.steps()},
          {"x0", vec(s.x0)},
          {"v0", vec(s.v0)},
          {"R0", r0},
          {"Omega0", vec(s.Omega0)},
          {"psi_R0", payload_psi(s.R0)},
          {"quads", quads},
          {"leader", leader_json(sim.applied_leader_input())},
          {"last_seq", last_seq}};
}

namespace {

Scenario checked(Scenario s) {
  if (s.leader.mode != LeaderMode::kTeleop) throw ScenarioError("leader.mode: serving requires teleop");
  return s;
}

}  // namespace

TeleopLoop::TeleopLoop(Scenario scenario, LoopOptions options, Mailbox& mailbox)
    : sim_(checked(std::move(scenario))),
      mailbox_(mailbox),
      bounds_(bounds_for(sim_)),
      failsafe_seconds_(options.failsafe_seconds),
      target_(sim_.hover_input()) {
  if (!(options.stream_hz > 0.0)) throw ScenarioError("stream_hz must be positive");
  const double ratio = 1.0 / (options.stream_hz * sim_.scenario().dt);
  steps_per_stream_ = std::llround(ratio);
  if (steps_per_stream_ < 1 || std::abs(ratio - static_cast<double>(steps_per_stream_)) > 1e-9) {
    throw ScenarioError("stream_hz must divide the physics rate");
  }
  if (!(failsafe_seconds_ > 0.0)) throw ScenarioError("failsafe_seconds must be positive");
}

void TeleopLoop::set_recorder(std::ostream* out) {
  recorder_ = out;
  if (!recorder_) return;
  json header = {{"type", "header"},
                 {"format", "cablelift-teleop"},
                 {"version", 1},
                 {"code_version", kCodeVersion},
                 {"scenario", cablelift::to_json(sim_.scenario())}};
  *recorder_ << header.dump() << '\n';
}

void TeleopLoop::apply(const LeaderInput& input, const char* source) {
  const LeaderInput& now = sim_.applied_leader_input();
  if (input.roll == now.roll && input.pitch == now.pitch && input.thrust == now.thrust) return;
  sim_.set_leader_input(input);
  if (recorder_) {
    json rec = leader_json(input);
    rec["type"] = "cmd";
    rec["t"] = sim_.time();
    rec["step"] = sim_.steps();
    rec["source"] = source;
    rec["seq"] = applied_seq_;
    *recorder_ << rec.dump() << '\n';
  }
}

void TeleopLoop::control_update() {
  const LeaderInput hover = sim_.hover_input();
  bool commanded = false;
  for (auto& event : mailbox_.drain()) {
    if (const auto* c = std::get_if<Mailbox::Connected>(&event)) {
      last_seq_.emplace(c->connection, -1);
    } else if (const auto* d = std::get_if<Mailbox::Disconnected>(&event)) {
      if (last_seq_.erase(d->connection) && last_seq_.empty()) {
        failsafe_ = Failsafe{sim_.time(), target_};
        commanded = false;
      }
    } else {
      const auto& cmd = std::get<Mailbox::Command>(event);
      auto it = last_seq_.find(cmd.connection);
      if (it == last_seq_.end() || cmd.message.seq <= it->second) continue;
      it->second = cmd.message.seq;
      applied_seq_ = cmd.message.seq;
      const CommandMessage& m = cmd.message;
      if (m.disarm) armed_ = false;
      if (m.arm) armed_ = true;
      target_ = (armed_ && !m.reset) ? to_leader_input(m, bounds_) : hover;
      commanded = true;
    }
  }
  if (commanded) failsafe_.reset();
  if (failsafe_) {
    const double a = std::min(1.0, (sim_.time() - failsafe_->start) / failsafe_seconds_);
    const LeaderInput& from = failsafe_->from;
    target_ = {from.roll + a * (hover.roll - from.roll), from.pitch + a * (hover.pitch - from.pitch),
               from.thrust + a * (hover.thrust - from.thrust), false};
    if (a >= 1.0) {
      target_ = hover;
      failsafe_.reset();
    }
    apply(target_, "failsafe");
    return;
  }
  apply(target_, "client");
}

void TeleopLoop::step() {
  if (sim_.steps() % steps_per_control() == 0) control_update();
  sim_.advance();
  if (sim_.steps() % steps_per_stream_ == 0) {
    const json frame = snapshot(sim_, applied_seq_);
    if (recorder_) *recorder_ << frame.dump() << '\n';
    if (snapshot_sink_) snapshot_sink_(frame);
  }
}

Scenario scenario_from_recording(std::istream& in) {
  std::string line;
  std::optional<Scenario> scenario;
  std::vector<ScriptedInput> script;
  double end = 0.0;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const json rec = json::parse(line, nullptr, false);
    const std::string where = "recording line " + std::to_string(line_no);
    if (rec.is_discarded() || !rec.is_object() || !rec.contains("type")) {
      throw ScenarioError(where + ": not a record");
    }
    try {
      const std::string type = rec.at("type");
      if (type == "header") {
        if (rec.value("format", "") != "cablelift-teleop") throw ScenarioError(where + ": unknown format");
        scenario = parse_scenario(rec.at("scenario"));
      } else if (type == "cmd") {
        const double t = rec.at("t");
        script.push_back({t, {rec.at("roll"), rec.at("pitch"), rec.at("thrust"), false}});
        end = std::max(end, t);
      } else if (type == "state") {
        end = std::max(end, rec.at("t").get<double>());
      }
    } catch (const json::exception& e) {
      throw ScenarioError(where + ": " + e.what());
    }
  }
  if (!scenario) throw ScenarioError("recording: missing header");
  Scenario s = *scenario;
  if (script.empty() || script.front().t > 0.0) {
    script.insert(script.begin(), {0.0, Simulation(s).hover_input()});
    script.front().input.saturated = false;
  }
  s.leader.mode = LeaderMode::kScript;
  s.leader.script = std::move(script);
  s.duration = std::max(end, s.dt);
  s.validate();
  return s;
}

}  // namespace cablelift::teleop
