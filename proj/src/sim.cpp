#include "cablelift/sim.hpp"

#include <cinttypes>
#include <cstdio>
#include <exception>
#include <ostream>

#include "cablelift/dynamics.hpp"
#include "cablelift/synthesis.hpp"

namespace cablelift {

double cable_psi(const Vec3& q) { return config_error_cable(-e3(), q); }

double payload_psi(const Mat3& r0) { return config_error_payload(Mat3::Identity(), r0); }

Simulation::Simulation(Scenario scenario)
    : scenario_(std::move(scenario)),
      noise_(scenario_.seed, scenario_.noise.angle_sigma, scenario_.noise.rate_sigma) {
  scenario_.validate();
  const auto& p = scenario_.params;
  const int n = p.n();
  eq_ = build_equilibrium(p, scenario_.initial.position);
  if (scenario_.synthesize_followers && n >= 2) {
    const LinearModel model = linearize(p, build_equilibrium(p));
    scenario_.gains.followers = synthesize_gains(model).followers;
  }
  scenario_.gains.validate(n);
  state_ = initial_state(scenario_);
  pids_.assign(n, AttitudePid(scenario_.gains.attitude));
  for (int i = 0; i < n; ++i) commands_.push_back({0.0, 0.0, 0.0, eq_.thrusts[i], false});
  thrust_vectors_ = eq_.thrust_vectors;
  leader_input_ = hover_input();
  last_cmd_ = scenario_.actuation == ActuationMode::kFull
                  ? ActuationCommand::full(eq_.thrusts, std::vector<Vec3>(n, Vec3::Zero()))
                  : ActuationCommand::reduced(eq_.thrust_vectors);
}

LeaderInput Simulation::hover_input() const { return {0.0, 0.0, eq_.thrusts[0], false}; }

LeaderInput Simulation::leader_policy() {
  const auto& leader = scenario_.leader;
  switch (leader.mode) {
    case LeaderMode::kTeleop:
      if (pending_leader_) {
        leader_input_ = *pending_leader_;
        pending_leader_.reset();
      }
      return leader_input_;
    case LeaderMode::kScript: {
      LeaderInput in = hover_input();
      for (const auto& entry : leader.script) {
        if (entry.t > time() + 1e-9) break;
        in = entry.input;
      }
      return in;
    }
    case LeaderMode::kWaypoints:
      break;
  }
  const int last = static_cast<int>(leader.waypoints.size()) - 1;
  const Waypoint& wp = leader.waypoints[waypoint_];
  if ((state_.x0 - wp.position).norm() < leader.arrival_radius) {
    if (!arrived_at_) arrived_at_ = time();
    if (waypoint_ < last && time() - *arrived_at_ >= wp.dwell - 1e-9) {
      ++waypoint_;
      arrived_at_.reset();
    }
  }
  const auto& quad = scenario_.params.quads[0];
  const Vec3 target = leader.waypoints[waypoint_].position + state_.R0 * quad.attachment +
                      quad.cable_length * e3();
  return leader_pd(state_, scenario_.params, eq_, target, scenario_.gains);
}

void Simulation::control_tick() {
  const auto& p = scenario_.params;
  const int n = p.n();
  leader_input_ = leader_policy();
  commands_[0] = to_attitude_command(leader_input_);
  thrust_vectors_[0] = leader_input_.thrust *
                       (from_euler_zyx(leader_input_.roll, leader_input_.pitch, 0.0) * e3());
  if (n < 2) return;
  FeedbackErrors errors = feedback_errors(state_);
  if (noise_.enabled()) noise_.apply(errors);
  for (int i = 1; i < n; ++i) {
    if (scenario_.followers_enabled) {
      thrust_vectors_[i] = follower_outer_loop(errors, eq_, scenario_.gains, i);
      commands_[i] = allocate(thrust_vectors_[i], p.quads[i].mass, p.gravity, scenario_.gains.max_tilt);
    } else {
      thrust_vectors_[i] = eq_.thrust_vectors[i];
      commands_[i] = {0.0, 0.0, 0.0, eq_.thrusts[i], false};
    }
  }
}

void Simulation::advance() {
  if (steps_ % scenario_.steps_per_control() == 0) control_tick();
  const int n = scenario_.params.n();
  if (scenario_.actuation == ActuationMode::kFull) {
    std::vector<double> f(n);
    std::vector<Vec3> m(n);
    for (int i = 0; i < n; ++i) {
      f[i] = commands_[i].thrust;
      m[i] = pids_[i].update(state_.quads[i], commands_[i], scenario_.dt);
    }
    last_cmd_ = ActuationCommand::full(std::move(f), std::move(m));
  } else {
    last_cmd_ = ActuationCommand::reduced(thrust_vectors_);
  }
  try {
    state_ = step(state_, last_cmd_, scenario_.params, scenario_.dt);
  } catch (const DynamicsError& e) {
    throw SimulationError(e.what(), time(), describe(state_));
  }
  ++steps_;
}

std::vector<std::string> Simulation::columns() const {
  std::vector<std::string> c = {"t", "waypoint", "x0_x", "x0_y", "x0_z", "v0_x", "v0_y", "v0_z"};
  for (int r = 0; r < 3; ++r) {
    for (int k = 0; k < 3; ++k) c.push_back("R0_" + std::to_string(r) + std::to_string(k));
  }
  for (const char* a : {"Omega0_x", "Omega0_y", "Omega0_z"}) c.push_back(a);
  for (int i = 1; i <= scenario_.params.n(); ++i) {
    const std::string s = std::to_string(i);
    for (const char* f : {"_x", "_y", "_z", "_roll", "_pitch", "_yaw"}) c.push_back("quad" + s + f);
    for (const char* f : {"_x", "_y", "_z"}) c.push_back("q" + s + f);
    c.push_back("psi_q" + s);
    c.push_back("tension" + s);
    for (const char* f : {"_roll", "_pitch", "_thrust"}) c.push_back("cmd" + s + f);
    c.push_back("sat" + s);
  }
  c.push_back("psi_R0");
  c.push_back("energy");
  return c;
}

std::vector<double> Simulation::sample() const {
  const auto& p = scenario_.params;
  const SystemState& s = state_;
  std::vector<double> row = {time(), static_cast<double>(waypoint_), s.x0.x(), s.x0.y(), s.x0.z(),
                             s.v0.x(), s.v0.y(), s.v0.z()};
  for (int r = 0; r < 3; ++r) {
    for (int k = 0; k < 3; ++k) row.push_back(s.R0(r, k));
  }
  for (int k = 0; k < 3; ++k) row.push_back(s.Omega0(k));
  const Derivatives acc = accelerations(s, last_cmd_, p);
  for (int i = 0; i < p.n(); ++i) {
    const Vec3 x = quad_position(s, p, i);
    const Vec3 euler = euler_zyx(s.quads[i].rotation);
    row.insert(row.end(), {x.x(), x.y(), x.z(), euler.x(), euler.y(), euler.z()});
    const Vec3& q = s.cables[i].q;
    row.insert(row.end(), {q.x(), q.y(), q.z(), cable_psi(q), acc.tensions[i]});
    const auto& c = commands_[i];
    row.insert(row.end(), {c.roll, c.pitch, c.thrust, c.saturated ? 1.0 : 0.0});
  }
  row.push_back(payload_psi(s.R0));
  row.push_back(energy(s, p).total());
  return row;
}

std::size_t RunLog::index(const std::string& name) const {
  for (std::size_t k = 0; k < columns.size(); ++k) {
    if (columns[k] == name) return k;
  }
  throw std::out_of_range("no column " + name);
}

std::vector<double> RunLog::column(const std::string& name) const {
  const std::size_t k = index(name);
  std::vector<double> out;
  out.reserve(rows.size());
  for (const auto& row : rows) out.push_back(row[k]);
  return out;
}

RunLog run(const Scenario& scenario) {
  Simulation sim(scenario);
  RunLog log;
  log.columns = sim.columns();
  const std::int64_t every = sim.scenario().steps_per_log();
  for (;;) {
    if (sim.steps() % every == 0) log.rows.push_back(sim.sample());
    if (sim.finished()) break;
    sim.advance();
  }
  return log;
}

std::vector<RunLog> run_batch(const std::vector<Scenario>& scenarios, Execution exec) {
  const auto count = static_cast<std::int64_t>(scenarios.size());
  std::vector<RunLog> logs(scenarios.size());
  std::vector<std::exception_ptr> errors(scenarios.size());
  auto one = [&](std::int64_t k) {
    try {
      logs[k] = run(scenarios[k]);
    } catch (...) {
      errors[k] = std::current_exception();
    }
  };
  if (exec == Execution::kSerial) {
    for (std::int64_t k = 0; k < count; ++k) one(k);
  } else {
#pragma omp parallel for schedule(dynamic)
    for (std::int64_t k = 0; k < count; ++k) one(k);
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return logs;
}

void write_csv(std::ostream& os, const RunLog& log) {
  for (std::size_t k = 0; k < log.columns.size(); ++k) {
    if (k) os << ',';
    os << log.columns[k];
  }
  os << '\n';
  char buf[32];
  for (const auto& row : log.rows) {
    for (std::size_t k = 0; k < row.size(); ++k) {
      std::snprintf(buf, sizeof buf, "%.17g", row[k]);
      if (k) os << ',';
      os << buf;
    }
    os << '\n';
  }
}

std::string scenario_hash(const Scenario& scenario) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : to_json(scenario).dump()) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016" PRIx64, h);
  return buf;
}

nlohmann::json run_metadata(const Scenario& scenario, const RunLog& log) {
  return {{"scenario", scenario.name},
          {"scenario_hash", scenario_hash(scenario)},
          {"seed", scenario.seed},
          {"code_version", kCodeVersion},
          {"dt", scenario.dt},
          {"log_interval", scenario.log_interval},
          {"duration", scenario.duration},
          {"samples", log.rows.size()},
          {"columns", log.columns}};
}

}  // namespace cablelift
