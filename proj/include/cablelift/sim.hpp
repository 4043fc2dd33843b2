#ifndef CABLELIFT_SIM_HPP_
#define CABLELIFT_SIM_HPP_

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "cablelift/controllers.hpp"
#include "cablelift/linearization.hpp"
#include "cablelift/parallel.hpp"
#include "cablelift/scenario.hpp"

namespace cablelift {

inline constexpr const char* kCodeVersion = "0.1.0";

/// Numeric failure during a run, with the time and last good state.
class SimulationError : public std::runtime_error {
 public:
  SimulationError(const std::string& what, double time, std::string last_state)
      : std::runtime_error(what), time_(time), last_state_(std::move(last_state)) {}
  [[nodiscard]] double time() const { return time_; }
  [[nodiscard]] const std::string& last_state() const { return last_state_; }

 private:
  double time_;
  std::string last_state_;
};

/// Psi_q = 1 - (-e3) . q
double cable_psi(const Vec3& q);
/// Psi_R0 = tr(I - R0) / 2
double payload_psi(const Mat3& r0);

/// Fixed-step closed loop: physics every dt, outer control loops at
/// control_rate, attitude PIDs every physics step.
class Simulation {
 public:
  /// Resolves follower gains (synthesizing them if asked) and validates.
  explicit Simulation(Scenario scenario);

  /// Teleop input, applied at the next control tick.
  void set_leader_input(const LeaderInput& input) { pending_leader_ = input; }
  /// Neutral hover input for the leader.
  [[nodiscard]] LeaderInput hover_input() const;

  /// Advance one physics step. Throws SimulationError on numeric failure.
  void advance();

  [[nodiscard]] double time() const { return static_cast<double>(steps_) * scenario_.dt; }
  [[nodiscard]] std::int64_t steps() const { return steps_; }
  [[nodiscard]] bool finished() const { return steps_ >= scenario_.total_steps(); }
  [[nodiscard]] const SystemState& state() const { return state_; }
  [[nodiscard]] const Scenario& scenario() const { return scenario_; }
  [[nodiscard]] const ControlGains& gains() const { return scenario_.gains; }
  [[nodiscard]] const HoverEquilibrium& equilibrium() const { return eq_; }
  [[nodiscard]] const std::vector<AttitudeCommand>& commands() const { return commands_; }
  [[nodiscard]] const LeaderInput& applied_leader_input() const { return leader_input_; }
  [[nodiscard]] int waypoint_index() const { return waypoint_; }

  /// CSV column names, and the matching row for the current state.
  [[nodiscard]] std::vector<std::string> columns() const;
  [[nodiscard]] std::vector<double> sample() const;

 private:
  void control_tick();
  LeaderInput leader_policy();

  Scenario scenario_;
  HoverEquilibrium eq_;
  SystemState state_;
  std::int64_t steps_ = 0;
  std::vector<AttitudePid> pids_;
  std::vector<AttitudeCommand> commands_;
  std::vector<Vec3> thrust_vectors_;  // reduced actuation
  ActuationCommand last_cmd_;
  LeaderInput leader_input_;
  std::optional<LeaderInput> pending_leader_;
  NoiseInjector noise_;
  int waypoint_ = 0;
  std::optional<double> arrived_at_;
};

struct RunLog {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;

  [[nodiscard]] std::size_t index(const std::string& column) const;
  [[nodiscard]] std::vector<double> column(const std::string& name) const;
};

RunLog run(const Scenario& scenario);

/// One run per scenario; the parallel kernel spreads runs over threads.
std::vector<RunLog> run_batch(const std::vector<Scenario>& scenarios, Execution exec);

/// Header row then one line per sample, values printed round-trip exact.
void write_csv(std::ostream& os, const RunLog& log);

/// 64-bit FNV-1a of the canonical scenario JSON, as 16 hex digits.
std::string scenario_hash(const Scenario& scenario);
nlohmann::json run_metadata(const Scenario& scenario, const RunLog& log);

}  // namespace cablelift

#endif  // CABLELIFT_SIM_HPP_
