#ifndef CABLELIFT_TELEOP_HPP_
#define CABLELIFT_TELEOP_HPP_

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "json.hpp"

#include "cablelift/sim.hpp"

namespace cablelift::teleop {

/// One operator frame: {"type":"cmd","seq","t_ms","phi","theta","thrust"}.
/// thrust is normalized to [0, 1]; 0.5 is the leader's hover thrust.
struct CommandMessage {
  std::int64_t seq = 0;
  std::int64_t t_ms = 0;
  double phi = 0.0;    // rad
  double theta = 0.0;  // rad
  double thrust = 0.5;
  bool arm = false;
  bool disarm = false;
  bool reset = false;
};

struct CommandBounds {
  double max_tilt = 0.35;      // rad, |phi| and |theta|
  double thrust_full = 0.0;    // N at thrust = 1
};

CommandBounds bounds_for(const Simulation& sim);

/// Rejection reason carried back in an err frame.
struct ProtocolError {
  std::string code;  // bad_json, bad_type, bad_field, out_of_range, stale_seq
  std::string detail;
};

using ParseResult = std::variant<CommandMessage, ProtocolError>;

/// Parses and range-checks one inbound text frame.
ParseResult parse_command(std::string_view text, const CommandBounds& bounds);

/// parse_command plus the per-connection sequence rule; last_seq is updated
/// on success.
ParseResult accept_command(std::string_view text, const CommandBounds& bounds,
                           std::int64_t& last_seq);

nlohmann::json to_json(const CommandMessage& cmd);
nlohmann::json error_frame(const ProtocolError& error);

LeaderInput to_leader_input(const CommandMessage& cmd, const CommandBounds& bounds);

/// Inbound queue shared between network threads and the loop. Events are
/// drained in arrival order once per control tick.
class Mailbox {
 public:
  struct Connected {
    int connection;
  };
  struct Disconnected {
    int connection;
  };
  struct Command {
    int connection;
    CommandMessage message;
  };
  using Event = std::variant<Connected, Disconnected, Command>;

  void post(Event event);
  std::vector<Event> drain();

 private:
  std::mutex mu_;
  std::vector<Event> events_;
};

struct LoopOptions {
  double stream_hz = 50.0;
  double failsafe_seconds = 0.5;
};

/// Snapshot frame of the current simulation state.
nlohmann::json snapshot(const Simulation& sim, std::int64_t last_seq);

/// Owns the simulation. Each step() advances one physics step; at control
/// ticks the mailbox is drained and the newest valid command becomes the
/// leader input. When the last client leaves, the input ramps linearly to
/// hover over failsafe_seconds.
class TeleopLoop {
 public:
  using Sink = std::function<void(const nlohmann::json&)>;

  TeleopLoop(Scenario scenario, LoopOptions options, Mailbox& mailbox);

  /// Receives every state frame.
  void set_snapshot_sink(Sink sink) { snapshot_sink_ = std::move(sink); }
  /// JSON lines: a header with the scenario, then cmd and state records.
  void set_recorder(std::ostream* out);

  void step();

  [[nodiscard]] const Simulation& sim() const { return sim_; }
  [[nodiscard]] int connections() const { return static_cast<int>(last_seq_.size()); }
  [[nodiscard]] std::int64_t last_seq() const { return applied_seq_; }
  [[nodiscard]] bool failsafe_active() const { return failsafe_.has_value(); }
  [[nodiscard]] bool armed() const { return armed_; }
  [[nodiscard]] std::int64_t steps_per_stream() const { return steps_per_stream_; }
  [[nodiscard]] std::int64_t steps_per_control() const { return sim_.scenario().steps_per_control(); }

 private:
  struct Failsafe {
    double start;
    LeaderInput from;
  };

  void control_update();
  void apply(const LeaderInput& input, const char* source);

  Simulation sim_;
  Mailbox& mailbox_;
  CommandBounds bounds_;
  double failsafe_seconds_;
  std::int64_t steps_per_stream_;
  std::map<int, std::int64_t> last_seq_;  // per open connection
  std::int64_t applied_seq_ = -1;
  LeaderInput target_;
  std::optional<Failsafe> failsafe_;
  bool armed_ = true;
  Sink snapshot_sink_;
  std::ostream* recorder_ = nullptr;
};

/// Turns a recording back into a script-mode scenario that reproduces the
/// recorded run step for step.
Scenario scenario_from_recording(std::istream& in);

}  // namespace cablelift::teleop

#endif  // CABLELIFT_TELEOP_HPP_
