#ifndef CABLELIFT_SCENARIO_HPP_
#define CABLELIFT_SCENARIO_HPP_

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "cablelift/controllers.hpp"
#include "cablelift/model.hpp"

namespace cablelift {

inline constexpr int kScenarioSchemaVersion = 1;

/// Invalid scenario file or field; the message names the offending key.
class ScenarioError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct InitialCondition {
  enum class Kind { kHover, kTiltedCables, kOffsetPayload, kExplicit };
  Kind kind = Kind::kHover;
  double angle_deg = 0.0;
  Vec3 position = Vec3::Zero();  // payload position at hover
  SystemState state;             // kExplicit only
};

struct Waypoint {
  Vec3 position = Vec3::Zero();  // payload target
  double dwell = 0.0;            // s held after arrival
};

/// Piecewise-constant leader input starting at time t.
struct ScriptedInput {
  double t = 0.0;
  LeaderInput input;
};

enum class LeaderMode { kTeleop, kWaypoints, kScript };

struct LeaderPolicy {
  LeaderMode mode = LeaderMode::kTeleop;
  std::vector<Waypoint> waypoints;
  double arrival_radius = 0.1;  // m
  std::vector<ScriptedInput> script;
};

struct NoiseConfig {
  double angle_sigma = 0.0;  // rad
  double rate_sigma = 0.0;   // rad/s
};

struct Scenario {
  std::string name;
  std::string description;
  std::string system_preset;  // empty when parameters are given explicitly
  SystemParams params;
  InitialCondition initial;
  LeaderPolicy leader;
  ControlGains gains;
  bool synthesize_followers = true;  // fill gains.followers at load time
  bool followers_enabled = true;     // false: followers hold level hover
  ActuationMode actuation = ActuationMode::kFull;
  double dt = 0.001;
  double duration = 10.0;
  double log_interval = 0.01;
  double control_rate = 100.0;  // Hz
  std::uint64_t seed = 0;
  NoiseConfig noise;

  /// Throws ScenarioError when an invariant is violated.
  void validate() const;
  [[nodiscard]] std::int64_t total_steps() const;
  [[nodiscard]] std::int64_t steps_per_log() const;
  [[nodiscard]] std::int64_t steps_per_control() const;
};

SystemParams system_preset(const std::string& name);
std::vector<std::string> system_preset_names();

/// Strict parse: unknown keys, wrong types, and unsupported schema versions
/// raise ScenarioError.
Scenario parse_scenario(const nlohmann::json& doc);
nlohmann::json to_json(const Scenario& scenario);

nlohmann::json gains_to_json(const ControlGains& gains);

/// Reads a scenario file, or a built-in by name.
Scenario load_scenario(const std::string& path_or_name);

struct NamedScenario {
  std::string name;
  std::string description;
  Scenario scenario;
};

std::vector<NamedScenario> builtin_scenarios();
std::optional<Scenario> find_builtin(const std::string& name);

/// Initial full state described by the scenario.
SystemState initial_state(const Scenario& scenario);

/// 2 m square at 1 m altitude centred on the origin, starting at a corner.
std::vector<Waypoint> square_waypoints(double dwell = 2.0);

/// Open-loop leader script tracing a square: tilt toward each side in turn,
/// brake, and coast.
std::vector<ScriptedInput> square_script(const SystemParams& params, double tilt = 0.05,
                                         double push = 1.5, double coast = 3.0);

}  // namespace cablelift

#endif  // CABLELIFT_SCENARIO_HPP_
