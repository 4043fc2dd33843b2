#include <gtest/gtest.h>

#include <cmath>
#include <cstdlib>
#include <limits>
#include <sstream>

#include "cablelift/dynamics.hpp"
#include "cablelift/sim.hpp"

using namespace cablelift;

namespace {

Scenario short_run(const std::string& name, double duration) {
  Scenario s = *find_builtin(name);
  s.duration = duration;
  return s;
}

double max_psi(const RunLog& log, std::size_t row, int n) {
  double m = log.rows[row][log.index("psi_R0")];
  for (int i = 1; i <= n; ++i) m = std::max(m, log.rows[row][log.index("psi_q" + std::to_string(i))]);
  return m;
}

}  // namespace

TEST(SimulationTest, HoverHoldsStill) {
  for (const char* name : {"single-quad-pendulum", "rod-2quad", "triangle-3quad"}) {
    const Scenario s = short_run(name, 2.0);
    const RunLog log = run(s);
    const auto& first = log.rows.front();
    const auto& last = log.rows.back();
    double drift = 0.0;
    for (std::size_t k = 1; k < first.size(); ++k) {
      if (log.columns[k] == "energy") continue;
      drift = std::max(drift, std::abs(last[k] - first[k]));
    }
    EXPECT_LE(drift, 1e-6) << name;
  }
}

TEST(SimulationTest, RowsFollowLogCadence) {
  const Scenario s = short_run("rod-2quad-tilted", 0.5);
  const RunLog log = run(s);
  ASSERT_EQ(log.rows.size(), 51u);
  const auto t = log.column("t");
  for (std::size_t k = 0; k < t.size(); ++k) EXPECT_NEAR(t[k], 0.01 * k, 1e-12);
  for (const auto& row : log.rows) EXPECT_EQ(row.size(), log.columns.size());
}

TEST(SimulationTest, RepeatedRunsAreBitIdentical) {
  Scenario s = short_run("triangle-3quad-tilted", 1.0);
  s.noise = {0.01, 0.05};
  s.seed = 7;
  const RunLog a = run(s), b = run(s);
  EXPECT_EQ(a.rows, b.rows);
  s.seed = 8;
  EXPECT_NE(run(s).rows, a.rows);
}

TEST(SimulationTest, PsiColumnsRecomputeFromLoggedState) {
  const Scenario s = short_run("triangle-3quad-tilted", 1.0);
  const RunLog log = run(s);
  for (const auto& row : log.rows) {
    for (int i = 1; i <= 3; ++i) {
      const std::string k = std::to_string(i);
      const Vec3 q(row[log.index("q" + k + "_x")], row[log.index("q" + k + "_y")],
                   row[log.index("q" + k + "_z")]);
      EXPECT_NEAR(row[log.index("psi_q" + k)], 1.0 + q.z(), 1e-12);
    }
    double trace = 0.0;
    for (int a = 0; a < 3; ++a) trace += row[log.index("R0_" + std::to_string(a) + std::to_string(a))];
    EXPECT_NEAR(row[log.index("psi_R0")], 0.5 * (3.0 - trace), 1e-12);
  }
}

TEST(SimulationTest, ClosedLoopDecayFromTiltedCables) {
  for (const char* name : {"rod-2quad-tilted", "triangle-3quad-tilted"}) {
    for (ActuationMode mode : {ActuationMode::kFull, ActuationMode::kReduced}) {
      Scenario s = *find_builtin(name);
      s.actuation = mode;
      const RunLog log = run(s);
      EXPECT_LT(max_psi(log, log.rows.size() - 1, s.params.n()), 0.01) << name;
      EXPECT_GT(max_psi(log, 0, s.params.n()), 0.01) << name;
    }
  }
}

TEST(SimulationTest, SaturatedLoopStaysBounded) {
  for (const char* name : {"rod-2quad-tilted", "triangle-3quad-tilted"}) {
    for (auto kind : {InitialCondition::Kind::kTiltedCables, InitialCondition::Kind::kOffsetPayload}) {
      Scenario s = *find_builtin(name);
      s.initial.kind = kind;
      s.initial.angle_deg = 15.0;
      s.duration = 30.0;
      s.log_interval = 0.1;
      const RunLog log = run(s);
      double speed = 0.0;
      for (const auto& row : log.rows) {
        for (double v : row) ASSERT_TRUE(std::isfinite(v));
        speed = std::max(speed, Vec3(row[5], row[6], row[7]).norm());
      }
      EXPECT_LT(speed, 5.0) << name;
    }
  }
}

TEST(SimulationTest, TeleopInputAppliesAtNextControlTick) {
  Simulation sim(short_run("rod-2quad", 1.0));
  const LeaderInput hover = sim.hover_input();
  LeaderInput tilt = hover;
  tilt.pitch = 0.1;
  sim.advance();
  sim.set_leader_input(tilt);
  for (int k = 1; k < 10; ++k) {
    sim.advance();
    EXPECT_EQ(sim.applied_leader_input().pitch, 0.0);
  }
  sim.advance();
  EXPECT_EQ(sim.applied_leader_input().pitch, 0.1);
  EXPECT_EQ(sim.commands()[0].pitch, 0.1);
  for (int k = 0; k < 30; ++k) sim.advance();
  EXPECT_EQ(sim.applied_leader_input().pitch, 0.1);
}

TEST(SimulationTest, ScriptIsPiecewiseConstant) {
  Scenario s = short_run("rod-2quad", 1.0);
  s.leader.mode = LeaderMode::kScript;
  const double f = build_equilibrium(s.params).thrusts[0];
  s.leader.script = {{0.0, {0.0, 0.0, f, false}}, {0.5, {0.0, 0.05, f, false}}};
  Simulation sim(s);
  while (sim.time() < 0.495) sim.advance();
  EXPECT_EQ(sim.applied_leader_input().pitch, 0.0);
  while (sim.time() < 0.515) sim.advance();
  EXPECT_EQ(sim.applied_leader_input().pitch, 0.05);
}

TEST(SimulationTest, WaypointsAdvanceAfterDwell) {
  Scenario s = short_run("rod-2quad", 20.0);
  s.leader.mode = LeaderMode::kWaypoints;
  s.leader.waypoints = {{Vec3(0, 0, 1), 0.5}, {Vec3(0.5, 0, 1), 0.0}};
  Simulation sim(s);
  sim.advance();
  EXPECT_EQ(sim.waypoint_index(), 0);
  while (sim.time() < 0.49) sim.advance();
  EXPECT_EQ(sim.waypoint_index(), 0);
  while (sim.time() < 0.52) sim.advance();
  EXPECT_EQ(sim.waypoint_index(), 1);
  while (!sim.finished()) sim.advance();
  EXPECT_LT((sim.state().x0 - Vec3(0.5, 0, 1)).norm(), 0.1);
}

TEST(SimulationTest, DisabledFollowersHoldLevelHover) {
  Scenario s = short_run("rod-2quad-tilted", 0.2);
  s.followers_enabled = false;
  Simulation sim(s);
  for (int k = 0; k < 50; ++k) sim.advance();
  EXPECT_EQ(sim.commands()[1].roll, 0.0);
  EXPECT_EQ(sim.commands()[1].pitch, 0.0);
  EXPECT_EQ(sim.commands()[1].thrust, sim.equilibrium().thrusts[1]);
}

TEST(SimulationTest, NumericFailureReportsTimeAndState) {
  Scenario s = short_run("rod-2quad", 1.0);
  s.initial.kind = InitialCondition::Kind::kExplicit;
  s.initial.state = hover_state(2, Vec3(0, 0, 1));
  s.initial.state.cables[1].omega = Vec3(1e300, 0, 0);
  try {
    run(s);
    FAIL() << "expected SimulationError";
  } catch (const SimulationError& e) {
    EXPECT_GE(e.time(), 0.0);
    EXPECT_NE(e.last_state().find("x0"), std::string::npos);
  }
}

TEST(BatchTest, ParallelMatchesSerial) {
  std::vector<Scenario> batch;
  for (const char* name : {"rod-2quad-tilted", "triangle-3quad-tilted", "single-quad-pendulum"}) {
    batch.push_back(short_run(name, 0.5));
  }
  batch[2].initial.kind = InitialCondition::Kind::kTiltedCables;
  batch[2].initial.angle_deg = 5.0;
  const auto serial = run_batch(batch, Execution::kSerial);
  const auto parallel = run_batch(batch, Execution::kParallel);
  ASSERT_EQ(serial.size(), 3u);
  for (std::size_t k = 0; k < 3; ++k) {
    EXPECT_EQ(serial[k].columns, parallel[k].columns);
    EXPECT_EQ(serial[k].rows, parallel[k].rows);
  }
}

TEST(BatchTest, FailureIsRethrown) {
  std::vector<Scenario> batch = {short_run("rod-2quad", 0.1), short_run("rod-2quad", 0.1)};
  batch[1].initial.kind = InitialCondition::Kind::kExplicit;
  batch[1].initial.state = hover_state(2);
  batch[1].initial.state.cables[0].omega = Vec3(0, 1e300, 0);
  EXPECT_THROW(run_batch(batch, Execution::kParallel), SimulationError);
}

TEST(CsvTest, ValuesRoundTripExactly) {
  const RunLog log = run(short_run("rod-2quad-tilted", 0.2));
  std::ostringstream out;
  write_csv(out, log);
  std::istringstream in(out.str());
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line.substr(0, 10), "t,waypoint");
  std::size_t row = 0;
  while (std::getline(in, line)) {
    std::istringstream fields(line);
    std::string field;
    std::size_t col = 0;
    while (std::getline(fields, field, ',')) {
      ASSERT_EQ(std::strtod(field.c_str(), nullptr), log.rows[row][col]) << row << "," << col;
      ++col;
    }
    EXPECT_EQ(col, log.columns.size());
    ++row;
  }
  EXPECT_EQ(row, log.rows.size());
}

TEST(MetadataTest, HashIsStableAndSensitive) {
  Scenario s = *find_builtin("rod-2quad");
  const std::string h = scenario_hash(s);
  EXPECT_EQ(h.size(), 16u);
  EXPECT_EQ(h.find_first_not_of("0123456789abcdef"), std::string::npos);
  EXPECT_EQ(scenario_hash(*find_builtin("rod-2quad")), h);
  s.seed = 1;
  EXPECT_NE(scenario_hash(s), h);
  const RunLog log = run(short_run("rod-2quad", 0.05));
  const auto meta = run_metadata(s, log);
  EXPECT_EQ(meta.at("scenario_hash"), scenario_hash(s));
  EXPECT_EQ(meta.at("seed"), 1u);
  EXPECT_EQ(meta.at("samples"), log.rows.size());
  EXPECT_EQ(meta.at("code_version"), kCodeVersion);
}
