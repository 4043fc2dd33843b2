// cablelift command-line entry point.
//
// Exit status: 0 ok, 1 invalid input (scenario, usage, I/O), 2 numeric
// failure. Errors go to stderr as one JSON object.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <complex>
#include <csignal>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "cablelift/dynamics.hpp"
#include "cablelift/server.hpp"
#include "cablelift/sim.hpp"
#include "cablelift/synthesis.hpp"
#include "cablelift/teleop.hpp"

using namespace cablelift;
using nlohmann::json;

namespace {

constexpr int kExitInput = 1;
constexpr int kExitNumeric = 2;

std::atomic<bool> g_interrupted{false};

void on_signal(int) { g_interrupted = true; }

int report(int code, const std::string& kind, const std::string& message, json extra = json::object()) {
  extra["error"] = kind;
  extra["message"] = message;
  std::cerr << extra.dump() << std::endl;
  return code;
}

bool ends_with(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

// Scenario file, built-in name, or a teleop recording (*.jsonl).
Scenario resolve(const std::string& arg) {
  if (ends_with(arg, ".jsonl")) {
    std::ifstream in(arg);
    if (!in) throw ScenarioError(arg + ": cannot open recording");
    return teleop::scenario_from_recording(in);
  }
  return load_scenario(arg);
}

json complex_list(const Eigen::VectorXcd& v) {
  std::vector<std::complex<double>> sorted(v.data(), v.data() + v.size());
  std::sort(sorted.begin(), sorted.end(), [](auto a, auto b) {
    return a.real() != b.real() ? a.real() > b.real() : a.imag() > b.imag();
  });
  json out = json::array();
  for (const auto& z : sorted) out.push_back({z.real(), z.imag()});
  return out;
}

int cmd_run(const std::string& scenario_arg, const std::string& out_path) {
  const Scenario s = resolve(scenario_arg);
  const RunLog log = run(s);
  const json meta = run_metadata(s, log);
  if (out_path.empty() || out_path == "-") {
    write_csv(std::cout, log);
  } else {
    std::ofstream out(out_path);
    if (!out) throw ScenarioError(out_path + ": cannot write");
    write_csv(out, log);
    std::ofstream side(out_path + ".json");
    side << meta.dump(2) << '\n';
    std::cout << json{{"out", out_path}, {"metadata", out_path + ".json"}, {"samples", log.rows.size()}}.dump()
              << '\n';
  }
  return 0;
}

int cmd_scenarios_list() {
  for (const auto& entry : builtin_scenarios()) std::cout << entry.name << "\t" << entry.description << '\n';
  return 0;
}

int cmd_scenarios_show(const std::string& name) {
  std::cout << to_json(resolve(name)).dump(2) << '\n';
  return 0;
}

int cmd_linearize(const std::string& scenario_arg, const std::string& out_path) {
  const Scenario s = resolve(scenario_arg);
  const HoverEquilibrium eq = build_equilibrium(s.params, s.initial.position);
  const LinearModel model = linearize(s.params, eq);
  const Eigen::VectorXcd eig = model.A0.eigenvalues();
  json summary = {{"scenario", s.name},
                  {"n", model.n},
                  {"config_dim", reduced_config_dim(model.n)},
                  {"state_dim", model.A0.rows()},
                  {"input_dim", model.B0.cols()},
                  {"hover_thrusts", eq.thrusts},
                  {"max_real_part", eig.real().maxCoeff()},
                  {"eigenvalues", complex_list(eig)}};
  if (!out_path.empty()) {
    std::ofstream out(out_path);
    if (!out) throw ScenarioError(out_path + ": cannot write");
    write_linear_model(out, model);
    summary["model"] = out_path;
  }
  std::cout << summary.dump(2) << '\n';
  return 0;
}

int cmd_gains_synth(const std::string& scenario_arg, const SynthesisOptions& options) {
  const Scenario s = resolve(scenario_arg);
  const LinearModel model = linearize(s.params, build_equilibrium(s.params, s.initial.position));
  SynthesisReport report;
  const ControlGains gains = synthesize_gains(model, options, &report);
  json out = {{"scenario", s.name},
              {"gains", gains_to_json(gains)},
              {"report",
               {{"lqr_abscissa", report.lqr_abscissa},
                {"truncated_abscissa", report.truncated_abscissa},
                {"final_abscissa", report.final_abscissa},
                {"refined", report.refined},
                {"iterations", report.iterations},
                {"truncated_cost", report.truncated_cost},
                {"final_cost", report.final_cost},
                {"controlled_dim", report.analysis.controlled_dim},
                {"controlled_eigenvalues", complex_list(report.analysis.controlled_eigenvalues)}}}};
  std::cout << out.dump(2) << '\n';
  return 0;
}

int cmd_serve(const std::string& scenario_arg, teleop::ServerOptions options) {
  teleop::Server server(resolve(scenario_arg), options);
  server.start();
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  std::cout << json{{"listening", "ws://" + options.address + ":" + std::to_string(server.port()) + "/ws"}}.dump()
            << std::endl;
  while (!g_interrupted) {
    if (server.wait_for(std::chrono::milliseconds(100))) break;
  }
  server.stop();
  server.wait();
  const auto stats = server.stats();
  std::cout << json{{"periods", stats.periods},
                    {"overruns", stats.overruns},
                    {"mean_lag_s", stats.mean_lag},
                    {"max_lag_s", stats.max_lag}}
                   .dump()
            << std::endl;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Cooperative cable-suspended payload simulator"};
  app.require_subcommand(1);

  std::string scenario_arg, out_path;

  auto* run_cmd = app.add_subcommand("run", "Simulate a scenario and write the CSV log");
  run_cmd->add_option("scenario", scenario_arg, "Scenario file, built-in name, or recording (.jsonl)")->required();
  run_cmd->add_option("--out,-o", out_path, "CSV output path (metadata goes to <out>.json); '-' for stdout");

  auto* scenarios_cmd = app.add_subcommand("scenarios", "Built-in scenarios");
  scenarios_cmd->require_subcommand(1);
  auto* list_cmd = scenarios_cmd->add_subcommand("list", "List built-in scenarios");
  auto* show_cmd = scenarios_cmd->add_subcommand("show", "Print a scenario as JSON");
  show_cmd->add_option("scenario", scenario_arg)->required();

  auto* lin_cmd = app.add_subcommand("linearize", "Linearize about hover and summarize");
  lin_cmd->add_option("scenario", scenario_arg)->required();
  lin_cmd->add_option("--out,-o", out_path, "Write the matrices in the plain-text model format");

  SynthesisOptions synth;
  auto* gains_cmd = app.add_subcommand("gains", "Follower gain tools");
  gains_cmd->require_subcommand(1);
  auto* synth_cmd = gains_cmd->add_subcommand("synth", "Synthesize follower gains");
  synth_cmd->add_option("scenario", scenario_arg)->required();
  synth_cmd->add_option("--input-weight", synth.input_weight, "Input weight r in R = r I")->capture_default_str();
  synth_cmd->add_option("--margin", synth.required_margin, "Required stability margin")->capture_default_str();

  teleop::ServerOptions serve;
  auto* serve_cmd = app.add_subcommand("serve", "Run the real-time teleoperation server");
  serve_cmd->add_option("scenario", scenario_arg)->required();
  serve_cmd->add_option("--port", serve.port, "TCP port (0 picks one)")->capture_default_str();
  serve_cmd->add_option("--address", serve.address, "Listen address")->capture_default_str();
  serve_cmd->add_option("--stream-hz", serve.loop.stream_hz, "State frame rate")->capture_default_str();
  serve_cmd->add_option("--record", serve.record_path, "Record commands and snapshots as JSON lines");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return report(kExitInput, "usage", e.what());
  }

  try {
    if (*run_cmd) return cmd_run(scenario_arg, out_path);
    if (*list_cmd) return cmd_scenarios_list();
    if (*show_cmd) return cmd_scenarios_show(scenario_arg);
    if (*lin_cmd) return cmd_linearize(scenario_arg, out_path);
    if (*synth_cmd) return cmd_gains_synth(scenario_arg, synth);
    if (*serve_cmd) return cmd_serve(scenario_arg, serve);
  } catch (const ScenarioError& e) {
    return report(kExitInput, "scenario", e.what());
  } catch (const ModelError& e) {
    return report(kExitInput, "scenario", e.what());
  } catch (const SimulationError& e) {
    return report(kExitNumeric, "numeric", e.what(), {{"time", e.time()}, {"last_state", e.last_state()}});
  } catch (const SynthesisError& e) {
    return report(kExitNumeric, "synthesis", e.what());
  } catch (const LinearizationError& e) {
    return report(kExitNumeric, "linearization", e.what());
  } catch (const DynamicsError& e) {
    return report(kExitNumeric, "numeric", e.what());
  } catch (const std::system_error& e) {
    return report(kExitInput, "io", e.what());
  } catch (const std::exception& e) {
    return report(kExitNumeric, "internal", e.what());
  }
  return 0;
}
