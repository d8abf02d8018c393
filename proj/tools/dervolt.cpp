// Command-line front end: closed-loop simulation, Monte Carlo accuracy
// study, offline estimation, and plot-ready CSV extraction.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "dervolt/scenario.hpp"

namespace fs = std::filesystem;
using namespace dervolt;

namespace {

std::vector<int> parse_windows(const std::string& list) {
  std::vector<int> windows;
  std::stringstream ss(list);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    windows.push_back(std::stoi(tok));
  }
  return windows;
}

int cmd_simulate(const std::string& config_path, const std::string& out_path,
                 const std::string& mode_override, bool break_alpha,
                 int estimate_every, const std::string& snapshots_out) {
  ScenarioConfig config = load_scenario(config_path);
  if (!mode_override.empty()) {
    config.mode = controller_mode_from_string(mode_override);
  }
  if (break_alpha) {
    for (auto& event : config.events) {
      event.preserve_alpha = false;
    }
  }
  if (estimate_every > 0) {
    config.estimate_every = estimate_every;
  }
  SimulationTrace trace = run_closed_loop(config);
  write_trace_csv(trace, out_path);
  if (!snapshots_out.empty()) {
    write_snapshots_csv(trace.snapshots, snapshots_out);
  }

  int violated_steps = 0;
  for (const auto& rec : trace.steps) {
    if (rec.band_violations > 0) ++violated_steps;
  }
  std::cout << "simulated " << trace.steps.size() << " steps ("
            << to_string(config.mode) << "), termination: " << trace.termination
            << "\n  steps with band violations: " << violated_steps
            << "\n  final mae_x: "
            << (trace.steps.empty() ? 0.0 : trace.steps.back().mae_x)
            << "\n  trace: " << out_path << "\n";
  return trace.termination == "completed" ? 0 : 1;
}

int cmd_montecarlo(const std::string& config_path, const std::string& windows,
                   int replicas, const std::string& out_path) {
  ScenarioConfig config = load_scenario(config_path);
  auto rows = run_monte_carlo(config, parse_windows(windows), replicas);
  write_monte_carlo_csv(rows, out_path);
  std::cout << "window  mae_x_mean    mae_x_var     mae_X_mean    mae_X_var\n";
  for (const auto& row : rows) {
    std::cout << std::setw(6) << row.window << "  " << std::scientific
              << std::setprecision(4) << row.mae_x_mean << "    "
              << row.mae_x_var << "    " << row.mae_X_mean << "    "
              << row.mae_X_var << "\n";
  }
  std::cout << "table: " << out_path << "\n";
  return 0;
}

int cmd_estimate(const std::string& config_path,
                 const std::string& snapshots_path,
                 const std::string& out_path) {
  ScenarioConfig config = load_scenario(config_path);
  FeederModel feeder = load_feeder(config.feeder_path);
  auto snapshots = read_snapshots_csv(snapshots_path);
  if (snapshots.empty()) {
    std::cerr << "no snapshots in " << snapshots_path << "\n";
    return 1;
  }
  MeasurementWindow window(config.window);
  std::size_t first = snapshots.size() > static_cast<std::size_t>(config.window)
                          ? snapshots.size() - config.window
                          : 0;
  for (std::size_t i = first; i < snapshots.size(); ++i) {
    window.push(snapshots[i]);
  }
  EstimatedParameters est =
      estimate(window, feeder.topology, feeder.params.alpha);

  std::ostream* out = &std::cout;
  std::ofstream file;
  if (!out_path.empty()) {
    file.open(out_path);
    out = &file;
  }
  *out << "line,from,to,x_hat,r_hat,x_true,r_true\n" << std::setprecision(12);
  for (int l = 0; l < feeder.topology.line_count(); ++l) {
    auto [from, to] = feeder.topology.line(l);
    *out << l + 1 << ',' << from << ',' << to << ',' << est.x_hat[l] << ','
         << est.r_hat[l] << ',' << feeder.params.x[l] << ','
         << feeder.params.r[l] << '\n';
  }
  std::cerr << "window " << window.size() << " snapshots, effective rank "
            << est.effective_rank
            << (est.rank_deficient ? " (rank deficient)" : "") << ", "
            << est.negative_lines.size() << " negative estimates\n";
  return 0;
}

int cmd_plotdata(const std::string& trace_path, const std::string& out_dir) {
  SimulationTrace trace = read_trace_csv(trace_path);
  if (trace.steps.empty()) {
    std::cerr << "empty trace\n";
    return 1;
  }
  fs::create_directories(out_dir);
  const int n = static_cast<int>(trace.steps[0].v_true.size());

  {
    std::ofstream out(fs::path(out_dir) / "mae_evolution.csv");
    out << std::setprecision(12) << "step,mae_x,mae_X,mae_r,mae_R\n";
    for (const auto& rec : trace.steps) {
      out << rec.step << ',' << rec.mae_x << ',' << rec.mae_X << ','
          << rec.mae_r << ',' << rec.mae_R << '\n';
    }
  }
  {
    std::ofstream out(fs::path(out_dir) / "voltage_profiles.csv");
    out << std::setprecision(12) << "step,v_min,v_max,violations";
    for (int i = 1; i <= n; ++i) out << ",v_" << i;
    out << '\n';
    for (const auto& rec : trace.steps) {
      out << rec.step << ',' << rec.v_true.minCoeff() << ','
          << rec.v_true.maxCoeff() << ',' << rec.band_violations;
      for (int i = 0; i < n; ++i) out << ',' << rec.v_true[i];
      out << '\n';
    }
  }
  {
    // reactive set-point trajectories for buses that ever inject
    std::vector<int> der_buses;
    for (int i = 0; i < n; ++i) {
      for (const auto& rec : trace.steps) {
        if (rec.q_g[i] != 0.0 || rec.p_g[i] != 0.0) {
          der_buses.push_back(i);
          break;
        }
      }
    }
    std::ofstream out(fs::path(out_dir) / "reactive_power.csv");
    out << std::setprecision(12) << "step";
    for (int b : der_buses) out << ",q_g_" << b + 1;
    out << '\n';
    for (const auto& rec : trace.steps) {
      out << rec.step;
      for (int b : der_buses) out << ',' << rec.q_g[b];
      out << '\n';
    }
  }
  std::cout << "wrote mae_evolution.csv, voltage_profiles.csv, "
               "reactive_power.csv under "
            << out_dir << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Data-driven voltage control for radial distribution feeders"};
  app.require_subcommand(1);

  std::string config_path, out_path, mode_override, snapshots_path, windows;
  bool break_alpha = false;
  int estimate_every = 0, replicas = 100;

  auto* sim = app.add_subcommand("simulate", "Run the closed control loop");
  sim->add_option("--config", config_path, "scenario JSON")->required();
  sim->add_option("--out", out_path, "trace CSV output")->required();
  sim->add_option("--mode", mode_override,
                  "override controller mode (estimated-model, "
                  "frozen-true-model, no-control)");
  sim->add_flag("--break-alpha", break_alpha,
                "events scale x only, changing the R-to-X ratio");
  sim->add_option("--estimate-every", estimate_every,
                  "re-estimate every k-th step");
  sim->add_option("--snapshots-out", snapshots_path,
                  "also dump raw measurements as CSV");

  auto* mc = app.add_subcommand("montecarlo", "Estimation accuracy study");
  mc->add_option("--config", config_path, "scenario JSON")->required();
  mc->add_option("--windows", windows, "comma-separated window sizes")
      ->default_val("1,5,10,20");
  mc->add_option("--replicas", replicas, "independent runs per window")
      ->default_val(100);
  mc->add_option("--out", out_path, "table CSV output")->required();

  auto* est = app.add_subcommand("estimate",
                                 "One-shot estimation from recorded data");
  est->add_option("--config", config_path, "scenario JSON")->required();
  est->add_option("--snapshots", snapshots_path, "snapshot CSV")->required();
  est->add_option("--out", out_path, "write estimates CSV here");

  auto* plot = app.add_subcommand("plotdata",
                                  "Extract per-figure CSVs from a trace");
  std::string trace_path, plot_dir;
  plot->add_option("--trace", trace_path, "trace CSV")->required();
  plot->add_option("--out", plot_dir, "output directory")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (sim->parsed()) {
      return cmd_simulate(config_path, out_path, mode_override, break_alpha,
                          estimate_every, snapshots_path);
    }
    if (mc->parsed()) {
      return cmd_montecarlo(config_path, windows, replicas, out_path);
    }
    if (est->parsed()) {
      return cmd_estimate(config_path, snapshots_path, out_path);
    }
    if (plot->parsed()) {
      return cmd_plotdata(trace_path, plot_dir);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
