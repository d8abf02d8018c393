#include <benchmark/benchmark.h>

#include <random>

#include "dervolt/controller.hpp"
#include "dervolt/estimator.hpp"
#include "dervolt/plant.hpp"
#include "dervolt/scenario.hpp"

namespace {

using namespace dervolt;

const FeederModel& bundled() {
  static FeederModel model = load_feeder(DERVOLT_DATA_DIR "/ieee37.json");
  return model;
}

MeasurementWindow filled_window(int m) {
  const FeederModel& model = bundled();
  Plant plant(model.topology, model.params, model.loads, {0.01, 2e-4, 7});
  MeasurementWindow window(m);
  for (int k = 0; k < m; ++k) {
    plant.step_loads();
    PowerFlowResult flow = plant.solve(1.0);
    window.push(plant.measure(flow.state));
  }
  return window;
}

void BM_PowerFlowSweep(benchmark::State& state) {
  const FeederModel& model = bundled();
  Eigen::VectorXd p = -model.loads.p, q = -model.loads.q;
  for (auto _ : state) {
    auto result = solve_power_flow(model.topology, model.params, p, q, 1.0);
    benchmark::DoNotOptimize(result.state.u);
  }
}
BENCHMARK(BM_PowerFlowSweep);

void BM_BuildSensitivities(benchmark::State& state) {
  const FeederModel& model = bundled();
  for (auto _ : state) {
    auto sens = build_sensitivities(model.topology, model.params);
    benchmark::DoNotOptimize(sens.X);
  }
}
BENCHMARK(BM_BuildSensitivities);

void BM_Estimate(benchmark::State& state) {
  const FeederModel& model = bundled();
  MeasurementWindow window = filled_window(static_cast<int>(state.range(0)));
  for (auto _ : state) {
    auto est = estimate(window, model.topology, model.params.alpha);
    benchmark::DoNotOptimize(est.x_hat);
  }
}
BENCHMARK(BM_Estimate)->Arg(1)->Arg(5)->Arg(20);

void BM_SolveControl(benchmark::State& state) {
  const FeederModel& model = bundled();
  const int n = model.topology.bus_count();
  ControlProblem prob;
  prob.topology = &model.topology;
  prob.sens = build_sensitivities(model.topology, model.params);
  prob.p_demand = model.loads.p;
  prob.q_demand = model.loads.q;
  prob.u0 = 1.0;
  prob.fleet = model.ders;
  prob.u_lo = Eigen::VectorXd::Constant(n, 0.952 * 0.952);
  prob.u_hi = Eigen::VectorXd::Constant(n, 1.048 * 1.048);
  prob.f_max = Eigen::VectorXd::Constant(
      model.topology.line_count(),
      std::numeric_limits<double>::infinity());
  prob.gamma = 1000.0;
  for (auto _ : state) {
    auto sp = solve_control(prob);
    benchmark::DoNotOptimize(sp.q_g);
  }
}
BENCHMARK(BM_SolveControl);

void BM_ClosedLoopStep(benchmark::State& state) {
  ScenarioConfig config = load_scenario(DERVOLT_DATA_DIR "/scenario37.json");
  config.horizon = 10;
  config.events.clear();
  for (auto _ : state) {
    auto trace = run_closed_loop(config);
    benchmark::DoNotOptimize(trace.steps.back().mae_x);
  }
}
BENCHMARK(BM_ClosedLoopStep)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
