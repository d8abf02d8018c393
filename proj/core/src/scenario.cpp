#include "dervolt/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

namespace dervolt {

namespace {

std::uint64_t splitmix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace

std::string to_string(ControllerMode mode) {
  switch (mode) {
    case ControllerMode::estimated_model: return "estimated-model";
    case ControllerMode::frozen_true_model: return "frozen-true-model";
    case ControllerMode::no_control: return "no-control";
  }
  return "unknown";
}

ControllerMode controller_mode_from_string(const std::string& name) {
  if (name == "estimated-model") return ControllerMode::estimated_model;
  if (name == "frozen-true-model") return ControllerMode::frozen_true_model;
  if (name == "no-control") return ControllerMode::no_control;
  throw std::invalid_argument("unknown controller mode '" + name + "'");
}

void ScenarioConfig::validate() const {
  if (horizon < 1) throw std::invalid_argument("horizon must be >= 1");
  if (window < 1) throw std::invalid_argument("window must be >= 1");
  if (!(v_lo < v_hi)) throw std::invalid_argument("voltage band empty");
  if (!(v_lo + control_band_margin < v_hi - control_band_margin)) {
    throw std::invalid_argument("control margin erases the voltage band");
  }
  if (sigma_d < 0.0 || sigma_m < 0.0) {
    throw std::invalid_argument("noise magnitudes must be nonnegative");
  }
  if (gamma < 0.0) throw std::invalid_argument("gamma must be nonnegative");
  if (estimate_every < 1) {
    throw std::invalid_argument("estimate_every must be >= 1");
  }
  if (!(u0 > 0.0)) throw std::invalid_argument("u0 must be positive");
  for (const auto& event : events) {
    if (event.step < 0 || event.step >= horizon) {
      throw std::invalid_argument("event step outside horizon");
    }
    if (!(event.factor > 0.0)) {
      throw std::invalid_argument("event factor must be positive");
    }
  }
}

namespace {

/// Controller parameter source per mode. Holds the latest estimate in
/// estimated mode, or a frozen model otherwise.
struct ModelSource {
  SensitivityMatrices sens;
  Eigen::VectorXd x_hat;
  Eigen::VectorXd r_hat;
  int effective_rank = 0;
  bool rank_deficient = false;
  int negative_count = 0;
};

ModelSource initial_model(const FeederModel& feeder,
                          const ScenarioConfig& config) {
  LineParameters guess = feeder.params;
  if (config.initial_guess_rel_error != 0.0) {
    std::mt19937_64 rng(splitmix64(config.seed ^ 0x5eedf00dULL));
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (int l = 0; l < guess.count(); ++l) {
      guess.x[l] *= 1.0 + config.initial_guess_rel_error * gauss(rng);
      guess.x[l] = std::max(guess.x[l], 1e-12);
      guess.r[l] = guess.alpha[l] * guess.x[l];
    }
  }
  ModelSource model;
  model.sens = build_sensitivities(feeder.topology, guess);
  model.x_hat = guess.x;
  model.r_hat = guess.r;
  model.effective_rank = 0;
  return model;
}

}  // namespace

SimulationTrace run_closed_loop(const ScenarioConfig& config) {
  config.validate();
  FeederModel feeder = load_feeder(config.feeder_path);
  const int n = feeder.topology.bus_count();

  NoiseModel noise{config.sigma_d, config.sigma_m, config.seed};
  Plant plant(feeder.topology, feeder.params, feeder.loads, noise);

  // truth at t = 0, for the frozen-model mode and the per-step MAE metrics
  const SensitivityMatrices true_initial_sens =
      build_sensitivities(feeder.topology, feeder.params);

  ModelSource model = initial_model(feeder, config);
  if (config.mode == ControllerMode::frozen_true_model) {
    model.sens = true_initial_sens;
    model.x_hat = feeder.params.x;
    model.r_hat = feeder.params.r;
  }

  MeasurementWindow window(config.window);
  const Eigen::VectorXd u_lo = Eigen::VectorXd::Constant(
      n, std::pow(config.v_lo + config.control_band_margin, 2));
  const Eigen::VectorXd u_hi = Eigen::VectorXd::Constant(
      n, std::pow(config.v_hi - config.control_band_margin, 2));
  const Eigen::VectorXd v_lo_vec = Eigen::VectorXd::Constant(n, config.v_lo);
  const Eigen::VectorXd v_hi_vec = Eigen::VectorXd::Constant(n, config.v_hi);
  const Eigen::VectorXd f_max_vec =
      Eigen::VectorXd::Constant(feeder.topology.line_count(), config.f_max);

  SimulationTrace trace;
  trace.config = config;
  trace.steps.reserve(config.horizon);

  Eigen::VectorXd sp_p = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd sp_q = Eigen::VectorXd::Zero(n);

  for (std::int64_t k = 0; k < config.horizon; ++k) {
    plant.step_loads();
    for (const auto& event : config.events) {
      if (event.step == k) plant.apply_event(event);
    }

    PowerFlowResult flow;
    try {
      flow = plant.solve(config.u0);
    } catch (const PowerFlowError& e) {
      trace.termination = std::string("plant: ") + e.what();
      return trace;
    }
    MeasurementSnapshot snap = plant.measure(flow.state);
    window.push(snap);
    trace.snapshots.push_back(snap);

    if (config.mode == ControllerMode::estimated_model &&
        k % config.estimate_every == 0) {
      EstimatedParameters est =
          estimate(window, feeder.topology, feeder.params.alpha);
      model.sens = est.sensitivities;
      model.x_hat = est.x_hat;
      model.r_hat = est.r_hat;
      model.effective_rank = est.effective_rank;
      model.rank_deficient = est.rank_deficient;
      model.negative_count = static_cast<int>(est.negative_lines.size());
    }

    StepRecord rec;
    rec.step = k;
    rec.v_true = flow.state.u.cwiseSqrt();
    rec.v_meas = snap.u_meas.cwiseMax(0.0).cwiseSqrt();
    rec.sweeps = flow.sweeps;

    // demand as the controller sees it: measured net injection corrected by
    // the set-points that were actually applied this step
    Eigen::VectorXd p_demand = sp_p - snap.p_meas;
    Eigen::VectorXd q_demand = sp_q - snap.q_meas;

    if (config.mode != ControllerMode::no_control) {
      ControlProblem prob;
      prob.topology = &feeder.topology;
      prob.sens = model.sens;
      prob.p_demand = p_demand;
      prob.q_demand = q_demand;
      prob.u0 = config.u0;
      prob.fleet = feeder.ders;
      prob.u_lo = u_lo;
      prob.u_hi = u_hi;
      prob.f_max = f_max_vec;
      prob.gamma = config.gamma;
      ControlSetpoints sp = solve_control(prob);
      rec.solver_status = to_string(sp.solve_status);
      if (sp.solve_status == LpStatus::optimal) {
        sp_p = sp.p_g;
        sp_q = sp.q_g;
        rec.objective = sp.objective_value;
        rec.duality_gap = sp.duality_gap;
      }
      // on failure the previous set-points stay in force
    } else {
      rec.solver_status = "skipped";
    }
    rec.p_g = sp_p;
    rec.q_g = sp_q;

    // accuracy vs the plant's current truth
    SensitivityMatrices true_sens =
        build_sensitivities(feeder.topology, plant.params());
    rec.mae_x = mae_vector(model.x_hat, plant.params().x);
    rec.mae_r = mae_vector(model.r_hat, plant.params().r);
    rec.mae_X = mae_matrix(model.sens.X, true_sens.X);
    rec.mae_R = mae_matrix(model.sens.R, true_sens.R);
    rec.effective_rank = model.effective_rank;
    rec.rank_deficient = model.rank_deficient;
    rec.negative_x_count = model.negative_count;

    BandReport band = band_report(flow.state, v_lo_vec, v_hi_vec);
    rec.band_violations = band.violation_count;
    rec.max_violation = band.max_violation;

    VoltageState linear = predict_voltages(
        true_sens, plant.setpoint_p() - plant.load_p(),
        plant.setpoint_q() - plant.load_q(), config.u0);
    rec.model_gap = (flow.state.u - linear.u).cwiseAbs().maxCoeff();

    trace.steps.push_back(std::move(rec));
    plant.apply_setpoints(sp_p, sp_q);
  }
  return trace;
}

std::vector<MonteCarloRow> run_monte_carlo(const ScenarioConfig& config,
                                           const std::vector<int>& windows,
                                           int replicas) {
  config.validate();
  if (replicas < 2) {
    throw std::invalid_argument("at least 2 replicas required");
  }
  if (windows.empty()) {
    throw std::invalid_argument("no window sizes given");
  }
  for (int w : windows) {
    if (w < 1) throw std::invalid_argument("window sizes must be >= 1");
  }
  FeederModel feeder = load_feeder(config.feeder_path);
  const int max_window = *std::max_element(windows.begin(), windows.end());

  const SensitivityMatrices true_sens =
      build_sensitivities(feeder.topology, feeder.params);

  std::vector<std::vector<double>> mae_x(windows.size()),
      mae_X(windows.size());
  for (int rep = 0; rep < replicas; ++rep) {
    NoiseModel noise{config.sigma_d, config.sigma_m,
                     splitmix64(config.seed + static_cast<std::uint64_t>(rep))};
    Plant plant(feeder.topology, feeder.params, feeder.loads, noise);
    std::vector<MeasurementSnapshot> snaps;
    snaps.reserve(max_window);
    for (int k = 0; k < max_window; ++k) {
      plant.step_loads();
      // Accuracy is measured against the model being estimated, so the
      // study samples the linear voltage model; with sigma_m = 0 a single
      // snapshot then recovers x exactly on a radial feeder.
      VoltageState state = predict_voltages(true_sens, -plant.load_p(),
                                            -plant.load_q(), config.u0);
      snaps.push_back(plant.measure(state));
    }
    for (std::size_t wi = 0; wi < windows.size(); ++wi) {
      const int w = windows[wi];
      MeasurementWindow window(w);
      for (int k = max_window - w; k < max_window; ++k) {
        window.push(snaps[k]);
      }
      EstimatedParameters est =
          estimate(window, feeder.topology, feeder.params.alpha);
      mae_x[wi].push_back(mae_vector(est.x_hat, feeder.params.x));
      mae_X[wi].push_back(mae_matrix(est.sensitivities.X, true_sens.X));
    }
  }

  auto mean_of = [](const std::vector<double>& v) {
    double s = 0.0;
    for (double d : v) s += d;
    return s / static_cast<double>(v.size());
  };
  auto var_of = [&](const std::vector<double>& v) {
    double mu = mean_of(v);
    double s = 0.0;
    for (double d : v) s += (d - mu) * (d - mu);
    return s / static_cast<double>(v.size() - 1);
  };

  std::vector<MonteCarloRow> rows;
  rows.reserve(windows.size());
  for (std::size_t wi = 0; wi < windows.size(); ++wi) {
    MonteCarloRow row;
    row.window = windows[wi];
    row.replicas = replicas;
    row.mae_x_mean = mean_of(mae_x[wi]);
    row.mae_x_var = var_of(mae_x[wi]);
    row.mae_X_mean = mean_of(mae_X[wi]);
    row.mae_X_var = var_of(mae_X[wi]);
    rows.push_back(row);
  }
  return rows;
}

}  // namespace dervolt
