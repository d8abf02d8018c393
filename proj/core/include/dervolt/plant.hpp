#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <random>
#include <stdexcept>

#include "dervolt/feeder.hpp"
#include "dervolt/lindistflow.hpp"

namespace dervolt {

class PowerFlowError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Load-fluctuation and measurement-noise magnitudes plus the RNG seed.
struct NoiseModel {
  double sigma_d = 0.0;  // relative load fluctuation
  double sigma_m = 0.0;  // additive measurement noise, per-unit
  std::uint64_t rng_seed = 0;
};

/// One time step of (possibly noisy) sensor readings: squared voltage
/// magnitudes and net nodal injections.
struct MeasurementSnapshot {
  std::int64_t step = 0;
  double u0_meas = 1.0;
  Eigen::VectorXd u_meas;
  Eigen::VectorXd p_meas;
  Eigen::VectorXd q_meas;
};

/// Scales one line's impedance at a given step. preserve_alpha keeps the
/// R-to-X ratio fixed (r and x scale together); otherwise only x scales.
struct PerturbationEvent {
  std::int64_t step = 0;
  int from_bus = 0;
  int to_bus = 0;
  double factor = 1.0;
  bool preserve_alpha = true;
};

struct PowerFlowResult {
  VoltageState state;
  int sweeps = 0;
};

/// Solves the nonlinear branch-flow equations (losses included) by
/// backward/forward sweep. p, q are net injections; converges when the
/// largest complex voltage update falls below tol. Throws PowerFlowError
/// after max_sweeps without convergence.
PowerFlowResult solve_power_flow(const FeederTopology& topology,
                                 const LineParameters& params,
                                 const Eigen::VectorXd& p,
                                 const Eigen::VectorXd& q, double u0,
                                 double tol = 1e-8, int max_sweeps = 100);

/// Ground-truth simulator: owns the true line parameters, the stochastic
/// load draw, the last applied set-points, and the step counter. One plant
/// per simulation thread; all randomness flows through its single RNG.
class Plant {
 public:
  Plant(const FeederTopology& topology, LineParameters initial_params,
        LoadProfile nominal, NoiseModel noise);

  const FeederTopology& topology() const { return *topology_; }
  const LineParameters& params() const { return params_; }
  std::int64_t step() const { return step_; }

  const Eigen::VectorXd& load_p() const { return load_p_; }
  const Eigen::VectorXd& load_q() const { return load_q_; }
  const Eigen::VectorXd& setpoint_p() const { return sp_p_; }
  const Eigen::VectorXd& setpoint_q() const { return sp_q_; }

  /// Advances the step counter and draws fresh loads around the nominal
  /// profile: load = nominal * (1 + sigma_d * nu), nu ~ N(0,1) per bus.
  void step_loads();

  /// Applies a line-impedance perturbation. Throws FeederError on an
  /// unknown line, std::invalid_argument on factor <= 0.
  void apply_event(const PerturbationEvent& event);

  /// DER set-points applied from the next solve onward.
  void apply_setpoints(const Eigen::VectorXd& p_g, const Eigen::VectorXd& q_g);

  /// Solves the true power flow at the current loads and set-points.
  PowerFlowResult solve(double u0);

  /// Noisy snapshot of the given solved state at the current step.
  MeasurementSnapshot measure(const VoltageState& truth);

 private:
  const FeederTopology* topology_;
  LineParameters params_;
  LoadProfile nominal_;
  NoiseModel noise_;
  std::mt19937_64 rng_;
  std::normal_distribution<double> gauss_{0.0, 1.0};
  Eigen::VectorXd load_p_, load_q_, sp_p_, sp_q_;
  std::int64_t step_ = -1;
};

}  // namespace dervolt
