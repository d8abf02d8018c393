#pragma once

#include <Eigen/Dense>

#include <string>
#include <vector>

#include "dervolt/feeder.hpp"
#include "dervolt/lindistflow.hpp"
#include "dervolt/lp.hpp"

namespace dervolt {

/// One control step's inputs: the (estimated) sensitivity model, measured
/// demand, the DER capability boxes, the squared voltage band, optional
/// line-flow limits, and the band-violation penalty weight.
struct ControlProblem {
  const FeederTopology* topology = nullptr;
  SensitivityMatrices sens;
  Eigen::VectorXd p_demand;
  Eigen::VectorXd q_demand;
  double u0 = 1.0;
  DerFleet fleet;
  Eigen::VectorXd u_lo;
  Eigen::VectorXd u_hi;
  Eigen::VectorXd f_max;  // per-line; +inf disables a line's limit
  double gamma = 0.0;
};

/// Optimal DER commands plus prediction and slack diagnostics. Capacity
/// bounds hold exactly; slacks are the band violations of the predicted
/// squared voltages.
struct ControlSetpoints {
  Eigen::VectorXd p_g;
  Eigen::VectorXd q_g;
  Eigen::VectorXd u_pred;
  Eigen::VectorXd slack_lo;
  Eigen::VectorXd slack_hi;
  double objective_value = 0.0;
  LpStatus solve_status = LpStatus::iteration_limit;
  double duality_gap = 0.0;
  std::vector<std::string> violated_constraints;
};

/// Checks every ControlProblem invariant; returns one message per violation
/// (empty when the problem is well formed).
std::vector<std::string> validate_problem(const ControlProblem& problem);

/// Solves
///   min 1^T p_g + 1^T q_g + gamma 1^T (s_lo + s_hi)
///   s.t. u = u0 1 + R (p_g - p_d) + X (q_g - q_d)
///        fleet bounds on p_g, q_g
///        -f_max <= M^{-1}(p_g - p_d) <= f_max      (finite entries only)
///        s_lo >= u_lo - u, s_hi >= u - u_hi, s >= 0
/// as an LP. Throws std::invalid_argument when validate_problem fails;
/// solver-level outcomes (infeasible flow polytope) come back in
/// solve_status with the violated rows named.
ControlSetpoints solve_control(const ControlProblem& problem);

}  // namespace dervolt
