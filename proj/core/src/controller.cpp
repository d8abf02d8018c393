#include "dervolt/controller.hpp"

#include <cmath>
#include <stdexcept>

namespace dervolt {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

std::vector<std::string> validate_problem(const ControlProblem& prob) {
  std::vector<std::string> errors;
  if (prob.topology == nullptr) {
    errors.push_back("topology is null");
    return errors;
  }
  const int n = prob.topology->bus_count();
  auto check_len = [&](const Eigen::VectorXd& v, const char* name) {
    if (v.size() != n) {
      errors.push_back(std::string(name) + " has wrong length");
      return false;
    }
    return true;
  };
  if (prob.sens.R.rows() != n || prob.sens.R.cols() != n ||
      prob.sens.X.rows() != n || prob.sens.X.cols() != n) {
    errors.push_back("sensitivity matrices are not N x N");
  } else if (!prob.sens.R.allFinite() || !prob.sens.X.allFinite()) {
    errors.push_back("sensitivity matrices contain non-finite entries");
  }
  if (check_len(prob.p_demand, "p_demand") && !prob.p_demand.allFinite()) {
    errors.push_back("p_demand contains non-finite entries");
  }
  if (check_len(prob.q_demand, "q_demand") && !prob.q_demand.allFinite()) {
    errors.push_back("q_demand contains non-finite entries");
  }
  if (prob.fleet.bus_count() != n) {
    errors.push_back("fleet bounds have wrong length");
  } else {
    if ((prob.fleet.p_min.array() > prob.fleet.p_max.array()).any() ||
        (prob.fleet.q_min.array() > prob.fleet.q_max.array()).any()) {
      errors.push_back("DER lower bound exceeds upper bound");
    }
  }
  if (check_len(prob.u_lo, "u_lo") && check_len(prob.u_hi, "u_hi")) {
    if ((prob.u_lo.array() >= prob.u_hi.array()).any()) {
      errors.push_back("voltage band empty (u_lo >= u_hi at some bus)");
    }
  }
  if (prob.f_max.size() != prob.topology->line_count()) {
    errors.push_back("f_max has wrong length");
  } else {
    for (int l = 0; l < prob.f_max.size(); ++l) {
      if (std::isfinite(prob.f_max[l]) && !(prob.f_max[l] > 0.0)) {
        errors.push_back("non-positive flow limit on line " +
                         std::to_string(l + 1));
      }
    }
  }
  if (!(prob.gamma >= 0.0)) {
    errors.push_back("gamma must be nonnegative");
  }
  if (!(prob.u0 > 0.0)) {
    errors.push_back("u0 must be positive");
  }
  return errors;
}

ControlSetpoints solve_control(const ControlProblem& prob) {
  {
    auto errors = validate_problem(prob);
    if (!errors.empty()) {
      std::string msg = "invalid control problem:";
      for (const auto& e : errors) msg += " " + e + ";";
      throw std::invalid_argument(msg);
    }
  }
  const int n = prob.topology->bus_count();
  const int l_count = prob.topology->line_count();

  std::vector<int> flow_lines;
  for (int l = 0; l < l_count; ++l) {
    if (std::isfinite(prob.f_max[l])) flow_lines.push_back(l);
  }
  const int rows = 2 * n + static_cast<int>(flow_lines.size());
  const int vars = 4 * n;  // p_g, q_g, s_lo, s_hi

  LpProblem lp;
  lp.objective.setZero(vars);
  lp.objective.segment(0, 2 * n).setConstant(1.0);
  lp.objective.segment(2 * n, 2 * n).setConstant(prob.gamma);
  lp.var_lower.resize(vars);
  lp.var_upper.resize(vars);
  lp.var_lower << prob.fleet.p_min, prob.fleet.q_min,
      Eigen::VectorXd::Zero(2 * n);
  lp.var_upper << prob.fleet.p_max, prob.fleet.q_max,
      Eigen::VectorXd::Constant(2 * n, kInf);

  lp.row_coeffs.setZero(rows, vars);
  lp.row_lower.resize(rows);
  lp.row_upper.resize(rows);

  // Voltages as an affine function of the decision variables:
  //   u = base + R p_g + X q_g,  base = u0 1 - R p_d - X q_d.
  Eigen::VectorXd base = Eigen::VectorXd::Constant(n, prob.u0) -
                         prob.sens.R * prob.p_demand -
                         prob.sens.X * prob.q_demand;
  for (int i = 0; i < n; ++i) {
    // floor: u_i + s_lo_i >= u_lo_i
    lp.row_coeffs.block(i, 0, 1, n) = prob.sens.R.row(i);
    lp.row_coeffs.block(i, n, 1, n) = prob.sens.X.row(i);
    lp.row_coeffs(i, 2 * n + i) = 1.0;
    lp.row_lower[i] = prob.u_lo[i] - base[i];
    lp.row_upper[i] = kInf;
    // ceiling: u_i - s_hi_i <= u_hi_i
    const int ri = n + i;
    lp.row_coeffs.block(ri, 0, 1, n) = prob.sens.R.row(i);
    lp.row_coeffs.block(ri, n, 1, n) = prob.sens.X.row(i);
    lp.row_coeffs(ri, 3 * n + i) = -1.0;
    lp.row_lower[ri] = -kInf;
    lp.row_upper[ri] = prob.u_hi[i] - base[i];
  }
  const Eigen::MatrixXd& inv = prob.topology->inverse_incidence();
  Eigen::VectorXd demand_flow = inv * prob.p_demand;
  for (std::size_t k = 0; k < flow_lines.size(); ++k) {
    const int l = flow_lines[k];
    const int ri = 2 * n + static_cast<int>(k);
    lp.row_coeffs.block(ri, 0, 1, n) = inv.row(l);
    lp.row_lower[ri] = -prob.f_max[l] + demand_flow[l];
    lp.row_upper[ri] = prob.f_max[l] + demand_flow[l];
  }

  LpSolution sol = solve_lp(lp);

  ControlSetpoints out;
  out.solve_status = sol.status;
  if (sol.status != LpStatus::optimal) {
    for (int row : sol.infeasible_rows) {
      if (row >= 2 * n) {
        auto [from, to] = prob.topology->line(flow_lines[row - 2 * n]);
        out.violated_constraints.push_back("line flow limit (" +
                                           std::to_string(from) + ", " +
                                           std::to_string(to) + ")");
      } else if (row >= n) {
        out.violated_constraints.push_back("voltage ceiling at bus " +
                                           std::to_string(row - n + 1));
      } else {
        out.violated_constraints.push_back("voltage floor at bus " +
                                           std::to_string(row + 1));
      }
    }
    return out;
  }

  out.p_g = sol.x.segment(0, n);
  out.q_g = sol.x.segment(n, n);
  out.slack_lo = sol.x.segment(2 * n, n);
  out.slack_hi = sol.x.segment(3 * n, n);
  out.u_pred = base + prob.sens.R * out.p_g + prob.sens.X * out.q_g;
  out.objective_value = sol.objective;
  out.duality_gap = sol.duality_gap;
  return out;
}

}  // namespace dervolt
