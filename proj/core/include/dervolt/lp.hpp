#pragma once

#include <Eigen/Dense>

#include <limits>
#include <string>
#include <vector>

namespace dervolt {

enum class LpStatus { optimal, infeasible, unbounded, iteration_limit };

std::string to_string(LpStatus status);

/// Dense LP in row-bounds form:
///   minimize c^T x   s.t.   row_lower <= A x <= row_upper,
///                           var_lower <=   x <= var_upper.
/// Infinite bounds use +/- std::numeric_limits<double>::infinity(). Rows
/// with equal bounds are equalities; each variable needs at least one
/// finite bound.
struct LpProblem {
  Eigen::VectorXd objective;
  Eigen::VectorXd var_lower;
  Eigen::VectorXd var_upper;
  Eigen::MatrixXd row_coeffs;
  Eigen::VectorXd row_lower;
  Eigen::VectorXd row_upper;

  int var_count() const { return static_cast<int>(objective.size()); }
  int row_count() const { return static_cast<int>(row_lower.size()); }
};

struct LpSolution {
  LpStatus status = LpStatus::iteration_limit;
  Eigen::VectorXd x;
  double objective = std::numeric_limits<double>::quiet_NaN();
  /// Row duals y and variable reduced costs d = c - A^T y at the final basis.
  Eigen::VectorXd row_duals;
  Eigen::VectorXd reduced_costs;
  /// c^T x minus the certified dual bound; near zero at a true optimum.
  double duality_gap = std::numeric_limits<double>::infinity();
  int iterations = 0;
  /// Rows whose bounds could not be met (phase-1 leftovers), when infeasible.
  std::vector<int> infeasible_rows;
};

struct LpOptions {
  double feasibility_tol = 1e-9;
  double optimality_tol = 1e-9;
  int max_iterations = 0;  // 0 -> automatic, scales with problem size
};

/// Two-phase bounded-variable primal simplex. Dense; intended for the small
/// control problems of this project (hundreds of variables).
LpSolution solve_lp(const LpProblem& problem, const LpOptions& options = {});

}  // namespace dervolt
