#include "dervolt/lp.hpp"

#include <Eigen/LU>

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace dervolt {

std::string to_string(LpStatus status) {
  switch (status) {
    case LpStatus::optimal: return "optimal";
    case LpStatus::infeasible: return "infeasible";
    case LpStatus::unbounded: return "unbounded";
    case LpStatus::iteration_limit: return "iteration_limit";
  }
  return "unknown";
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kPivotTol = 1e-11;

// Columns 0..n-1 are the structural variables, n..n+m-1 the row slacks
// (coefficient -I), and n+m.. the phase-1 artificials (+/- e_row).
struct Tableau {
  int n = 0;  // structural
  int m = 0;  // rows
  Eigen::MatrixXd cols;       // m x total
  Eigen::VectorXd lower, upper;
  Eigen::VectorXd cost;       // phase-2 cost
  std::vector<int> basis;     // size m
  std::vector<bool> basic;
  Eigen::VectorXd value;      // current value of every nonbasic variable
  int total() const { return static_cast<int>(cols.cols()); }
};

double nearest_bound(double lo, double hi) {
  if (std::isfinite(lo) && std::isfinite(hi)) {
    return std::abs(lo) <= std::abs(hi) ? lo : hi;
  }
  if (std::isfinite(lo)) return lo;
  if (std::isfinite(hi)) return hi;
  throw std::invalid_argument("LP variable or row with no finite bound");
}

// Recomputes basic-variable values from the nonbasic ones: W_B beta = -W_N v_N.
Eigen::VectorXd basic_values(const Tableau& t,
                             const Eigen::PartialPivLU<Eigen::MatrixXd>& lu) {
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(t.m);
  for (int j = 0; j < t.total(); ++j) {
    if (!t.basic[j] && t.value[j] != 0.0) {
      rhs.noalias() -= t.cols.col(j) * t.value[j];
    }
  }
  return lu.solve(rhs);
}

struct PhaseResult {
  LpStatus status = LpStatus::optimal;
  int iterations = 0;
};

// Runs the simplex loop on `t` with cost vector `cost` until no improving
// nonbasic variable remains. Bland's rule kicks in after a stall.
PhaseResult simplex(Tableau& t, const Eigen::VectorXd& cost,
                    const LpOptions& opt, int max_iters) {
  PhaseResult result;
  int stall = 0;
  const int bland_after = 10 * (t.m + t.n) + 50;
  for (int iter = 0; iter < max_iters; ++iter) {
    Eigen::MatrixXd bmat(t.m, t.m);
    for (int i = 0; i < t.m; ++i) {
      bmat.col(i) = t.cols.col(t.basis[i]);
    }
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(bmat);
    Eigen::VectorXd beta = basic_values(t, lu);

    Eigen::VectorXd cb(t.m);
    for (int i = 0; i < t.m; ++i) {
      cb[i] = cost[t.basis[i]];
    }
    Eigen::VectorXd y = lu.transpose().solve(cb);

    // pricing
    const bool bland = stall > bland_after;
    int entering = -1;
    double best = opt.optimality_tol;
    int direction = 0;
    for (int j = 0; j < t.total(); ++j) {
      if (t.basic[j] || t.lower[j] == t.upper[j]) continue;
      double d = cost[j] - y.dot(t.cols.col(j));
      // from lower bound the variable may increase, from upper decrease
      bool at_lower = t.value[j] <= t.lower[j] + opt.feasibility_tol ||
                      !std::isfinite(t.upper[j]);
      double gain = at_lower ? -d : d;
      if (gain > best) {
        entering = j;
        direction = at_lower ? +1 : -1;
        best = gain;
        if (bland) break;
      }
    }
    if (entering < 0) {
      result.status = LpStatus::optimal;
      result.iterations = iter;
      return result;
    }

    Eigen::VectorXd dvec = lu.solve(t.cols.col(entering));
    // beta(tstep) = beta - tstep * direction * dvec
    double tstep = kInf;
    int leaving = -1;       // index into basis
    double leave_at = 0.0;  // bound the leaving variable hits
    for (int i = 0; i < t.m; ++i) {
      double rate = direction * dvec[i];
      int bj = t.basis[i];
      if (rate > kPivotTol && std::isfinite(t.lower[bj])) {
        double limit = (beta[i] - t.lower[bj]) / rate;
        if (limit < tstep - 1e-15) {
          tstep = std::max(limit, 0.0);
          leaving = i;
          leave_at = t.lower[bj];
        }
      } else if (rate < -kPivotTol && std::isfinite(t.upper[bj])) {
        double limit = (t.upper[bj] - beta[i]) / (-rate);
        if (limit < tstep - 1e-15) {
          tstep = std::max(limit, 0.0);
          leaving = i;
          leave_at = t.upper[bj];
        }
      }
    }
    double flip = t.upper[entering] - t.lower[entering];
    bool bound_flip = false;
    if (std::isfinite(flip) && flip < tstep) {
      tstep = flip;
      bound_flip = true;
    }
    if (!std::isfinite(tstep)) {
      result.status = LpStatus::unbounded;
      result.iterations = iter;
      return result;
    }
    stall = tstep < 1e-13 ? stall + 1 : 0;

    if (bound_flip) {
      t.value[entering] =
          direction > 0 ? t.upper[entering] : t.lower[entering];
      continue;
    }
    int leaving_var = t.basis[leaving];
    t.basic[leaving_var] = false;
    t.value[leaving_var] = leave_at;
    t.basis[leaving] = entering;
    t.basic[entering] = true;
    t.value[entering] = 0.0;  // basic values come from basic_values()
  }
  result.status = LpStatus::iteration_limit;
  result.iterations = max_iters;
  return result;
}

}  // namespace

LpSolution solve_lp(const LpProblem& problem, const LpOptions& options) {
  const int n = problem.var_count();
  const int m = problem.row_count();
  if (problem.var_lower.size() != n || problem.var_upper.size() != n ||
      problem.row_coeffs.rows() != m || problem.row_coeffs.cols() != n ||
      problem.row_upper.size() != m) {
    throw std::invalid_argument("inconsistent LP dimensions");
  }
  for (int j = 0; j < n; ++j) {
    if (problem.var_lower[j] > problem.var_upper[j]) {
      throw std::invalid_argument("variable lower bound exceeds upper bound");
    }
  }

  LpSolution solution;

  // no-row LPs are separable box problems
  if (m == 0) {
    solution.x.resize(n);
    for (int j = 0; j < n; ++j) {
      double v = problem.objective[j] >= 0.0 ? problem.var_lower[j]
                                             : problem.var_upper[j];
      if (!std::isfinite(v)) {
        solution.status = LpStatus::unbounded;
        return solution;
      }
      solution.x[j] = v;
    }
    solution.status = LpStatus::optimal;
    solution.objective = problem.objective.dot(solution.x);
    solution.row_duals.resize(0);
    solution.reduced_costs = problem.objective;
    solution.duality_gap = 0.0;
    return solution;
  }

  Tableau t;
  t.n = n;
  t.m = m;
  t.cols.setZero(m, n + 2 * m);  // reserve one artificial slot per row
  t.cols.leftCols(n) = problem.row_coeffs;
  for (int i = 0; i < m; ++i) {
    t.cols(i, n + i) = -1.0;
  }
  t.lower.resize(n + 2 * m);
  t.upper.resize(n + 2 * m);
  t.lower.head(n) = problem.var_lower;
  t.upper.head(n) = problem.var_upper;
  t.lower.segment(n, m) = problem.row_lower;
  t.upper.segment(n, m) = problem.row_upper;
  t.value = Eigen::VectorXd::Zero(n + 2 * m);
  t.basic.assign(n + 2 * m, false);
  t.basis.resize(m);

  for (int j = 0; j < n; ++j) {
    t.value[j] = nearest_bound(t.lower[j], t.upper[j]);
  }
  for (int i = 0; i < m; ++i) {
    nearest_bound(t.lower[n + i], t.upper[n + i]);  // bound sanity
  }

  // Residual of each row at the initial point decides whether its slack can
  // start basic or an artificial is needed.
  Eigen::VectorXd resid = problem.row_coeffs * t.value.head(n);
  int artificials = 0;
  for (int i = 0; i < m; ++i) {
    const int slack = n + i;
    const int art = n + m + i;
    if (resid[i] >= problem.row_lower[i] - options.feasibility_tol &&
        resid[i] <= problem.row_upper[i] + options.feasibility_tol) {
      t.basis[i] = slack;
      t.basic[slack] = true;
      t.lower[art] = 0.0;
      t.upper[art] = 0.0;
    } else {
      double clamped = std::clamp(resid[i], problem.row_lower[i],
                                  problem.row_upper[i]);
      t.value[slack] = clamped;
      // row i reads (Ax)_i - s_i + sign * a_i = 0
      double gap = resid[i] - clamped;
      t.cols(i, art) = gap > 0 ? -1.0 : 1.0;
      t.lower[art] = 0.0;
      t.upper[art] = kInf;
      t.basis[i] = art;
      t.basic[art] = true;
      ++artificials;
    }
  }

  const int max_iters = options.max_iterations > 0
                            ? options.max_iterations
                            : 200 * (m + n) + 1000;

  if (artificials > 0) {
    Eigen::VectorXd phase1_cost = Eigen::VectorXd::Zero(t.total());
    phase1_cost.tail(m).setConstant(1.0);
    for (int i = 0; i < m; ++i) {
      if (t.upper[n + m + i] == 0.0) phase1_cost[n + m + i] = 0.0;
    }
    PhaseResult p1 = simplex(t, phase1_cost, options, max_iters);
    solution.iterations += p1.iterations;
    if (p1.status == LpStatus::iteration_limit) {
      solution.status = LpStatus::iteration_limit;
      return solution;
    }
    // measure leftover infeasibility
    Eigen::MatrixXd bmat(m, m);
    for (int i = 0; i < m; ++i) bmat.col(i) = t.cols.col(t.basis[i]);
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(bmat);
    Eigen::VectorXd beta = basic_values(t, lu);
    double leftover = 0.0;
    for (int i = 0; i < m; ++i) {
      if (t.basis[i] >= n + m) leftover += std::max(beta[i], 0.0);
    }
    for (int j = n + m; j < t.total(); ++j) {
      if (!t.basic[j]) leftover += t.value[j];
    }
    if (leftover > 1e-7) {
      solution.status = LpStatus::infeasible;
      for (int i = 0; i < m; ++i) {
        if (t.basis[i] >= n + m && beta[i] > 1e-9) {
          solution.infeasible_rows.push_back(t.basis[i] - (n + m));
        }
      }
      return solution;
    }
    // pin artificials to zero for phase 2
    for (int j = n + m; j < t.total(); ++j) {
      t.lower[j] = 0.0;
      t.upper[j] = 0.0;
      if (!t.basic[j]) t.value[j] = 0.0;
    }
  }

  Eigen::VectorXd phase2_cost = Eigen::VectorXd::Zero(t.total());
  phase2_cost.head(n) = problem.objective;
  PhaseResult p2 = simplex(t, phase2_cost, options, max_iters);
  solution.iterations += p2.iterations;
  if (p2.status != LpStatus::optimal) {
    solution.status = p2.status;
    return solution;
  }

  // final basic values and duals
  Eigen::MatrixXd bmat(m, m);
  for (int i = 0; i < m; ++i) bmat.col(i) = t.cols.col(t.basis[i]);
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(bmat);
  Eigen::VectorXd beta = basic_values(t, lu);
  Eigen::VectorXd cb(m);
  for (int i = 0; i < m; ++i) cb[i] = phase2_cost[t.basis[i]];
  Eigen::VectorXd y = lu.transpose().solve(cb);

  Eigen::VectorXd full = t.value;
  for (int i = 0; i < m; ++i) full[t.basis[i]] = beta[i];

  solution.x = full.head(n)
                   .cwiseMax(problem.var_lower)
                   .cwiseMin(problem.var_upper);
  solution.objective = problem.objective.dot(solution.x);
  solution.row_duals = y;
  solution.reduced_costs =
      problem.objective - problem.row_coeffs.transpose() * y;

  // Dual bound: min over the variable boxes of the Lagrangian,
  //   sum_j min_{x in [l,u]} d_j x  +  sum_i min_{s in [lo,hi]} y_i s.
  double dual = 0.0;
  const double snap = 1e-7;
  for (int j = 0; j < n; ++j) {
    double d = solution.reduced_costs[j];
    if (std::abs(d) <= snap * std::max(1.0, std::abs(problem.objective[j]))) {
      continue;
    }
    double bound = d > 0 ? problem.var_lower[j] : problem.var_upper[j];
    if (!std::isfinite(bound)) {
      dual = -kInf;
      break;
    }
    dual += d * bound;
  }
  if (std::isfinite(dual)) {
    for (int i = 0; i < m; ++i) {
      double yi = y[i];
      if (std::abs(yi) <= snap) continue;
      double bound = yi > 0 ? problem.row_lower[i] : problem.row_upper[i];
      if (!std::isfinite(bound)) {
        dual = -kInf;
        break;
      }
      dual += yi * bound;
    }
  }
  solution.duality_gap = solution.objective - dual;
  solution.status = LpStatus::optimal;
  return solution;
}

}  // namespace dervolt
