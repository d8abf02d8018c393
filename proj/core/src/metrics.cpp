#include "dervolt/metrics.hpp"

#include <cmath>
#include <stdexcept>

namespace dervolt {

double mae_vector(const Eigen::VectorXd& est, const Eigen::VectorXd& truth) {
  if (est.size() != truth.size()) {
    throw std::invalid_argument("mae_vector: length mismatch");
  }
  if (est.size() == 0) {
    throw std::invalid_argument("mae_vector: empty vectors");
  }
  return (est - truth).cwiseAbs().mean();
}

double mae_matrix(const Eigen::MatrixXd& est, const Eigen::MatrixXd& truth) {
  if (est.rows() != truth.rows() || est.cols() != truth.cols()) {
    throw std::invalid_argument("mae_matrix: shape mismatch");
  }
  if (est.size() == 0) {
    throw std::invalid_argument("mae_matrix: empty matrices");
  }
  return (est - truth).cwiseAbs().mean();
}

BandReport band_report(const VoltageState& state, const Eigen::VectorXd& v_lo,
                       const Eigen::VectorXd& v_hi) {
  if (v_lo.size() != state.u.size() || v_hi.size() != state.u.size()) {
    throw std::invalid_argument("band_report: length mismatch");
  }
  BandReport report;
  for (int i = 0; i < state.u.size(); ++i) {
    double v = std::sqrt(state.u[i]);
    double outside = 0.0;
    if (v < v_lo[i]) {
      outside = v_lo[i] - v;
    } else if (v > v_hi[i]) {
      outside = v - v_hi[i];
    }
    if (outside > 0.0) {
      ++report.violation_count;
      report.max_violation = std::max(report.max_violation, outside);
    }
  }
  return report;
}

}  // namespace dervolt
