#include "dervolt/estimator.hpp"

#include <Eigen/SVD>

#include <stdexcept>
#include <string>

namespace dervolt {

MeasurementWindow::MeasurementWindow(int capacity) : capacity_(capacity) {
  if (capacity < 1) {
    throw std::invalid_argument("window capacity must be at least 1");
  }
}

void MeasurementWindow::push(MeasurementSnapshot snapshot) {
  if (!buffer_.empty() && snapshot.step <= buffer_.back().step) {
    throw std::invalid_argument(
        "out-of-order snapshot: step " + std::to_string(snapshot.step) +
        " is not newer than " + std::to_string(buffer_.back().step));
  }
  buffer_.push_back(std::move(snapshot));
  if (static_cast<int>(buffer_.size()) > capacity_) {
    buffer_.pop_front();
  }
}

Eigen::MatrixXd build_gamma(const FeederTopology& topology, int line) {
  if (line < 0 || line >= topology.line_count()) {
    throw std::out_of_range("line index out of range");
  }
  const Eigen::MatrixXd& inv = topology.inverse_incidence();
  Eigen::RowVectorXd g = inv.row(line);
  return 2.0 * g.transpose() * g;
}

RegressionSystem assemble_regression(const MeasurementWindow& window,
                                     const FeederTopology& topology,
                                     const Eigen::VectorXd& alpha) {
  if (window.empty()) {
    throw std::invalid_argument("empty measurement window");
  }
  const int n = topology.bus_count();
  const int l_count = topology.line_count();
  if (alpha.size() != l_count) {
    throw std::invalid_argument("alpha vector has wrong length");
  }
  const Eigen::MatrixXd& inv = topology.inverse_incidence();

  RegressionSystem system;
  system.snapshot_count = window.size();
  system.bus_count = n;
  system.design.resize(window.size() * n, l_count);
  system.response.resize(window.size() * n);
  for (int k = 0; k < window.size(); ++k) {
    const MeasurementSnapshot& snap = window.at(k);
    if (snap.u_meas.size() != n || snap.p_meas.size() != n ||
        snap.q_meas.size() != n) {
      throw std::invalid_argument("snapshot dimension mismatch");
    }
    // Column l of this block is Gamma_l (alpha_l p + q); Gamma_l is rank
    // one, so the column is 2 g_l^T (g_l . w_l) with g_l the l-th row of
    // M^{-1}. The scalar g_l . w_l is the line-l flow of w_l.
    auto block = system.design.middleRows(k * n, n);
    for (int l = 0; l < l_count; ++l) {
      double flow = inv.row(l).dot(alpha[l] * snap.p_meas + snap.q_meas);
      block.col(l) = 2.0 * flow * inv.row(l).transpose();
    }
    system.response.segment(k * n, n) =
        snap.u_meas.array() - snap.u0_meas;
  }
  return system;
}

EstimatedParameters estimate(const MeasurementWindow& window,
                             const FeederTopology& topology,
                             const Eigen::VectorXd& alpha, double rcond) {
  RegressionSystem system = assemble_regression(window, topology, alpha);

  Eigen::BDCSVD<Eigen::MatrixXd> svd(
      system.design, Eigen::ComputeThinU | Eigen::ComputeThinV);
  svd.setThreshold(rcond);

  EstimatedParameters est;
  est.x_hat = svd.solve(system.response);
  est.effective_rank = static_cast<int>(svd.rank());
  est.rank_deficient = est.effective_rank < topology.line_count();
  est.r_hat = alpha.cwiseProduct(est.x_hat);
  for (int l = 0; l < est.x_hat.size(); ++l) {
    if (est.x_hat[l] < 0.0) {
      est.negative_lines.push_back(l);
    }
  }
  const Eigen::MatrixXd& inv = topology.inverse_incidence();
  est.sensitivities.R = 2.0 * inv.transpose() * est.r_hat.asDiagonal() * inv;
  est.sensitivities.X = 2.0 * inv.transpose() * est.x_hat.asDiagonal() * inv;
  return est;
}

}  // namespace dervolt
