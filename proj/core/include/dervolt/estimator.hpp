#pragma once

#include <Eigen/Dense>

#include <deque>
#include <vector>

#include "dervolt/lindistflow.hpp"
#include "dervolt/plant.hpp"

namespace dervolt {

/// FIFO buffer of the most recent measurement snapshots, oldest first.
/// Pushing a snapshot whose step is not newer than the newest one throws.
class MeasurementWindow {
 public:
  explicit MeasurementWindow(int capacity);

  int capacity() const { return capacity_; }
  int size() const { return static_cast<int>(buffer_.size()); }
  bool empty() const { return buffer_.empty(); }

  void push(MeasurementSnapshot snapshot);
  const MeasurementSnapshot& at(int i) const { return buffer_.at(i); }
  const MeasurementSnapshot& newest() const { return buffer_.back(); }

 private:
  int capacity_;
  std::deque<MeasurementSnapshot> buffer_;
};

/// Stacked linear regression Phi x = phi over the window: one N-row block
/// per snapshot, one column per line; phi stacks u_meas - u0_meas * 1.
struct RegressionSystem {
  Eigen::MatrixXd design;    // (snapshots*N) x L
  Eigen::VectorXd response;  // snapshots*N
  int snapshot_count = 0;
  int bus_count = 0;
};

/// Reactance estimates and everything derived from them. Negative entries
/// pass through unclamped; their indices are listed for diagnostics.
struct EstimatedParameters {
  Eigen::VectorXd x_hat;
  Eigen::VectorXd r_hat;
  SensitivityMatrices sensitivities;
  bool rank_deficient = false;
  int effective_rank = 0;
  std::vector<int> negative_lines;
};

/// Rank-one basis block Gamma_l = 2 (M^-1)^T e_l e_l^T M^-1. Entry (i,j)
/// equals 2 exactly when line l lies on both root paths P_i and P_j.
Eigen::MatrixXd build_gamma(const FeederTopology& topology, int line);

RegressionSystem assemble_regression(const MeasurementWindow& window,
                                     const FeederTopology& topology,
                                     const Eigen::VectorXd& alpha);

/// Minimum-norm least squares x_hat = pinv(Phi) phi via SVD; singular values
/// below rcond * sigma_max are truncated. Throws on an empty window.
EstimatedParameters estimate(const MeasurementWindow& window,
                             const FeederTopology& topology,
                             const Eigen::VectorXd& alpha,
                             double rcond = 1e-8);

}  // namespace dervolt
