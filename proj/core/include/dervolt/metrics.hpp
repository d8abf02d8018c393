#pragma once

#include <Eigen/Dense>

#include "dervolt/lindistflow.hpp"

namespace dervolt {

/// Mean absolute error between two equal-length vectors.
double mae_vector(const Eigen::VectorXd& est, const Eigen::VectorXd& truth);

/// Mean absolute error over all entries of two equal-shape matrices.
double mae_matrix(const Eigen::MatrixXd& est, const Eigen::MatrixXd& truth);

/// Buses whose voltage magnitude sqrt(u_i) falls outside [v_lo_i, v_hi_i],
/// and the largest distance outside the band (in volts per-unit).
struct BandReport {
  int violation_count = 0;
  double max_violation = 0.0;
};

BandReport band_report(const VoltageState& state, const Eigen::VectorXd& v_lo,
                       const Eigen::VectorXd& v_hi);

/// Estimation and regulation quality for one step or one run.
struct AccuracyReport {
  double mae_x = 0.0;
  double mae_r = 0.0;
  double mae_X = 0.0;
  double mae_R = 0.0;
  int band_violation_count = 0;
  double max_violation = 0.0;
};

}  // namespace dervolt
