#pragma once

#include <Eigen/Dense>

#include "dervolt/feeder.hpp"

namespace dervolt {

/// Sensitivities of squared voltage magnitudes to net injections:
///   R = 2 (M^-1)^T diag(r) M^-1,   X = 2 (M^-1)^T diag(x) M^-1.
/// Symmetric positive definite on a radial feeder with positive impedances.
struct SensitivityMatrices {
  Eigen::MatrixXd R;
  Eigen::MatrixXd X;
};

/// Squared voltage magnitudes, per-unit^2. u0 is the substation value.
struct VoltageState {
  double u0 = 1.0;
  Eigen::VectorXd u;
};

SensitivityMatrices build_sensitivities(const FeederTopology& topology,
                                        const LineParameters& params);

/// Linearized branch-flow voltage model: u = u0 * 1 + R p + X q.
VoltageState predict_voltages(const SensitivityMatrices& sens,
                              const Eigen::VectorXd& p,
                              const Eigen::VectorXd& q, double u0);

}  // namespace dervolt
