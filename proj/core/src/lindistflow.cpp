#include "dervolt/lindistflow.hpp"

#include <stdexcept>

namespace dervolt {

SensitivityMatrices build_sensitivities(const FeederTopology& topology,
                                        const LineParameters& params) {
  if (params.count() != topology.line_count()) {
    throw std::invalid_argument("parameter count does not match line count");
  }
  const Eigen::MatrixXd& inv = topology.inverse_incidence();
  SensitivityMatrices sens;
  sens.R = 2.0 * inv.transpose() * params.r.asDiagonal() * inv;
  sens.X = 2.0 * inv.transpose() * params.x.asDiagonal() * inv;
  return sens;
}

VoltageState predict_voltages(const SensitivityMatrices& sens,
                              const Eigen::VectorXd& p,
                              const Eigen::VectorXd& q, double u0) {
  if (p.size() != sens.R.rows() || q.size() != sens.X.rows()) {
    throw std::invalid_argument("injection vector has wrong length");
  }
  VoltageState state;
  state.u0 = u0;
  state.u = Eigen::VectorXd::Constant(p.size(), u0) + sens.R * p + sens.X * q;
  return state;
}

}  // namespace dervolt
