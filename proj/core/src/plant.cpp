#include "dervolt/plant.hpp"

#include <cmath>
#include <complex>
#include <vector>

namespace dervolt {

PowerFlowResult solve_power_flow(const FeederTopology& topology,
                                 const LineParameters& params,
                                 const Eigen::VectorXd& p,
                                 const Eigen::VectorXd& q, double u0,
                                 double tol, int max_sweeps) {
  const int n = topology.bus_count();
  if (p.size() != n || q.size() != n) {
    throw std::invalid_argument("injection vector has wrong length");
  }
  if (!(u0 > 0.0)) {
    throw std::invalid_argument("substation voltage must be positive");
  }

  // children[b] lists (line, child-bus); lines point away from the root, so
  // one pass over the line list suffices.
  std::vector<std::vector<std::pair<int, int>>> children(n + 1);
  for (int l = 0; l < topology.line_count(); ++l) {
    auto [from, to] = topology.line(l);
    children[from].emplace_back(l, to);
  }
  // root-first ordering of (line, parent, child)
  std::vector<std::tuple<int, int, int>> order;
  order.reserve(n);
  std::vector<int> stack{0};
  while (!stack.empty()) {
    int node = stack.back();
    stack.pop_back();
    for (auto [l, child] : children[node]) {
      order.emplace_back(l, node, child);
      stack.push_back(child);
    }
  }

  using cplx = std::complex<double>;
  std::vector<cplx> z(topology.line_count());
  for (int l = 0; l < topology.line_count(); ++l) {
    z[l] = cplx(params.r[l], params.x[l]);
  }
  const double v0 = std::sqrt(u0);
  std::vector<cplx> v(n + 1, cplx(v0, 0.0));
  std::vector<cplx> branch(topology.line_count());

  int sweeps = 0;
  for (; sweeps < max_sweeps; ++sweeps) {
    // backward: injection currents, then branch currents leaves-first
    std::vector<cplx> inj(n + 1, cplx(0.0, 0.0));
    for (int i = 1; i <= n; ++i) {
      inj[i] = std::conj(cplx(p[i - 1], q[i - 1]) / v[i]);
    }
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
      auto [l, parent, child] = *it;
      cplx current = -inj[child];
      for (auto [cl, grand] : children[child]) {
        current += branch[cl];
      }
      branch[l] = current;
    }
    // forward: voltage drops root-first
    double delta = 0.0;
    for (auto [l, parent, child] : order) {
      cplx next = v[parent] - z[l] * branch[l];
      delta = std::max(delta, std::abs(next - v[child]));
      v[child] = next;
    }
    if (delta <= tol) {
      VoltageState state;
      state.u0 = u0;
      state.u.resize(n);
      for (int i = 1; i <= n; ++i) {
        state.u[i - 1] = std::norm(v[i]);
      }
      return {std::move(state), sweeps + 1};
    }
  }
  throw PowerFlowError("backward/forward sweep did not converge in " +
                       std::to_string(max_sweeps) + " sweeps");
}

Plant::Plant(const FeederTopology& topology, LineParameters initial_params,
             LoadProfile nominal, NoiseModel noise)
    : topology_(&topology),
      params_(std::move(initial_params)),
      nominal_(std::move(nominal)),
      noise_(noise),
      rng_(noise.rng_seed) {
  params_.validate();
  nominal_.validate();
  if (params_.count() != topology.line_count() ||
      nominal_.bus_count() != topology.bus_count()) {
    throw std::invalid_argument("plant inputs do not match the topology");
  }
  if (noise_.sigma_d < 0.0 || noise_.sigma_m < 0.0) {
    throw std::invalid_argument("noise magnitudes must be nonnegative");
  }
  load_p_ = nominal_.p;
  load_q_ = nominal_.q;
  sp_p_ = Eigen::VectorXd::Zero(topology.bus_count());
  sp_q_ = Eigen::VectorXd::Zero(topology.bus_count());
}

void Plant::step_loads() {
  ++step_;
  const int n = topology_->bus_count();
  for (int i = 0; i < n; ++i) {
    load_p_[i] = nominal_.p[i] * (1.0 + noise_.sigma_d * gauss_(rng_));
  }
  for (int i = 0; i < n; ++i) {
    load_q_[i] = nominal_.q[i] * (1.0 + noise_.sigma_d * gauss_(rng_));
  }
}

void Plant::apply_event(const PerturbationEvent& event) {
  if (!(event.factor > 0.0)) {
    throw std::invalid_argument("perturbation factor must be positive");
  }
  int l = topology_->line_between(event.from_bus, event.to_bus);
  params_.x[l] *= event.factor;
  if (event.preserve_alpha) {
    params_.r[l] = params_.alpha[l] * params_.x[l];
  } else {
    params_.alpha[l] = params_.r[l] / params_.x[l];
  }
}

void Plant::apply_setpoints(const Eigen::VectorXd& p_g,
                            const Eigen::VectorXd& q_g) {
  if (p_g.size() != topology_->bus_count() ||
      q_g.size() != topology_->bus_count()) {
    throw std::invalid_argument("set-point vector has wrong length");
  }
  sp_p_ = p_g;
  sp_q_ = q_g;
}

PowerFlowResult Plant::solve(double u0) {
  return solve_power_flow(*topology_, params_, sp_p_ - load_p_,
                          sp_q_ - load_q_, u0);
}

MeasurementSnapshot Plant::measure(const VoltageState& truth) {
  const int n = topology_->bus_count();
  MeasurementSnapshot snap;
  snap.step = step_;
  snap.u0_meas = truth.u0 + noise_.sigma_m * gauss_(rng_);
  snap.u_meas.resize(n);
  snap.p_meas.resize(n);
  snap.q_meas.resize(n);
  for (int i = 0; i < n; ++i) {
    snap.u_meas[i] = truth.u[i] + noise_.sigma_m * gauss_(rng_);
  }
  for (int i = 0; i < n; ++i) {
    snap.p_meas[i] = sp_p_[i] - load_p_[i] + noise_.sigma_m * gauss_(rng_);
  }
  for (int i = 0; i < n; ++i) {
    snap.q_meas[i] = sp_q_[i] - load_q_[i] + noise_.sigma_m * gauss_(rng_);
  }
  return snap;
}

}  // namespace dervolt
