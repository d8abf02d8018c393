#include "dervolt/plant.hpp"

#include <gtest/gtest.h>

#include <cmath>

#include "testutil.hpp"

namespace dervolt {
namespace {

LineParameters single_line_params() {
  Eigen::VectorXd r(1), x(1);
  r << 0.2;
  x << 0.4;
  return LineParameters::from_rx(r, x);
}

TEST(SolvePowerFlow, FlatAtZeroInjection) {
  FeederTopology topo(1, {{0, 1}});
  Eigen::VectorXd zero = Eigen::VectorXd::Zero(1);
  PowerFlowResult result =
      solve_power_flow(topo, single_line_params(), zero, zero, 1.0);
  EXPECT_DOUBLE_EQ(result.state.u[0], 1.0);
  EXPECT_LE(result.sweeps, 2);
}

TEST(SolvePowerFlow, TwoBusMatchesHandIteration) {
  FeederTopology topo(1, {{0, 1}});
  Eigen::VectorXd p(1), q(1);
  p << -0.1;
  q << -0.05;
  PowerFlowResult result =
      solve_power_flow(topo, single_line_params(), p, q, 1.0);
  // within 0.005 p.u.^2 of LinDistFlow's 0.92 and strictly below it
  EXPECT_NEAR(result.state.u[0], 0.92, 0.005);
  EXPECT_LT(result.state.u[0], 0.92);
  // and matching the DistFlow fixed-point recursion tightly
  double oracle = testutil::two_bus_distflow_u(0.2, 0.4, 0.1, 0.05, 1.0);
  EXPECT_NEAR(result.state.u[0], oracle, 1e-7);
}

TEST(SolvePowerFlow, ReportsNonConvergence) {
  // a load far beyond the deliverable power has no solution
  FeederTopology topo(1, {{0, 1}});
  Eigen::VectorXd p(1), q(1);
  p << -5.0;
  q << -2.0;
  EXPECT_THROW(solve_power_flow(topo, single_line_params(), p, q, 1.0),
               PowerFlowError);
}

LoadProfile make_loads(double p, double q) {
  LoadProfile loads;
  loads.p = Eigen::VectorXd::Constant(1, p);
  loads.q = Eigen::VectorXd::Constant(1, q);
  return loads;
}

TEST(Plant, ZeroSigmaLoadsAreNominal) {
  FeederTopology topo(1, {{0, 1}});
  Plant plant(topo, single_line_params(), make_loads(0.5, 0.2), {0.0, 0.0, 42});
  plant.step_loads();
  EXPECT_DOUBLE_EQ(plant.load_p()[0], 0.5);
  EXPECT_DOUBLE_EQ(plant.load_q()[0], 0.2);
  EXPECT_EQ(plant.step(), 0);
}

TEST(Plant, LoadMomentsMatchModel) {
  FeederTopology topo(1, {{0, 1}});
  Plant plant(topo, single_line_params(), make_loads(0.5, 0.2),
              {0.01, 0.0, 7});
  const int draws = 10000;
  double sum = 0.0, sum_sq = 0.0;
  for (int k = 0; k < draws; ++k) {
    plant.step_loads();
    sum += plant.load_p()[0];
    sum_sq += plant.load_p()[0] * plant.load_p()[0];
  }
  double mean = sum / draws;
  double std_dev = std::sqrt(sum_sq / draws - mean * mean);
  EXPECT_NEAR(mean, 0.5, 0.001);
  EXPECT_NEAR(std_dev, 0.005, 0.0005);
}

TEST(Plant, DeterministicUnderSeed) {
  FeederTopology topo(1, {{0, 1}});
  Plant a(topo, single_line_params(), make_loads(0.5, 0.2), {0.01, 1e-4, 99});
  Plant b(topo, single_line_params(), make_loads(0.5, 0.2), {0.01, 1e-4, 99});
  for (int k = 0; k < 50; ++k) {
    a.step_loads();
    b.step_loads();
    ASSERT_EQ(a.load_p()[0], b.load_p()[0]);
    ASSERT_EQ(a.load_q()[0], b.load_q()[0]);
    auto ra = a.solve(1.0), rb = b.solve(1.0);
    auto ma = a.measure(ra.state), mb = b.measure(rb.state);
    ASSERT_EQ(ma.u_meas[0], mb.u_meas[0]);
    ASSERT_EQ(ma.p_meas[0], mb.p_meas[0]);
  }
}

TEST(Plant, NoiselessMeasurementEqualsTruth) {
  FeederTopology topo(1, {{0, 1}});
  Plant plant(topo, single_line_params(), make_loads(0.1, 0.05), {0.0, 0.0, 1});
  plant.step_loads();
  PowerFlowResult flow = plant.solve(1.0);
  MeasurementSnapshot snap = plant.measure(flow.state);
  EXPECT_DOUBLE_EQ(snap.u0_meas, 1.0);
  EXPECT_DOUBLE_EQ(snap.u_meas[0], flow.state.u[0]);
  EXPECT_DOUBLE_EQ(snap.p_meas[0], -0.1);
  EXPECT_DOUBLE_EQ(snap.q_meas[0], -0.05);
  EXPECT_EQ(snap.step, 0);
}

TEST(Plant, MeasurementNoiseMoments) {
  FeederTopology topo(1, {{0, 1}});
  Plant plant(topo, single_line_params(), make_loads(0.1, 0.05),
              {0.0, 2e-4, 3});
  plant.step_loads();
  PowerFlowResult flow = plant.solve(1.0);
  const int draws = 10000;
  double sum_sq = 0.0;
  MeasurementSnapshot previous;
  for (int k = 0; k < draws; ++k) {
    MeasurementSnapshot snap = plant.measure(flow.state);
    double err = snap.u_meas[0] - flow.state.u[0];
    sum_sq += err * err;
    if (k > 0) {
      EXPECT_NE(snap.u_meas[0], previous.u_meas[0]);  // fresh noise
    }
    previous = snap;
  }
  double std_dev = std::sqrt(sum_sq / draws);
  EXPECT_NEAR(std_dev, 2e-4, 2e-5);
}

TEST(Plant, ApplyEventScalesParameters) {
  FeederTopology topo(2, {{0, 1}, {1, 2}});
  Eigen::VectorXd r(2), x(2);
  r << 0.1, 0.2;
  x << 0.2, 0.4;
  Plant plant(topo, LineParameters::from_rx(r, x), LoadProfile{
      Eigen::VectorXd::Zero(2), Eigen::VectorXd::Zero(2)}, {});

  plant.apply_event({0, 1, 2, 1.0, true});  // identity
  EXPECT_DOUBLE_EQ(plant.params().x[1], 0.4);
  EXPECT_DOUBLE_EQ(plant.params().r[1], 0.2);

  plant.apply_event({0, 1, 2, 2.0, true});
  EXPECT_DOUBLE_EQ(plant.params().x[1], 0.8);
  EXPECT_DOUBLE_EQ(plant.params().r[1], 0.4);   // alpha preserved
  EXPECT_DOUBLE_EQ(plant.params().alpha[1], 0.5);

  plant.apply_event({0, 0, 1, 2.0, false});     // x only
  EXPECT_DOUBLE_EQ(plant.params().x[0], 0.4);
  EXPECT_DOUBLE_EQ(plant.params().r[0], 0.1);
  EXPECT_DOUBLE_EQ(plant.params().alpha[0], 0.25);

  EXPECT_THROW(plant.apply_event({0, 0, 2, 2.0, true}), FeederError);
  EXPECT_THROW(plant.apply_event({0, 1, 2, -1.0, true}), std::invalid_argument);
}

TEST(Plant, SweepCountAtNominal37BusLoading) {
  FeederModel model = load_feeder(DERVOLT_DATA_DIR "/ieee37.json");
  Plant plant(model.topology, model.params, model.loads, {0.01, 0.0, 17});
  for (int k = 0; k < 30; ++k) {
    plant.step_loads();
    PowerFlowResult flow = plant.solve(1.0);
    EXPECT_LE(flow.sweeps, 20);
  }
}

}  // namespace
}  // namespace dervolt
