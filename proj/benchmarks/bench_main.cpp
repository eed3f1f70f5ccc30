#include <benchmark/benchmark.h>

#include <random>
#include <string>

#include "rcmhqp/hqp_controller.hpp"
#include "rcmhqp/kinematics.hpp"
#include "rcmhqp/qp_solver.hpp"
#include "rcmhqp/rcm_task.hpp"
#include "rcmhqp/scenario_io.hpp"
#include "rcmhqp/simulator.hpp"
#include "rcmhqp/visual_task.hpp"

using namespace rcmhqp;

namespace {

Scenario replica() { return load_scenario(std::string(RCMHQP_SCENARIO_DIR) + "/replica.json"); }

// A state partway through the replica run, tracking the second marker.
struct MidRunState {
  Scenario scenario = replica();
  JointVector q;
  RcmState rcm;
  VisualTask vis;

  MidRunState() {
    Scenario s = scenario;
    s.max_duration = 0.5;
    s.log_timing = false;
    const SimResult r = run_scenario(s);
    q = r.records.back().q;
    rcm = compute_rcm_state(s.chain, q, s.trocar);
    vis = visual_jacobian(s.chain, q, s.intrinsics, s.markers[1]);
  }
};

const MidRunState& mid_run() {
  static const MidRunState state;
  return state;
}

void BM_ForwardKinematics(benchmark::State& st) {
  const KinematicChain chain = KinematicChain::default_6r();
  const JointVector q = mid_run().q;
  for (auto _ : st) benchmark::DoNotOptimize(frame_poses(chain, q));
}
BENCHMARK(BM_ForwardKinematics);

void BM_RcmState(benchmark::State& st) {
  const MidRunState& m = mid_run();
  for (auto _ : st) benchmark::DoNotOptimize(compute_rcm_state(m.scenario.chain, m.q, m.scenario.trocar));
}
BENCHMARK(BM_RcmState);

void BM_VisualJacobian(benchmark::State& st) {
  const MidRunState& m = mid_run();
  for (auto _ : st) {
    benchmark::DoNotOptimize(visual_jacobian(m.scenario.chain, m.q, m.scenario.intrinsics, m.scenario.markers[1]));
  }
}
BENCHMARK(BM_VisualJacobian);

void BM_DenseQp(benchmark::State& st) {
  const auto n = static_cast<Eigen::Index>(st.range(0));
  std::mt19937_64 rng(1);
  std::normal_distribution<double> d;
  Eigen::MatrixXd a(n, n);
  for (Eigen::Index i = 0; i < n * n; ++i) a.data()[i] = d(rng);
  QpProblem prob;
  prob.Q = a.transpose() * a + Eigen::MatrixXd::Identity(n, n);
  prob.p = Eigen::VectorXd::NullaryExpr(n, [&] { return 5.0 * d(rng); });
  prob.G.resize(2 * n, n);
  prob.G << Eigen::MatrixXd::Identity(n, n), -Eigen::MatrixXd::Identity(n, n);
  prob.h = Eigen::VectorXd::Constant(2 * n, 0.5);
  QpSolver solver;
  for (auto _ : st) benchmark::DoNotOptimize(solver.solve(prob));
}
BENCHMARK(BM_DenseQp)->Arg(6)->Arg(18);

void BM_HqpStep(benchmark::State& st) {
  const MidRunState& m = mid_run();
  const JointLimits limits = JointLimits::of(m.scenario.chain);
  HqpController ctrl(m.scenario.gains, m.scenario.qp_settings);
  const bool warm = st.range(0) != 0;
  for (auto _ : st) {
    if (!warm) ctrl.reset_warm_start();
    benchmark::DoNotOptimize(
        ctrl.solve(m.rcm.j_rcm, m.rcm.e_rcm, m.vis.jacobian, m.vis.error, m.q, limits, m.scenario.dt));
  }
}
BENCHMARK(BM_HqpStep)->Arg(0)->Arg(1)->ArgName("warm");

void BM_ReplicaSecond(benchmark::State& st) {
  Scenario s = replica();
  s.max_duration = 1.0;
  s.log_timing = false;
  for (auto _ : st) benchmark::DoNotOptimize(run_scenario(s));
}
BENCHMARK(BM_ReplicaSecond)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
