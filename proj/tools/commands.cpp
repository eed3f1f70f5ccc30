#include "commands.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <random>
#include <string>
#include <vector>

#include "rcmhqp/error.hpp"
#include "rcmhqp/hqp_controller.hpp"
#include "rcmhqp/kinematics.hpp"
#include "rcmhqp/rcm_task.hpp"
#include "rcmhqp/scenario_io.hpp"
#include "rcmhqp/simulator.hpp"
#include "rcmhqp/visual_task.hpp"

namespace rcmhqp::cli {

namespace {

constexpr double kFdStep = 1e-6;

std::string format(const char* fmt, double value) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), fmt, value);
  return buf;
}

JointVector random_configuration(const KinematicChain& chain, std::mt19937_64& rng) {
  JointVector q(static_cast<Eigen::Index>(chain.dof()));
  for (std::size_t i = 0; i < chain.dof(); ++i) {
    // Stay clear of the limits so finite differences never cross them.
    const JointSpec& j = chain.joints()[i];
    const double margin = 0.05 * (j.q_max - j.q_min);
    std::uniform_real_distribution<double> dist(j.q_min + margin, j.q_max - margin);
    q[static_cast<Eigen::Index>(i)] = dist(rng);
  }
  return q;
}

Eigen::Vector3d random_unit(std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  Eigen::Vector3d v;
  do {
    v = Eigen::Vector3d(normal(rng), normal(rng), normal(rng));
  } while (v.norm() < 1e-6);
  return v.normalized();
}

double projected_rcm_point(const KinematicChain& chain, const JointVector& q, const TrocarConfig& trocar,
                           const Eigen::Vector3d& direction) {
  return direction.dot(compute_rcm_state(chain, q, trocar).p_rcm);
}

}  // namespace

bool AuditReport::passed(const AuditThresholds& limits) const {
  return position < limits.position && rcm < limits.rcm && visual < limits.visual &&
         projector < limits.projector;
}

AuditReport run_jacobian_audit(const AuditOptions& options) {
  const KinematicChain chain = KinematicChain::default_6r();
  const CameraIntrinsics intrinsics;
  std::mt19937_64 rng(options.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> normal;

  AuditReport report;
  report.samples = options.samples;
  for (int s = 0; s < options.samples; ++s) {
    const JointVector q = random_configuration(chain, rng);

    // Position Jacobian at every frame.
    for (std::size_t frame = 0; frame < chain.frame_count(); ++frame) {
      const PositionJacobian analytic = position_jacobian(chain, q, frame);
      const PositionJacobian numeric = numeric_jacobian(chain, q, frame, kFdStep);
      const double scale = std::max(1.0, analytic.cwiseAbs().maxCoeff());
      report.position = std::max(report.position, (analytic - numeric).cwiseAbs().maxCoeff() / scale);
    }

    // RCM Jacobian: trocar a few millimetres off the shaft, inside the segment.
    const std::vector<Pose> frames = frame_poses(chain, q);
    const Eigen::Vector3d p_pre = frames[chain.pre_rcm_frame()].position;
    const Eigen::Vector3d p_tip = frames[chain.shaft_tip_frame()].position;
    const Eigen::Vector3d axis = (p_tip - p_pre).normalized();
    Eigen::Vector3d side = random_unit(rng);
    side = (side - side.dot(axis) * axis).normalized();
    TrocarConfig trocar;
    trocar.position = p_pre + (0.3 + 0.6 * unit(rng)) * (p_tip - p_pre) + (0.5e-3 + 4.5e-3 * unit(rng)) * side;

    const RcmState state = compute_rcm_state(chain, q, trocar);
    Eigen::RowVectorXd j_rcm = state.j_rcm;
    if (options.corrupt_rcm_sign) j_rcm = -j_rcm;
    JointVector qdot(q.size());
    for (Eigen::Index i = 0; i < q.size(); ++i) qdot[i] = normal(rng);
    const double analytic_rate = j_rcm.dot(qdot);
    const double numeric_rate = (projected_rcm_point(chain, q + kFdStep * qdot, trocar, state.error_dir) -
                                 projected_rcm_point(chain, q - kFdStep * qdot, trocar, state.error_dir)) /
                                (2.0 * kFdStep);
    const double rcm_scale = std::max(1e-12, state.j_rcm.norm() * qdot.norm());
    report.rcm = std::max(report.rcm, std::abs(analytic_rate - numeric_rate) / rcm_scale);

    // Projector identities.
    const Eigen::MatrixXd n1 = null_space_projector(state.j_rcm, 1e-8);
    const double proj_err = std::max({(n1 * n1 - n1).cwiseAbs().maxCoeff(),
                                      (n1 - n1.transpose()).cwiseAbs().maxCoeff(),
                                      (state.j_rcm * n1).cwiseAbs().maxCoeff()});
    report.projector = std::max(report.projector, proj_err);

    // Visual Jacobian: a marker in front of the camera, inside the view cone.
    const Pose& camera = frames[chain.camera_frame()];
    const double depth = 0.03 + 0.17 * unit(rng);
    const Eigen::Vector3d in_camera((unit(rng) - 0.5) * 0.6 * depth, (unit(rng) - 0.5) * 0.6 * depth, depth);
    const Marker marker{0, camera.transform(in_camera)};
    const VisualTask task = visual_jacobian(chain, q, intrinsics, marker);
    Eigen::Matrix<double, 2, Eigen::Dynamic> numeric(2, q.size());
    for (Eigen::Index j = 0; j < q.size(); ++j) {
      JointVector plus = q, minus = q;
      plus[j] += kFdStep;
      minus[j] -= kFdStep;
      const Projection a = project(forward_kinematics(chain, plus, chain.camera_frame()), intrinsics, marker.position);
      const Projection b = project(forward_kinematics(chain, minus, chain.camera_frame()), intrinsics, marker.position);
      numeric(0, j) = (a.pixel.u - b.pixel.u) / (2.0 * kFdStep);
      numeric(1, j) = (a.pixel.v - b.pixel.v) / (2.0 * kFdStep);
    }
    const double vis_scale = std::max(1.0, task.jacobian.cwiseAbs().maxCoeff());
    report.visual = std::max(report.visual, (task.jacobian - numeric).cwiseAbs().maxCoeff() / vis_scale);
  }
  return report;
}

int cmd_check(const AuditOptions& options, std::ostream& out, std::ostream& err) {
  if (options.samples < 1) {
    err << "check: --samples must be >= 1\n";
    return kExitConfigError;
  }
  const AuditReport report = run_jacobian_audit(options);
  const AuditThresholds limits;
  auto line = [&](const char* name, double value, double limit) {
    out << name << " worst=" << format("%.3e", value) << " limit=" << format("%.0e", limit) << " "
        << (value < limit ? "ok" : "FAIL") << "\n";
  };
  out << "samples=" << report.samples << " seed=" << options.seed << "\n";
  line("position_jacobian", report.position, limits.position);
  line("rcm_jacobian     ", report.rcm, limits.rcm);
  line("visual_jacobian  ", report.visual, limits.visual);
  line("projector        ", report.projector, limits.projector);
  return report.passed(limits) ? kExitOk : kExitScenarioFailed;
}

int cmd_run(const std::filesystem::path& scenario_path, const std::filesystem::path& out_dir,
            std::ostream& out, std::ostream& err) {
  Scenario scenario;
  try {
    scenario = load_scenario(scenario_path);
  } catch (const ConfigError& e) {
    err << e.what() << "\n";
    return kExitConfigError;
  }

  const SimResult result = run_scenario(scenario);
  for (const std::string& w : result.warnings) err << "warning: " << w << "\n";

  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) {
    err << out_dir.string() << ": " << ec.message() << "\n";
    return kExitConfigError;
  }
  {
    std::ofstream csv(out_dir / "log.csv", std::ios::binary);
    write_csv(csv, result.records, scenario.chain.dof());
  }
  {
    std::ofstream summary(out_dir / "summary.json", std::ios::binary);
    summary << summary_json(result.summary, result.failure);
  }

  const SimSummary& s = result.summary;
  out << scenario.name << ": " << result.records.size() << " cycles, max e_rcm " << format("%.4f", s.max_e_rcm_mm)
      << " mm, mean e_rcm " << format("%.4f", s.mean_e_rcm_mm) << " mm, mean solve "
      << format("%.1f", s.mean_solve_us) << " us\n";
  for (const TargetSummary& t : s.targets) {
    out << "  target " << t.id << ": "
        << (t.t_converged ? "converged at " + format("%.3f", *t.t_converged) + " s" : std::string("not reached"))
        << "\n";
  }
  if (result.failure) err << "aborted: " << *result.failure << "\n";
  out << (s.completed ? "completed" : "NOT completed") << "\n";
  return s.completed ? kExitOk : kExitScenarioFailed;
}

int cmd_bench(int cycles, const std::filesystem::path& scenario_path, std::ostream& out,
              std::ostream& err, BenchStats* stats) {
  if (cycles < 100) {
    err << "bench: --cycles must be >= 100\n";
    return kExitConfigError;
  }
  Scenario scenario;
  try {
    scenario = load_scenario(scenario_path);
  } catch (const ConfigError& e) {
    err << e.what() << "\n";
    return kExitConfigError;
  }
  scenario.max_duration = cycles * scenario.dt;
  scenario.log_timing = true;

  const SimResult result = run_scenario(scenario);
  if (result.records.empty()) {
    err << "bench: no cycles were executed\n";
    return kExitScenarioFailed;
  }
  std::vector<double> times;
  times.reserve(result.records.size());
  for (const StepRecord& r : result.records) times.push_back(r.solve_us);
  std::sort(times.begin(), times.end());

  BenchStats st;
  st.cycles = times.size();
  double sum = 0.0;
  for (double t : times) sum += t;
  st.mean_us = sum / static_cast<double>(times.size());
  const std::size_t mid = times.size() / 2;
  st.median_us = times.size() % 2 ? times[mid] : 0.5 * (times[mid - 1] + times[mid]);
  const auto p99_index = static_cast<std::size_t>(std::ceil(0.99 * static_cast<double>(times.size()))) - 1;
  st.p99_us = times[std::min(p99_index, times.size() - 1)];
  st.max_us = times.back();
  if (stats) *stats = st;

  out << "cycles=" << st.cycles << " mean_us=" << format("%.2f", st.mean_us)
      << " median_us=" << format("%.2f", st.median_us) << " p99_us=" << format("%.2f", st.p99_us)
      << " max_us=" << format("%.2f", st.max_us) << "\n";
  if (result.failure) {
    err << "aborted: " << *result.failure << "\n";
    return kExitScenarioFailed;
  }
  return kExitOk;
}

}  // namespace rcmhqp::cli
