#include "rcmhqp/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>
#include <utility>

#include "rcmhqp/error.hpp"

namespace rcmhqp {

namespace {

constexpr double kMaxInitialRcmError = 1e-3;  // m

}  // namespace

std::size_t Scenario::cycle_count() const {
  // The epsilon absorbs representation error, e.g. 20 / 0.002 = 9999.999...
  return static_cast<std::size_t>(std::floor(max_duration / dt + 1e-9));
}

void Scenario::validate() const {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw ConfigError("dt must be positive");
  if (!(max_duration > 0.0) || !std::isfinite(max_duration)) throw ConfigError("max_duration must be positive");
  if (markers.empty()) throw ConfigError("at least one marker is required");
  for (const Marker& m : markers) {
    if (!m.position.allFinite()) throw ConfigError("marker " + std::to_string(m.id) + " has non-finite position");
  }
  if (!trocar.position.allFinite()) throw ConfigError("trocar position must be finite");
  if (!(switch_threshold >= 0.0)) throw ConfigError("switch_threshold must be >= 0");
  if (settle_cycles < 1) throw ConfigError("settle_cycles must be >= 1");
  if (!(pixel_noise >= 0.0)) throw ConfigError("pixel_noise must be >= 0");
  intrinsics.validate();
  gains.validate();
  qp_settings.validate();
  if (otg.enabled && (!(otg.v_max > 0.0) || !(otg.a_max > 0.0))) {
    throw ConfigError("otg limits must be positive");
  }

  chain.check_joint_vector(initial_q);
  const JointVector lo = chain.lower_limits(), hi = chain.upper_limits();
  for (Eigen::Index i = 0; i < initial_q.size(); ++i) {
    if (initial_q[i] < lo[i] || initial_q[i] > hi[i]) {
      throw ConfigError("initial_q[" + std::to_string(i) + "] is outside the joint limits");
    }
  }
  RcmState rcm;
  try {
    rcm = compute_rcm_state(chain, initial_q, trocar);
  } catch (const GeometryError& e) {
    throw ConfigError(std::string("initial configuration: ") + e.what());
  }
  if (rcm.e_rcm > kMaxInitialRcmError) {
    throw ConfigError("initial shaft misses the trocar by " + std::to_string(rcm.e_rcm * 1e3) +
                      " mm (limit 1 mm)");
  }
}

std::vector<Marker> square_marker_layout(const Eigen::Vector3d& trocar, const Eigen::Vector3d& axis,
                                         const Eigen::Vector3d& first_edge, double depth, double side,
                                         int first_id) {
  if (!(axis.norm() > 0.0)) throw ConfigError("marker layout axis must be nonzero");
  const Eigen::Vector3d a = axis.normalized();
  // Keep only the in-plane part of the edge direction.
  const Eigen::Vector3d e1_raw = first_edge - first_edge.dot(a) * a;
  if (!(e1_raw.norm() > 1e-9)) throw ConfigError("marker layout first_edge must not be parallel to axis");
  const Eigen::Vector3d e1 = e1_raw.normalized();
  const Eigen::Vector3d e2 = a.cross(e1);
  const Eigen::Vector3d corner = trocar + depth * a;
  return {
      {first_id, corner},
      {first_id + 1, corner + side * e1},
      {first_id + 2, corner + side * e1 + side * e2},
  };
}

TargetSequencer advance_target(TargetSequencer state, double e_vis_norm, double threshold,
                               int settle_cycles) {
  if (e_vis_norm < threshold) {
    ++state.consecutive;
  } else {
    state.consecutive = 0;
  }
  if (state.consecutive >= settle_cycles) {
    if (state.active + 1 < state.count) {
      ++state.active;
      state.consecutive = 0;
    } else {
      state.finished = true;
    }
  }
  return state;
}

SimSummary summarize(const std::vector<StepRecord>& records, const std::vector<Marker>& markers,
                     double switch_threshold, int settle_cycles) {
  SimSummary s;
  for (const Marker& m : markers) s.targets.push_back({m.id, std::nullopt});
  if (records.empty()) return s;

  double sum_rcm = 0.0, sum_solve = 0.0;
  for (const StepRecord& r : records) {
    s.max_e_rcm_mm = std::max(s.max_e_rcm_mm, r.e_rcm_mm);
    s.max_solve_us = std::max(s.max_solve_us, r.solve_us);
    sum_rcm += r.e_rcm_mm;
    sum_solve += r.solve_us;
  }
  const auto count = static_cast<double>(records.size());
  s.mean_e_rcm_mm = sum_rcm / count;
  s.mean_solve_us = sum_solve / count;

  TargetSequencer seq;
  seq.count = markers.size();
  for (const StepRecord& r : records) {
    const TargetSequencer next = advance_target(seq, r.e_vis_norm, switch_threshold, settle_cycles);
    if (next.active != seq.active || (next.finished && !seq.finished)) {
      s.targets[seq.active].t_converged = r.t;
    }
    seq = next;
  }
  s.completed = seq.finished && records.back().e_vis_norm < switch_threshold;
  return s;
}

SimResult run_scenario(const Scenario& scenario) {
  scenario.validate();
  const KinematicChain& chain = scenario.chain;
  const double dt = scenario.dt;
  const std::size_t cycles = scenario.cycle_count();
  const JointLimits limits = JointLimits::of(chain);

  SimResult result;
  result.records.reserve(cycles);

  HqpController controller(scenario.gains, scenario.qp_settings);
  std::mt19937_64 rng(scenario.seed);
  std::uniform_real_distribution<double> noise(-scenario.pixel_noise, scenario.pixel_noise);

  OtgLimits otg_limits{Eigen::Vector2d::Constant(scenario.otg.v_max),
                       Eigen::Vector2d::Constant(scenario.otg.a_max)};
  OtgState reference{Eigen::Vector2d::Zero(), Eigen::Vector2d::Zero()};
  bool reset_reference = true;

  TargetSequencer seq;
  seq.count = scenario.markers.size();
  std::optional<Eigen::Vector3d> last_error_dir;
  bool warned_outside = false;

  JointVector q = scenario.initial_q;
  for (std::size_t k = 0; k < cycles; ++k) {
    const double t = static_cast<double>(k) * dt;
    const Marker& marker = scenario.markers[seq.active];

    RcmState rcm;
    VisualTask vis;
    try {
      rcm = compute_rcm_state(chain, q, scenario.trocar, last_error_dir);
      vis = visual_jacobian(chain, q, scenario.intrinsics, marker);
      if (!in_image(vis.pixel, scenario.intrinsics)) {
        throw GeometryError("marker " + std::to_string(marker.id) + " left the image at t=" + std::to_string(t));
      }
    } catch (const GeometryError& e) {
      result.failure = e.what();
      break;
    }
    if (!rcm.degenerate) last_error_dir = rcm.error_dir;
    if (rcm.outside_shaft() && !warned_outside) {
      result.warnings.push_back("trocar projects outside the shaft segment at t=" + std::to_string(t));
      warned_outside = true;
    }
    if (k == 0 && vis.error.norm() >= scenario.switch_threshold) {
      result.warnings.push_back("first marker is not centered at the initial configuration (" +
                                std::to_string(vis.error.norm()) + " px)");
    }

    Eigen::Vector2d measured = vis.error;
    if (scenario.pixel_noise > 0.0) {
      measured.x() += noise(rng);
      measured.y() += noise(rng);
    }

    Eigen::Vector2d e_vis = measured;
    if (scenario.otg.enabled) {
      if (reset_reference) {
        reference = {measured, Eigen::Vector2d::Zero()};
        reset_reference = false;
      }
      reference = otg_step(reference, Eigen::Vector2d::Zero(), otg_limits, dt);
      e_vis = measured - reference.pos;
    }

    const HqpResult step = controller.solve(rcm.j_rcm, rcm.e_rcm, vis.jacobian, e_vis, q, limits, dt);

    StepRecord rec;
    rec.t = t;
    rec.q = q;
    rec.qdot_sol = step.qdot_sol;
    rec.e_rcm_mm = rcm.e_rcm * 1e3;
    rec.e_vis_u = measured.x();
    rec.e_vis_v = measured.y();
    rec.e_vis_norm = measured.norm();
    rec.target_id = marker.id;
    rec.solve_us = scenario.log_timing ? step.solve_time() * 1e6 : 0.0;
    rec.slack1 = step.slack1_norm;
    rec.slack2 = step.slack2_norm;
    rec.status1 = step.status1;
    rec.status2 = step.status2;
    rec.priority_gap = std::abs(rcm.j_rcm.dot(step.qdot_sol - step.qdot1));
    result.records.push_back(std::move(rec));

    const TargetSequencer next = advance_target(seq, measured.norm(), scenario.switch_threshold,
                                                scenario.settle_cycles);
    if (next.active != seq.active) reset_reference = true;
    seq = next;

    q += dt * step.qdot_sol;
  }

  result.summary = summarize(result.records, scenario.markers, scenario.switch_threshold,
                             scenario.settle_cycles);
  if (result.failure) result.summary.completed = false;
  return result;
}

}  // namespace rcmhqp
