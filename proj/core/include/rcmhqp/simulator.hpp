#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "rcmhqp/hqp_controller.hpp"
#include "rcmhqp/kinematics.hpp"
#include "rcmhqp/otg.hpp"
#include "rcmhqp/qp_solver.hpp"
#include "rcmhqp/rcm_task.hpp"
#include "rcmhqp/visual_task.hpp"

namespace rcmhqp {

/// Pixel-space reference smoothing for the visual error.
struct OtgConfig {
  bool enabled = true;
  double v_max = 300.0;   // px/s
  double a_max = 1500.0;  // px/s^2
};

struct Scenario {
  std::string name = "scenario";
  KinematicChain chain = KinematicChain::default_6r();
  TrocarConfig trocar;
  CameraIntrinsics intrinsics;
  std::vector<Marker> markers;
  JointVector initial_q;
  HqpGains gains = HqpGains::defaults(0.002);
  QpSettings qp_settings;
  OtgConfig otg;
  double switch_threshold = 10.0;  // px
  int settle_cycles = 1;
  double dt = 0.002;           // s
  double max_duration = 20.0;  // s
  std::uint64_t seed = 0;
  double pixel_noise = 0.0;  // half-width of uniform pixel noise, px
  bool log_timing = true;    // false writes zero solve times, making logs reproducible

  /// Number of control cycles in a run that is not aborted.
  std::size_t cycle_count() const;

  /// Throws ConfigError. Checks the scalar settings, joint limits at
  /// initial_q, and that the shaft passes within 1 mm of the trocar.
  void validate() const;
};

/// Three corners of a square (marker ids first_id, +1, +2) on the plane
/// normal to `axis` at `depth` beyond the trocar: the first marker sits on
/// the axis, the second one `side` along `first_edge`, the third one a
/// further `side` along axis x first_edge.
std::vector<Marker> square_marker_layout(const Eigen::Vector3d& trocar, const Eigen::Vector3d& axis,
                                         const Eigen::Vector3d& first_edge, double depth, double side,
                                         int first_id = 1);

struct StepRecord {
  double t = 0.0;
  JointVector q;
  JointVector qdot_sol;
  double e_rcm_mm = 0.0;
  double e_vis_u = 0.0;  // measured pixel offset from the image center
  double e_vis_v = 0.0;
  double e_vis_norm = 0.0;
  int target_id = 0;
  double solve_us = 0.0;
  double slack1 = 0.0;
  double slack2 = 0.0;
  LevelStatus status1 = LevelStatus::Skipped;
  LevelStatus status2 = LevelStatus::Skipped;
  double priority_gap = 0.0;  // |J_rcm (qdot_sol - qdot1)|
};

struct TargetSequencer {
  std::size_t active = 0;
  std::size_t count = 1;
  int consecutive = 0;
  bool finished = false;  // last target reached
};

/// Moves to the next target after `settle_cycles` consecutive samples with
/// error strictly below `threshold`. The last target is held; reaching it
/// sets `finished`.
TargetSequencer advance_target(TargetSequencer state, double e_vis_norm, double threshold,
                               int settle_cycles);

struct TargetSummary {
  int id = 0;
  std::optional<double> t_converged;  // s
};

struct SimSummary {
  double max_e_rcm_mm = 0.0;
  double mean_e_rcm_mm = 0.0;
  double mean_solve_us = 0.0;
  double max_solve_us = 0.0;
  std::vector<TargetSummary> targets;
  bool completed = false;
};

/// Derives the summary from the log alone, replaying the target sequencer
/// over the recorded pixel errors.
SimSummary summarize(const std::vector<StepRecord>& records, const std::vector<Marker>& markers,
                     double switch_threshold, int settle_cycles);

struct SimResult {
  std::vector<StepRecord> records;
  SimSummary summary;
  std::optional<std::string> failure;  // set when the run aborted
  std::vector<std::string> warnings;
};

/// Closed-loop run at the control rate with explicit Euler integration.
/// Geometry errors abort the run; the partial log is kept and `failure` set.
SimResult run_scenario(const Scenario& scenario);

}  // namespace rcmhqp
