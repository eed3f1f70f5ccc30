#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>

namespace rcmhqp::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitScenarioFailed = 1;
inline constexpr int kExitConfigError = 2;

/// Runs a scenario file and writes `log.csv` and `summary.json` into `out_dir`.
int cmd_run(const std::filesystem::path& scenario_path, const std::filesystem::path& out_dir,
            std::ostream& out, std::ostream& err);

struct AuditOptions {
  int samples = 100;
  std::uint64_t seed = 0;
  bool corrupt_rcm_sign = false;  // negative control: flips J_rcm before comparing
};

struct AuditThresholds {
  double position = 1e-5;
  double rcm = 1e-4;
  double visual = 1e-4;
  double projector = 1e-12;
};

struct AuditReport {
  double position = 0.0;   // worst relative error, position Jacobian
  double rcm = 0.0;        // worst relative error, RCM Jacobian
  double visual = 0.0;     // worst relative error, visual Jacobian
  double projector = 0.0;  // worst projector identity violation
  int samples = 0;

  bool passed(const AuditThresholds& limits = {}) const;
};

/// Finite-difference audits of the analytic Jacobians and the null-space
/// projector on random configurations of the default chain.
AuditReport run_jacobian_audit(const AuditOptions& options);

int cmd_check(const AuditOptions& options, std::ostream& out, std::ostream& err);

struct BenchStats {
  double mean_us = 0.0;
  double median_us = 0.0;
  double p99_us = 0.0;
  double max_us = 0.0;
  std::size_t cycles = 0;
};

/// Per-cycle combined solve time of both QP levels over `cycles` control steps.
int cmd_bench(int cycles, const std::filesystem::path& scenario_path, std::ostream& out,
              std::ostream& err, BenchStats* stats = nullptr);

}  // namespace rcmhqp::cli
