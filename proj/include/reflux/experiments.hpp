// Experiment harness: flat-text config files, deterministic CSV emission,
// trajectory exports, the fixed-priority gap table, and asymptotic tables.
#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "reflux/optimal.hpp"
#include "reflux/params.hpp"
#include "reflux/policies.hpp"
#include "reflux/state.hpp"

namespace reflux {

struct ExperimentConfig {
  double r1 = 0.2;
  double r2 = 0.8;
  double gamma1 = 2.0;
  double gamma2 = 0.2;
  double mu = 2.0;
  State initial_state{2.0, 0.0, 2.0, 0.0};
  double horizon = 0.0;  // 0 = auto
  int grid_points = 2000;
  std::uint64_t seed = 20250801;
  int samples = 500;  // uniform sample rows added to trajectory CSVs; 0 = none
  std::string policy = "fp1";  // fp1 | fp2 | switch1 | switch2 | curve1 | curve2
  double switch_time = 0.0;
  double threshold = 0.0;
  std::string sweep_field;  // empty = no sweep
  std::vector<double> sweep_values;
  double grid_min = 0.25;  // trajectory-start grid over (q1p, q2p)
  double grid_max = 3.0;
  int grid_count = 5;

  Params params() const { return Params(r1, r2, gamma1, gamma2, mu); }
  SolveConfig solve_config() const;
  Policy make_policy() const;

  /// Assign a numeric field by name (the names accepted in config files);
  /// throws std::invalid_argument naming the field if unknown.
  void set_field(const std::string& name, double value);
};

/// Flat `key = value` config file; `sweep.<field> = v1,v2,...` for sweeps.
/// '#' starts a comment.  Unknown keys are rejected by name.
ExperimentConfig parse_config_file(const std::string& path);
ExperimentConfig parse_config_text(const std::string& text);

/// All numbers are printed with 17 significant digits so that parsing the
/// output reproduces the doubles bit for bit.
std::string format_double(double v);

struct GapRow {
  double swept_value = 0.0;
  double optimal_cost = 0.0;
  double fp1_cost = 0.0;
  double fp2_cost = 0.0;
  double fp1_gap = 0.0;  // (fp1_cost - optimal_cost) / optimal_cost
  double fp2_gap = 0.0;
};

/// time,q1p,q1r,q2p,q2r,u1,u2,running_cost rows at segment breakpoints plus
/// `samples` uniform sample times.
void write_trajectory_csv(std::ostream& os, const Trajectory& traj, int samples);

int cmd_simulate(const ExperimentConfig& cfg, const std::string& out_path);

std::vector<GapRow> gap_table(const ExperimentConfig& cfg,
                              bool horizon_double_check = false,
                              std::string* diagnostics = nullptr);
int cmd_gap_table(const ExperimentConfig& cfg, const std::string& out_path,
                  bool horizon_double_check);

int cmd_trajectories(const ExperimentConfig& cfg, const std::string& out_dir);

int cmd_asymptotics(const ExperimentConfig& cfg, const std::string& out_path);

}  // namespace reflux
