#include "reflux/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include "reflux/asymptotics.hpp"
#include "reflux/dynamics.hpp"

namespace reflux {

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

SolveConfig ExperimentConfig::solve_config() const {
  SolveConfig sc;
  sc.horizon = horizon;
  sc.grid_points = grid_points;
  return sc;
}

Policy ExperimentConfig::make_policy() const {
  if (policy == "fp1") return fixed_priority(JobClass::class1);
  if (policy == "fp2") return fixed_priority(JobClass::class2);
  if (policy == "switch1") return switch_at_time(JobClass::class1, switch_time);
  if (policy == "switch2") return switch_at_time(JobClass::class2, switch_time);
  if (policy == "curve1") return switch_on_curve(JobClass::class1, threshold);
  if (policy == "curve2") return switch_on_curve(JobClass::class2, threshold);
  throw std::invalid_argument("unknown policy '" + policy +
                              "' (use fp1|fp2|switch1|switch2|curve1|curve2)");
}

void ExperimentConfig::set_field(const std::string& name, double value) {
  if (name == "r1") r1 = value;
  else if (name == "r2") r2 = value;
  else if (name == "gamma1") gamma1 = value;
  else if (name == "gamma2") gamma2 = value;
  else if (name == "mu") mu = value;
  else if (name == "q1p") initial_state.q1p = value;
  else if (name == "q1r") initial_state.q1r = value;
  else if (name == "q2p") initial_state.q2p = value;
  else if (name == "q2r") initial_state.q2r = value;
  else if (name == "horizon") horizon = value;
  else if (name == "grid_points") grid_points = static_cast<int>(value);
  else if (name == "seed") seed = static_cast<std::uint64_t>(value);
  else if (name == "samples") samples = static_cast<int>(value);
  else if (name == "switch_time") switch_time = value;
  else if (name == "threshold") threshold = value;
  else if (name == "grid_min") grid_min = value;
  else if (name == "grid_max") grid_max = value;
  else if (name == "grid_count") grid_count = static_cast<int>(value);
  else
    throw std::invalid_argument("unknown config field '" + name + "'");
}

namespace {

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

double parse_number(const std::string& key, const std::string& text) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(text, &pos);
    if (pos != text.size()) throw std::invalid_argument("trailing characters");
    return v;
  } catch (const std::exception&) {
    throw std::invalid_argument("config field '" + key + "': cannot parse number '" +
                                text + "'");
  }
}

}  // namespace

ExperimentConfig parse_config_text(const std::string& text) {
  ExperimentConfig cfg;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("config line " + std::to_string(lineno) +
                                  ": expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key == "policy") {
      cfg.policy = value;
    } else if (key == "horizon" && value == "auto") {
      cfg.horizon = 0.0;
    } else if (key.rfind("sweep.", 0) == 0) {
      ExperimentConfig probe = cfg;
      probe.set_field(key.substr(6), 0.0);  // validate the field name
      cfg.sweep_field = key.substr(6);
      cfg.sweep_values.clear();
      std::istringstream vs(value);
      std::string item;
      while (std::getline(vs, item, ','))
        cfg.sweep_values.push_back(parse_number(key, trim(item)));
      if (cfg.sweep_values.empty())
        throw std::invalid_argument("config field '" + key + "': empty sweep");
    } else {
      cfg.set_field(key, parse_number(key, value));
    }
  }
  return cfg;
}

ExperimentConfig parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open config file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str());
}

void write_trajectory_csv(std::ostream& os, const Trajectory& traj, int samples) {
  os << "time,q1p,q1r,q2p,q2r,u1,u2,running_cost\n";
  std::set<double> times;
  for (const Segment& seg : traj.segments()) times.insert(seg.t0);
  times.insert(traj.horizon());
  for (int k = 1; k < samples; ++k)
    times.insert(traj.horizon() * k / samples);
  for (double t : times) {
    const State s = traj.state_at(t);
    const Allocation u = traj.allocation_at(t);
    os << format_double(t) << ',' << format_double(s.q1p) << ','
       << format_double(s.q1r) << ',' << format_double(s.q2p) << ','
       << format_double(s.q2r) << ',' << format_double(u.u1) << ','
       << format_double(u.u2) << ',' << format_double(traj.cost_until(t)) << '\n';
  }
}

namespace {

std::ofstream open_output(const std::string& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write output file '" + path + "'");
  return os;
}

}  // namespace

int cmd_simulate(const ExperimentConfig& cfg, const std::string& out_path) {
  const Params p = cfg.params();
  const double T = cfg.solve_config().resolved_horizon(p, cfg.initial_state);
  const Trajectory traj = simulate(cfg.make_policy(), cfg.initial_state, p, T);
  auto os = open_output(out_path);
  write_trajectory_csv(os, traj, cfg.samples);
  return 0;
}

std::vector<GapRow> gap_table(const ExperimentConfig& cfg,
                              bool horizon_double_check,
                              std::string* diagnostics) {
  if (cfg.sweep_field.empty())
    throw std::invalid_argument("gap_table: config has no sweep.<field>");
  std::vector<GapRow> rows;
  std::ostringstream diag;
  for (double v : cfg.sweep_values) {
    ExperimentConfig point = cfg;
    point.set_field(cfg.sweep_field, v);
    const Params p = point.params();
    const SolveConfig sc = point.solve_config();
    const double T = sc.resolved_horizon(p, point.initial_state);

    GapRow row;
    row.swept_value = v;
    const OptimalSolution sol = solve_optimal(p, point.initial_state, sc);
    row.optimal_cost = sol.cost;
    row.fp1_cost = simulate(fixed_priority(JobClass::class1), point.initial_state,
                            p, T)
                       .accumulated_cost();
    row.fp2_cost = simulate(fixed_priority(JobClass::class2), point.initial_state,
                            p, T)
                       .accumulated_cost();
    row.fp1_gap = (row.fp1_cost - row.optimal_cost) / row.optimal_cost;
    row.fp2_gap = (row.fp2_cost - row.optimal_cost) / row.optimal_cost;
    rows.push_back(row);

    if (horizon_double_check) {
      SolveConfig twice = sc;
      twice.horizon = 2.0 * T;
      twice.grid_points = 2 * sc.grid_points;  // same cell width
      const double cost2 = solve_optimal(p, point.initial_state, twice).cost;
      diag << "sweep=" << format_double(v)
           << " cost(T)=" << format_double(row.optimal_cost)
           << " cost(2T)=" << format_double(cost2)
           << " delta=" << format_double(cost2 - row.optimal_cost) << "\n";
    }
  }
  if (diagnostics) *diagnostics = diag.str();
  return rows;
}

int cmd_gap_table(const ExperimentConfig& cfg, const std::string& out_path,
                  bool horizon_double_check) {
  std::string diag;
  const auto rows =
      gap_table(cfg, horizon_double_check, horizon_double_check ? &diag : nullptr);
  auto os = open_output(out_path);
  os << cfg.sweep_field << ",optimal_cost,fp1_cost,fp2_cost,fp1_gap_pct,fp2_gap_pct\n";
  for (const GapRow& r : rows)
    os << format_double(r.swept_value) << ',' << format_double(r.optimal_cost)
       << ',' << format_double(r.fp1_cost) << ',' << format_double(r.fp2_cost)
       << ',' << format_double(100.0 * r.fp1_gap) << ','
       << format_double(100.0 * r.fp2_gap) << '\n';
  if (horizon_double_check) {
    auto ds = open_output(out_path + ".horizon_check");
    ds << diag;
  }
  return 0;
}

int cmd_trajectories(const ExperimentConfig& cfg, const std::string& out_dir) {
  namespace fs = std::filesystem;
  fs::create_directories(out_dir);
  const Params p = cfg.params();

  auto summary = open_output((fs::path(out_dir) / "summary.csv").string());
  summary << "q1p0,q2p0,optimal_cost,switch_count,phases\n";

  for (int i = 0; i < cfg.grid_count; ++i) {
    for (int j = 0; j < cfg.grid_count; ++j) {
      const double q1 =
          cfg.grid_min + (cfg.grid_max - cfg.grid_min) *
                             (cfg.grid_count == 1 ? 0.0
                                                  : static_cast<double>(i) /
                                                        (cfg.grid_count - 1));
      const double q2 =
          cfg.grid_min + (cfg.grid_max - cfg.grid_min) *
                             (cfg.grid_count == 1 ? 0.0
                                                  : static_cast<double>(j) /
                                                        (cfg.grid_count - 1));
      const State q0{q1, 0.0, q2, 0.0};
      const OptimalSolution sol = solve_optimal(p, q0, cfg.solve_config());

      std::ostringstream phases;
      bool first = true;
      for (const auto& [cls, len] : priority_phases(sol)) {
        if (!first) phases << "->";
        phases << label(cls);
        first = false;
      }
      summary << format_double(q1) << ',' << format_double(q2) << ','
              << format_double(sol.cost) << ',' << sol.switch_count << ','
              << phases.str() << '\n';

      char name[64];
      std::snprintf(name, sizeof name, "trajectory_%02d_%02d.csv", i, j);
      auto os = open_output((fs::path(out_dir) / name).string());
      os << "time,q1p,q2p,u1,u2\n";
      const auto& nodes = sol.node_times;
      for (std::size_t k = 0; k < nodes.size(); ++k) {
        const State s = sol.trajectory.state_at(nodes[k]);
        const Allocation u =
            k < sol.controls.size() ? sol.controls[k] : Allocation{0.0, 0.0};
        os << format_double(nodes[k]) << ',' << format_double(s.q1p) << ','
           << format_double(s.q2p) << ',' << format_double(u.u1) << ','
           << format_double(u.u2) << '\n';
      }
    }
  }
  return 0;
}

int cmd_asymptotics(const ExperimentConfig& cfg, const std::string& out_path) {
  const Params p = cfg.params();
  auto os = open_output(out_path);
  os << "epsilon,prioritized_class,t_i,a_i,delta_j,qjr_end,stage_a,stage_b,total,"
        "small_eps_total,large_eps_total,simulated_total\n";
  std::vector<double> eps_grid;
  for (int k = 0; k <= 24; ++k)
    eps_grid.push_back(std::pow(10.0, -3.0 + 0.25 * k));  // 1e-3 .. 1e3
  for (double eps : eps_grid) {
    for (JobClass cls : {JobClass::class1, JobClass::class2}) {
      const FixedPriorityBreakdown b = breakdown(p, cls, eps);
      const State q0{eps, 0, eps, 0};
      const double T = SolveConfig::auto_horizon(p, q0);
      const double sim =
          simulate(fixed_priority(cls), q0, p, T).accumulated_cost();
      os << format_double(eps) << ',' << label(cls) << ','
         << format_double(b.t_i) << ',' << format_double(b.a_i) << ','
         << format_double(b.delta_j) << ',' << format_double(b.qjr_end) << ','
         << format_double(b.cost_stage_a) << ',' << format_double(b.cost_stage_b)
         << ',' << format_double(b.total) << ','
         << format_double(small_eps_prediction(p, cls, eps).total) << ','
         << format_double(large_eps_prediction(p, cls, eps)) << ','
         << format_double(sim) << '\n';
    }
  }
  return 0;
}

}  // namespace reflux
