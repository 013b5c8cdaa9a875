#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <string>
#include <vector>

#include "teleopt/symmetry.hpp"
#include "teleopt/tasks.hpp"

namespace teleopt::optim {

// Objective value beyond which a run is flagged divergent and truncated.
inline constexpr double kDivergenceGuard = 1e12;

struct TrajectoryRecord {
  int step = 0;
  Eigen::Vector2d x = Eigen::Vector2d::Zero();
  double f = 0.0;
  double grad_norm = 0.0;
  std::optional<double> theta;  // group element applied at this step, if any
};

struct TrajectoryMeta {
  std::uint64_t task_seed = 0;
  std::string optimizer;
  std::map<std::string, double> hyperparams;
};

// Ordered records of one optimization run. Record 0 always holds x0; steps
// increase by one. If the divergence guard fired, `diverged` is set and the
// last record is the offending point.
struct Trajectory {
  std::vector<TrajectoryRecord> records;
  TrajectoryMeta meta;
  bool diverged = false;
  std::vector<std::string> warnings;

  double final_f() const { return records.back().f; }
};

// Inner-step indices at which teleportation fires.
struct TeleportSchedule {
  std::set<int> steps;

  bool contains(int t) const { return steps.count(t) > 0; }
  static TeleportSchedule none() { return {}; }
  static TeleportSchedule at(std::initializer_list<int> ts) { return {std::set<int>(ts)}; }
  static TeleportSchedule every_step(int n_steps);
};

Trajectory run_gd(const tasks::Task& task, const Eigen::Vector2d& x0, double alpha, int steps);

// v_t = beta v_{t-1} - alpha grad, x_t = x_{t-1} + v_t. beta = 0 reproduces
// run_gd bit for bit.
Trajectory run_momentum(const tasks::Task& task, const Eigen::Vector2d& x0, double alpha,
                        double beta, int steps);

// Exact 2x2 Newton, no damping. A singular Hessian truncates the trajectory
// with a warning record.
Trajectory run_newton(const tasks::Task& task, const Eigen::Vector2d& x0, int steps);

// GD, but at each step in the schedule the iterate is first replaced by the
// oracle-teleported point on its orbit (same f, maximal gradient norm).
Trajectory run_teleport_gd(const tasks::Task& task, const Eigen::Vector2d& x0, double alpha,
                           int steps, const TeleportSchedule& schedule,
                           const sym::OracleSettings& oracle = {});

// CSV with the exact header step,x1,x2,f,grad_norm,theta; theta empty when
// absent.
void write_trajectory_csv(std::ostream& os, const Trajectory& traj);
void write_trajectory_csv(const std::filesystem::path& path, const Trajectory& traj);

}  // namespace teleopt::optim
