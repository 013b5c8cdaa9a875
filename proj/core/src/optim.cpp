#include "teleopt/optim.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

#include "teleopt/errors.hpp"
#include "teleopt/io.hpp"

namespace teleopt::optim {

TeleportSchedule TeleportSchedule::every_step(int n_steps) {
  TeleportSchedule s;
  for (int t = 1; t <= n_steps; ++t) s.steps.insert(t);
  return s;
}

namespace {

TrajectoryRecord record_at(const tasks::Task& task, int step, const Eigen::Vector2d& x,
                           std::optional<double> theta = std::nullopt) {
  TrajectoryRecord r;
  r.step = step;
  r.x = x;
  r.f = tasks::eval_f(task, x);
  r.grad_norm = tasks::grad_f(task, x).norm();
  r.theta = theta;
  return r;
}

bool guard_tripped(Trajectory& traj) {
  if (traj.records.back().f > kDivergenceGuard || !std::isfinite(traj.records.back().f)) {
    traj.diverged = true;
    return true;
  }
  return false;
}

}  // namespace

Trajectory run_gd(const tasks::Task& task, const Eigen::Vector2d& x0, double alpha, int steps) {
  if (alpha < 0.0) throw std::invalid_argument("run_gd: alpha must be non-negative");
  Trajectory traj;
  traj.meta = {task.seed, "gd", {{"alpha", alpha}}};
  Eigen::Vector2d x = x0;
  traj.records.push_back(record_at(task, 0, x));
  for (int t = 1; t <= steps; ++t) {
    if (guard_tripped(traj)) break;
    x = x - alpha * tasks::grad_f(task, x);
    traj.records.push_back(record_at(task, t, x));
  }
  guard_tripped(traj);
  return traj;
}

Trajectory run_momentum(const tasks::Task& task, const Eigen::Vector2d& x0, double alpha,
                        double beta, int steps) {
  if (alpha < 0.0) throw std::invalid_argument("run_momentum: alpha must be non-negative");
  if (beta < 0.0 || beta >= 1.0) throw std::invalid_argument("run_momentum: need 0 <= beta < 1");
  Trajectory traj;
  traj.meta = {task.seed, "momentum", {{"alpha", alpha}, {"beta", beta}}};
  Eigen::Vector2d x = x0;
  Eigen::Vector2d v = Eigen::Vector2d::Zero();
  traj.records.push_back(record_at(task, 0, x));
  for (int t = 1; t <= steps; ++t) {
    if (guard_tripped(traj)) break;
    v = beta * v - alpha * tasks::grad_f(task, x);
    x = x + v;
    traj.records.push_back(record_at(task, t, x));
  }
  guard_tripped(traj);
  return traj;
}

Trajectory run_newton(const tasks::Task& task, const Eigen::Vector2d& x0, int steps) {
  Trajectory traj;
  traj.meta = {task.seed, "newton", {}};
  Eigen::Vector2d x = x0;
  traj.records.push_back(record_at(task, 0, x));
  for (int t = 1; t <= steps; ++t) {
    if (guard_tripped(traj)) break;
    const Eigen::Matrix2d H = tasks::hess_f(task, x);
    const double det = H(0, 0) * H(1, 1) - H(0, 1) * H(1, 0);
    if (det == 0.0 || !std::isfinite(det)) {
      traj.warnings.push_back("newton: singular Hessian at step " + std::to_string(t) +
                              "; trajectory truncated");
      break;
    }
    Eigen::Matrix2d Hinv;
    Hinv << H(1, 1), -H(0, 1), -H(1, 0), H(0, 0);
    Hinv /= det;
    x = x - Hinv * tasks::grad_f(task, x);
    traj.records.push_back(record_at(task, t, x));
  }
  guard_tripped(traj);
  return traj;
}

Trajectory run_teleport_gd(const tasks::Task& task, const Eigen::Vector2d& x0, double alpha,
                           int steps, const TeleportSchedule& schedule,
                           const sym::OracleSettings& oracle) {
  if (alpha < 0.0) throw std::invalid_argument("run_teleport_gd: alpha must be non-negative");
  Trajectory traj;
  traj.meta = {task.seed, "teleport_gd", {{"alpha", alpha}}};

  const auto teleport = [&](int t, Eigen::Vector2d& x) -> std::optional<double> {
    if (!schedule.contains(t)) return std::nullopt;
    try {
      const sym::OracleResult res = sym::teleport_oracle(task, x, oracle);
      x = sym::act(task, res.theta_star, x);
      return res.theta_star;
    } catch (const OracleError& e) {
      traj.warnings.push_back("teleport skipped at step " + std::to_string(t) + ": " + e.what());
      return std::nullopt;
    }
  };

  Eigen::Vector2d x = x0;
  std::optional<double> theta0 = teleport(0, x);
  traj.records.push_back(record_at(task, 0, x, theta0));
  for (int t = 1; t <= steps; ++t) {
    if (guard_tripped(traj)) break;
    x = x - alpha * tasks::grad_f(task, x);
    std::optional<double> theta = teleport(t, x);
    traj.records.push_back(record_at(task, t, x, theta));
  }
  guard_tripped(traj);
  return traj;
}

void write_trajectory_csv(std::ostream& os, const Trajectory& traj) {
  os << "step,x1,x2,f,grad_norm,theta\n";
  for (const TrajectoryRecord& r : traj.records) {
    os << r.step << ',' << io::format_double(r.x(0)) << ',' << io::format_double(r.x(1)) << ','
       << io::format_double(r.f) << ',' << io::format_double(r.grad_norm) << ',';
    if (r.theta) os << io::format_double(*r.theta);
    os << '\n';
  }
}

void write_trajectory_csv(const std::filesystem::path& path, const Trajectory& traj) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open " + path.string() + " for writing");
  write_trajectory_csv(os, traj);
}

}  // namespace teleopt::optim
