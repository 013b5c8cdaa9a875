#include "teleopt/symmetry.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "teleopt/errors.hpp"

namespace teleopt::sym {

namespace {
constexpr double kPi = std::numbers::pi;
}

double wrap_angle(double theta) {
  double w = std::remainder(theta, 2.0 * kPi);
  if (w <= -kPi) w = kPi;
  return w;
}

double grad_norm_on_orbit(const tasks::Task& task, const Eigen::Vector2d& x, double theta) {
  const Eigen::Vector2d y = act(task, theta, x);
  return tasks::grad_f(task, y).norm();
}

OracleResult teleport_oracle(const tasks::Task& task, const Eigen::Vector2d& x,
                             const OracleSettings& settings) {
  if (settings.grid_n < 8) {
    throw std::invalid_argument("teleport_oracle: grid_n must be at least 8");
  }
  if (settings.refine_iters < 0) {
    throw std::invalid_argument("teleport_oracle: refine_iters must be non-negative");
  }

  const auto eval = [&](double theta) -> double {
    try {
      return grad_norm_on_orbit(task, x, theta);
    } catch (const SingularMapError&) {
      return -std::numeric_limits<double>::infinity();
    }
  };

  // theta_k = wrap(2 pi k / n) puts theta = 0 on the grid for every n.
  OracleResult best{0.0, -std::numeric_limits<double>::infinity()};
  int usable = 0;
  const double step = 2.0 * kPi / settings.grid_n;
  for (int k = 0; k < settings.grid_n; ++k) {
    const double theta = wrap_angle(k * step);
    const double norm = eval(theta);
    if (!std::isfinite(norm)) continue;
    ++usable;
    if (norm > best.grad_norm_star ||
        (norm == best.grad_norm_star && std::abs(theta) < std::abs(best.theta_star))) {
      best = {theta, norm};
    }
  }
  if (usable == 0) {
    throw OracleError("teleport_oracle: group action singular at every grid point");
  }

  // Golden-section refinement on the bracket around the best grid point.
  // Track best-so-far so refinement can only improve on the grid answer.
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = best.theta_star - step;
  double b = best.theta_star + step;
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = eval(c);
  double fd = eval(d);
  for (int it = 0; it < settings.refine_iters; ++it) {
    if (fc > best.grad_norm_star ||
        (fc == best.grad_norm_star && std::abs(wrap_angle(c)) < std::abs(best.theta_star))) {
      best = {wrap_angle(c), fc};
    }
    if (fd > best.grad_norm_star ||
        (fd == best.grad_norm_star && std::abs(wrap_angle(d)) < std::abs(best.theta_star))) {
      best = {wrap_angle(d), fd};
    }
    if (fc > fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = eval(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = eval(d);
    }
  }
  return best;
}

}  // namespace teleopt::sym
