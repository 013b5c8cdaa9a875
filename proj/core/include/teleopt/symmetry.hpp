#pragma once

#include <Eigen/Core>

#include "teleopt/tasks.hpp"

namespace teleopt::sym {

// Wraps into (-pi, pi].
double wrap_angle(double theta);

// SO(2) group element acting on task parameters by conjugation with the
// task's bijection h: g_theta = h^-1 . R_theta . h. Objective-preserving by
// construction; g_0 is the identity and angles compose additively.
struct GroupElement {
  double theta = 0.0;

  static GroupElement from(double raw) { return {wrap_angle(raw)}; }
  GroupElement compose(const GroupElement& other) const {
    return from(theta + other.theta);
  }
};

template <class S>
tasks::V2<S> rotate(const S& c, const S& s, const tasks::V2<S>& v) {
  return {c * v[0] - s * v[1], s * v[0] + c * v[1]};
}

// g_theta(x) = h^-1(R_theta h(x)). Generic so the learned-theta variants can
// trace it on the autodiff tape. g_0 is the identity exactly on the double
// path; the tape path keeps the full graph because d/dtheta at 0 is nonzero.
template <class S>
tasks::V2<S> act(const tasks::Task& task, const S& theta, const tasks::V2<S>& x) {
  using namespace teleopt::scalar;
  if constexpr (std::is_same_v<S, double>) {
    if (theta == 0.0) return x;
  }
  tasks::V2<S> h = tasks::h_forward(task, x);
  S c = cos(theta);
  S s = sin(theta);
  return tasks::h_inverse(task, rotate(c, s, h));
}

inline Eigen::Vector2d act(const tasks::Task& task, double theta, const Eigen::Vector2d& x) {
  return tasks::to_eigen(act(task, theta, tasks::from_eigen(x)));
}

// ||grad f(g_theta(x))||_2, the objective maximized over the orbit.
double grad_norm_on_orbit(const tasks::Task& task, const Eigen::Vector2d& x, double theta);

struct OracleSettings {
  int grid_n = 64;
  int refine_iters = 40;
};

struct OracleResult {
  double theta_star = 0.0;
  double grad_norm_star = 0.0;
};

// argmax_theta ||grad f(g_theta(x))||: uniform grid over (-pi, pi] (theta=0
// always a candidate) followed by golden-section refinement on the best
// bracket. Ties broken toward the smallest |theta|. The returned norm is
// never below any grid value, in particular never below ||grad f(x)||.
OracleResult teleport_oracle(const tasks::Task& task, const Eigen::Vector2d& x,
                             const OracleSettings& settings = {});

}  // namespace teleopt::sym
