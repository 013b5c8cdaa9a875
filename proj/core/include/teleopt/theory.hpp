#pragma once

#include <Eigen/Core>
#include <stdexcept>

#include "teleopt/optim.hpp"
#include "teleopt/tasks.hpp"

namespace teleopt::theory {

struct DecompositionError : std::runtime_error {
  explicit DecompositionError(const std::string& what) : std::runtime_error(what) {}
};

// Split of the Newton direction v2 = -H^-1 grad into its projection onto the
// gradient direction v1 = -grad and the orthogonal remainder.
struct NewtonDecomposition {
  Eigen::VectorXd v1;      // -grad
  Eigen::VectorXd v2;      // -H^-1 grad
  Eigen::VectorXd v_par;   // (v2.v1/||v1||^2) v1
  Eigen::VectorXd v_perp;  // v2 - v_par
};

// Throws DecompositionError on a zero gradient or a Hessian with condition
// number above 1e12.
NewtonDecomposition newton_decompose(const Eigen::VectorXd& grad, const Eigen::MatrixXd& hess);

// v_perp . d/dw ||grad||^2 = v_perp . (2 H grad). Non-negative for convex
// objectives (constant-H quadratics here): the orthogonal part of a Newton
// step never shrinks the gradient norm.
double grad_norm_directional_derivative(const Eigen::VectorXd& grad, const Eigen::MatrixXd& hess,
                                    const Eigen::VectorXd& v_perp);

// Two sides of (w^T A^a w)^2 <= (w^T A^{a+b} w)(w^T A^{a-b} w), which holds
// for positive definite A and can fail for indefinite A.
struct PowerInequalityResult {
  double lhs = 0.0;  // (w^T A^a w)^2
  double rhs = 0.0;  // (w^T A^{a+b} w)(w^T A^{a-b} w)

  bool holds(double rel_slack = 1e-9) const { return lhs <= rhs * (1.0 + rel_slack); }
};

// Integer matrix powers via symmetric eigendecomposition. Negative powers
// require every |eigenvalue| >= 1e-12. A need only be symmetric, so
// indefinite counterexamples are expressible.
PowerInequalityResult quadratic_power_inequality(const Eigen::VectorXd& w, const Eigen::MatrixXd& A, int alpha,
                          int beta);

// f(x) = x^T A x written as ||B x||^2 with B the unique symmetric
// positive-definite square root of A.
struct QuadraticSpec {
  Eigen::Matrix2d A;
  Eigen::Matrix2d B;
  Eigen::Vector2d lambda;  // eigenvalues of A, ascending

  static QuadraticSpec from_a(const Eigen::Matrix2d& A);
  static QuadraticSpec from_b(const Eigen::Matrix2d& B);
  // From a centered ellipse task: A = A_task^T A_task.
  static QuadraticSpec from_task(const tasks::Task& task);
};

// d/dtheta f(x_{t+1}) at theta = 0 for the teleported GD step
// x_{t+1} = (B^-1 - 2 alpha B) R_theta B x: equals 2 (Bx)^T (I - 2 alpha A)^2
// R_{pi/2} B x.
double theta_grad_closed_form(const QuadraticSpec& spec, double alpha,
                              const Eigen::Vector2d& x);

// GD on a centered quadratic with an online-learned rotation angle:
//   y_t     = B^-1 R_theta B x_t
//   x_{t+1} = y_t - alpha grad f(y_t)
//   theta   = theta - beta * d f(x_{t+1}) / d theta   (autodiff through the step)
// Records (x_t, f, grad norm, theta_t) per step. Throws DivergenceError if f
// exceeds the guard.
optim::Trajectory run_learned_teleport_gd(const tasks::Task& task, const Eigen::Vector2d& x0, double theta0,
                           double alpha, double beta, int steps);

optim::Trajectory run_learned_teleport_gd(const QuadraticSpec& spec, const Eigen::Vector2d& x0, double theta0,
                           double alpha, double beta, int steps);

}  // namespace teleopt::theory
