#include "teleopt/theory.hpp"

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <cmath>

#include "teleopt/autodiff.hpp"
#include "teleopt/errors.hpp"

namespace teleopt::theory {

NewtonDecomposition newton_decompose(const Eigen::VectorXd& grad, const Eigen::MatrixXd& hess) {
  if (grad.norm() == 0.0) {
    throw DecompositionError("newton_decompose: zero gradient");
  }
  if (hess.rows() != hess.cols() || hess.rows() != grad.size()) {
    throw DecompositionError("newton_decompose: dimension mismatch");
  }
  const Eigen::JacobiSVD<Eigen::MatrixXd> svd(hess, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const double smin = svd.singularValues().minCoeff();
  const double smax = svd.singularValues().maxCoeff();
  if (smin == 0.0 || smax / smin > 1e12) {
    throw DecompositionError("newton_decompose: Hessian is singular or near-singular");
  }

  NewtonDecomposition d;
  d.v1 = -grad;
  d.v2 = -hess.fullPivLu().solve(grad);
  d.v_par = (d.v2.dot(d.v1) / d.v1.squaredNorm()) * d.v1;
  d.v_perp = d.v2 - d.v_par;
  return d;
}

double grad_norm_directional_derivative(const Eigen::VectorXd& grad, const Eigen::MatrixXd& hess,
                                    const Eigen::VectorXd& v_perp) {
  return v_perp.dot(2.0 * hess * grad);
}

PowerInequalityResult quadratic_power_inequality(const Eigen::VectorXd& w, const Eigen::MatrixXd& A, int alpha,
                          int beta) {
  if (!A.isApprox(A.transpose(), 1e-12)) {
    throw std::invalid_argument("quadratic_power_inequality: A must be symmetric");
  }
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(A);
  if (es.info() != Eigen::Success) {
    throw std::runtime_error("quadratic_power_inequality: eigendecomposition failed");
  }
  const Eigen::VectorXd d = es.eigenvalues();
  const Eigen::VectorXd y = es.eigenvectors().transpose() * w;

  const int needed[3] = {alpha, alpha + beta, alpha - beta};
  for (int p : needed) {
    if (p < 0 && d.cwiseAbs().minCoeff() < 1e-12) {
      throw std::invalid_argument("quadratic_power_inequality: negative power of a singular matrix");
    }
  }

  // w^T A^p w = sum_i d_i^p y_i^2 in the eigenbasis.
  const auto form = [&](int p) {
    double s = 0.0;
    for (Eigen::Index i = 0; i < d.size(); ++i) {
      s += scalar::powi(d(i), p) * y(i) * y(i);
    }
    return s;
  };

  PowerInequalityResult r;
  const double qa = form(alpha);
  r.lhs = qa * qa;
  r.rhs = form(alpha + beta) * form(alpha - beta);
  return r;
}

QuadraticSpec QuadraticSpec::from_a(const Eigen::Matrix2d& A) {
  if (!A.isApprox(A.transpose(), 1e-12)) {
    throw std::invalid_argument("QuadraticSpec: A must be symmetric");
  }
  const Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(A);
  if (es.eigenvalues().minCoeff() <= 0.0) {
    throw std::invalid_argument("QuadraticSpec: A must be positive definite");
  }
  QuadraticSpec s;
  s.A = A;
  s.lambda = es.eigenvalues();
  s.B = es.eigenvectors() * es.eigenvalues().cwiseSqrt().asDiagonal() *
        es.eigenvectors().transpose();
  return s;
}

QuadraticSpec QuadraticSpec::from_b(const Eigen::Matrix2d& B) {
  if (!B.isApprox(B.transpose(), 1e-12)) {
    throw std::invalid_argument("QuadraticSpec: B must be symmetric");
  }
  const Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(B);
  if (es.eigenvalues().minCoeff() <= 0.0) {
    throw std::invalid_argument("QuadraticSpec: B must be positive definite");
  }
  QuadraticSpec s;
  s.B = B;
  s.A = B * B;
  s.lambda = es.eigenvalues().cwiseAbs2();
  return s;
}

QuadraticSpec QuadraticSpec::from_task(const tasks::Task& task) {
  if (!task.is_ellipse() || task.ellipse().b.norm() != 0.0) {
    throw std::invalid_argument("QuadraticSpec: task must be a centered ellipse");
  }
  const Eigen::Matrix2d& M = task.ellipse().A;
  return from_a(M.transpose() * M);
}

double theta_grad_closed_form(const QuadraticSpec& spec, double alpha,
                              const Eigen::Vector2d& x) {
  const Eigen::Matrix2d M =
      (Eigen::Matrix2d::Identity() - 2.0 * alpha * spec.A) *
      (Eigen::Matrix2d::Identity() - 2.0 * alpha * spec.A);
  const Eigen::Vector2d bx = spec.B * x;
  const Eigen::Vector2d rot(-bx(1), bx(0));  // R_{pi/2} B x
  return 2.0 * bx.dot(M * rot);
}

namespace {

// One step on the tape: returns x_{t+1} values and d f(x_{t+1}) / d theta_t.
struct TeleportGdStep {
  Eigen::Vector2d x_next;
  double dtheta;
};

TeleportGdStep learned_teleport_step(const QuadraticSpec& spec, const Eigen::Vector2d& x, double theta,
                   double alpha) {
  using ad::Value;
  ad::Tape tape;
  const Value th = ad::make_var(tape, theta);
  const Value c = ad::cos(th);
  const Value s = ad::sin(th);

  const Eigen::Matrix2d Binv = spec.B.inverse();
  const Eigen::Vector2d bx = spec.B * x;

  // y = B^-1 R_theta (B x)
  const Value u0 = c * bx(0) - s * bx(1);
  const Value u1 = s * bx(0) + c * bx(1);
  const Value y0 = Binv(0, 0) * u0 + Binv(0, 1) * u1;
  const Value y1 = Binv(1, 0) * u0 + Binv(1, 1) * u1;

  // x' = y - alpha * 2 A y
  const Value g0 = 2.0 * (spec.A(0, 0) * y0 + spec.A(0, 1) * y1);
  const Value g1 = 2.0 * (spec.A(1, 0) * y0 + spec.A(1, 1) * y1);
  const Value x0n = y0 - alpha * g0;
  const Value x1n = y1 - alpha * g1;

  // f(x') = x'^T A x'
  const Value f = x0n * (spec.A(0, 0) * x0n + spec.A(0, 1) * x1n) +
                  x1n * (spec.A(1, 0) * x0n + spec.A(1, 1) * x1n);

  const std::vector<double> adj = tape.backward(f.id);
  return {Eigen::Vector2d(x0n.val(), x1n.val()), adj[static_cast<std::size_t>(th.id)]};
}

}  // namespace

optim::Trajectory run_learned_teleport_gd(const QuadraticSpec& spec, const Eigen::Vector2d& x0, double theta0,
                           double alpha, double beta, int steps) {
  if (!(alpha > 0.0)) throw std::invalid_argument("run_learned_teleport_gd: alpha must be positive");
  if (!(beta > 0.0)) throw std::invalid_argument("run_learned_teleport_gd: beta must be positive");

  const auto record = [&](int t, const Eigen::Vector2d& x, double theta) {
    optim::TrajectoryRecord r;
    r.step = t;
    r.x = x;
    r.f = x.dot(spec.A * x);
    r.grad_norm = (2.0 * spec.A * x).norm();
    r.theta = theta;
    return r;
  };

  optim::Trajectory traj;
  traj.meta = {0, "learned_teleport_gd", {{"alpha", alpha}, {"beta", beta}, {"theta0", theta0}}};
  Eigen::Vector2d x = x0;
  double theta = theta0;
  traj.records.push_back(record(0, x, theta));
  for (int t = 1; t <= steps; ++t) {
    const TeleportGdStep s = learned_teleport_step(spec, x, theta, alpha);
    x = s.x_next;
    theta = theta - beta * s.dtheta;
    traj.records.push_back(record(t, x, theta));
    if (traj.records.back().f > optim::kDivergenceGuard) {
      throw DivergenceError("run_learned_teleport_gd: objective exceeded divergence guard at step " +
                            std::to_string(t));
    }
  }
  return traj;
}

optim::Trajectory run_learned_teleport_gd(const tasks::Task& task, const Eigen::Vector2d& x0, double theta0,
                           double alpha, double beta, int steps) {
  optim::Trajectory traj = run_learned_teleport_gd(QuadraticSpec::from_task(task), x0, theta0, alpha, beta, steps);
  traj.meta.task_seed = task.seed;
  return traj;
}

}  // namespace teleopt::theory
