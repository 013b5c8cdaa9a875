#include "teleopt/verify.hpp"

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <numbers>

#include <nlohmann/json.hpp>

#include "teleopt/autodiff.hpp"
#include "teleopt/meta.hpp"
#include "teleopt/optim.hpp"
#include "teleopt/rng.hpp"
#include "teleopt/symmetry.hpp"
#include "teleopt/tasks.hpp"
#include "teleopt/theory.hpp"

namespace teleopt::verify {

namespace {

constexpr double kPi = std::numbers::pi;

Eigen::Vector2d rotation_apply(double theta, const Eigen::Vector2d& v) {
  return {std::cos(theta) * v(0) - std::sin(theta) * v(1),
          std::sin(theta) * v(0) + std::cos(theta) * v(1)};
}

// Random symmetric PD matrix with log-uniform eigenvalue spread.
Eigen::MatrixXd random_pd(int n, Rng& rng) {
  Eigen::MatrixXd m(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) m(i, j) = rng.normal();
  }
  const Eigen::HouseholderQR<Eigen::MatrixXd> qr(m);
  const Eigen::MatrixXd q = qr.householderQ();
  Eigen::VectorXd d(n);
  for (int i = 0; i < n; ++i) d(i) = std::exp(rng.uniform(-3.0, 3.0));
  return q * d.asDiagonal() * q.transpose();
}

tasks::Task random_task(tasks::Family family, Rng& rng) {
  tasks::TaskDistribution dist{family, tasks::Mode::kVariable};
  return tasks::sample_task(dist, rng);
}

PropertyResult power_inequality_sweep(const Options& o) {
  PropertyResult r;
  r.name = "power_inequality_sweep";
  r.note = "margin = max (lhs - rhs)/(1+|rhs|); PD matrices n in 2..5, powers in -2..2";
  Rng rng(o.seed ^ 0x1);
  const long n_draws = o.quick ? 1000 : 10000;
  double worst = -1e300;
  for (long i = 0; i < n_draws; ++i) {
    const int n = 2 + static_cast<int>(i % 4);
    const Eigen::MatrixXd a = random_pd(n, rng);
    Eigen::VectorXd w(n);
    for (int k = 0; k < n; ++k) w(k) = rng.normal();
    const int alpha = rng.uniform_int(-2, 2);
    const int beta = rng.uniform_int(-2, 2);
    const theory::PowerInequalityResult res = theory::quadratic_power_inequality(w, a, alpha, beta);
    worst = std::max(worst, (res.lhs - res.rhs) / (1.0 + std::abs(res.rhs)));
    if (!res.holds(1e-9)) ++r.violations;
  }
  r.count = n_draws;
  r.worst_margin = worst;
  r.pass = r.violations == 0;
  return r;
}

PropertyResult power_inequality_counterexample(const Options&) {
  PropertyResult r;
  r.name = "power_inequality_counterexample";
  Eigen::VectorXd w(2);
  w << 1.0, 3.0;
  Eigen::MatrixXd a(2, 2);
  a << 1.0, 0.0, 0.0, -2.0;
  const theory::PowerInequalityResult res = theory::quadratic_power_inequality(w, a, 0, 1);
  r.count = 1;
  r.worst_margin = std::max(std::abs(res.lhs - 100.0), std::abs(res.rhs - 59.5));
  const bool violated = res.lhs > res.rhs;
  r.pass = r.worst_margin <= 1e-12 && violated;
  if (!r.pass) ++r.violations;
  r.note = "indefinite A: lhs=" + std::to_string(res.lhs) + " rhs=" + std::to_string(res.rhs) +
           " (expect 100 > 59.5)";
  return r;
}

PropertyResult newton_perp_sweep(const Options& o) {
  PropertyResult r;
  r.name = "newton_perp_grad_norm_sweep";
  r.note = "margin = min of (v_perp . 2H grad)/(|grad|^2 |H|); must be >= -1e-8";
  Rng rng(o.seed ^ 0x2);
  const long n_draws = o.quick ? 200 : 1000;
  double worst = 1e300;
  long checked = 0;
  for (long i = 0; i < n_draws; ++i) {
    const int n = 2 + static_cast<int>(i % 4);
    const Eigen::MatrixXd a = random_pd(n, rng);
    Eigen::VectorXd x(n);
    for (int k = 0; k < n; ++k) x(k) = rng.normal();
    const Eigen::VectorXd grad = 2.0 * a * x;
    if (grad.norm() == 0.0) continue;
    const Eigen::MatrixXd hess = 2.0 * a;
    theory::NewtonDecomposition d;
    try {
      d = theory::newton_decompose(grad, hess);
    } catch (const theory::DecompositionError&) {
      continue;  // near-singular draw; outside the property's precondition
    }
    const double dd = theory::grad_norm_directional_derivative(grad, hess, d.v_perp);
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(hess);
    const double scale = grad.squaredNorm() * es.eigenvalues().cwiseAbs().maxCoeff();
    ++checked;
    worst = std::min(worst, dd / scale);
    if (dd < -1e-8 * scale) ++r.violations;
  }
  r.count = checked;
  r.worst_margin = worst;
  r.pass = r.violations == 0 && checked > 0;
  return r;
}

PropertyResult newton_perp_hand_value(const Options&) {
  PropertyResult r;
  r.name = "newton_perp_hand_value";
  r.note = "A=diag(1,4), x=(1,1): directional derivative must equal 288/17";
  Eigen::VectorXd grad(2);
  grad << 2.0, 8.0;
  Eigen::MatrixXd hess(2, 2);
  hess << 2.0, 0.0, 0.0, 8.0;
  const theory::NewtonDecomposition d = theory::newton_decompose(grad, hess);
  const double dd = theory::grad_norm_directional_derivative(grad, hess, d.v_perp);
  r.count = 1;
  r.worst_margin = std::abs(dd - 288.0 / 17.0);
  r.pass = r.worst_margin <= 1e-10;
  if (!r.pass) ++r.violations;
  return r;
}

// Central finite difference of theta -> f((B^-1 - 2 alpha B) R_theta B x).
double theta_grad_fd_oracle(const theory::QuadraticSpec& spec, double alpha,
                            const Eigen::Vector2d& x, double eps) {
  const Eigen::Matrix2d c = spec.B.inverse() - 2.0 * alpha * spec.B;
  const auto phi = [&](double theta) {
    Eigen::Matrix2d rot;
    rot << std::cos(theta), -std::sin(theta), std::sin(theta), std::cos(theta);
    const Eigen::Vector2d z = c * rot * spec.B * x;
    return z.dot(spec.A * z);
  };
  return (phi(eps) - phi(-eps)) / (2.0 * eps);
}

theory::QuadraticSpec random_quadratic(Rng& rng) {
  Eigen::Matrix2d m;
  m << rng.normal(), rng.normal(), rng.normal(), rng.normal();
  Eigen::Matrix2d a = m.transpose() * m + 0.05 * Eigen::Matrix2d::Identity();
  return theory::QuadraticSpec::from_a(a);
}

PropertyResult theta_grad_fd(const Options& o) {
  PropertyResult r;
  r.name = "theta_grad_closed_form_vs_fd";
  r.note = "margin = max |closed - fd| / (1 + |fd|) at theta=0";
  Rng rng(o.seed ^ 0x3);
  const long n_draws = o.quick ? 200 : 1000;
  double worst = 0.0;
  for (long i = 0; i < n_draws; ++i) {
    const theory::QuadraticSpec spec = random_quadratic(rng);
    const double alpha = rng.uniform(0.001, 1.0);
    const Eigen::Vector2d x(rng.normal(), rng.normal());
    const double cf = theory::theta_grad_closed_form(spec, alpha, x);
    const double fd = theta_grad_fd_oracle(spec, alpha, x, 1e-5);
    const double err = std::abs(cf - fd) / (1.0 + std::abs(fd));
    worst = std::max(worst, err);
    if (err > 1e-6) ++r.violations;
  }
  r.count = n_draws;
  r.worst_margin = worst;
  r.pass = r.violations == 0;
  return r;
}

PropertyResult theta_grad_worked(const Options&) {
  PropertyResult r;
  r.name = "theta_grad_worked_value";
  r.note = "B=diag(1,2), alpha=0.1, x=(1,1) must give -2.4";
  Eigen::Matrix2d b;
  b << 1.0, 0.0, 0.0, 2.0;
  const theory::QuadraticSpec spec = theory::QuadraticSpec::from_b(b);
  const double cf = theory::theta_grad_closed_form(spec, 0.1, Eigen::Vector2d(1.0, 1.0));
  r.count = 1;
  r.worst_margin = std::abs(cf - (-2.4));
  r.pass = r.worst_margin <= 1e-9;
  if (!r.pass) ++r.violations;
  return r;
}

PropertyResult theta_halfway(const Options&) {
  PropertyResult r;
  r.name = "theta_grad_halfway_maximum";
  r.note = "|dtheta f| over orbit positions peaks within one grid cell of 45 degrees";
  Eigen::Matrix2d b;
  b << 1.0, 0.0, 0.0, 2.0;
  const theory::QuadraticSpec spec = theory::QuadraticSpec::from_b(b);
  const double alpha = 0.1;
  const int grid = 181;  // [0, pi/2]
  double best_psi = 0.0, best_val = -1.0;
  const double radius = 1.5;
  for (int k = 0; k < grid; ++k) {
    const double psi = (kPi / 2.0) * k / (grid - 1);
    const Eigen::Vector2d bx(radius * std::cos(psi), radius * std::sin(psi));
    const Eigen::Vector2d x = spec.B.inverse() * bx;
    const double g = std::abs(theory::theta_grad_closed_form(spec, alpha, x));
    if (g > best_val) {
      best_val = g;
      best_psi = psi;
    }
  }
  const double cell = (kPi / 2.0) / (grid - 1);
  r.count = grid;
  r.worst_margin = std::abs(best_psi - kPi / 4.0);
  r.pass = r.worst_margin <= cell + 1e-12;
  if (!r.pass) ++r.violations;
  return r;
}

PropertyResult theta_direction(const Options& o) {
  PropertyResult r;
  r.name = "theta_update_direction";
  r.note = "a small -beta*grad theta step must not shrink ||grad f|| (alpha <= 1/L)";
  Rng rng(o.seed ^ 0x4);
  const long n_draws = o.quick ? 30 : 100;
  double worst = 1e300;
  for (long i = 0; i < n_draws; ++i) {
    const theory::QuadraticSpec spec = random_quadratic(rng);
    const double lips = 2.0 * spec.lambda.maxCoeff();
    const double alpha = rng.uniform(0.1, 1.0) / lips;
    const Eigen::Vector2d x(rng.normal(), rng.normal());
    if ((spec.B * x).norm() < 1e-3) continue;
    const double g0 = theory::theta_grad_closed_form(spec, alpha, x);
    const double theta_step = -1e-3 * g0 / (1.0 + std::abs(g0));
    const Eigen::Matrix2d binv = spec.B.inverse();
    Eigen::Matrix2d rot;
    rot << std::cos(theta_step), -std::sin(theta_step), std::sin(theta_step),
        std::cos(theta_step);
    const Eigen::Vector2d y = binv * rot * spec.B * x;
    const double before = (2.0 * spec.A * x).norm();
    const double after = (2.0 * spec.A * y).norm();
    const double delta = after - before;
    worst = std::min(worst, delta);
    const double scale = before * spec.lambda.maxCoeff();
    if (delta < -1e-12 || (std::abs(g0) > 1e-4 * scale && !(delta > 0.0))) ++r.violations;
  }
  r.count = n_draws;
  r.worst_margin = worst;
  r.pass = r.violations == 0;
  return r;
}

PropertyResult act_invariance(const Options& o) {
  PropertyResult r;
  r.name = "act_invariance";
  r.note = "margin = max |f(g(x)) - f(x)| / (1 + |f(x)|) over both families";
  Rng rng(o.seed ^ 0x5);
  const long n_draws = o.quick ? 1000 : 10000;
  double worst = 0.0;
  for (long i = 0; i < n_draws; ++i) {
    const tasks::Family fam =
        (i % 2 == 0) ? tasks::Family::kEllipse : tasks::Family::kRosenbrock;
    const tasks::Task task = random_task(fam, rng);
    const Eigen::Vector2d x(rng.normal(), rng.normal());
    const double theta = rng.uniform(-kPi, kPi);
    const double f0 = tasks::eval_f(task, x);
    double f1;
    try {
      f1 = tasks::eval_f(task, sym::act(task, theta, x));
    } catch (const SingularMapError&) {
      continue;
    }
    const double dev = std::abs(f1 - f0) / (1.0 + std::abs(f0));
    worst = std::max(worst, dev);
    if (dev > 1e-8) ++r.violations;
  }
  r.count = n_draws;
  r.worst_margin = worst;
  r.pass = r.violations == 0;
  return r;
}

PropertyResult act_group_law(const Options& o) {
  PropertyResult r;
  r.name = "act_group_law";
  r.note = "act(act(x,t1),t2) == act(x,t1+t2), margin = max coordinate deviation";
  Rng rng(o.seed ^ 0x6);
  const long n_draws = o.quick ? 30 : 100;
  double worst = 0.0;
  for (long i = 0; i < n_draws; ++i) {
    const tasks::Family fam =
        (i % 2 == 0) ? tasks::Family::kEllipse : tasks::Family::kRosenbrock;
    const tasks::Task task = random_task(fam, rng);
    const Eigen::Vector2d x(rng.normal(), rng.normal());
    const double t1 = rng.uniform(-kPi, kPi);
    const double t2 = rng.uniform(-kPi, kPi);
    const Eigen::Vector2d a = sym::act(task, t2, sym::act(task, t1, x));
    const Eigen::Vector2d b = sym::act(task, t1 + t2, x);
    const double dev = (a - b).cwiseAbs().maxCoeff() / (1.0 + b.cwiseAbs().maxCoeff());
    worst = std::max(worst, dev);
    if (dev > 1e-8) ++r.violations;
  }
  r.count = n_draws;
  r.worst_margin = worst;
  r.pass = r.violations == 0;
  return r;
}

PropertyResult oracle_guarantee(const Options& o) {
  PropertyResult r;
  r.name = "teleport_oracle_guarantee";
  r.note = "oracle norm >= ||grad f(x)|| - 1e-9 and >= every grid value";
  Rng rng(o.seed ^ 0x7);
  const long n_draws = o.quick ? 50 : 200;
  double worst = 1e300;
  const sym::OracleSettings settings;
  for (long i = 0; i < n_draws; ++i) {
    const tasks::Family fam =
        (i % 2 == 0) ? tasks::Family::kEllipse : tasks::Family::kRosenbrock;
    const tasks::Task task = random_task(fam, rng);
    const Eigen::Vector2d x(rng.normal(), rng.normal());
    const sym::OracleResult res = sym::teleport_oracle(task, x, settings);
    double grid_max = tasks::grad_f(task, x).norm();
    for (int k = 0; k < settings.grid_n; ++k) {
      const double theta = sym::wrap_angle(2.0 * kPi * k / settings.grid_n);
      try {
        grid_max = std::max(grid_max, sym::grad_norm_on_orbit(task, x, theta));
      } catch (const SingularMapError&) {
      }
    }
    const double margin = res.grad_norm_star - grid_max;
    worst = std::min(worst, margin);
    if (margin < -1e-9) ++r.violations;
  }
  r.count = n_draws;
  r.worst_margin = worst;
  r.pass = r.violations == 0;
  return r;
}

PropertyResult orbit_max_analytic(const Options& o) {
  PropertyResult r;
  r.name = "orbit_max_analytic";
  r.note = "diagonal ellipse: oracle max equals 2 sigma_max ||h(x)||, rel tol 1e-6";
  Rng rng(o.seed ^ 0x8);
  const long n_draws = o.quick ? 50 : 200;
  double worst = 0.0;
  for (long i = 0; i < n_draws; ++i) {
    tasks::AffineMap2 m;
    const double a11 = rng.uniform(0.2, 3.0);
    const double a22 = rng.uniform(0.2, 3.0);
    m.A << a11, 0.0, 0.0, a22;
    m.b << rng.normal(), rng.normal();
    tasks::Task task{m, Eigen::Vector2d::Zero(), 0};
    const Eigen::Vector2d x(rng.normal(), rng.normal());
    const double analytic = 2.0 * std::max(a11, a22) * tasks::h_forward(task, x).norm();
    const sym::OracleResult res = sym::teleport_oracle(task, x);
    const double dev = std::abs(res.grad_norm_star - analytic) / (1.0 + analytic);
    worst = std::max(worst, dev);
    if (dev > 1e-6) ++r.violations;
  }
  r.count = n_draws;
  r.worst_margin = worst;
  r.pass = r.violations == 0;
  return r;
}

PropertyResult descent_lemma(const Options& o) {
  PropertyResult r;
  r.name = "descent_lemma";
  r.note = "ellipse, alpha=1/L: f_{t+1} <= f_t - (alpha/2)||grad||^2 + 1e-10";
  Rng rng(o.seed ^ 0x9);
  const long n_tasks = o.quick ? 30 : 100;
  double worst = -1e300;
  long checked = 0;
  for (long i = 0; i < n_tasks; ++i) {
    const tasks::Task task = random_task(tasks::Family::kEllipse, rng);
    const double alpha = 1.0 / tasks::lipschitz_estimate(task, task.x0);
    const optim::Trajectory traj = optim::run_gd(task, task.x0, alpha, 50);
    for (std::size_t t = 0; t + 1 < traj.records.size(); ++t) {
      const double lhs = traj.records[t + 1].f;
      const double bound = traj.records[t].f -
                           0.5 * alpha * traj.records[t].grad_norm * traj.records[t].grad_norm;
      worst = std::max(worst, lhs - bound);
      ++checked;
      if (lhs > bound + 1e-10) ++r.violations;
    }
  }
  r.count = checked;
  r.worst_margin = worst;
  r.pass = r.violations == 0;
  return r;
}

PropertyResult teleport_step_descent(const Options& o) {
  PropertyResult r;
  r.name = "teleport_step_descent";
  r.note = "one GD step from the teleported point beats any grid orbit point";
  Rng rng(o.seed ^ 0xa);
  const long n_tasks = o.quick ? 20 : 100;
  double worst = -1e300;
  for (long i = 0; i < n_tasks; ++i) {
    const tasks::Task task = random_task(tasks::Family::kEllipse, rng);
    const Eigen::Vector2d x(rng.normal(), rng.normal());
    const double alpha = 1.0 / tasks::lipschitz_estimate(task, x);
    const sym::OracleResult res = sym::teleport_oracle(task, x);
    const Eigen::Vector2d y_star = sym::act(task, res.theta_star, x);
    const Eigen::Vector2d y_next = y_star - alpha * tasks::grad_f(task, y_star);
    const double f_star = tasks::eval_f(task, y_next);
    double f_best = 1e300;
    for (int k = 0; k < 32; ++k) {
      const double theta = sym::wrap_angle(2.0 * kPi * k / 32);
      const Eigen::Vector2d y = sym::act(task, theta, x);
      const Eigen::Vector2d yn = y - alpha * tasks::grad_f(task, y);
      f_best = std::min(f_best, tasks::eval_f(task, yn));
    }
    const double margin = (f_star - f_best) / (1.0 + std::abs(f_best));
    worst = std::max(worst, margin);
    if (margin > 1e-9) ++r.violations;
  }
  r.count = n_tasks;
  r.worst_margin = worst;
  r.pass = r.violations == 0;
  return r;
}

PropertyResult learned_teleport_efficacy(const Options& o) {
  PropertyResult r;
  r.name = "learned_teleport_efficacy";
  Rng rng(o.seed ^ 0xb);
  const long n_seeds = o.quick ? 15 : 50;
  tasks::Task task{tasks::fixed_ellipse_params(), Eigen::Vector2d::Zero(), 0};
  const theory::QuadraticSpec spec = theory::QuadraticSpec::from_task(task);
  const double alpha = 1.0 / (2.0 * spec.lambda.maxCoeff());
  long beats_gd = 0;
  long rotates = 0;
  const Eigen::Index big_axis = spec.lambda(0) > spec.lambda(1) ? 0 : 1;
  // angle to the larger-eigenvalue axis, in B-image coordinates
  const auto axis_angle = [&](const Eigen::Vector2d& bx) {
    const double along = std::abs(bx(big_axis));
    const double across = std::abs(bx(1 - big_axis));
    return std::atan2(across, along);
  };
  for (long i = 0; i < n_seeds; ++i) {
    const Eigen::Vector2d x0(rng.normal(), rng.normal());
    task.x0 = x0;
    const optim::Trajectory alg2 = theory::run_learned_teleport_gd(spec, x0, 0.0, alpha, 0.05, 50);
    const optim::Trajectory gd = optim::run_gd(task, x0, alpha, 50);
    if (alg2.final_f() < gd.final_f()) ++beats_gd;

    // Direction test: each theta update, applied infinitesimally to the Bx it
    // was computed from, must reduce the angle to the larger-eigenvalue axis
    // (a step this large can overshoot the axis, but never points wrong).
    bool signs_ok = true;
    for (std::size_t t = 0; t + 1 < 11 && t + 1 < alg2.records.size(); ++t) {
      const Eigen::Vector2d bx = spec.B * alg2.records[t].x;
      if (bx.norm() < 1e-12) continue;
      const double th = *alg2.records[t].theta;
      const double delta = *alg2.records[t + 1].theta - th;
      if (std::abs(delta) < 1e-15) continue;  // stationary (on-axis)
      const double eps = delta > 0 ? 1e-7 : -1e-7;
      const double before = axis_angle(rotation_apply(th, bx));
      const double nudged = axis_angle(rotation_apply(th + eps, bx));
      if (nudged > before + 1e-15) {
        signs_ok = false;
        break;
      }
    }
    if (signs_ok) ++rotates;
  }
  r.count = n_seeds;
  const double frac_gd = static_cast<double>(beats_gd) / n_seeds;
  const double frac_rot = static_cast<double>(rotates) / n_seeds;
  r.worst_margin = std::min(frac_gd, frac_rot);
  r.note = "beats plain GD: " + std::to_string(frac_gd) +
           ", theta rotates Bx toward larger axis: " + std::to_string(frac_rot) +
           " (both must be >= 0.9)";
  r.pass = frac_gd >= 0.9 && frac_rot >= 0.9;
  if (!r.pass) ++r.violations;
  return r;
}

PropertyResult task_grad_vs_autodiff(const Options& o) {
  PropertyResult r;
  r.name = "task_grad_vs_autodiff";
  r.note = "analytic grad vs tape gradient of eval_f, rel tol 1e-8";
  Rng rng(o.seed ^ 0xc);
  const long n_draws = o.quick ? 30 : 100;
  double worst = 0.0;
  for (long i = 0; i < n_draws; ++i) {
    const tasks::Family fam =
        (i % 2 == 0) ? tasks::Family::kEllipse : tasks::Family::kRosenbrock;
    const tasks::Task task = random_task(fam, rng);
    const Eigen::Vector2d x(rng.normal(), rng.normal());
    ad::Tape tape;
    const tasks::V2<ad::Value> leaves{ad::make_var(tape, x(0)), ad::make_var(tape, x(1))};
    const ad::Value f = tasks::eval_f(task, leaves);
    const std::vector<double> adj = tape.backward(f.id);
    const Eigen::Vector2d analytic = tasks::grad_f(task, x);
    for (int k = 0; k < 2; ++k) {
      const double ad_g = adj[static_cast<std::size_t>(leaves[k].id)];
      const double dev = std::abs(ad_g - analytic(k)) / (1.0 + std::abs(ad_g));
      worst = std::max(worst, dev);
      if (dev > 1e-8) ++r.violations;
    }
  }
  r.count = 2 * n_draws;
  r.worst_margin = worst;
  r.pass = r.violations == 0;
  return r;
}

PropertyResult task_hess_vs_fd(const Options& o) {
  PropertyResult r;
  r.name = "task_hess_vs_fd";
  r.note = "analytic Hessian vs central differences of grad_f, rel tol 1e-5";
  Rng rng(o.seed ^ 0xd);
  const long n_draws = o.quick ? 30 : 100;
  const double eps = 1e-5;
  double worst = 0.0;
  for (long i = 0; i < n_draws; ++i) {
    const tasks::Family fam =
        (i % 2 == 0) ? tasks::Family::kEllipse : tasks::Family::kRosenbrock;
    const tasks::Task task = random_task(fam, rng);
    const Eigen::Vector2d x(rng.normal(), rng.normal());
    const Eigen::Matrix2d h = tasks::hess_f(task, x);
    Eigen::Matrix2d fd;
    for (int c = 0; c < 2; ++c) {
      Eigen::Vector2d dx = Eigen::Vector2d::Zero();
      dx(c) = eps;
      fd.col(c) = (tasks::grad_f(task, x + dx) - tasks::grad_f(task, x - dx)) / (2.0 * eps);
    }
    const double dev = (fd - h).cwiseAbs().maxCoeff() / (1.0 + h.cwiseAbs().maxCoeff());
    worst = std::max(worst, dev);
    if (dev > 1e-5) ++r.violations;
  }
  r.count = n_draws;
  r.worst_margin = worst;
  r.pass = r.violations == 0;
  return r;
}

PropertyResult round_trip(const Options& o) {
  PropertyResult r;
  r.name = "h_inverse_round_trip";
  r.note = "h_inverse(h_forward(x)) = x within 1e-10 absolute";
  Rng rng(o.seed ^ 0xe);
  const long n_draws = o.quick ? 200 : 1000;
  double worst = 0.0;
  for (long i = 0; i < n_draws; ++i) {
    const tasks::Family fam =
        (i % 2 == 0) ? tasks::Family::kEllipse : tasks::Family::kRosenbrock;
    const tasks::Task task = random_task(fam, rng);
    const Eigen::Vector2d x(rng.normal(), rng.normal());
    const Eigen::Vector2d back = tasks::h_inverse(task, tasks::h_forward(task, x));
    const double dev = (back - x).cwiseAbs().maxCoeff();
    worst = std::max(worst, dev);
    if (dev > 1e-10) ++r.violations;
  }
  r.count = n_draws;
  r.worst_margin = worst;
  r.pass = r.violations == 0;
  return r;
}

PropertyResult autodiff_fd(const Options& o) {
  PropertyResult r;
  r.name = "autodiff_vs_fd";
  r.note = "random composites over the op set vs central differences, tol 1e-4";
  Rng rng(o.seed ^ 0xf);
  const long n_draws = o.quick ? 30 : 100;
  double worst = 0.0;
  for (long i = 0; i < n_draws; ++i) {
    const long salt = i;
    const ad::GraphBuilder builder = [salt](ad::Tape&,
                                            std::span<const ad::Value> leaves) -> ad::Value {
      ad::Value acc = leaves[0];
      Rng op_rng(static_cast<std::uint64_t>(salt) * 1000003ULL + 17);
      for (const ad::Value& leaf : leaves) {
        switch (op_rng.uniform_int(0, 6)) {
          case 0: acc = acc + sin(leaf); break;
          case 1: acc = acc * cos(leaf); break;
          case 2: acc = acc - tanh(leaf * 0.5); break;
          case 3: acc = acc + sigmoid(leaf) * leaf; break;
          case 4: acc = acc + sqr(leaf) * 0.25; break;
          case 5: acc = acc / (2.0 + sqr(sigmoid(leaf))); break;
          default: acc = acc + exp(leaf * 0.1); break;
        }
      }
      return acc + ln(1.0 + sqr(acc)) + powi(acc, 3) * 0.01;
    };
    std::vector<double> point(5);
    for (double& p : point) p = rng.normal();
    const double err = ad::grad_check(builder, point, 1e-5);
    worst = std::max(worst, err);
    if (err > 1e-4) ++r.violations;
  }
  r.count = n_draws;
  r.worst_margin = worst;
  r.pass = r.violations == 0;
  return r;
}

PropertyResult meta_grad_fd(const Options& o) {
  PropertyResult r;
  r.name = "meta_grad_vs_fd";
  r.note = "unrolled 3-step meta-gradient vs central differences, tol 1e-4";
  const long per_variant = o.quick ? 6 : 12;
  double worst = 0.0;
  long checked = 0;
  for (meta::Variant variant :
       {meta::Variant::kVanilla, meta::Variant::kTeleport, meta::Variant::kTeleportMomentum}) {
    meta::L2OConfig config;
    config.variant = variant;
    config.hidden_dim = 4;
    config.epochs = 3;
    config.unroll = 3;
    config.runs = 1;
    meta::MetaOptimizer opt = meta::init_meta_optimizer(config, o.seed ^ 0x10);
    Rng perturb(o.seed ^ 0x11);
    for (double& p : opt.m1.phi) p += 0.1 * perturb.normal();
    if (opt.m2) {
      for (double& p : opt.m2->phi) p += 0.1 * perturb.normal();
    }
    Rng task_rng(o.seed ^ 0x12);
    const tasks::Task task = tasks::sample_task(
        tasks::TaskDistribution{tasks::Family::kEllipse, tasks::Mode::kFixed}, task_rng);
    const std::vector<double> weights(3, 1.0);
    const meta::CarriedState cs = meta::initial_state(opt, task);
    const meta::WindowResult base = meta::run_window(opt, task, cs, 1, 3, weights, true);

    Rng pick(o.seed ^ 0x13);
    const double eps = 1e-6;
    for (long k = 0; k < per_variant; ++k) {
      const bool second = opt.m2 && (k % 2 == 1);
      std::vector<double>& phi = second ? opt.m2->phi : opt.m1.phi;
      const std::vector<double>& grad = second ? base.grad2 : base.grad1;
      const std::size_t idx = static_cast<std::size_t>(
          pick.uniform_int(0, static_cast<int>(phi.size()) - 1));
      const double keep = phi[idx];
      phi[idx] = keep + eps;
      const double hi = meta::run_window(opt, task, cs, 1, 3, weights, false).loss;
      phi[idx] = keep - eps;
      const double lo = meta::run_window(opt, task, cs, 1, 3, weights, false).loss;
      phi[idx] = keep;
      const double fd = (hi - lo) / (2.0 * eps);
      const double err = std::abs(grad[idx] - fd) / (1.0 + std::abs(fd));
      worst = std::max(worst, err);
      ++checked;
      if (err > 1e-4) ++r.violations;
    }
  }
  r.count = checked;
  r.worst_margin = worst;
  r.pass = r.violations == 0;
  return r;
}

PropertyResult identity_start(const Options& o) {
  PropertyResult r;
  r.name = "identity_start";
  r.note = "untrained Vanilla/Teleport keep x0 fixed; initial loss = sum_t f(x0)";
  Rng task_rng(o.seed ^ 0x14);
  const tasks::Task task = tasks::sample_task(
      tasks::TaskDistribution{tasks::Family::kEllipse, tasks::Mode::kFixed}, task_rng);
  double worst = 0.0;
  const int n_steps = 7;
  for (meta::Variant variant : {meta::Variant::kVanilla, meta::Variant::kTeleport}) {
    meta::L2OConfig config;
    config.variant = variant;
    config.hidden_dim = 8;
    config.epochs = n_steps;
    config.unroll = n_steps;
    const meta::MetaOptimizer opt = meta::init_meta_optimizer(config, o.seed ^ 0x15);
    const optim::Trajectory traj = meta::evaluate_one(opt, task, n_steps);
    for (const optim::TrajectoryRecord& rec : traj.records) {
      worst = std::max(worst, (rec.x - task.x0).cwiseAbs().maxCoeff());
    }
    const double loss = meta::meta_loss(opt, task, n_steps);
    const double expect = n_steps * tasks::eval_f(task, task.x0);
    worst = std::max(worst, std::abs(loss - expect) / (1.0 + expect));
  }
  r.count = 2;
  r.worst_margin = worst;
  r.pass = worst <= 1e-12;
  if (!r.pass) ++r.violations;
  return r;
}

}  // namespace

std::vector<PropertyResult> run_all(const Options& opts) {
  std::vector<PropertyResult> out;
  out.push_back(power_inequality_sweep(opts));
  out.push_back(power_inequality_counterexample(opts));
  out.push_back(newton_perp_sweep(opts));
  out.push_back(newton_perp_hand_value(opts));
  out.push_back(theta_grad_fd(opts));
  out.push_back(theta_grad_worked(opts));
  out.push_back(theta_halfway(opts));
  out.push_back(theta_direction(opts));
  out.push_back(act_invariance(opts));
  out.push_back(act_group_law(opts));
  out.push_back(oracle_guarantee(opts));
  out.push_back(orbit_max_analytic(opts));
  out.push_back(descent_lemma(opts));
  out.push_back(teleport_step_descent(opts));
  out.push_back(learned_teleport_efficacy(opts));
  out.push_back(task_grad_vs_autodiff(opts));
  out.push_back(task_hess_vs_fd(opts));
  out.push_back(round_trip(opts));
  out.push_back(autodiff_fd(opts));
  out.push_back(meta_grad_fd(opts));
  out.push_back(identity_start(opts));
  return out;
}

bool all_pass(const std::vector<PropertyResult>& results) {
  return std::all_of(results.begin(), results.end(),
                     [](const PropertyResult& r) { return r.pass; });
}

std::string report_json(const std::vector<PropertyResult>& results) {
  nlohmann::json j;
  j["schema"] = "teleopt-verify-v1";
  j["pass"] = all_pass(results);
  nlohmann::json props = nlohmann::json::array();
  for (const PropertyResult& r : results) {
    props.push_back({{"name", r.name},
                     {"count", r.count},
                     {"violations", r.violations},
                     {"worst_margin", r.worst_margin},
                     {"pass", r.pass},
                     {"note", r.note}});
  }
  j["properties"] = props;
  return j.dump(2);
}

}  // namespace teleopt::verify
