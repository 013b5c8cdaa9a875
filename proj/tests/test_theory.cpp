#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>

#include "support/oracles.hpp"
#include "teleopt/optim.hpp"
#include "teleopt/theory.hpp"

using namespace teleopt;
using Eigen::Matrix2d;
using Eigen::MatrixXd;
using Eigen::Vector2d;
using Eigen::VectorXd;

namespace {

MatrixXd random_pd(int n, Rng& rng) {
  MatrixXd m(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) m(i, j) = rng.normal();
  }
  return m.transpose() * m + 0.1 * MatrixXd::Identity(n, n);
}

}  // namespace

TEST_CASE("newton decomposition hand example") {
  // f = x^T diag(1,4) x at (1,1): grad = (2,8), H = diag(2,8).
  VectorXd grad(2);
  grad << 2.0, 8.0;
  MatrixXd hess(2, 2);
  hess << 2.0, 0.0, 0.0, 8.0;
  const theory::NewtonDecomposition d = theory::newton_decompose(grad, hess);
  CHECK(d.v2(0) == doctest::Approx(-1.0).epsilon(1e-14));
  CHECK(d.v2(1) == doctest::Approx(-1.0).epsilon(1e-14));
  CHECK(d.v_perp(0) == doctest::Approx(-12.0 / 17.0).epsilon(1e-14));
  CHECK(d.v_perp(1) == doctest::Approx(3.0 / 17.0).epsilon(1e-14));
  CHECK((d.v_par + d.v_perp - d.v2).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("isotropic Hessian makes Newton parallel to the gradient") {
  VectorXd grad(3);
  grad << 1.0, -2.0, 0.5;
  const MatrixXd hess = 3.0 * MatrixXd::Identity(3, 3);
  const theory::NewtonDecomposition d = theory::newton_decompose(grad, hess);
  CHECK(d.v_perp.norm() <= 1e-14);
}

TEST_CASE("v_perp is orthogonal to v1 on random PD systems") {
  Rng rng(19);
  for (int i = 0; i < 1000; ++i) {
    const int n = 2 + i % 4;
    const MatrixXd a = random_pd(n, rng);
    VectorXd x(n);
    for (int k = 0; k < n; ++k) x(k) = rng.normal();
    const VectorXd grad = 2.0 * a * x;
    if (grad.norm() < 1e-12) continue;
    const theory::NewtonDecomposition d = theory::newton_decompose(grad, 2.0 * a);
    CHECK(std::abs(d.v_perp.dot(d.v1)) <= 1e-10 * (1.0 + d.v1.norm() * d.v_perp.norm()));
  }
}

TEST_CASE("newton_decompose rejects bad inputs") {
  VectorXd zero = VectorXd::Zero(2);
  VectorXd grad(2);
  grad << 1.0, 1.0;
  CHECK_THROWS_AS(theory::newton_decompose(zero, MatrixXd::Identity(2, 2)),
                  theory::DecompositionError);
  MatrixXd singular(2, 2);
  singular << 1.0, 1.0, 1.0, 1.0;
  CHECK_THROWS_AS(theory::newton_decompose(grad, singular), theory::DecompositionError);
}

TEST_CASE("newton-perp directional derivative hand value 288/17") {
  VectorXd grad(2);
  grad << 2.0, 8.0;
  MatrixXd hess(2, 2);
  hess << 2.0, 0.0, 0.0, 8.0;
  const theory::NewtonDecomposition d = theory::newton_decompose(grad, hess);
  const double dd = theory::grad_norm_directional_derivative(grad, hess, d.v_perp);
  CHECK(dd == doctest::Approx(288.0 / 17.0).epsilon(1e-12));

  // Independent route: finite difference of ||grad f||^2 along v_perp for
  // f = x^T diag(1,4) x at (1,1).
  const auto grad_norm_sq = [](const std::vector<double>& p) {
    const double gx = 2.0 * p[0];
    const double gy = 8.0 * p[1];
    return gx * gx + gy * gy;
  };
  const double eps = 1e-6;
  const VectorXd dir = d.v_perp;
  const double hi = grad_norm_sq({1.0 + eps * dir(0), 1.0 + eps * dir(1)});
  const double lo = grad_norm_sq({1.0 - eps * dir(0), 1.0 - eps * dir(1)});
  CHECK(oracles::rel_err((hi - lo) / (2.0 * eps), dd) <= 1e-8);
}

TEST_CASE("newton-perp directional derivative vanishes for isotropic quadratics") {
  VectorXd grad(2);
  grad << 3.0, -1.0;
  const MatrixXd hess = 5.0 * MatrixXd::Identity(2, 2);
  const theory::NewtonDecomposition d = theory::newton_decompose(grad, hess);
  CHECK(theory::grad_norm_directional_derivative(grad, hess, d.v_perp) ==
        doctest::Approx(0.0).epsilon(1e-14));
}

TEST_CASE("gradient norm never decreases along the Newton-perp direction") {
  Rng rng(23);
  for (int i = 0; i < 1000; ++i) {
    const int n = 2 + i % 4;
    const MatrixXd a = random_pd(n, rng);
    VectorXd x(n);
    for (int k = 0; k < n; ++k) x(k) = rng.normal();
    const VectorXd grad = 2.0 * a * x;
    if (grad.norm() < 1e-10) continue;
    const MatrixXd hess = 2.0 * a;
    const theory::NewtonDecomposition d = theory::newton_decompose(grad, hess);
    const double dd = theory::grad_norm_directional_derivative(grad, hess, d.v_perp);
    const Eigen::SelfAdjointEigenSolver<MatrixXd> es(hess);
    const double scale = grad.squaredNorm() * es.eigenvalues().cwiseAbs().maxCoeff();
    CHECK(dd >= -1e-8 * scale);
  }
}

TEST_CASE("power inequality fails on an indefinite matrix") {
  VectorXd w(2);
  w << 1.0, 3.0;
  MatrixXd a(2, 2);
  a << 1.0, 0.0, 0.0, -2.0;
  const theory::PowerInequalityResult r = theory::quadratic_power_inequality(w, a, 0, 1);
  CHECK(r.lhs == 100.0);
  CHECK(r.rhs == doctest::Approx(59.5).epsilon(1e-14));  // (-3.5) * (-17)
  CHECK(r.lhs > r.rhs);
  CHECK(!r.holds());
}

TEST_CASE("power inequality is tight at beta = 0") {
  Rng rng(29);
  for (int i = 0; i < 50; ++i) {
    const int n = 2 + i % 4;
    const MatrixXd a = random_pd(n, rng);
    VectorXd w(n);
    for (int k = 0; k < n; ++k) w(k) = rng.normal();
    const int alpha = rng.uniform_int(-2, 2);
    const theory::PowerInequalityResult r = theory::quadratic_power_inequality(w, a, alpha, 0);
    CHECK(r.lhs == r.rhs);
  }
}

TEST_CASE("power inequality holds for PD matrices") {
  Rng rng(31);
  for (int i = 0; i < 2000; ++i) {
    const int n = 2 + i % 4;
    const MatrixXd a = random_pd(n, rng);
    VectorXd w(n);
    for (int k = 0; k < n; ++k) w(k) = rng.normal();
    const theory::PowerInequalityResult r =
        theory::quadratic_power_inequality(w, a, rng.uniform_int(-2, 2), rng.uniform_int(-2, 2));
    CHECK(r.holds(1e-9));
  }
}

TEST_CASE("power inequality input validation") {
  VectorXd w(2);
  w << 1.0, 1.0;
  MatrixXd asym(2, 2);
  asym << 1.0, 2.0, 0.0, 1.0;
  CHECK_THROWS_AS(theory::quadratic_power_inequality(w, asym, 0, 1), std::invalid_argument);
  MatrixXd singular(2, 2);
  singular << 1.0, 0.0, 0.0, 0.0;
  CHECK_THROWS_AS(theory::quadratic_power_inequality(w, singular, -1, 0), std::invalid_argument);
}

TEST_CASE("quadratic spec square root") {
  Matrix2d a;
  a << 2.0, 1.0, 1.0, 3.0;
  const theory::QuadraticSpec spec = theory::QuadraticSpec::from_a(a);
  CHECK((spec.B * spec.B - a).cwiseAbs().maxCoeff() <= 1e-12);
  CHECK(spec.B.isApprox(spec.B.transpose()));
  const Eigen::SelfAdjointEigenSolver<Matrix2d> es(spec.B);
  CHECK(es.eigenvalues().minCoeff() > 0.0);

  Matrix2d not_pd;
  not_pd << 1.0, 0.0, 0.0, -1.0;
  CHECK_THROWS_AS(theory::QuadraticSpec::from_a(not_pd), std::invalid_argument);
}

TEST_CASE("closed-form theta gradient: worked value and finite differences") {
  Matrix2d b;
  b << 1.0, 0.0, 0.0, 2.0;
  const theory::QuadraticSpec spec = theory::QuadraticSpec::from_b(b);
  const double cf = theory::theta_grad_closed_form(spec, 0.1, Vector2d(1.0, 1.0));
  CHECK(cf == doctest::Approx(-2.4).epsilon(1e-12));

  // Oracle: central difference of theta -> f((B^-1 - 2 a B) R_theta B x).
  Rng rng(37);
  for (int i = 0; i < 200; ++i) {
    Matrix2d m;
    m << rng.normal(), rng.normal(), rng.normal(), rng.normal();
    const theory::QuadraticSpec s =
        theory::QuadraticSpec::from_a(m.transpose() * m + 0.05 * Matrix2d::Identity());
    const double alpha = rng.uniform(0.01, 0.8);
    const Vector2d x(rng.normal(), rng.normal());
    const Matrix2d c = s.B.inverse() - 2.0 * alpha * s.B;
    const auto phi = [&](double theta) {
      Matrix2d rot;
      rot << std::cos(theta), -std::sin(theta), std::sin(theta), std::cos(theta);
      const Vector2d z = c * rot * s.B * x;
      return z.dot(s.A * z);
    };
    const double eps = 1e-5;
    const double fd = (phi(eps) - phi(-eps)) / (2.0 * eps);
    CHECK(oracles::rel_err(theory::theta_grad_closed_form(s, alpha, x), fd) <= 1e-6);
  }
}

TEST_CASE("theta gradient vanishes on the principal axes") {
  Matrix2d b;
  b << 1.0, 0.0, 0.0, 2.0;
  const theory::QuadraticSpec spec = theory::QuadraticSpec::from_b(b);
  CHECK(theory::theta_grad_closed_form(spec, 0.1, Vector2d(1.5, 0.0)) == 0.0);
  CHECK(theory::theta_grad_closed_form(spec, 0.1, Vector2d(0.0, -0.7)) == 0.0);
}

TEST_CASE("run_learned_teleport_gd with Bx on an eigen-axis reduces to plain GD") {
  const tasks::Task task{tasks::fixed_ellipse_params(), Vector2d::Zero(), 0};
  const theory::QuadraticSpec spec = theory::QuadraticSpec::from_task(task);
  const double alpha = 1.0 / (2.0 * spec.lambda.maxCoeff());
  const Vector2d x0(1.7, 0.0);  // B x0 on the first axis
  const optim::Trajectory alg2 = theory::run_learned_teleport_gd(spec, x0, 0.0, alpha, 0.05, 30);
  const optim::Trajectory gd = optim::run_gd(task, x0, alpha, 30);
  for (std::size_t t = 0; t < alg2.records.size(); ++t) {
    CHECK(*alg2.records[t].theta == 0.0);
    CHECK((alg2.records[t].x - gd.records[t].x).cwiseAbs().maxCoeff() <= 1e-12);
  }
}

TEST_CASE("run_learned_teleport_gd beats plain GD on the fixed ellipse") {
  const tasks::Task task{tasks::fixed_ellipse_params(), Vector2d::Zero(), 0};
  const theory::QuadraticSpec spec = theory::QuadraticSpec::from_task(task);
  const double alpha = 1.0 / (2.0 * spec.lambda.maxCoeff());
  Rng rng(41);
  int wins = 0;
  for (int i = 0; i < 20; ++i) {
    const Vector2d x0(rng.normal(), rng.normal());
    const optim::Trajectory alg2 = theory::run_learned_teleport_gd(spec, x0, 0.0, alpha, 0.05, 50);
    const optim::Trajectory gd = optim::run_gd(task, x0, alpha, 50);
    if (alg2.final_f() < gd.final_f()) ++wins;
  }
  CHECK(wins >= 18);
}

TEST_CASE("run_learned_teleport_gd guards against divergence") {
  const tasks::Task task{tasks::fixed_ellipse_params(), Vector2d::Zero(), 0};
  const theory::QuadraticSpec spec = theory::QuadraticSpec::from_task(task);
  // A step size far past 2/L blows up the quadratic.
  CHECK_THROWS_AS(theory::run_learned_teleport_gd(spec, Vector2d(5.0, 5.0), 0.0, 1.0, 0.05, 200),
                  DivergenceError);
}

TEST_CASE("run_learned_teleport_gd rejects non-centered tasks") {
  tasks::Task task{tasks::booth_params(), Vector2d::Zero(), 0};
  CHECK_THROWS_AS(theory::run_learned_teleport_gd(task, Vector2d(1.0, 1.0), 0.0, 0.1, 0.05, 5),
                  std::invalid_argument);
}
