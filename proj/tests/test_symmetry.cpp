#include <doctest.h>

#include <cmath>
#include <numbers>

#include "support/oracles.hpp"
#include "teleopt/symmetry.hpp"

using namespace teleopt;
using Eigen::Vector2d;

namespace {

constexpr double kPi = std::numbers::pi;

tasks::Task fixed_ellipse() { return {tasks::fixed_ellipse_params(), Vector2d::Zero(), 0}; }

tasks::Task random_variable_task(tasks::Family fam, std::uint64_t seed) {
  Rng rng(seed);
  return tasks::sample_task({fam, tasks::Mode::kVariable}, rng);
}

}  // namespace

TEST_CASE("wrap_angle lands in (-pi, pi]") {
  CHECK(sym::wrap_angle(0.0) == 0.0);
  CHECK(sym::wrap_angle(kPi) == doctest::Approx(kPi));
  CHECK(sym::wrap_angle(-kPi) == doctest::Approx(kPi));
  CHECK(sym::wrap_angle(3.0 * kPi) == doctest::Approx(kPi));
  CHECK(sym::wrap_angle(2.0 * kPi + 0.25) == doctest::Approx(0.25));
  for (double raw : {-17.0, -4.0, 0.3, 9.9, 100.0}) {
    const double w = sym::wrap_angle(raw);
    CHECK(w > -kPi);
    CHECK(w <= kPi);
  }
}

TEST_CASE("group element composition wraps") {
  const sym::GroupElement a = sym::GroupElement::from(3.0);
  const sym::GroupElement b = sym::GroupElement::from(1.5);
  CHECK(a.compose(b).theta == doctest::Approx(sym::wrap_angle(4.5)));
}

TEST_CASE("theta=0 acts as the identity") {
  Rng rng(5);
  for (int i = 0; i < 50; ++i) {
    const tasks::Task task = random_variable_task(
        i % 2 == 0 ? tasks::Family::kEllipse : tasks::Family::kRosenbrock, 100 + i);
    const Vector2d x(rng.normal(), rng.normal());
    const Vector2d y = sym::act(task, 0.0, x);
    CHECK((y - x).cwiseAbs().maxCoeff() <= 1e-12);
  }
}

TEST_CASE("hand-composed action on the diagonal ellipse") {
  // h(x) = (1, 0); quarter turn gives (0, 1); h^-1 gives (0, 1/3).
  const tasks::Task task = fixed_ellipse();
  const Vector2d y = sym::act(task, kPi / 2.0, Vector2d(2.0, 0.0));
  CHECK(y(0) == doctest::Approx(0.0).epsilon(1e-14));
  CHECK(y(1) == doctest::Approx(1.0 / 3.0).epsilon(1e-14));
}

TEST_CASE("action preserves the objective") {
  Rng rng(7);
  for (int i = 0; i < 500; ++i) {
    const tasks::Task task = random_variable_task(
        i % 2 == 0 ? tasks::Family::kEllipse : tasks::Family::kRosenbrock, 200 + i);
    const Vector2d x(rng.normal(), rng.normal());
    const double theta = rng.uniform(-kPi, kPi);
    const double f0 = tasks::eval_f(task, x);
    const double f1 = tasks::eval_f(task, sym::act(task, theta, x));
    CHECK(std::abs(f1 - f0) <= 1e-8 * (1.0 + std::abs(f0)));
  }
}

TEST_CASE("group law act(act(x,a),b) = act(x,a+b)") {
  Rng rng(9);
  for (int i = 0; i < 100; ++i) {
    const tasks::Task task = random_variable_task(
        i % 2 == 0 ? tasks::Family::kEllipse : tasks::Family::kRosenbrock, 300 + i);
    const Vector2d x(rng.normal(), rng.normal());
    const double a = rng.uniform(-kPi, kPi);
    const double b = rng.uniform(-kPi, kPi);
    const Vector2d lhs = sym::act(task, b, sym::act(task, a, x));
    const Vector2d rhs = sym::act(task, a + b, x);
    CHECK((lhs - rhs).cwiseAbs().maxCoeff() <= 1e-8 * (1.0 + rhs.cwiseAbs().maxCoeff()));
  }
}

TEST_CASE("grad_norm_on_orbit basics") {
  const tasks::Task task = fixed_ellipse();
  const Vector2d x(2.0, 0.0);
  CHECK(sym::grad_norm_on_orbit(task, x, 0.0) ==
        doctest::Approx(tasks::grad_f(task, x).norm()));
  // 2*pi periodicity
  CHECK(std::abs(sym::grad_norm_on_orbit(task, x, 0.7) -
                 sym::grad_norm_on_orbit(task, x, 0.7 + 2.0 * kPi)) <= 1e-10);
}

TEST_CASE("orbit maximum on the diagonal ellipse: analytic and brute force") {
  const tasks::Task task = fixed_ellipse();
  const Vector2d x(2.0, 0.0);
  // ||h(x)|| = 1, sigma_max = 3 -> max gradient norm on orbit is 6.
  const double brute = oracles::grid_max(
      [&](double theta) { return sym::grad_norm_on_orbit(task, x, theta); }, 10000);
  CHECK(brute == doctest::Approx(6.0).epsilon(1e-6));

  const sym::OracleResult res = sym::teleport_oracle(task, x);
  CHECK(res.grad_norm_star == doctest::Approx(6.0).epsilon(1e-9));
  CHECK(res.grad_norm_star >= brute - 1e-9);
}

TEST_CASE("oracle never loses to theta=0 and beats its grid") {
  Rng rng(13);
  const sym::OracleSettings settings;
  for (int i = 0; i < 100; ++i) {
    const tasks::Task task = random_variable_task(
        i % 2 == 0 ? tasks::Family::kEllipse : tasks::Family::kRosenbrock, 400 + i);
    const Vector2d x(rng.normal(), rng.normal());
    const sym::OracleResult res = sym::teleport_oracle(task, x, settings);
    CHECK(res.grad_norm_star >= tasks::grad_f(task, x).norm() - 1e-9);
    for (int k = 0; k < settings.grid_n; ++k) {
      const double theta = sym::wrap_angle(2.0 * kPi * k / settings.grid_n);
      CHECK(res.grad_norm_star >= sym::grad_norm_on_orbit(task, x, theta) - 1e-12);
    }
  }
}

TEST_CASE("oracle at the global minimum returns zero gradient and zero angle") {
  const tasks::Task task = fixed_ellipse();
  const sym::OracleResult res = sym::teleport_oracle(task, Vector2d(0.0, 0.0));
  CHECK(res.grad_norm_star == 0.0);
  CHECK(res.theta_star == 0.0);  // smallest-|theta| tie break
}

TEST_CASE("oracle value is an orbit invariant") {
  const tasks::Task task = fixed_ellipse();
  Rng rng(15);
  const Vector2d x(rng.normal(), rng.normal());
  const sym::OracleResult base = sym::teleport_oracle(task, x);
  for (double theta : {0.3, -1.2, 2.8}) {
    const Vector2d moved = sym::act(task, theta, x);
    const sym::OracleResult res = sym::teleport_oracle(task, moved);
    CHECK(std::abs(res.grad_norm_star - base.grad_norm_star) <=
          1e-6 * (1.0 + base.grad_norm_star));
  }
}

TEST_CASE("oracle validates its settings") {
  const tasks::Task task = fixed_ellipse();
  CHECK_THROWS_AS(sym::teleport_oracle(task, Vector2d(1.0, 1.0), {4, 10}),
                  std::invalid_argument);
  CHECK_THROWS_AS(sym::teleport_oracle(task, Vector2d(1.0, 1.0), {64, -1}),
                  std::invalid_argument);
}

TEST_CASE("descent-lemma link: teleported step decreases f at least as much") {
  Rng rng(17);
  for (int i = 0; i < 100; ++i) {
    Rng task_rng(1000 + static_cast<std::uint64_t>(i));
    const tasks::Task task =
        tasks::sample_task({tasks::Family::kEllipse, tasks::Mode::kVariable}, task_rng);
    const Vector2d x(rng.normal(), rng.normal());
    const double alpha = 1.0 / tasks::lipschitz_estimate(task, x);
    const sym::OracleResult res = sym::teleport_oracle(task, x);
    const Vector2d y_star = sym::act(task, res.theta_star, x);
    const double f_star = tasks::eval_f(task, y_star - alpha * tasks::grad_f(task, y_star));
    for (int k = 0; k < 16; ++k) {
      const double theta = sym::wrap_angle(2.0 * kPi * k / 16);
      const Vector2d y = sym::act(task, theta, x);
      const double f_k = tasks::eval_f(task, y - alpha * tasks::grad_f(task, y));
      CHECK(f_star <= f_k + 1e-9 * (1.0 + std::abs(f_k)));
    }
  }
}
