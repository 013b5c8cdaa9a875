#include <doctest.h>

#include <cmath>
#include <set>

#include "support/oracles.hpp"
#include "teleopt/autodiff.hpp"
#include "teleopt/tasks.hpp"

using namespace teleopt;
using Eigen::Vector2d;

namespace {

tasks::Task booth_task() { return {tasks::booth_params(), Vector2d::Zero(), 0}; }

tasks::Task canonical_rosenbrock_task() {
  return {tasks::canonical_rosenbrock_params(), Vector2d::Zero(), 0};
}

}  // namespace

TEST_CASE("Booth map sends the minimizer to the origin") {
  const tasks::Task task = booth_task();
  const Vector2d at_min = tasks::h_forward(task, Vector2d(1.0, 3.0));
  CHECK(at_min.norm() == 0.0);
  const Vector2d at_zero = tasks::h_forward(task, Vector2d(0.0, 0.0));
  CHECK(at_zero == Vector2d(-7.0, -5.0));
}

TEST_CASE("Rosenbrock map sends the minimizer to the origin") {
  const tasks::Task task = canonical_rosenbrock_task();
  CHECK(tasks::h_forward(task, Vector2d(1.0, 1.0)).norm() == 0.0);
}

TEST_CASE("h_inverse closed forms") {
  const tasks::Task ell{tasks::fixed_ellipse_params(), Vector2d::Zero(), 0};
  CHECK(tasks::h_inverse(ell, ell.ellipse().b).norm() == 0.0);

  const tasks::Task ros = canonical_rosenbrock_task();
  const Vector2d inv = tasks::h_inverse(ros, Vector2d(0.0, 0.0));
  CHECK(inv(0) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(inv(1) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("round trip h_inverse(h_forward(x)) = x") {
  Rng rng(11);
  for (int i = 0; i < 1000; ++i) {
    tasks::TaskDistribution dist;
    dist.family = (i % 2 == 0) ? tasks::Family::kEllipse : tasks::Family::kRosenbrock;
    dist.mode = tasks::Mode::kVariable;
    Rng task_rng = rng.derive(static_cast<std::uint64_t>(i));
    const tasks::Task task = tasks::sample_task(dist, task_rng);
    const Vector2d x(task_rng.normal(), task_rng.normal());
    const Vector2d back = tasks::h_inverse(task, tasks::h_forward(task, x));
    CHECK((back - x).cwiseAbs().maxCoeff() <= 1e-10);
  }
}

TEST_CASE("objective values at known points") {
  const tasks::Task booth = booth_task();
  CHECK(tasks::eval_f(booth, Vector2d(1.0, 3.0)) == 0.0);
  CHECK(tasks::grad_f(booth, Vector2d(1.0, 3.0)).norm() == 0.0);
  CHECK(tasks::eval_f(booth, Vector2d(0.0, 0.0)) == 74.0);  // (-7)^2 + (-5)^2

  const tasks::Task ros = canonical_rosenbrock_task();
  CHECK(tasks::eval_f(ros, Vector2d(1.0, 1.0)) == 0.0);
  CHECK(tasks::eval_f(ros, Vector2d(0.0, 0.0)) == 1.0);  // 100(0-0)^2 + (0-1)^2
}

TEST_CASE("fixed-mode distributions use the canonical parameters") {
  Rng rng(3);
  tasks::TaskDistribution dist{tasks::Family::kEllipse, tasks::Mode::kFixed};
  const tasks::Task ell = tasks::sample_task(dist, rng);
  CHECK(ell.ellipse().A(0, 0) == 0.5);
  CHECK(ell.ellipse().A(1, 1) == 3.0);
  CHECK(ell.ellipse().A(0, 1) == 0.0);
  CHECK(ell.ellipse().b.norm() == 0.0);

  dist = {tasks::Family::kRosenbrock, tasks::Mode::kFixed};
  Rng rng2(3);
  const tasks::Task ros = tasks::sample_task(dist, rng2);
  CHECK(ros.rosenbrock().a == 1.0);
  CHECK(ros.rosenbrock().b == -1.0);
  CHECK(ros.rosenbrock().c1 == -2.0);
  CHECK(ros.rosenbrock().d1 == 0.4);
  CHECK(ros.rosenbrock().d2 == 0.0);
  CHECK(ros.rosenbrock().d3 == 0.0);
}

TEST_CASE("sampling is deterministic per seed and respects rejection bounds") {
  for (tasks::Family fam : {tasks::Family::kEllipse, tasks::Family::kRosenbrock}) {
    tasks::TaskDistribution dist{fam, tasks::Mode::kVariable};
    Rng a(42), b(42);
    const tasks::Task t1 = tasks::sample_task(dist, a);
    const tasks::Task t2 = tasks::sample_task(dist, b);
    CHECK(t1.x0 == t2.x0);
    if (fam == tasks::Family::kEllipse) {
      CHECK(t1.ellipse().A == t2.ellipse().A);
      CHECK(t1.ellipse().b == t2.ellipse().b);
    } else {
      CHECK(t1.rosenbrock().a == t2.rosenbrock().a);
      CHECK(t1.rosenbrock().d3 == t2.rosenbrock().d3);
    }
  }

  Rng rng(5);
  for (int i = 0; i < 200; ++i) {
    tasks::TaskDistribution dist{i % 2 == 0 ? tasks::Family::kEllipse
                                            : tasks::Family::kRosenbrock,
                                 tasks::Mode::kVariable};
    Rng task_rng = rng.derive(static_cast<std::uint64_t>(i));
    const tasks::Task t = tasks::sample_task(dist, task_rng);
    if (t.is_ellipse()) {
      CHECK(std::abs(t.ellipse().A.determinant()) >= tasks::kDetMin);
    } else {
      CHECK(std::abs(t.rosenbrock().a) >= tasks::kCoefMin);
      CHECK(std::abs(t.rosenbrock().c1) >= tasks::kCoefMin);
    }
  }
}

TEST_CASE("f is non-negative and vanishes at the preimage of the origin") {
  Rng rng(17);
  for (int i = 0; i < 200; ++i) {
    tasks::TaskDistribution dist{i % 2 == 0 ? tasks::Family::kEllipse
                                            : tasks::Family::kRosenbrock,
                                 tasks::Mode::kVariable};
    Rng task_rng = rng.derive(static_cast<std::uint64_t>(i));
    const tasks::Task t = tasks::sample_task(dist, task_rng);
    const Vector2d x(task_rng.normal(), task_rng.normal());
    CHECK(tasks::eval_f(t, x) >= 0.0);
    const Vector2d minimizer = tasks::h_inverse(t, Vector2d(0.0, 0.0));
    CHECK(tasks::eval_f(t, minimizer) <= 1e-12);
  }
}

TEST_CASE("analytic gradient matches autodiff of eval_f") {
  Rng rng(23);
  for (int i = 0; i < 100; ++i) {
    tasks::TaskDistribution dist{i % 2 == 0 ? tasks::Family::kEllipse
                                            : tasks::Family::kRosenbrock,
                                 tasks::Mode::kVariable};
    Rng task_rng = rng.derive(static_cast<std::uint64_t>(i));
    const tasks::Task t = tasks::sample_task(dist, task_rng);
    const Vector2d x(task_rng.normal(), task_rng.normal());

    ad::Tape tape;
    const tasks::V2<ad::Value> leaves{ad::make_var(tape, x(0)), ad::make_var(tape, x(1))};
    const auto adj = tape.backward(tasks::eval_f(t, leaves).id);
    const Vector2d g = tasks::grad_f(t, x);
    CHECK(oracles::rel_err(adj[leaves[0].id], g(0)) <= 1e-8);
    CHECK(oracles::rel_err(adj[leaves[1].id], g(1)) <= 1e-8);
  }
}

TEST_CASE("analytic Hessian matches finite differences of the gradient") {
  Rng rng(29);
  for (int i = 0; i < 100; ++i) {
    tasks::TaskDistribution dist{i % 2 == 0 ? tasks::Family::kEllipse
                                            : tasks::Family::kRosenbrock,
                                 tasks::Mode::kVariable};
    Rng task_rng = rng.derive(static_cast<std::uint64_t>(i));
    const tasks::Task t = tasks::sample_task(dist, task_rng);
    const Vector2d x(task_rng.normal(), task_rng.normal());
    const Eigen::Matrix2d h = tasks::hess_f(t, x);
    const double eps = 1e-5;
    for (int c = 0; c < 2; ++c) {
      Vector2d dx = Vector2d::Zero();
      dx(c) = eps;
      const Vector2d col = (tasks::grad_f(t, x + dx) - tasks::grad_f(t, x - dx)) / (2 * eps);
      CHECK((col - h.col(c)).cwiseAbs().maxCoeff() / (1.0 + h.cwiseAbs().maxCoeff()) <= 1e-5);
    }
  }
}

TEST_CASE("ellipse Hessian and Lipschitz constant") {
  const tasks::Task ell{tasks::fixed_ellipse_params(), Vector2d::Zero(), 0};
  const Eigen::Matrix2d h = tasks::hess_f(ell, Vector2d(0.3, -0.9));
  CHECK(h(0, 0) == 0.5);   // 2 * 0.25
  CHECK(h(1, 1) == 18.0);  // 2 * 9
  CHECK(tasks::lipschitz_estimate(ell, Vector2d::Zero()) == doctest::Approx(18.0));
}

TEST_CASE("task JSON round trip") {
  Rng rng(31);
  tasks::TaskDistribution dist{tasks::Family::kRosenbrock, tasks::Mode::kVariable};
  const tasks::Task t = tasks::sample_task(dist, rng);
  const std::string text = tasks::to_json(t);
  const tasks::Task back = tasks::task_from_json(text);
  CHECK(tasks::to_json(back) == text);
  CHECK(back.x0 == t.x0);
  CHECK(back.seed == t.seed);
  CHECK(back.rosenbrock().d2 == t.rosenbrock().d2);

  CHECK_THROWS_AS(tasks::task_from_json("{not json"), ConfigError);
  CHECK_THROWS_AS(tasks::task_from_json("{\"version\": 99}"), ConfigError);
}

TEST_CASE("validate rejects near-singular maps") {
  tasks::Task bad{tasks::AffineMap2{Eigen::Matrix2d::Zero(), Vector2d::Zero()},
                  Vector2d::Zero(), 0};
  CHECK_THROWS_AS(tasks::validate(bad), ConfigError);
  tasks::RosenbrockMap m{0.0, 1.0, -2.0, 0.4, 0.0, 0.0};
  tasks::Task bad2{m, Vector2d::Zero(), 0};
  CHECK_THROWS_AS(tasks::validate(bad2), ConfigError);
}
