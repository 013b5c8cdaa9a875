#include <doctest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "support/oracles.hpp"
#include "teleopt/autodiff.hpp"
#include "teleopt/rng.hpp"

using namespace teleopt;
using ad::Tape;
using ad::Value;

TEST_CASE("leaf construction") {
  Tape t;
  const ad::NodeId a = t.var(3.0);
  CHECK(t.value(a) == 3.0);
  const ad::NodeId z = t.var(0.0);
  CHECK(t.value(z) == 0.0);
  CHECK(t.size() == 2);
  CHECK_THROWS_AS(t.var(std::nan("")), ad::DomainError);
  CHECK_THROWS_AS(t.var(INFINITY), ad::DomainError);
}

TEST_CASE("op values and local derivatives") {
  Tape t;
  const ad::NodeId x = t.var(2.0);
  const ad::NodeId y = t.var(5.0);
  const ad::NodeId m = t.apply(ad::Op::kMul, x, y);
  CHECK(t.value(m) == 10.0);
  CHECK(t.node(m).local_grad[0] == 5.0);
  CHECK(t.node(m).local_grad[1] == 2.0);

  const ad::NodeId s = t.apply(ad::Op::kSigmoid, t.var(0.0));
  CHECK(t.value(s) == 0.5);
  CHECK(t.node(s).local_grad[0] == 0.25);

  const ad::NodeId sn = t.apply(ad::Op::kSin, t.var(std::numbers::pi / 2));
  CHECK(t.value(sn) == doctest::Approx(1.0));
  CHECK(std::abs(t.node(sn).local_grad[0]) < 1e-15);
}

TEST_CASE("domain violations name the op") {
  Tape t;
  const ad::NodeId one = t.var(1.0);
  const ad::NodeId zero = t.var(0.0);
  CHECK_THROWS_WITH_AS(t.apply(ad::Op::kDiv, one, zero), doctest::Contains("div"),
                       ad::DomainError);
  CHECK_THROWS_WITH_AS(t.apply(ad::Op::kLn, zero), doctest::Contains("ln"), ad::DomainError);
  CHECK_THROWS_AS(t.apply_powi(zero, -1), ad::DomainError);
}

TEST_CASE("values from different tapes do not mix") {
  Tape t1, t2;
  const Value a = ad::make_var(t1, 1.0);
  const Value b = ad::make_var(t2, 2.0);
  CHECK_THROWS_AS(a + b, std::logic_error);
}

TEST_CASE("backward: power rule") {
  Tape t;
  const Value x = ad::make_var(t, 3.0);
  const Value y = sqr(x);
  const auto adj = t.backward(y.id);
  CHECK(adj[x.id] == 6.0);
}

TEST_CASE("backward: chain rule with zero weight") {
  Tape t;
  const Value w = ad::make_var(t, 0.0);
  const Value x = ad::make_var(t, 1.7);
  const Value y = tanh(w * x);
  const auto adj = t.backward(y.id);
  CHECK(adj[x.id] == 0.0);
}

namespace {

// Composite touching every op in the set.
Value all_ops_composite(Tape&, std::span<const Value> v) {
  Value a = sin(v[0]) * cos(v[1]) + tanh(v[2]);
  Value b = sigmoid(v[3]) - exp(v[4] * 0.3);
  Value c = sqr(v[0]) / (2.0 + sqr(v[1]));
  Value d = ln(1.0 + sqr(v[2])) + powi(v[3], 3);
  return a * b + c - d + (-v[4]);
}

double eval_composite(const std::vector<double>& p) {
  Tape t;
  std::vector<Value> leaves;
  for (double x : p) leaves.push_back(ad::make_var(t, x));
  return all_ops_composite(t, leaves).val();
}

}  // namespace

TEST_CASE("composite of all ops matches central differences") {
  Rng rng(7);
  std::vector<double> point(5);
  for (double& p : point) p = rng.normal();

  Tape t;
  std::vector<Value> leaves;
  for (double x : point) leaves.push_back(ad::make_var(t, x));
  const Value out = all_ops_composite(t, leaves);
  const auto adj = t.backward(out.id);

  const auto fd = oracles::central_diff(eval_composite, point, 1e-5);
  for (std::size_t i = 0; i < point.size(); ++i) {
    CHECK(oracles::rel_err(adj[leaves[i].id], fd[i]) <= 1e-6);
  }
}

TEST_CASE("property: adjoints match finite differences at random points") {
  Rng rng(99);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> point(5);
    for (double& p : point) p = rng.normal();
    Tape t;
    std::vector<Value> leaves;
    for (double x : point) leaves.push_back(ad::make_var(t, x));
    const Value out = all_ops_composite(t, leaves);
    const auto adj = t.backward(out.id);
    const auto fd = oracles::central_diff(eval_composite, point, 1e-5);
    for (std::size_t i = 0; i < point.size(); ++i) {
      CHECK(oracles::rel_err(adj[leaves[i].id], fd[i]) <= 1e-4);
    }
  }
}

TEST_CASE("backward is linear in the output") {
  Tape t;
  const Value x = ad::make_var(t, 0.8);
  const Value y = ad::make_var(t, -1.3);
  const Value f = sin(x) * y;
  const Value g = sqr(x) + sigmoid(y);
  const double a = 2.5, b = -0.75;
  const Value combo = f * a + g * b;

  const auto adj_f = t.backward(f.id);
  const auto adj_g = t.backward(g.id);
  const auto adj_c = t.backward(combo.id);
  for (const Value& leaf : {x, y}) {
    CHECK(adj_c[leaf.id] ==
          doctest::Approx(a * adj_f[leaf.id] + b * adj_g[leaf.id]).epsilon(1e-14));
  }
}

TEST_CASE("identical graphs give bit-identical adjoints") {
  const auto build = [] {
    Tape t;
    const Value x = ad::make_var(t, 1.234);
    const Value y = ad::make_var(t, -0.567);
    const Value out = tanh(x * y) + sigmoid(x - y) * exp(y * 0.1);
    return t.backward(out.id);
  };
  const auto a = build();
  const auto b = build();
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i] == b[i]);
}

TEST_CASE("grad_check on simple functions") {
  const ad::GraphBuilder square = [](Tape&, std::span<const Value> v) { return v[0] * v[0]; };
  CHECK(ad::grad_check(square, std::vector<double>{3.0}, 1e-5) <= 1e-8);

  const ad::GraphBuilder constant = [](Tape& t, std::span<const Value>) {
    return ad::make_const(t, 4.2);
  };
  CHECK(ad::grad_check(constant, std::vector<double>{1.0, 2.0}, 1e-5) == 0.0);

  CHECK_THROWS_AS(ad::grad_check(square, std::vector<double>{1.0}, 0.0),
                  std::invalid_argument);
}

TEST_CASE("powi edge cases") {
  Tape t;
  const ad::NodeId x = t.var(2.0);
  const ad::NodeId p0 = t.apply_powi(x, 0);
  CHECK(t.value(p0) == 1.0);
  CHECK(t.node(p0).local_grad[0] == 0.0);
  const ad::NodeId pm2 = t.apply_powi(x, -2);
  CHECK(t.value(pm2) == 0.25);
  CHECK(t.node(pm2).local_grad[0] == doctest::Approx(-2.0 * std::pow(2.0, -3.0)));
}
