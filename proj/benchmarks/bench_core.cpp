#include <benchmark/benchmark.h>

#include "teleopt/meta.hpp"
#include "teleopt/optim.hpp"
#include "teleopt/symmetry.hpp"
#include "teleopt/tasks.hpp"
#include "teleopt/theory.hpp"

using namespace teleopt;

namespace {

tasks::Task fixed_ellipse() {
  return {tasks::fixed_ellipse_params(), Eigen::Vector2d(1.3, -0.7), 0};
}

void TapeLstmWindow(benchmark::State& state) {
  const int hidden = static_cast<int>(state.range(0));
  meta::L2OConfig config;
  config.variant = meta::Variant::kVanilla;
  config.hidden_dim = hidden;
  config.epochs = 10;
  config.unroll = 10;
  const meta::MetaOptimizer opt = meta::init_meta_optimizer(config, 1);
  const tasks::Task task = fixed_ellipse();
  const std::vector<double> weights(10, 1.0);
  const meta::CarriedState cs = meta::initial_state(opt, task);
  for (auto _ : state) {
    const meta::WindowResult res = meta::run_window(opt, task, cs, 1, 10, weights, true);
    benchmark::DoNotOptimize(res.loss);
  }
  state.SetComplexityN(hidden);
}
BENCHMARK(TapeLstmWindow)->RangeMultiplier(2)->Range(8, 64)->Complexity();

void TeleportOracle(benchmark::State& state) {
  const tasks::Task task = fixed_ellipse();
  const Eigen::Vector2d x(2.0, 0.4);
  sym::OracleSettings settings;
  settings.grid_n = static_cast<int>(state.range(0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(sym::teleport_oracle(task, x, settings).grad_norm_star);
  }
}
BENCHMARK(TeleportOracle)->Arg(16)->Arg(64)->Arg(256);

void GradientDescentRun(benchmark::State& state) {
  const tasks::Task task = fixed_ellipse();
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        optim::run_gd(task, task.x0, 1.0 / 18.0, static_cast<int>(state.range(0))).final_f());
  }
}
BENCHMARK(GradientDescentRun)->Arg(50)->Arg(500);

void Lemma1Check(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  Rng rng(3);
  Eigen::MatrixXd m(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) m(i, j) = rng.normal();
  }
  const Eigen::MatrixXd a = m.transpose() * m + 0.1 * Eigen::MatrixXd::Identity(n, n);
  Eigen::VectorXd w(n);
  for (int i = 0; i < n; ++i) w(i) = rng.normal();
  for (auto _ : state) {
    benchmark::DoNotOptimize(theory::quadratic_power_inequality(w, a, 2, -2).lhs);
  }
}
BENCHMARK(Lemma1Check)->Arg(2)->Arg(5);

void Alg2Step(benchmark::State& state) {
  const theory::QuadraticSpec spec = theory::QuadraticSpec::from_task(fixed_ellipse());
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        theory::run_learned_teleport_gd(spec, Eigen::Vector2d(2.0, 0.1), 0.0, 1.0 / 18.0, 0.05, 10)
            .final_f());
  }
}
BENCHMARK(Alg2Step);

}  // namespace

BENCHMARK_MAIN();
