#include <CLI11.hpp>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include <nlohmann/json.hpp>

#include "teleopt/bench.hpp"
#include "teleopt/errors.hpp"
#include "teleopt/io.hpp"
#include "teleopt/meta.hpp"
#include "teleopt/optim.hpp"
#include "teleopt/tasks.hpp"
#include "teleopt/theory.hpp"
#include "teleopt/verify.hpp"

namespace teleopt::bench {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

// TELEOPT_OUT overrides every output directory argument.
std::string resolve_out_dir(const std::string& requested) {
  if (const char* env = std::getenv("TELEOPT_OUT")) {
    if (*env != '\0') return env;
  }
  return requested;
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw ConfigError("cannot create output directory " + dir.string());
}

int cmd_verify(bool quick, std::uint64_t seed, const std::string& out_file) {
  verify::Options opts;
  opts.quick = quick;
  opts.seed = seed;
  const std::vector<verify::PropertyResult> results = verify::run_all(opts);
  for (const verify::PropertyResult& r : results) {
    std::cout << (r.pass ? "[PASS] " : "[FAIL] ") << r.name << "  count=" << r.count
              << " violations=" << r.violations << " worst_margin=" << io::format_double(r.worst_margin)
              << '\n';
    if (!r.note.empty()) std::cout << "       " << r.note << '\n';
  }
  const bool ok = verify::all_pass(results);
  if (!out_file.empty()) {
    const fs::path parent = fs::path(out_file).parent_path();
    if (!parent.empty()) ensure_dir(parent);
    std::ofstream os(out_file);
    if (!os) throw ConfigError("cannot open " + out_file);
    os << verify::report_json(results) << '\n';
    std::cout << "report written to " << out_file << '\n';
  }
  std::cout << (ok ? "verify: all properties hold\n" : "verify: FAILURES above\n");
  return ok ? 0 : 1;
}

int cmd_alg2(int steps, double alpha, double beta, double theta0, std::uint64_t seed,
             const std::string& out_dir) {
  tasks::Task task{tasks::fixed_ellipse_params(), Eigen::Vector2d::Zero(), seed};
  Rng rng(seed);
  task.x0 << rng.normal(), rng.normal();
  const theory::QuadraticSpec spec = theory::QuadraticSpec::from_task(task);
  if (alpha <= 0.0) alpha = 1.0 / (2.0 * spec.lambda.maxCoeff());

  const optim::Trajectory traj = theory::run_learned_teleport_gd(spec, task.x0, theta0, alpha, beta, steps);
  const optim::Trajectory gd = optim::run_gd(task, task.x0, alpha, steps);
  std::cout << "alg2 on fixed ellipse (alpha=" << io::format_double(alpha)
            << ", beta=" << io::format_double(beta) << ", steps=" << steps << ")\n";
  std::cout << "  final f (alg2): " << io::format_double(traj.final_f()) << '\n';
  std::cout << "  final f (gd):   " << io::format_double(gd.final_f()) << '\n';

  const std::string dir = resolve_out_dir(out_dir);
  ensure_dir(dir);
  const fs::path alg2_csv = fs::path(dir) / "alg2_trajectory.csv";
  const fs::path gd_csv = fs::path(dir) / "alg2_gd_baseline.csv";
  optim::write_trajectory_csv(alg2_csv, traj);
  optim::write_trajectory_csv(gd_csv, gd);
  std::cout << "  wrote " << alg2_csv.string() << " and " << gd_csv.string() << '\n';
  return 0;
}

struct TrainFileConfig {
  meta::L2OConfig l2o;
  tasks::TaskDistribution dist;
};

TrainFileConfig read_train_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("config file not found: " + path);
  std::stringstream buf;
  buf << is.rdbuf();
  TrainFileConfig out;
  out.l2o = meta::parse_l2o_config(buf.str());
  json j = json::parse(buf.str());
  if (j.contains("dist")) {
    const std::string fam = j["dist"].value("family", "ellipse");
    const std::string mode = j["dist"].value("mode", "fixed");
    out.dist.family = fam == "rosenbrock" ? tasks::Family::kRosenbrock : tasks::Family::kEllipse;
    out.dist.mode = mode == "variable" ? tasks::Mode::kVariable : tasks::Mode::kFixed;
    out.dist.det_min = j["dist"].value("det_min", out.dist.det_min);
    out.dist.coef_min = j["dist"].value("coef_min", out.dist.coef_min);
  }
  return out;
}

int cmd_train(const std::string& config_path, std::uint64_t seed, const std::string& out_dir) {
  const TrainFileConfig cfg = read_train_config(config_path);
  const std::string dir = resolve_out_dir(out_dir);
  ensure_dir(dir);

  const meta::TrainResult result = meta::train(cfg.l2o, cfg.dist, seed);
  const std::string variant = meta::variant_name(cfg.l2o.variant);
  const fs::path ckpt = fs::path(dir) / ("checkpoint_" + variant + ".json");
  const fs::path curve = fs::path(dir) / ("train_curve_" + variant + ".csv");
  meta::save_checkpoint(result.opt, cfg.l2o, ckpt);
  meta::write_curve_csv(curve, result.curve);

  const std::size_t n = result.curve.size();
  const double first = n ? result.curve.front() : 0.0;
  const double last = n ? result.curve.back() : 0.0;
  std::cout << "trained " << variant << " for " << n << " runs on "
            << tasks::family_name(cfg.dist.family) << "/" << tasks::mode_name(cfg.dist.mode)
            << '\n';
  std::cout << "  meta-loss first run " << io::format_double(first) << ", last run "
            << io::format_double(last) << '\n';
  std::cout << "  diverged runs " << result.diverged_runs << ", skipped meta steps "
            << result.skipped_meta_steps << '\n';
  std::cout << "  checkpoint " << ckpt.string() << '\n';
  std::cout << "  curve " << curve.string() << '\n';
  return 0;
}

int cmd_eval(const std::string& checkpoint_path, int n_tasks, int steps, std::uint64_t seed,
             const std::string& out_dir, const std::string& family, const std::string& mode) {
  const meta::Checkpoint ck = meta::load_checkpoint(checkpoint_path);
  tasks::TaskDistribution dist;
  dist.family = family == "rosenbrock" ? tasks::Family::kRosenbrock : tasks::Family::kEllipse;
  dist.mode = mode == "variable" ? tasks::Mode::kVariable : tasks::Mode::kFixed;
  if (n_tasks <= 0) n_tasks = ck.config.eval_tasks;
  if (steps <= 0) steps = ck.config.epochs;

  const std::vector<tasks::Task> eval_tasks = meta::sample_eval_tasks(dist, n_tasks, seed);
  const std::vector<optim::Trajectory> trajs = meta::evaluate(ck.opt, eval_tasks, steps);

  const std::string dir = resolve_out_dir(out_dir);
  ensure_dir(dir);
  double sum_final = 0.0;
  int diverged = 0;
  std::ofstream task_records(fs::path(dir) / "tasks.jsonl");
  for (std::size_t i = 0; i < trajs.size(); ++i) {
    const fs::path p = fs::path(dir) / ("traj_" + std::string(meta::variant_name(ck.opt.variant)) +
                                        "_" + std::to_string(i) + ".csv");
    optim::write_trajectory_csv(p, trajs[i]);
    task_records << tasks::to_json(eval_tasks[i]) << '\n';
    sum_final += trajs[i].final_f();
    if (trajs[i].diverged) ++diverged;
  }
  std::cout << "evaluated " << meta::variant_name(ck.opt.variant) << " on " << n_tasks
            << " held-out tasks (" << steps << " steps)\n";
  std::cout << "  mean final f " << io::format_double(sum_final / trajs.size()) << ", diverged "
            << diverged << '\n';
  std::cout << "  trajectories in " << dir << '\n';
  return 0;
}

int cmd_bench(const std::string& config_path, const std::string& out_override) {
  std::vector<ExperimentConfig> suites = load_configs(config_path);
  for (ExperimentConfig& config : suites) {
    if (!out_override.empty()) config.out_dir = out_override;
    config.out_dir = resolve_out_dir(config.out_dir);
    ensure_dir(config.out_dir);

    const ResultsTable table = run_suite(config);
    const fs::path base = fs::path(config.out_dir) / config.name;
    export_csv(table, fs::path(base.string() + ".csv"));
    export_json(table, fs::path(base.string() + ".json"));
    if (config.plots) {
      emit_plots(table, fs::path(base.string() + ".svg"), config.name);
    }

    std::cout << "suite " << config.name << ": " << table.rows.size() << " rows\n";
    for (const auto& [label, rate] : table.divergence_rate) {
      std::cout << "  " << label << " divergence rate " << io::format_double(rate) << '\n';
    }
    const auto note = table.notes.find("held_out_check");
    if (note != table.notes.end()) std::cout << "  held-out: " << note->second << '\n';
    std::cout << "  wrote " << base.string() << ".{csv,json"
              << (config.plots ? ",svg" : "") << "}\n";
  }
  return 0;
}

int cmd_plot(const std::string& csv_path, std::string out_path, const std::string& title) {
  const ResultsTable table = import_csv(fs::path(csv_path));
  if (out_path.empty()) out_path = fs::path(csv_path).replace_extension(".svg").string();
  emit_plots(table, out_path, title.empty() ? fs::path(csv_path).stem().string() : title);
  std::cout << "wrote " << out_path << '\n';
  return 0;
}

}  // namespace

int run_cli(std::vector<std::string> args) {
  CLI::App app{"teleopt: symmetry-teleportation L2O workbench"};
  app.require_subcommand(1);

  // verify
  auto* verify_cmd = app.add_subcommand("verify", "run the theory verification suites");
  bool quick = false;
  std::uint64_t verify_seed = 20240811;
  std::string verify_out;
  verify_cmd->add_flag("--quick", quick, "reduced property counts");
  verify_cmd->add_option("--seed", verify_seed, "sweep seed");
  verify_cmd->add_option("--out", verify_out, "write JSON report here");

  // alg2
  auto* alg2_cmd = app.add_subcommand("alg2", "GD with an online-learned rotation angle");
  int alg2_steps = 50;
  double alg2_alpha = 0.0;  // 0 = auto 1/L
  double alg2_beta = 0.05;
  double alg2_theta0 = 0.0;
  std::uint64_t alg2_seed = 1;
  std::string alg2_out = "out";
  alg2_cmd->add_option("--steps", alg2_steps, "inner steps");
  alg2_cmd->add_option("--alpha", alg2_alpha, "step size (default 1/L)");
  alg2_cmd->add_option("--beta", alg2_beta, "theta learning rate");
  alg2_cmd->add_option("--theta0", alg2_theta0, "initial rotation angle");
  alg2_cmd->add_option("--seed", alg2_seed, "x0 sampling seed");
  alg2_cmd->add_option("--out", alg2_out, "output directory");

  // train
  auto* train_cmd = app.add_subcommand("train", "train an L2O meta-optimizer");
  std::string train_config;
  std::uint64_t train_seed = 1;
  std::string train_out = "out";
  train_cmd->add_option("--config", train_config, "L2O config JSON")->required();
  train_cmd->add_option("--seed", train_seed, "training seed");
  train_cmd->add_option("--out", train_out, "output directory");

  // eval
  auto* eval_cmd = app.add_subcommand("eval", "evaluate a trained meta-optimizer");
  std::string eval_ckpt;
  int eval_tasks = 0;
  int eval_steps = 0;
  std::uint64_t eval_seed = 2;
  std::string eval_out = "out";
  std::string eval_family = "ellipse";
  std::string eval_mode = "fixed";
  eval_cmd->add_option("--checkpoint", eval_ckpt, "checkpoint JSON")->required();
  eval_cmd->add_option("--tasks", eval_tasks, "number of held-out tasks");
  eval_cmd->add_option("--steps", eval_steps, "rollout length");
  eval_cmd->add_option("--seed", eval_seed, "eval task seed");
  eval_cmd->add_option("--family", eval_family, "ellipse|rosenbrock");
  eval_cmd->add_option("--mode", eval_mode, "fixed|variable");
  eval_cmd->add_option("--out", eval_out, "output directory");

  // bench
  auto* bench_cmd = app.add_subcommand("bench", "run a full comparison suite");
  std::string bench_config;
  std::string bench_out;
  bench_cmd->add_option("--config", bench_config, "suite config JSON")->required();
  bench_cmd->add_option("--out", bench_out, "override output directory");

  // plot
  auto* plot_cmd = app.add_subcommand("plot", "re-render an SVG from a results CSV");
  std::string plot_csv;
  std::string plot_out;
  std::string plot_title;
  plot_cmd->add_option("--csv", plot_csv, "results CSV")->required();
  plot_cmd->add_option("--out", plot_out, "SVG path");
  plot_cmd->add_option("--title", plot_title, "plot title");

  try {
    std::reverse(args.begin(), args.end());
    app.parse(args);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    std::cerr << app.help();
    return 2;
  }

  try {
    if (app.got_subcommand(verify_cmd)) return cmd_verify(quick, verify_seed, verify_out);
    if (app.got_subcommand(alg2_cmd)) {
      return cmd_alg2(alg2_steps, alg2_alpha, alg2_beta, alg2_theta0, alg2_seed, alg2_out);
    }
    if (app.got_subcommand(train_cmd)) return cmd_train(train_config, train_seed, train_out);
    if (app.got_subcommand(eval_cmd)) {
      return cmd_eval(eval_ckpt, eval_tasks, eval_steps, eval_seed, eval_out, eval_family,
                      eval_mode);
    }
    if (app.got_subcommand(bench_cmd)) return cmd_bench(bench_config, bench_out);
    if (app.got_subcommand(plot_cmd)) return cmd_plot(plot_csv, plot_out, plot_title);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}

}  // namespace teleopt::bench
