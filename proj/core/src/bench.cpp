#include "teleopt/bench.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <tuple>

#include <nlohmann/json.hpp>

#include "parallel.hpp"
#include "teleopt/errors.hpp"
#include "teleopt/io.hpp"
#include "teleopt/svg.hpp"

namespace teleopt::bench {

using nlohmann::json;

std::string OptimizerSpec::effective_label() const {
  if (!label.empty()) return label;
  if (kind == "l2o") return std::string("l2o_") + meta::variant_name(train.variant);
  return kind;
}

void validate(const ExperimentConfig& config) {
  if (config.seeds.empty()) throw ConfigError("suite: seeds must be non-empty");
  std::set<std::uint64_t> uniq(config.seeds.begin(), config.seeds.end());
  if (uniq.size() != config.seeds.size()) throw ConfigError("suite: duplicate seeds");
  if (config.optimizers.empty()) throw ConfigError("suite: no optimizers configured");
  if (config.steps <= 0) throw ConfigError("suite: steps must be positive");
  std::set<std::string> labels;
  for (const OptimizerSpec& o : config.optimizers) {
    static const std::set<std::string> kinds = {"gd", "momentum", "newton", "teleport_gd",
                                                "l2o"};
    if (!kinds.count(o.kind)) throw ConfigError("suite: unknown optimizer kind '" + o.kind + "'");
    if (!labels.insert(o.effective_label()).second) {
      throw ConfigError("suite: duplicate optimizer label '" + o.effective_label() + "'");
    }
    if (o.kind == "l2o" && o.checkpoint.empty()) meta::validate(o.train);
    if (!o.checkpoint.empty() && !std::filesystem::exists(o.checkpoint)) {
      throw ConfigError("suite: checkpoint not found: " + o.checkpoint);
    }
    if (!o.alpha_auto && !(o.alpha > 0.0)) {
      throw ConfigError("suite: alpha must be positive or \"auto\"");
    }
  }
}

namespace {

DistributionSpec dist_from_json(const json& j) {
  DistributionSpec d;
  const std::string fam = j.value("family", "ellipse");
  if (fam == "ellipse") {
    d.family = tasks::Family::kEllipse;
  } else if (fam == "rosenbrock") {
    d.family = tasks::Family::kRosenbrock;
  } else {
    throw ConfigError("config: unknown family '" + fam + "'");
  }
  const std::string mode = j.value("mode", "fixed");
  if (mode == "fixed") {
    d.mode = tasks::Mode::kFixed;
  } else if (mode == "variable") {
    d.mode = tasks::Mode::kVariable;
  } else {
    throw ConfigError("config: unknown mode '" + mode + "'");
  }
  d.det_min = j.value("det_min", d.det_min);
  d.coef_min = j.value("coef_min", d.coef_min);
  return d;
}

OptimizerSpec optimizer_from_json(const json& j) {
  OptimizerSpec o;
  o.kind = j.value("kind", "gd");
  o.label = j.value("label", "");
  if (j.contains("alpha")) {
    if (j["alpha"].is_string()) {
      if (j["alpha"].get<std::string>() != "auto") {
        throw ConfigError("config: alpha must be a number or \"auto\"");
      }
      o.alpha_auto = true;
    } else {
      o.alpha = j["alpha"].get<double>();
      o.alpha_auto = false;
    }
  }
  o.beta = j.value("beta", o.beta);
  o.teleport_schedule = j.value("teleport_schedule", o.teleport_schedule);
  if (j.contains("oracle")) {
    o.oracle.grid_n = j["oracle"].value("grid_n", o.oracle.grid_n);
    o.oracle.refine_iters = j["oracle"].value("refine_iters", o.oracle.refine_iters);
  }
  o.train_seed = j.value("train_seed", o.train_seed);
  o.checkpoint = j.value("checkpoint", o.checkpoint);
  if (j.contains("train")) {
    o.train = meta::parse_l2o_config(j["train"].dump());
  }
  return o;
}

ExperimentConfig config_from_json(const json& j) {
  ExperimentConfig c;
  c.name = j.value("name", c.name);
  if (j.contains("dist")) c.dist = dist_from_json(j["dist"]);
  if (j.contains("optimizers")) {
    for (const json& oj : j["optimizers"]) c.optimizers.push_back(optimizer_from_json(oj));
  }
  c.seeds = j.value("seeds", c.seeds);
  c.steps = j.value("steps", c.steps);
  c.out_dir = j.value("out_dir", c.out_dir);
  c.plots = j.value("plots", c.plots);
  validate(c);
  return c;
}

}  // namespace

std::vector<ExperimentConfig> parse_configs(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: malformed JSON: ") + e.what());
  }
  try {
    std::vector<ExperimentConfig> out;
    if (j.contains("suites")) {
      for (const json& sj : j["suites"]) out.push_back(config_from_json(sj));
    } else {
      out.push_back(config_from_json(j));
    }
    if (out.empty()) throw ConfigError("config: no suites defined");
    return out;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: bad field: ") + e.what());
  }
}

std::vector<ExperimentConfig> load_configs(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("config file not found: " + path.string());
  std::stringstream buf;
  buf << is.rdbuf();
  return parse_configs(buf.str());
}

std::vector<std::string> ResultsTable::optimizer_labels() const {
  std::vector<std::string> labels;
  for (const ResultRow& r : rows) {
    if (labels.empty() || labels.back() != r.optimizer) {
      if (std::find(labels.begin(), labels.end(), r.optimizer) == labels.end()) {
        labels.push_back(r.optimizer);
      }
    }
  }
  std::sort(labels.begin(), labels.end());
  return labels;
}

namespace {

double quantile(std::vector<double> sorted, double q) {
  if (sorted.empty()) return 0.0;
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = static_cast<std::size_t>(std::ceil(pos));
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] * (1.0 - frac) + sorted[hi] * frac;
}

bool run_is_complete(const std::vector<const ResultRow*>& run, int steps) {
  if (run.empty()) return false;
  const ResultRow* last = run.back();
  if (last->step != steps) return false;
  return std::isfinite(last->f) && last->f <= optim::kDivergenceGuard;
}

}  // namespace

std::vector<AggregateRow> ResultsTable::aggregates() const {
  // group rows: optimizer -> seed -> ordered rows
  std::map<std::string, std::map<std::uint64_t, std::vector<const ResultRow*>>> runs;
  for (const ResultRow& r : rows) runs[r.optimizer][r.seed].push_back(&r);

  std::vector<AggregateRow> out;
  for (const auto& [label, by_seed] : runs) {
    std::map<int, std::vector<double>> per_step;
    for (const auto& [seed, run] : by_seed) {
      if (!run_is_complete(run, steps)) continue;
      for (const ResultRow* r : run) per_step[r->step].push_back(r->f);
    }
    for (auto& [step, vals] : per_step) {
      std::sort(vals.begin(), vals.end());
      AggregateRow a;
      a.optimizer = label;
      a.step = step;
      a.count = static_cast<int>(vals.size());
      double sum = 0.0;
      for (double v : vals) sum += v;
      a.mean = sum / static_cast<double>(vals.size());
      a.median = quantile(vals, 0.5);
      a.q1 = quantile(vals, 0.25);
      a.q3 = quantile(vals, 0.75);
      out.push_back(a);
    }
  }
  return out;
}

namespace {

double resolve_alpha(const OptimizerSpec& spec, const tasks::Task& task) {
  if (!spec.alpha_auto) return spec.alpha;
  return 1.0 / tasks::lipschitz_estimate(task, task.x0);
}

optim::Trajectory run_classical(const OptimizerSpec& spec, const tasks::Task& task, int steps) {
  if (spec.kind == "gd") {
    return optim::run_gd(task, task.x0, resolve_alpha(spec, task), steps);
  }
  if (spec.kind == "momentum") {
    return optim::run_momentum(task, task.x0, resolve_alpha(spec, task), spec.beta, steps);
  }
  if (spec.kind == "newton") {
    return optim::run_newton(task, task.x0, steps);
  }
  if (spec.kind == "teleport_gd") {
    optim::TeleportSchedule sched;
    if (spec.teleport_schedule.empty()) {
      sched = optim::TeleportSchedule::every_step(steps);
      sched.steps.insert(0);
    } else {
      sched.steps.insert(spec.teleport_schedule.begin(), spec.teleport_schedule.end());
    }
    return optim::run_teleport_gd(task, task.x0, resolve_alpha(spec, task), steps, sched,
                                  spec.oracle);
  }
  throw ConfigError("unknown optimizer kind '" + spec.kind + "'");
}

}  // namespace

ResultsTable run_suite(const ExperimentConfig& config) {
  validate(config);

  // Held-out evaluation tasks: one per suite seed, shared by every optimizer.
  std::vector<tasks::Task> eval_tasks;
  eval_tasks.reserve(config.seeds.size());
  for (std::uint64_t s : config.seeds) {
    Rng rng(s);
    eval_tasks.push_back(tasks::sample_task(
        config.dist.to_distribution(), rng));
  }

  // Prepare L2O entries (train or load), in parallel across entries.
  const int n_opt = static_cast<int>(config.optimizers.size());
  std::vector<std::optional<meta::MetaOptimizer>> l2o(n_opt);
  std::vector<std::string> prep_errors(n_opt);
  std::vector<std::vector<std::uint64_t>> train_seeds(n_opt);
  detail::parallel_for(n_opt, [&](int i) {
    const OptimizerSpec& spec = config.optimizers[static_cast<std::size_t>(i)];
    if (spec.kind != "l2o") return;
    try {
      if (!spec.checkpoint.empty()) {
        l2o[i] = meta::load_checkpoint(spec.checkpoint).opt;
      } else {
        const tasks::TaskDistribution dist = config.dist.to_distribution();
        meta::TrainResult tr = meta::train(spec.train, dist, spec.train_seed);
        l2o[i] = std::move(tr.opt);
        train_seeds[i] = std::move(tr.train_task_seeds);
      }
    } catch (const std::exception& e) {
      prep_errors[i] = e.what();
    }
  });

  // Held-out discipline: training task seeds must not collide with the
  // evaluation seeds.
  std::set<std::uint64_t> train_seed_set;
  for (const auto& v : train_seeds) train_seed_set.insert(v.begin(), v.end());
  std::size_t overlap = 0;
  for (std::uint64_t s : config.seeds) overlap += train_seed_set.count(s);

  // Evaluate every optimizer on every seed.
  struct JobOut {
    std::optional<optim::Trajectory> traj;
    std::string error;
  };
  const int n_seeds = static_cast<int>(config.seeds.size());
  std::vector<JobOut> jobs(static_cast<std::size_t>(n_opt) * n_seeds);
  detail::parallel_for(n_opt * n_seeds, [&](int idx) {
    const int oi = idx / n_seeds;
    const int si = idx % n_seeds;
    const OptimizerSpec& spec = config.optimizers[static_cast<std::size_t>(oi)];
    JobOut& out = jobs[static_cast<std::size_t>(idx)];
    if (!prep_errors[oi].empty()) {
      out.error = prep_errors[oi];
      return;
    }
    try {
      if (spec.kind == "l2o") {
        out.traj = meta::evaluate_one(*l2o[oi], eval_tasks[static_cast<std::size_t>(si)],
                                      config.steps);
      } else {
        out.traj = run_classical(spec, eval_tasks[static_cast<std::size_t>(si)], config.steps);
      }
    } catch (const std::exception& e) {
      out.error = e.what();
    }
  });

  // Deterministic merge, sorted by (label, seed, step).
  struct Keyed {
    std::string label;
    std::uint64_t seed;
    const optim::Trajectory* traj;
  };
  std::vector<Keyed> keyed;
  std::size_t failures = 0;
  ResultsTable table;
  table.steps = config.steps;
  std::map<std::string, int> diverged_count;
  std::map<std::string, int> total_count;
  for (int oi = 0; oi < n_opt; ++oi) {
    const std::string label = config.optimizers[static_cast<std::size_t>(oi)].effective_label();
    for (int si = 0; si < n_seeds; ++si) {
      const JobOut& out = jobs[static_cast<std::size_t>(oi) * n_seeds + si];
      if (!out.traj) {
        ++failures;
        table.notes["failure:" + label + ":" + std::to_string(config.seeds[si])] = out.error;
        continue;
      }
      keyed.push_back({label, config.seeds[static_cast<std::size_t>(si)], &*out.traj});
    }
  }
  if (failures == jobs.size()) {
    throw ConfigError("suite '" + config.name + "': every run failed");
  }
  std::sort(keyed.begin(), keyed.end(), [](const Keyed& a, const Keyed& b) {
    return std::tie(a.label, a.seed) < std::tie(b.label, b.seed);
  });
  for (const Keyed& k : keyed) {
    ++total_count[k.label];
    if (k.traj->diverged) ++diverged_count[k.label];
    for (const optim::TrajectoryRecord& rec : k.traj->records) {
      table.rows.push_back({k.label, k.seed, rec.step, rec.f, rec.grad_norm});
    }
  }
  for (const auto& [label, total] : total_count) {
    table.divergence_rate[label] =
        static_cast<double>(diverged_count.count(label) ? diverged_count[label] : 0) /
        static_cast<double>(total);
  }
  if (overlap > 0) {
    table.notes["held_out_check"] =
        "WARNING: " + std::to_string(overlap) + " evaluation seeds collide with training seeds";
  } else {
    table.notes["held_out_check"] = "ok: evaluation seeds disjoint from training task seeds";
  }
  return table;
}

void export_csv(const ResultsTable& table, std::ostream& os) {
  os << "optimizer,seed,step,f,grad_norm\n";
  for (const ResultRow& r : table.rows) {
    os << r.optimizer << ',' << r.seed << ',' << r.step << ',' << io::format_double(r.f) << ','
       << io::format_double(r.grad_norm) << '\n';
  }
}

void export_csv(const ResultsTable& table, const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw ConfigError("cannot open " + path.string() + " for writing");
  export_csv(table, os);
}

ResultsTable import_csv(std::istream& is) {
  ResultsTable table;
  std::string line;
  if (!std::getline(is, line) || line != "optimizer,seed,step,f,grad_norm") {
    throw ConfigError("results csv: bad header");
  }
  const auto parse_double = [](const std::string& s) {
    double v = 0.0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
      throw ConfigError("results csv: bad number '" + s + "'");
    }
    return v;
  };
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::array<std::string, 5> fields;
    std::size_t start = 0;
    for (int i = 0; i < 5; ++i) {
      const std::size_t comma = line.find(',', start);
      if (i < 4 && comma == std::string::npos) {
        throw ConfigError("results csv: short row");
      }
      fields[static_cast<std::size_t>(i)] =
          line.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
      start = comma + 1;
    }
    ResultRow r;
    r.optimizer = fields[0];
    r.seed = std::stoull(fields[1]);
    r.step = std::stoi(fields[2]);
    r.f = parse_double(fields[3]);
    r.grad_norm = parse_double(fields[4]);
    table.rows.push_back(std::move(r));
    table.steps = std::max(table.steps, table.rows.back().step);
  }
  // Reconstruct divergence rates from run shapes.
  std::map<std::string, std::map<std::uint64_t, std::vector<const ResultRow*>>> runs;
  for (const ResultRow& r : table.rows) runs[r.optimizer][r.seed].push_back(&r);
  for (const auto& [label, by_seed] : runs) {
    int diverged = 0;
    for (const auto& [seed, run] : by_seed) {
      if (!run_is_complete(run, table.steps)) ++diverged;
    }
    table.divergence_rate[label] =
        static_cast<double>(diverged) / static_cast<double>(by_seed.size());
  }
  return table;
}

ResultsTable import_csv(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ConfigError("cannot read " + path.string());
  return import_csv(is);
}

void export_json(const ResultsTable& table, const std::filesystem::path& path) {
  json j;
  j["schema"] = "teleopt-results-v1";
  j["steps"] = table.steps;
  json rows = json::array();
  for (const ResultRow& r : table.rows) {
    rows.push_back({{"optimizer", r.optimizer},
                    {"seed", r.seed},
                    {"step", r.step},
                    {"f", r.f},
                    {"grad_norm", r.grad_norm}});
  }
  j["rows"] = rows;
  json aggs = json::array();
  for (const AggregateRow& a : table.aggregates()) {
    aggs.push_back({{"optimizer", a.optimizer},
                    {"step", a.step},
                    {"mean", a.mean},
                    {"median", a.median},
                    {"q1", a.q1},
                    {"q3", a.q3},
                    {"count", a.count}});
  }
  j["aggregates"] = aggs;
  j["divergence_rate"] = table.divergence_rate;
  j["notes"] = table.notes;
  std::ofstream os(path, std::ios::binary);
  if (!os) throw ConfigError("cannot open " + path.string() + " for writing");
  os << j.dump(2) << '\n';
}

void emit_plots(const ResultsTable& table, const std::filesystem::path& svg_path,
                const std::string& title) {
  if (table.rows.empty()) throw ConfigError("emit_plots: empty results table");
  std::map<std::string, svg::Series> series;
  for (const AggregateRow& a : table.aggregates()) {
    svg::Series& s = series[a.optimizer];
    s.label = a.optimizer;
    const std::size_t need = static_cast<std::size_t>(a.step) + 1;
    if (s.median.size() < need) {
      s.median.resize(need, 0.0);
      s.q1.resize(need, 0.0);
      s.q3.resize(need, 0.0);
    }
    s.median[static_cast<std::size_t>(a.step)] = a.median;
    s.q1[static_cast<std::size_t>(a.step)] = a.q1;
    s.q3[static_cast<std::size_t>(a.step)] = a.q3;
  }
  std::vector<svg::Series> list;
  list.reserve(series.size());
  for (auto& [label, s] : series) list.push_back(std::move(s));
  std::ofstream os(svg_path, std::ios::binary);
  if (!os) throw ConfigError("cannot open " + svg_path.string() + " for writing");
  os << svg::render_loss_plot(list, title);
}

}  // namespace teleopt::bench
