#include "teleopt/meta.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include <nlohmann/json.hpp>

#include "parallel.hpp"
#include "teleopt/io.hpp"

namespace teleopt::meta {

using nlohmann::json;

const char* variant_name(Variant v) {
  switch (v) {
    case Variant::kVanilla: return "vanilla";
    case Variant::kTeleport: return "teleport";
    case Variant::kTeleportMomentum: return "teleport_momentum";
  }
  return "?";
}

Variant variant_from_name(const std::string& name) {
  if (name == "vanilla") return Variant::kVanilla;
  if (name == "teleport") return Variant::kTeleport;
  if (name == "teleport_momentum") return Variant::kTeleportMomentum;
  throw ConfigError("unknown variant '" + name + "'");
}

const char* head_name(HeadKind k) {
  switch (k) {
    case HeadKind::kUpdate: return "update";
    case HeadKind::kTheta: return "theta";
    case HeadKind::kLr: return "lr";
    case HeadKind::kBeta: return "beta";
  }
  return "?";
}

HeadKind head_from_name(const std::string& name) {
  if (name == "update") return HeadKind::kUpdate;
  if (name == "theta") return HeadKind::kTheta;
  if (name == "lr") return HeadKind::kLr;
  if (name == "beta") return HeadKind::kBeta;
  throw ConfigError("unknown head '" + name + "'");
}

std::size_t LstmSpec::param_count() const {
  std::size_t n = 0;
  for (int layer = 0; layer < layers; ++layer) {
    const std::size_t in_dim = layer == 0 ? input_dim : hidden_dim;
    n += 4 * (static_cast<std::size_t>(hidden_dim) * in_dim +
              static_cast<std::size_t>(hidden_dim) * hidden_dim +
              static_cast<std::size_t>(hidden_dim));
  }
  for (HeadKind k : heads) {
    n += static_cast<std::size_t>(head_out_dim(k)) * hidden_dim + head_out_dim(k);
  }
  return n;
}

LstmNet init_net(const LstmSpec& spec, Rng& rng) {
  LstmNet net;
  net.spec = spec;
  net.phi.assign(spec.param_count(), 0.0);
  const double scale = 1.0 / std::sqrt(static_cast<double>(spec.hidden_dim));
  std::size_t cur = 0;
  for (int layer = 0; layer < spec.layers; ++layer) {
    const std::size_t in_dim = layer == 0 ? spec.input_dim : spec.hidden_dim;
    const std::size_t hd = spec.hidden_dim;
    for (int g = 0; g < 4; ++g) {
      for (std::size_t i = 0; i < hd * in_dim; ++i) net.phi[cur++] = rng.uniform(-scale, scale);
      for (std::size_t i = 0; i < hd * hd; ++i) net.phi[cur++] = rng.uniform(-scale, scale);
      cur += hd;  // biases stay zero
    }
  }
  // heads stay zero (identity-start)
  return net;
}

namespace {

LstmSpec spec_for(Variant variant, int hidden_dim, int input_dim, bool m2) {
  LstmSpec s;
  s.hidden_dim = hidden_dim;
  s.input_dim = input_dim;
  switch (variant) {
    case Variant::kVanilla:
      s.heads = {HeadKind::kUpdate};
      break;
    case Variant::kTeleport:
      s.heads = {HeadKind::kUpdate, HeadKind::kTheta};
      break;
    case Variant::kTeleportMomentum:
      s.heads = m2 ? std::vector<HeadKind>{HeadKind::kBeta, HeadKind::kTheta}
                   : std::vector<HeadKind>{HeadKind::kLr};
      break;
  }
  return s;
}

std::vector<double> resolve_weights(const L2OConfig& config) {
  if (config.weights.empty()) return std::vector<double>(config.epochs, 1.0);
  return config.weights;
}

}  // namespace

void validate(const L2OConfig& config) {
  if (config.runs <= 0 || config.epochs <= 0 || config.unroll <= 0) {
    throw ConfigError("l2o config: runs, epochs and unroll must be positive");
  }
  if (config.epochs % config.unroll != 0) {
    throw ConfigError("l2o config: unroll T must divide epochs N");
  }
  if (!config.weights.empty() &&
      static_cast<int>(config.weights.size()) != config.epochs) {
    throw ConfigError("l2o config: weights must have one entry per epoch");
  }
  for (double w : config.weights) {
    if (!(w > 0.0)) throw ConfigError("l2o config: weights must be positive");
  }
  if (config.hidden_dim <= 0) throw ConfigError("l2o config: hidden_dim must be positive");
  if (!(config.alpha0 > 0.0)) throw ConfigError("l2o config: alpha0 must be positive");
  if (!(config.meta_lr_m1 > 0.0) || !(config.meta_lr_m2 > 0.0)) {
    throw ConfigError("l2o config: meta learning rates must be positive");
  }
  if (config.meta_momentum < 0.0 || config.meta_momentum >= 1.0) {
    throw ConfigError("l2o config: meta momentum must be in [0, 1)");
  }
  if (config.eval_tasks <= 0) throw ConfigError("l2o config: eval_tasks must be positive");
  for (int t : config.teleport_schedule) {
    if (t < 1 || t > config.epochs) {
      throw ConfigError("l2o config: teleport schedule indices must be in [1, epochs]");
    }
  }
}

L2OConfig full_scale_config(Variant variant) {
  L2OConfig c;
  c.variant = variant;
  c.hidden_dim = 300;
  c.meta_lr_m1 = 1e-4;
  c.meta_lr_m2 = 1e-3;
  c.epochs = 100;
  c.unroll = 100;
  c.preprocess_inputs = true;
  return c;
}

MetaOptimizer init_meta_optimizer(const L2OConfig& config, std::uint64_t seed) {
  validate(config);
  MetaOptimizer opt;
  opt.variant = config.variant;
  opt.alpha0 = config.alpha0;
  opt.preprocess_inputs = config.preprocess_inputs;
  const int input_dim = config.preprocess_inputs ? 4 : 2;
  Rng rng = Rng(seed).derive(0x696e6974ULL);  // "init"
  opt.m1 = init_net(spec_for(config.variant, config.hidden_dim, input_dim, false), rng);
  if (config.variant == Variant::kTeleportMomentum) {
    opt.m2 = init_net(spec_for(config.variant, config.hidden_dim, input_dim, true), rng);
    if (config.teleport_schedule.empty()) {
      opt.policy = {true, {}};
    } else {
      opt.policy.every_step = false;
      opt.policy.schedule.steps.insert(config.teleport_schedule.begin(),
                                       config.teleport_schedule.end());
    }
  }
  return opt;
}

CarriedState initial_state(const MetaOptimizer& opt, const tasks::Task& task) {
  CarriedState cs;
  cs.x = tasks::from_eigen(task.x0);
  cs.st1 = zero_state<double>(opt.m1.spec, 0.0);
  if (opt.m2) cs.st2 = zero_state<double>(opt.m2->spec, 0.0);
  cs.velocity = {0.0, 0.0};
  return cs;
}

namespace {

// Lift a double state into tape leaves: values carry, gradients cut.
MetaStateT<ad::Value> lift_state(ad::Tape& tape, const MetaState& st) {
  MetaStateT<ad::Value> out;
  out.step = st.step;
  out.h.reserve(st.h.size());
  out.c.reserve(st.c.size());
  for (const auto& layer : st.h) {
    std::vector<ad::Value> row;
    row.reserve(layer.size());
    for (double v : layer) row.push_back(ad::make_var(tape, v));
    out.h.push_back(std::move(row));
  }
  for (const auto& layer : st.c) {
    std::vector<ad::Value> row;
    row.reserve(layer.size());
    for (double v : layer) row.push_back(ad::make_var(tape, v));
    out.c.push_back(std::move(row));
  }
  return out;
}

MetaState lower_state(const MetaStateT<ad::Value>& st) {
  MetaState out;
  out.step = st.step;
  for (const auto& layer : st.h) {
    std::vector<double> row;
    row.reserve(layer.size());
    for (const ad::Value& v : layer) row.push_back(v.val());
    out.h.push_back(std::move(row));
  }
  for (const auto& layer : st.c) {
    std::vector<double> row;
    row.reserve(layer.size());
    for (const ad::Value& v : layer) row.push_back(v.val());
    out.c.push_back(std::move(row));
  }
  return out;
}

WindowResult run_window_double(const MetaOptimizer& opt, const tasks::Task& task,
                               const CarriedState& in, int t_begin, int t_count,
                               std::span<const double> weights) {
  WindowResult res;
  res.carried = in;
  double loss = 0.0;
  std::span<const double> phi1(opt.m1.phi);
  std::span<const double> phi2 = opt.m2 ? std::span<const double>(opt.m2->phi)
                                        : std::span<const double>();
  for (int k = 0; k < t_count; ++k) {
    const int t = t_begin + k;
    res.carried.st1.step = t - 1;  // inner_update pre-increments
    InnerResult<double> step;
    try {
      step = inner_update<double>(opt, phi1, phi2, task, res.carried.x, res.carried.st1,
                                  res.carried.st2, res.carried.velocity, opt.alpha0);
    } catch (const ad::DomainError&) {
      res.diverged = true;
      break;
    }
    if (step.teleport_skipped) ++res.teleports_skipped;
    res.carried.x = step.x;
    const double f = tasks::eval_f(task, res.carried.x);
    if (!std::isfinite(f) || f > optim::kDivergenceGuard) {
      res.diverged = true;
      break;
    }
    loss += weights[static_cast<std::size_t>(t - 1)] * f;
  }
  res.loss = loss;
  return res;
}

}  // namespace

WindowResult run_window(const MetaOptimizer& opt, const tasks::Task& task,
                        const CarriedState& in, int t_begin, int t_count,
                        std::span<const double> weights, bool want_grad) {
  if (!want_grad) return run_window_double(opt, task, in, t_begin, t_count, weights);

  using ad::Value;
  ad::Tape tape;
  std::vector<Value> phi1;
  phi1.reserve(opt.m1.phi.size());
  for (double v : opt.m1.phi) phi1.push_back(ad::make_var(tape, v));
  std::vector<Value> phi2;
  if (opt.m2) {
    phi2.reserve(opt.m2->phi.size());
    for (double v : opt.m2->phi) phi2.push_back(ad::make_var(tape, v));
  }

  tasks::V2<Value> x{ad::make_var(tape, in.x[0]), ad::make_var(tape, in.x[1])};
  tasks::V2<Value> vel{ad::make_var(tape, in.velocity[0]), ad::make_var(tape, in.velocity[1])};
  MetaStateT<Value> st1 = lift_state(tape, in.st1);
  MetaStateT<Value> st2 = lift_state(tape, in.st2);

  WindowResult res;
  std::optional<Value> loss;
  int teleports_skipped = 0;
  bool diverged = false;
  for (int k = 0; k < t_count; ++k) {
    const int t = t_begin + k;
    st1.step = t - 1;
    InnerResult<Value> step;
    try {
      step = inner_update<Value>(opt, phi1, phi2, task, x, st1, st2, vel, opt.alpha0);
      x = step.x;
      const Value f = tasks::eval_f(task, x);
      if (!std::isfinite(f.val()) || f.val() > optim::kDivergenceGuard) {
        diverged = true;
        break;
      }
      const Value wf = f * weights[static_cast<std::size_t>(t - 1)];
      loss = loss ? *loss + wf : wf;
    } catch (const ad::DomainError&) {
      diverged = true;
      break;
    }
    if (step.teleport_skipped) ++teleports_skipped;
  }

  res.diverged = diverged;
  res.teleports_skipped = teleports_skipped;
  res.carried.x = {x[0].val(), x[1].val()};
  res.carried.velocity = {vel[0].val(), vel[1].val()};
  res.carried.st1 = lower_state(st1);
  res.carried.st2 = lower_state(st2);
  if (!loss) {
    res.loss = 0.0;
    return res;
  }
  res.loss = loss->val();
  if (diverged) return res;  // no meta step from a truncated window

  const std::vector<double> adj = tape.backward(loss->id);
  res.grad1.reserve(phi1.size());
  for (const Value& v : phi1) res.grad1.push_back(adj[static_cast<std::size_t>(v.id)]);
  res.grad2.reserve(phi2.size());
  for (const Value& v : phi2) res.grad2.push_back(adj[static_cast<std::size_t>(v.id)]);
  return res;
}

namespace {

constexpr std::uint64_t kTrainStream = 0x747261696eULL;  // "train"
constexpr std::uint64_t kEvalStream = 0x6576616cULL;     // "eval"

bool all_finite(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

void clip_global_norm(std::vector<double>& g1, std::vector<double>& g2, double clip) {
  double sq = 0.0;
  for (double v : g1) sq += v * v;
  for (double v : g2) sq += v * v;
  const double norm = std::sqrt(sq);
  if (norm <= clip || norm == 0.0) return;
  const double s = clip / norm;
  for (double& v : g1) v *= s;
  for (double& v : g2) v *= s;
}

void sgd_momentum(std::vector<double>& phi, std::vector<double>& mom,
                  std::span<const double> grad, double lr, double mu) {
  for (std::size_t i = 0; i < phi.size(); ++i) {
    mom[i] = mu * mom[i] + grad[i];
    phi[i] -= lr * mom[i];
  }
}

}  // namespace

TrainResult train(const L2OConfig& config, const tasks::TaskDistribution& dist,
                  std::uint64_t seed) {
  validate(config);
  TrainResult out;
  out.opt = init_meta_optimizer(config, seed);
  const std::vector<double> weights = resolve_weights(config);
  std::vector<double> mom1(out.opt.m1.phi.size(), 0.0);
  std::vector<double> mom2(out.opt.m2 ? out.opt.m2->phi.size() : 0, 0.0);

  const Rng base(seed);
  const int windows = config.epochs / config.unroll;
  for (int r = 0; r < config.runs; ++r) {
    Rng task_rng = base.derive(kTrainStream + static_cast<std::uint64_t>(r));
    const tasks::Task task = tasks::sample_task(dist, task_rng);
    out.train_task_seeds.push_back(task.seed);

    CarriedState cs = initial_state(out.opt, task);
    double run_loss = 0.0;
    for (int w = 0; w < windows; ++w) {
      WindowResult res =
          run_window(out.opt, task, cs, w * config.unroll + 1, config.unroll, weights, true);
      run_loss += res.loss;
      if (res.diverged) {
        ++out.diverged_runs;
        break;
      }
      if (all_finite(res.grad1) && all_finite(res.grad2)) {
        clip_global_norm(res.grad1, res.grad2, config.grad_clip);
        sgd_momentum(out.opt.m1.phi, mom1, res.grad1, config.meta_lr_m1, config.meta_momentum);
        if (out.opt.m2) {
          sgd_momentum(out.opt.m2->phi, mom2, res.grad2, config.meta_lr_m2,
                       config.meta_momentum);
        }
      } else {
        ++out.skipped_meta_steps;
      }
      cs = res.carried;
    }
    out.curve.push_back(run_loss);
  }
  return out;
}

optim::Trajectory evaluate_one(const MetaOptimizer& opt, const tasks::Task& task, int n_steps) {
  optim::Trajectory traj;
  traj.meta.task_seed = task.seed;
  traj.meta.optimizer = std::string("l2o_") + variant_name(opt.variant);
  traj.meta.hyperparams = {{"alpha0", opt.alpha0}};

  std::span<const double> phi1(opt.m1.phi);
  std::span<const double> phi2 =
      opt.m2 ? std::span<const double>(opt.m2->phi) : std::span<const double>();

  CarriedState cs = initial_state(opt, task);
  const auto record = [&](int t, std::optional<double> theta) {
    optim::TrajectoryRecord rec;
    rec.step = t;
    rec.x = tasks::to_eigen(cs.x);
    rec.f = tasks::eval_f(task, cs.x);
    rec.grad_norm = tasks::to_eigen(tasks::grad_f(task, cs.x)).norm();
    rec.theta = theta;
    traj.records.push_back(rec);
  };
  record(0, std::nullopt);
  for (int t = 1; t <= n_steps; ++t) {
    InnerResult<double> step;
    try {
      step = inner_update<double>(opt, phi1, phi2, task, cs.x, cs.st1, cs.st2, cs.velocity,
                                  opt.alpha0);
    } catch (const ad::DomainError&) {
      traj.diverged = true;
      traj.warnings.push_back("non-finite inner step at t=" + std::to_string(t));
      break;
    }
    if (step.teleport_skipped) {
      traj.warnings.push_back("teleport skipped at t=" + std::to_string(t));
    }
    cs.x = step.x;
    record(t, step.theta);
    if (!std::isfinite(traj.records.back().f) ||
        traj.records.back().f > optim::kDivergenceGuard) {
      traj.diverged = true;
      break;
    }
  }
  return traj;
}

std::vector<optim::Trajectory> evaluate(const MetaOptimizer& opt,
                                        std::span<const tasks::Task> eval_tasks, int n_steps) {
  // Rollouts are pure functions of (opt, task); fan out across tasks and
  // merge by index so parallelism never changes the result.
  std::vector<optim::Trajectory> out(eval_tasks.size());
  teleopt::detail::parallel_for(static_cast<int>(eval_tasks.size()), [&](int i) {
    out[static_cast<std::size_t>(i)] =
        evaluate_one(opt, eval_tasks[static_cast<std::size_t>(i)], n_steps);
  });
  return out;
}

double meta_loss(const MetaOptimizer& opt, const tasks::Task& task, int n_steps,
                 std::span<const double> weights) {
  const optim::Trajectory traj = evaluate_one(opt, task, n_steps);
  if (traj.diverged) return std::numeric_limits<double>::infinity();
  double loss = 0.0;
  for (const optim::TrajectoryRecord& r : traj.records) {
    if (r.step == 0) continue;
    const double w = weights.empty() ? 1.0 : weights[static_cast<std::size_t>(r.step - 1)];
    loss += w * r.f;
  }
  return loss;
}

double teleport_invariance_audit(const tasks::Task& task, const optim::Trajectory& traj) {
  double worst = 0.0;
  for (const optim::TrajectoryRecord& r : traj.records) {
    if (!r.theta) continue;
    const Eigen::Vector2d pre = sym::act(task, -*r.theta, r.x);
    const double f_pre = tasks::eval_f(task, pre);
    worst = std::max(worst, std::abs(f_pre - r.f) / (1.0 + std::abs(r.f)));
  }
  return worst;
}

std::vector<tasks::Task> sample_eval_tasks(const tasks::TaskDistribution& dist, int count,
                                           std::uint64_t seed) {
  const Rng base(seed);
  std::vector<tasks::Task> out;
  out.reserve(count);
  for (int i = 0; i < count; ++i) {
    Rng task_rng = base.derive(kEvalStream + static_cast<std::uint64_t>(i) * 7919);
    out.push_back(tasks::sample_task(dist, task_rng));
  }
  return out;
}

// ---- checkpoints ----

namespace {

constexpr int kCheckpointVersion = 1;

json net_to_json(const LstmNet& net, const std::string& name) {
  json j;
  j["name"] = name;
  j["input_dim"] = net.spec.input_dim;
  j["hidden_dim"] = net.spec.hidden_dim;
  j["layers"] = net.spec.layers;
  json heads = json::array();
  for (HeadKind k : net.spec.heads) heads.push_back(head_name(k));
  j["heads"] = heads;
  j["param_count"] = net.phi.size();
  j["weights"] = net.phi;
  return j;
}

LstmNet net_from_json(const json& j) {
  LstmNet net;
  net.spec.input_dim = j.at("input_dim").get<int>();
  net.spec.hidden_dim = j.at("hidden_dim").get<int>();
  net.spec.layers = j.at("layers").get<int>();
  for (const auto& h : j.at("heads")) net.spec.heads.push_back(head_from_name(h));
  net.phi = j.at("weights").get<std::vector<double>>();
  if (net.phi.size() != net.spec.param_count() ||
      net.phi.size() != j.at("param_count").get<std::size_t>()) {
    throw ConfigError("checkpoint: weight count does not match net shape");
  }
  return net;
}

json config_to_json(const L2OConfig& c) {
  json j;
  j["variant"] = variant_name(c.variant);
  j["runs"] = c.runs;
  j["epochs"] = c.epochs;
  j["unroll"] = c.unroll;
  j["weights"] = c.weights;
  j["meta_lr_m1"] = c.meta_lr_m1;
  j["meta_lr_m2"] = c.meta_lr_m2;
  j["meta_momentum"] = c.meta_momentum;
  j["grad_clip"] = c.grad_clip;
  j["hidden_dim"] = c.hidden_dim;
  j["alpha0"] = c.alpha0;
  j["teleport_schedule"] = c.teleport_schedule;
  j["eval_tasks"] = c.eval_tasks;
  j["preprocess_inputs"] = c.preprocess_inputs;
  return j;
}

L2OConfig config_from_json(const json& j, bool strict) {
  L2OConfig c;
  if (strict || j.contains("variant")) {
    c.variant = variant_from_name(j.at("variant").get<std::string>());
  }
  c.runs = strict ? j.at("runs").get<int>() : j.value("runs", c.runs);
  c.epochs = strict ? j.at("epochs").get<int>() : j.value("epochs", c.epochs);
  c.unroll = strict ? j.at("unroll").get<int>() : j.value("unroll", c.unroll);
  c.weights = strict ? j.at("weights").get<std::vector<double>>()
                     : j.value("weights", c.weights);
  c.meta_lr_m1 = strict ? j.at("meta_lr_m1").get<double>() : j.value("meta_lr_m1", c.meta_lr_m1);
  c.meta_lr_m2 = strict ? j.at("meta_lr_m2").get<double>() : j.value("meta_lr_m2", c.meta_lr_m2);
  c.meta_momentum =
      strict ? j.at("meta_momentum").get<double>() : j.value("meta_momentum", c.meta_momentum);
  c.grad_clip = strict ? j.at("grad_clip").get<double>() : j.value("grad_clip", c.grad_clip);
  c.hidden_dim = strict ? j.at("hidden_dim").get<int>() : j.value("hidden_dim", c.hidden_dim);
  c.alpha0 = strict ? j.at("alpha0").get<double>() : j.value("alpha0", c.alpha0);
  c.teleport_schedule = strict ? j.at("teleport_schedule").get<std::vector<int>>()
                               : j.value("teleport_schedule", c.teleport_schedule);
  c.eval_tasks = strict ? j.at("eval_tasks").get<int>() : j.value("eval_tasks", c.eval_tasks);
  c.preprocess_inputs = strict ? j.at("preprocess_inputs").get<bool>()
                               : j.value("preprocess_inputs", c.preprocess_inputs);
  return c;
}

}  // namespace

L2OConfig parse_l2o_config(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("l2o config: malformed JSON: ") + e.what());
  }
  try {
    L2OConfig c = config_from_json(j, false);
    validate(c);
    return c;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("l2o config: bad field: ") + e.what());
  }
}

std::string l2o_config_to_json_text(const L2OConfig& config) {
  return config_to_json(config).dump();
}

void save_checkpoint(const MetaOptimizer& opt, const L2OConfig& config,
                     const std::filesystem::path& path) {
  json j;
  j["version"] = kCheckpointVersion;
  j["variant"] = variant_name(opt.variant);
  j["alpha0"] = opt.alpha0;
  j["preprocess_inputs"] = opt.preprocess_inputs;
  j["config"] = config_to_json(config);
  json nets = json::array();
  nets.push_back(net_to_json(opt.m1, "m1"));
  if (opt.m2) nets.push_back(net_to_json(*opt.m2, "m2"));
  j["nets"] = nets;
  std::ofstream os(path);
  if (!os) throw ConfigError("cannot open checkpoint path " + path.string());
  os << j.dump(2) << '\n';
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot read checkpoint " + path.string());
  json j;
  try {
    is >> j;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("checkpoint: malformed file: ") + e.what());
  }
  try {
    if (j.at("version").get<int>() != kCheckpointVersion) {
      throw ConfigError("checkpoint: unsupported version");
    }
    Checkpoint ck;
    ck.config = config_from_json(j.at("config"), true);
    ck.opt.variant = variant_from_name(j.at("variant").get<std::string>());
    ck.opt.alpha0 = j.at("alpha0").get<double>();
    ck.opt.preprocess_inputs = j.at("preprocess_inputs").get<bool>();
    const auto& nets = j.at("nets");
    ck.opt.m1 = net_from_json(nets.at(0));
    if (ck.opt.variant == Variant::kTeleportMomentum) {
      ck.opt.m2 = net_from_json(nets.at(1));
      if (ck.config.teleport_schedule.empty()) {
        ck.opt.policy = {true, {}};
      } else {
        ck.opt.policy.every_step = false;
        ck.opt.policy.schedule.steps.insert(ck.config.teleport_schedule.begin(),
                                            ck.config.teleport_schedule.end());
      }
    }
    return ck;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("checkpoint: bad record: ") + e.what());
  }
}

void write_curve_csv(const std::filesystem::path& path, std::span<const double> curve) {
  std::ofstream os(path);
  if (!os) throw ConfigError("cannot open " + path.string());
  os << "run,meta_loss\n";
  for (std::size_t i = 0; i < curve.size(); ++i) {
    os << (i + 1) << ',' << io::format_double(curve[i]) << '\n';
  }
}

}  // namespace teleopt::meta
