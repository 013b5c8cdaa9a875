#pragma once

#include <cstdint>
#include <filesystem>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "teleopt/autodiff.hpp"
#include "teleopt/errors.hpp"
#include "teleopt/optim.hpp"
#include "teleopt/rng.hpp"
#include "teleopt/scalar.hpp"
#include "teleopt/symmetry.hpp"
#include "teleopt/tasks.hpp"

namespace teleopt::meta {

enum class Variant { kVanilla, kTeleport, kTeleportMomentum };

const char* variant_name(Variant v);
Variant variant_from_name(const std::string& name);

enum class HeadKind { kUpdate, kTheta, kLr, kBeta };

const char* head_name(HeadKind k);
HeadKind head_from_name(const std::string& name);
inline int head_out_dim(HeadKind k) { return k == HeadKind::kUpdate ? 2 : 1; }

// Two-layer LSTM with affine output heads read off the top hidden state.
struct LstmSpec {
  int input_dim = 2;
  int hidden_dim = 32;
  int layers = 2;
  std::vector<HeadKind> heads;

  std::size_t param_count() const;
};

// Flat parameter vector phi. Layout: per layer, gates in order
// (input, forget, cell, output), each as [W_x | W_h | b] row-major; then the
// heads in spec order, each as [W | b].
struct LstmNet {
  LstmSpec spec;
  std::vector<double> phi;
};

// Body weights uniform(-1/sqrt(h), 1/sqrt(h)); biases and every output head
// zero, so an untrained optimizer emits zero updates and the identity group
// element (identity-start contract).
LstmNet init_net(const LstmSpec& spec, Rng& rng);

template <class S>
struct MetaStateT {
  std::vector<std::vector<S>> h;  // per layer
  std::vector<std::vector<S>> c;
  int step = 0;
};

using MetaState = MetaStateT<double>;

template <class S>
MetaStateT<S> zero_state(const LstmSpec& spec, const S& zero) {
  MetaStateT<S> st;
  st.h.assign(spec.layers, std::vector<S>(spec.hidden_dim, zero));
  st.c.assign(spec.layers, std::vector<S>(spec.hidden_dim, zero));
  return st;
}

template <class S>
struct HeadOut {
  std::optional<tasks::V2<S>> update;  // 0.1 tanh(.) per coordinate
  std::optional<S> theta;              // pi tanh(.), in (-pi, pi)
  std::optional<S> lr;                 // softplus(. + lr_shift)
  std::optional<S> beta;               // sigmoid(.)
};

// One cell step through both layers plus the output heads. `lr_shift` is
// added to the lr head's pre-activation so softplus lands on the configured
// base step size when the head is still zero.
template <class S>
HeadOut<S> lstm_step(const LstmSpec& spec, std::span<const S> phi, std::span<const S> input,
                     MetaStateT<S>& state, double lr_shift = 0.0) {
  using namespace teleopt::scalar;
  if (static_cast<int>(input.size()) != spec.input_dim) {
    throw std::invalid_argument("lstm_step: input size does not match spec");
  }
  if (phi.size() != spec.param_count()) {
    throw std::invalid_argument("lstm_step: phi size does not match spec");
  }

  std::size_t cur = 0;
  const auto take = [&](std::size_t n) {
    auto s = phi.subspan(cur, n);
    cur += n;
    return s;
  };

  const int hd = spec.hidden_dim;
  std::vector<S> x(input.begin(), input.end());
  for (int layer = 0; layer < spec.layers; ++layer) {
    const int in_dim = layer == 0 ? spec.input_dim : hd;
    std::span<const S> wx[4], wh[4], b[4];
    for (int g = 0; g < 4; ++g) {
      wx[g] = take(static_cast<std::size_t>(hd) * in_dim);
      wh[g] = take(static_cast<std::size_t>(hd) * hd);
      b[g] = take(static_cast<std::size_t>(hd));
    }
    const std::vector<S>& h_prev = state.h[layer];
    const std::vector<S>& c_prev = state.c[layer];
    std::vector<S> h_new;
    std::vector<S> c_new;
    h_new.reserve(hd);
    c_new.reserve(hd);
    for (int j = 0; j < hd; ++j) {
      S pre[4];
      for (int g = 0; g < 4; ++g) {
        S acc = b[g][j];
        for (int k = 0; k < in_dim; ++k) acc = acc + wx[g][j * in_dim + k] * x[k];
        for (int k = 0; k < hd; ++k) acc = acc + wh[g][j * hd + k] * h_prev[k];
        pre[g] = acc;
      }
      S gate_i = sigmoid(pre[0]);
      S gate_f = sigmoid(pre[1]);
      S cand = tanh(pre[2]);
      S gate_o = sigmoid(pre[3]);
      S c_next = gate_f * c_prev[j] + gate_i * cand;
      h_new.push_back(gate_o * tanh(c_next));
      c_new.push_back(std::move(c_next));
    }
    state.h[layer] = h_new;
    state.c[layer] = std::move(c_new);
    x = std::move(h_new);
  }

  HeadOut<S> out;
  for (HeadKind kind : spec.heads) {
    const int od = head_out_dim(kind);
    auto w = take(static_cast<std::size_t>(od) * hd);
    auto bb = take(static_cast<std::size_t>(od));
    std::vector<S> raw;
    raw.reserve(od);
    for (int r = 0; r < od; ++r) {
      S acc = bb[r];
      for (int k = 0; k < hd; ++k) acc = acc + w[r * hd + k] * x[k];
      raw.push_back(std::move(acc));
    }
    switch (kind) {
      case HeadKind::kUpdate:
        out.update = tasks::V2<S>{0.1 * tanh(raw[0]), 0.1 * tanh(raw[1])};
        break;
      case HeadKind::kTheta:
        out.theta = std::numbers::pi * tanh(raw[0]);
        break;
      case HeadKind::kLr:
        out.lr = softplus(raw[0] + lr_shift);
        break;
      case HeadKind::kBeta:
        out.beta = sigmoid(raw[0]);
        break;
    }
  }
  return out;
}

// Inner-step indices (1-based) at which the learned group element is applied.
struct TeleportPolicy {
  bool every_step = true;
  optim::TeleportSchedule schedule;

  bool fires(int t) const { return every_step || schedule.contains(t); }
};

// An L2O meta-optimizer: the Vanilla and Teleport variants are one LSTM
// (update head, plus a theta head for Teleport); TeleportMomentum pairs m1
// (learning-rate head) with m2 (momentum-coefficient and theta heads), per
// step: v <- beta_t v - alpha_t grad, x <- g_theta(x + v) when t is in the
// schedule.
struct MetaOptimizer {
  Variant variant = Variant::kVanilla;
  LstmNet m1;
  std::optional<LstmNet> m2;
  double alpha0 = 0.01;  // base step size; calibrates the lr head
  TeleportPolicy policy;
  bool preprocess_inputs = false;
};

template <class S>
struct InnerResult {
  tasks::V2<S> x;
  std::optional<S> theta;
  bool teleport_skipped = false;
};

namespace detail {

// Gradient features, optionally in the scale-invariant (log-magnitude, sign)
// encoding useful at larger scales. The sign feature is locally constant, so it
// enters the tape as a constant.
template <class S>
std::vector<S> make_features(const tasks::V2<S>& z, bool preprocess) {
  using namespace teleopt::scalar;
  if (!preprocess) return {z[0], z[1]};
  constexpr double p = 10.0;
  const double floor = std::exp(-p);
  std::vector<S> out;
  out.reserve(4);
  for (const S& g : z) {
    const double gv = value_of(g);
    if (std::abs(gv) >= floor) {
      out.push_back(ln(sqr(g)) * (0.5 / p));
      out.push_back(g * 0.0 + (gv > 0.0 ? 1.0 : -1.0));
    } else {
      out.push_back(g * 0.0 - 1.0);
      out.push_back(g * std::exp(p));
    }
  }
  return out;
}

}  // namespace detail

// One inner optimization step. z_t = grad f(x_{t-1}) feeds the LSTM(s); the
// variant decides how their heads turn into the next iterate. `alpha` is the
// base step size used to calibrate the TeleportMomentum lr head. A singular
// group action downgrades the teleport to the identity and sets
// `teleport_skipped`.
template <class S>
InnerResult<S> inner_update(const MetaOptimizer& opt, std::span<const S> phi1,
                            std::span<const S> phi2, const tasks::Task& task,
                            const tasks::V2<S>& x_prev, MetaStateT<S>& state1,
                            MetaStateT<S>& state2, tasks::V2<S>& velocity, double alpha) {
  using namespace teleopt::scalar;
  const int t = ++state1.step;
  tasks::V2<S> z = tasks::grad_f(task, x_prev);
  const std::vector<S> feat = detail::make_features(z, opt.preprocess_inputs);

  const auto try_act = [&](const S& theta, const tasks::V2<S>& mid,
                           InnerResult<S>& res) {
    try {
      res.x = sym::act(task, theta, mid);
      res.theta = theta;
    } catch (const SingularMapError&) {
      res.x = mid;
      res.teleport_skipped = true;
    } catch (const ad::DomainError&) {
      res.x = mid;
      res.teleport_skipped = true;
    }
  };

  InnerResult<S> res{x_prev, std::nullopt, false};
  switch (opt.variant) {
    case Variant::kVanilla: {
      HeadOut<S> o = lstm_step<S>(opt.m1.spec, phi1, feat, state1);
      res.x = {x_prev[0] + (*o.update)[0], x_prev[1] + (*o.update)[1]};
      break;
    }
    case Variant::kTeleport: {
      HeadOut<S> o = lstm_step<S>(opt.m1.spec, phi1, feat, state1);
      const tasks::V2<S> mid{x_prev[0] + (*o.update)[0], x_prev[1] + (*o.update)[1]};
      try_act(*o.theta, mid, res);
      break;
    }
    case Variant::kTeleportMomentum: {
      if (!(alpha > 0.0)) {
        throw std::invalid_argument("inner_update: TeleportMomentum needs alpha > 0");
      }
      HeadOut<S> o1 = lstm_step<S>(opt.m1.spec, phi1, feat, state1, softplus_inverse(alpha));
      state2.step = state1.step;
      HeadOut<S> o2 = lstm_step<S>(opt.m2->spec, phi2, feat, state2);
      velocity = {(*o2.beta) * velocity[0] - (*o1.lr) * z[0],
                  (*o2.beta) * velocity[1] - (*o1.lr) * z[1]};
      const tasks::V2<S> mid{x_prev[0] + velocity[0], x_prev[1] + velocity[1]};
      if (opt.policy.fires(t)) {
        try_act(*o2.theta, mid, res);
      } else {
        res.x = mid;
      }
      break;
    }
  }
  return res;
}

// ---- training ----

struct L2OConfig {
  Variant variant = Variant::kVanilla;
  int runs = 200;   // R: meta-training trajectories
  int epochs = 40;  // N: inner steps per trajectory
  int unroll = 10;  // T: steps between meta-updates (truncation boundary)
  std::vector<double> weights;  // per-step loss weights; empty = uniform 1
  double meta_lr_m1 = 0.01;
  double meta_lr_m2 = 0.01;
  double meta_momentum = 0.9;
  double grad_clip = 1.0;
  int hidden_dim = 32;
  double alpha0 = 0.01;
  std::vector<int> teleport_schedule;  // empty = every step
  int eval_tasks = 20;
  bool preprocess_inputs = false;
};

// Throws ConfigError on violated invariants (T must divide N, weights > 0...).
void validate(const L2OConfig& config);

// Hidden dim 300, meta learning rates 1e-4 (m1) / 1e-3 (m2), long unrolls.
L2OConfig full_scale_config(Variant variant);

MetaOptimizer init_meta_optimizer(const L2OConfig& config, std::uint64_t seed);

struct TrainResult {
  MetaOptimizer opt;
  std::vector<double> curve;  // per-run summed meta-loss
  int diverged_runs = 0;
  int skipped_meta_steps = 0;
  std::vector<std::uint64_t> train_task_seeds;
};

// Algorithm: per run, sample (f, x0) from the distribution, unroll N inner
// steps accumulating sum_t w_t f(x_t), and every T steps update phi from
// d loss / d phi (SGD with momentum, global norm clip), then zero the loss.
// Hidden/cell/velocity/x values carry across truncation boundaries; their
// gradients do not.
TrainResult train(const L2OConfig& config, const tasks::TaskDistribution& dist,
                  std::uint64_t seed);

// Frozen-parameter rollouts. Divergence is flagged per-trajectory.
optim::Trajectory evaluate_one(const MetaOptimizer& opt, const tasks::Task& task, int n_steps);
std::vector<optim::Trajectory> evaluate(const MetaOptimizer& opt,
                                        std::span<const tasks::Task> eval_tasks, int n_steps);

// sum_t w_t f(x_t) of a frozen rollout (uniform weights when empty).
double meta_loss(const MetaOptimizer& opt, const tasks::Task& task, int n_steps,
                 std::span<const double> weights = {});

// Checks that every teleported record preserves f: act(-theta) must map the
// recorded point back to an equal-f point. Returns worst relative deviation.
double teleport_invariance_audit(const tasks::Task& task, const optim::Trajectory& traj);

// Held-out tasks drawn from a seed stream disjoint from training runs.
std::vector<tasks::Task> sample_eval_tasks(const tasks::TaskDistribution& dist, int count,
                                           std::uint64_t seed);

// ---- meta-gradient plumbing (exposed for gradient checks) ----

struct CarriedState {
  tasks::V2<double> x{0.0, 0.0};
  MetaState st1, st2;
  tasks::V2<double> velocity{0.0, 0.0};
};

CarriedState initial_state(const MetaOptimizer& opt, const tasks::Task& task);

struct WindowResult {
  double loss = 0.0;
  std::vector<double> grad1, grad2;  // d loss / d phi, empty when !want_grad
  CarriedState carried;
  bool diverged = false;
  int teleports_skipped = 0;
};

// Unrolls steps t = t_begin .. t_begin+t_count-1 (1-based, for weights and
// the teleport schedule) from `in`, on the tape when want_grad.
WindowResult run_window(const MetaOptimizer& opt, const tasks::Task& task,
                        const CarriedState& in, int t_begin, int t_count,
                        std::span<const double> weights, bool want_grad);

// ---- checkpoints ----

void save_checkpoint(const MetaOptimizer& opt, const L2OConfig& config,
                     const std::filesystem::path& path);

struct Checkpoint {
  MetaOptimizer opt;
  L2OConfig config;
};

Checkpoint load_checkpoint(const std::filesystem::path& path);

void write_curve_csv(const std::filesystem::path& path, std::span<const double> curve);

// Lenient JSON form of L2OConfig for experiment configs: missing fields take
// the defaults above. Checkpoints use the strict versioned form instead.
L2OConfig parse_l2o_config(const std::string& json_text);
std::string l2o_config_to_json_text(const L2OConfig& config);

}  // namespace teleopt::meta
