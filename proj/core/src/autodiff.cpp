#include "teleopt/autodiff.hpp"

#include <cmath>

namespace teleopt::ad {

const char* op_name(Op op) {
  switch (op) {
    case Op::kConst: return "const";
    case Op::kVar: return "var";
    case Op::kAdd: return "add";
    case Op::kSub: return "sub";
    case Op::kMul: return "mul";
    case Op::kDiv: return "div";
    case Op::kNeg: return "neg";
    case Op::kSin: return "sin";
    case Op::kCos: return "cos";
    case Op::kTanh: return "tanh";
    case Op::kSigmoid: return "sigmoid";
    case Op::kExp: return "exp";
    case Op::kLn: return "ln";
    case Op::kSqr: return "sqr";
    case Op::kPowi: return "powi";
  }
  return "?";
}

namespace {

double stable_sigmoid(double x) {
  if (x >= 0.0) {
    return 1.0 / (1.0 + std::exp(-x));
  }
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double int_pow(double x, int k) {
  if (k < 0) return 1.0 / int_pow(x, -k);
  double r = 1.0;
  double base = x;
  for (int e = k; e > 0; e >>= 1) {
    if (e & 1) r *= base;
    base *= base;
  }
  return r;
}

}  // namespace

namespace detail {
Tape& same_tape(const Value& a, const Value& b) {
  if (a.tape != b.tape) {
    throw std::logic_error("ad: operands belong to different tapes");
  }
  return *a.tape;
}
}  // namespace detail

std::size_t Tape::check(NodeId id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= nodes_.size()) {
    throw std::out_of_range("ad: node id " + std::to_string(id) + " not on tape");
  }
  return static_cast<std::size_t>(id);
}

NodeId Tape::push(const Node& n) {
  if (!std::isfinite(n.value) || !std::isfinite(n.local_grad[0]) ||
      !std::isfinite(n.local_grad[1])) {
    throw DomainError(std::string("ad: non-finite result in op '") + op_name(n.op) + "'");
  }
  nodes_.push_back(n);
  return static_cast<NodeId>(nodes_.size() - 1);
}

NodeId Tape::var(double value) {
  Node n;
  n.op = Op::kVar;
  n.value = value;
  return push(n);
}

NodeId Tape::constant(double value) {
  Node n;
  n.op = Op::kConst;
  n.value = value;
  return push(n);
}

NodeId Tape::apply(Op op, NodeId a) {
  const double x = value(a);
  Node n;
  n.op = op;
  n.parent[0] = a;
  switch (op) {
    case Op::kNeg:
      n.value = -x;
      n.local_grad[0] = -1.0;
      break;
    case Op::kSin:
      n.value = std::sin(x);
      n.local_grad[0] = std::cos(x);
      break;
    case Op::kCos:
      n.value = std::cos(x);
      n.local_grad[0] = -std::sin(x);
      break;
    case Op::kTanh: {
      const double th = std::tanh(x);
      n.value = th;
      n.local_grad[0] = 1.0 - th * th;
      break;
    }
    case Op::kSigmoid: {
      const double s = stable_sigmoid(x);
      n.value = s;
      n.local_grad[0] = s * (1.0 - s);
      break;
    }
    case Op::kExp: {
      const double e = std::exp(x);
      n.value = e;
      n.local_grad[0] = e;
      break;
    }
    case Op::kLn:
      if (!(x > 0.0)) {
        throw DomainError("ad: ln requires a positive argument, got " + std::to_string(x));
      }
      n.value = std::log(x);
      n.local_grad[0] = 1.0 / x;
      break;
    case Op::kSqr:
      n.value = x * x;
      n.local_grad[0] = 2.0 * x;
      break;
    default:
      throw std::logic_error(std::string("ad: '") + op_name(op) + "' is not a unary op");
  }
  return push(n);
}

NodeId Tape::apply(Op op, NodeId a, NodeId b) {
  const double x = value(a);
  const double y = value(b);
  Node n;
  n.op = op;
  n.parent[0] = a;
  n.parent[1] = b;
  switch (op) {
    case Op::kAdd:
      n.value = x + y;
      n.local_grad[0] = 1.0;
      n.local_grad[1] = 1.0;
      break;
    case Op::kSub:
      n.value = x - y;
      n.local_grad[0] = 1.0;
      n.local_grad[1] = -1.0;
      break;
    case Op::kMul:
      n.value = x * y;
      n.local_grad[0] = y;
      n.local_grad[1] = x;
      break;
    case Op::kDiv:
      if (y == 0.0) {
        throw DomainError("ad: div by zero");
      }
      n.value = x / y;
      n.local_grad[0] = 1.0 / y;
      n.local_grad[1] = -x / (y * y);
      break;
    default:
      throw std::logic_error(std::string("ad: '") + op_name(op) + "' is not a binary op");
  }
  return push(n);
}

NodeId Tape::apply_powi(NodeId a, int k) {
  const double x = value(a);
  if (k < 0 && x == 0.0) {
    throw DomainError("ad: powi with negative exponent at zero base");
  }
  Node n;
  n.op = Op::kPowi;
  n.parent[0] = a;
  n.exponent = static_cast<std::int16_t>(k);
  n.value = int_pow(x, k);
  n.local_grad[0] = (k == 0) ? 0.0 : static_cast<double>(k) * int_pow(x, k - 1);
  return push(n);
}

std::vector<double> Tape::backward(NodeId output) const {
  check(output);
  std::vector<double> adj(nodes_.size(), 0.0);
  adj[static_cast<std::size_t>(output)] = 1.0;
  for (NodeId i = output; i >= 0; --i) {
    const double a = adj[static_cast<std::size_t>(i)];
    if (a == 0.0) continue;
    const Node& n = nodes_[static_cast<std::size_t>(i)];
    if (n.parent[0] != kNoParent) {
      adj[static_cast<std::size_t>(n.parent[0])] += a * n.local_grad[0];
    }
    if (n.parent[1] != kNoParent) {
      adj[static_cast<std::size_t>(n.parent[1])] += a * n.local_grad[1];
    }
  }
  return adj;
}

double grad_check(const GraphBuilder& f, std::span<const double> point, double eps) {
  if (!(eps > 0.0)) {
    throw std::invalid_argument("grad_check: eps must be positive");
  }

  const auto eval_at = [&](std::span<const double> p) {
    Tape t;
    std::vector<Value> leaves;
    leaves.reserve(p.size());
    for (double v : p) leaves.push_back(make_var(t, v));
    return f(t, leaves).val();
  };

  Tape t;
  std::vector<Value> leaves;
  leaves.reserve(point.size());
  for (double v : point) leaves.push_back(make_var(t, v));
  const Value out = f(t, leaves);
  const std::vector<double> adj = t.backward(out.id);

  double worst = 0.0;
  std::vector<double> p(point.begin(), point.end());
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double keep = p[i];
    p[i] = keep + eps;
    const double hi = eval_at(p);
    p[i] = keep - eps;
    const double lo = eval_at(p);
    p[i] = keep;
    const double fd = (hi - lo) / (2.0 * eps);
    const double ad_g = adj[static_cast<std::size_t>(leaves[i].id)];
    const double err = std::abs(ad_g - fd) / (1.0 + std::abs(fd));
    worst = std::max(worst, err);
  }
  return worst;
}

}  // namespace teleopt::ad
