#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace teleopt::ad {

// Operation domain violation (div by zero, ln of non-positive, non-finite
// result). The message names the offending op.
struct DomainError : std::runtime_error {
  explicit DomainError(const std::string& what) : std::runtime_error(what) {}
};

enum class Op : std::uint8_t {
  kConst,
  kVar,
  kAdd,
  kSub,
  kMul,
  kDiv,
  kNeg,
  kSin,
  kCos,
  kTanh,
  kSigmoid,
  kExp,
  kLn,
  kSqr,
  kPowi,
};

const char* op_name(Op op);

using NodeId = std::int32_t;
inline constexpr NodeId kNoParent = -1;

struct Node {
  double value = 0.0;
  double local_grad[2] = {0.0, 0.0};  // d(value)/d(parent)
  NodeId parent[2] = {kNoParent, kNoParent};
  Op op = Op::kConst;
  std::int16_t exponent = 0;  // kPowi only
};

// Append-only scalar computation graph. Node ids are dense and topologically
// ordered: a node's parents always have smaller ids. Values and local
// gradients are checked finite at construction; a tape serves exactly one
// trajectory at a time and is single-threaded.
class Tape {
 public:
  Tape() = default;

  NodeId var(double value);       // differentiable leaf
  NodeId constant(double value);  // non-differentiable leaf

  NodeId apply(Op op, NodeId a);
  NodeId apply(Op op, NodeId a, NodeId b);
  NodeId apply_powi(NodeId a, int k);

  double value(NodeId id) const { return nodes_[check(id)].value; }
  const Node& node(NodeId id) const { return nodes_[check(id)]; }
  std::size_t size() const { return nodes_.size(); }
  void reset() { nodes_.clear(); }
  void reserve(std::size_t n) { nodes_.reserve(n); }

  // Adjoints of every node w.r.t. `output`, in node-id order. adj[output] is
  // 1; leaves hold d(output)/d(leaf). Does not mutate the tape.
  std::vector<double> backward(NodeId output) const;

 private:
  std::size_t check(NodeId id) const;
  NodeId push(const Node& n);

  std::vector<Node> nodes_;
};

// Handle to a tape node; cheap to copy. Arithmetic on Values appends nodes.
struct Value {
  Tape* tape = nullptr;
  NodeId id = kNoParent;

  double val() const { return tape->value(id); }
};

inline Value make_var(Tape& t, double v) { return {&t, t.var(v)}; }
inline Value make_const(Tape& t, double v) { return {&t, t.constant(v)}; }

namespace detail {
Tape& same_tape(const Value& a, const Value& b);
}

inline Value operator+(Value a, Value b) {
  Tape& t = detail::same_tape(a, b);
  return {&t, t.apply(Op::kAdd, a.id, b.id)};
}
inline Value operator-(Value a, Value b) {
  Tape& t = detail::same_tape(a, b);
  return {&t, t.apply(Op::kSub, a.id, b.id)};
}
inline Value operator*(Value a, Value b) {
  Tape& t = detail::same_tape(a, b);
  return {&t, t.apply(Op::kMul, a.id, b.id)};
}
inline Value operator/(Value a, Value b) {
  Tape& t = detail::same_tape(a, b);
  return {&t, t.apply(Op::kDiv, a.id, b.id)};
}
inline Value operator-(Value a) { return {a.tape, a.tape->apply(Op::kNeg, a.id)}; }

inline Value operator+(Value a, double c) { return a + make_const(*a.tape, c); }
inline Value operator+(double c, Value a) { return make_const(*a.tape, c) + a; }
inline Value operator-(Value a, double c) { return a - make_const(*a.tape, c); }
inline Value operator-(double c, Value a) { return make_const(*a.tape, c) - a; }
inline Value operator*(Value a, double c) { return a * make_const(*a.tape, c); }
inline Value operator*(double c, Value a) { return make_const(*a.tape, c) * a; }
inline Value operator/(Value a, double c) { return a / make_const(*a.tape, c); }
inline Value operator/(double c, Value a) { return make_const(*a.tape, c) / a; }

inline Value sin(Value a) { return {a.tape, a.tape->apply(Op::kSin, a.id)}; }
inline Value cos(Value a) { return {a.tape, a.tape->apply(Op::kCos, a.id)}; }
inline Value tanh(Value a) { return {a.tape, a.tape->apply(Op::kTanh, a.id)}; }
inline Value sigmoid(Value a) { return {a.tape, a.tape->apply(Op::kSigmoid, a.id)}; }
inline Value exp(Value a) { return {a.tape, a.tape->apply(Op::kExp, a.id)}; }
inline Value ln(Value a) { return {a.tape, a.tape->apply(Op::kLn, a.id)}; }
inline Value sqr(Value a) { return {a.tape, a.tape->apply(Op::kSqr, a.id)}; }
inline Value powi(Value a, int k) { return {a.tape, a.tape->apply_powi(a.id, k)}; }

inline double value_of(const Value& v) { return v.val(); }

// Builds a scalar expression from leaves placed at `point`.
using GraphBuilder = std::function<Value(Tape&, std::span<const Value>)>;

// Max over coordinates of |autodiff - central difference| / (1 + |central
// difference|), the error measure used by all gradient checks in this repo.
double grad_check(const GraphBuilder& f, std::span<const double> point, double eps);

}  // namespace teleopt::ad
