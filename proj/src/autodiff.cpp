#include "dpinn/autodiff.hpp"

#include <string>

namespace dpinn::ad {

namespace {

const char* op_name(Op op) {
  switch (op) {
    case Op::kInput: return "input";
    case Op::kConstant: return "constant";
    case Op::kAdd: return "add";
    case Op::kSub: return "sub";
    case Op::kMul: return "mul";
    case Op::kDiv: return "div";
    case Op::kNeg: return "neg";
    case Op::kAddConst: return "add_const";
    case Op::kMulConst: return "mul_const";
    case Op::kTanh: return "tanh";
    case Op::kSqrt: return "sqrt";
    case Op::kPow: return "pow";
    case Op::kPositivePart: return "positive_part";
    case Op::kAbs: return "abs";
  }
  return "unknown";
}

Tape* common_tape(const Var& a, const Var& b) {
  if (a.on_tape() && b.on_tape() && a.tape() != b.tape()) {
    throw StructuralError("operands recorded on different tapes");
  }
  return a.on_tape() ? a.tape() : b.tape();
}

}  // namespace

Var Tape::input(double value) {
  Node n;
  n.op = Op::kInput;
  n.value = value;
  std::int32_t idx = push(n);
  inputs_.push_back(idx);
  return Var(this, idx, value);
}

Var Tape::constant(double value) {
  Node n;
  n.op = Op::kConstant;
  n.value = value;
  return Var(this, push(n), value);
}

std::int32_t Tape::push(const Node& node) {
  nodes_.push_back(node);
  return static_cast<std::int32_t>(nodes_.size() - 1);
}

std::int32_t Tape::operand_index(const Var& v) const {
  if (v.tape() != this) {
    throw StructuralError("operand is not recorded on this tape");
  }
  if (v.index() < 0 || static_cast<std::size_t>(v.index()) >= nodes_.size()) {
    throw StructuralError("operand index does not precede its consumer");
  }
  return v.index();
}

Var Tape::apply(Op op, std::span<const Var> operands, double param) {
  const bool binary = op == Op::kAdd || op == Op::kSub || op == Op::kMul || op == Op::kDiv;
  const bool unary = op == Op::kNeg || op == Op::kAddConst || op == Op::kMulConst ||
                     op == Op::kTanh || op == Op::kSqrt || op == Op::kPow ||
                     op == Op::kPositivePart;
  if (!binary && !unary) {
    throw StructuralError(std::string("unsupported primitive on tape: ") + op_name(op));
  }
  const std::size_t arity = binary ? 2 : 1;
  if (operands.size() != arity) {
    throw StructuralError(std::string("wrong operand count for primitive ") + op_name(op));
  }

  Node n;
  n.op = op;
  n.operands[0] = operand_index(operands[0]);
  const double a = operands[0].value();
  if (binary) {
    n.operands[1] = operand_index(operands[1]);
    const double b = operands[1].value();
    switch (op) {
      case Op::kAdd: n.value = a + b; n.partials = {1.0, 1.0}; break;
      case Op::kSub: n.value = a - b; n.partials = {1.0, -1.0}; break;
      case Op::kMul: n.value = a * b; n.partials = {b, a}; break;
      case Op::kDiv: n.value = a / b; n.partials = {1.0 / b, -a / (b * b)}; break;
      default: break;
    }
  } else {
    switch (op) {
      case Op::kNeg: n.value = -a; n.partials[0] = -1.0; break;
      case Op::kAddConst: n.value = a + param; n.partials[0] = 1.0; break;
      case Op::kMulConst: n.value = a * param; n.partials[0] = param; break;
      case Op::kTanh: {
        const double t = std::tanh(a);
        n.value = t;
        n.partials[0] = 1.0 - t * t;
        break;
      }
      case Op::kSqrt: {
        const double s = std::sqrt(a);
        n.value = s;
        n.partials[0] = 0.5 / s;
        break;
      }
      case Op::kPow:
        n.value = std::pow(a, param);
        n.partials[0] = param * std::pow(a, param - 1.0);
        break;
      case Op::kPositivePart:
        n.value = positive_part(a);
        n.partials[0] = positive_part_derivative(a);
        break;
      default: break;
    }
  }
  return Var(this, push(n), n.value);
}

std::vector<double> Tape::adjoints(const Var& output) const {
  std::vector<double> adj(nodes_.size(), 0.0);
  if (!output.on_tape()) return adj;
  const std::int32_t out = operand_index(output);
  adj[static_cast<std::size_t>(out)] = 1.0;
  for (std::int32_t i = out; i >= 0; --i) {
    const Node& n = nodes_[static_cast<std::size_t>(i)];
    const double a = adj[static_cast<std::size_t>(i)];
    if (a == 0.0) continue;
    for (int k = 0; k < 2; ++k) {
      if (n.operands[k] >= 0) adj[static_cast<std::size_t>(n.operands[k])] += a * n.partials[k];
    }
  }
  return adj;
}

std::vector<double> Tape::gradient(const Var& output) const {
  const std::vector<double> adj = adjoints(output);
  std::vector<double> g;
  g.reserve(inputs_.size());
  for (std::int32_t idx : inputs_) g.push_back(adj[static_cast<std::size_t>(idx)]);
  return g;
}

// Mixed constant/tape arithmetic: a tapeless operand is folded into a
// const-parameter primitive instead of being recorded as a node.

Var operator+(const Var& a, const Var& b) {
  Tape* t = common_tape(a, b);
  if (t == nullptr) return Var(a.value() + b.value());
  if (!a.on_tape()) return t->apply(Op::kAddConst, std::array{b}, a.value());
  if (!b.on_tape()) return t->apply(Op::kAddConst, std::array{a}, b.value());
  return t->apply(Op::kAdd, std::array{a, b});
}

Var operator-(const Var& a, const Var& b) {
  Tape* t = common_tape(a, b);
  if (t == nullptr) return Var(a.value() - b.value());
  if (!b.on_tape()) return t->apply(Op::kAddConst, std::array{a}, -b.value());
  if (!a.on_tape()) {
    Var nb = t->apply(Op::kNeg, std::array{b});
    return t->apply(Op::kAddConst, std::array{nb}, a.value());
  }
  return t->apply(Op::kSub, std::array{a, b});
}

Var operator*(const Var& a, const Var& b) {
  Tape* t = common_tape(a, b);
  if (t == nullptr) return Var(a.value() * b.value());
  if (!a.on_tape()) return t->apply(Op::kMulConst, std::array{b}, a.value());
  if (!b.on_tape()) return t->apply(Op::kMulConst, std::array{a}, b.value());
  return t->apply(Op::kMul, std::array{a, b});
}

Var operator/(const Var& a, const Var& b) {
  Tape* t = common_tape(a, b);
  if (t == nullptr) return Var(a.value() / b.value());
  if (!b.on_tape()) return t->apply(Op::kMulConst, std::array{a}, 1.0 / b.value());
  if (!a.on_tape()) {
    Var c = t->constant(a.value());
    return t->apply(Op::kDiv, std::array{c, b});
  }
  return t->apply(Op::kDiv, std::array{a, b});
}

Var operator-(const Var& a) {
  if (!a.on_tape()) return Var(-a.value());
  return a.tape()->apply(Op::kNeg, std::array{a});
}

Var tanh(const Var& a) {
  if (!a.on_tape()) return Var(std::tanh(a.value()));
  return a.tape()->apply(Op::kTanh, std::array{a});
}

Var sqrt(const Var& a) {
  if (!a.on_tape()) return Var(std::sqrt(a.value()));
  return a.tape()->apply(Op::kSqrt, std::array{a});
}

Var pow(const Var& a, double p) {
  if (!a.on_tape()) return Var(std::pow(a.value(), p));
  return a.tape()->apply(Op::kPow, std::array{a}, p);
}

Var positive_part(const Var& a) {
  if (!a.on_tape()) return Var(positive_part(a.value()));
  return a.tape()->apply(Op::kPositivePart, std::array{a});
}

}  // namespace dpinn::ad
