#pragma once

// Scalar automatic differentiation: a reverse-mode tape (`Tape`/`Var`) and
// forward-mode dual numbers (`Dual<T>`) that can be nested over any scalar,
// including tape variables. Nesting duals over `Var` gives input-derivatives
// that stay differentiable in the parameters recorded on the tape, which is
// what a loss containing PDE residuals needs.

#include "dpinn/core.hpp"

#include <array>
#include <cmath>
#include <cstdint>
#include <span>
#include <type_traits>
#include <vector>

namespace dpinn::ad {

/// Subgradient convention for (s)+: 1 for s > 0, 0 otherwise (0 at the kink).
inline double positive_part_derivative(double s) { return s > 0.0 ? 1.0 : 0.0; }
inline double positive_part(double s) { return s > 0.0 ? s : 0.0; }

enum class Op : std::uint8_t {
  kInput,
  kConstant,
  // binary
  kAdd,
  kSub,
  kMul,
  kDiv,
  // unary; kAddConst/kMulConst/kPow carry a real parameter
  kNeg,
  kAddConst,
  kMulConst,
  kTanh,
  kSqrt,
  kPow,
  kPositivePart,
  // Declared so that graph builders can name it; the tape rejects it.
  kAbs,
};

struct Node {
  Op op = Op::kConstant;
  std::array<std::int32_t, 2> operands{-1, -1};
  std::array<double, 2> partials{0.0, 0.0};
  double value = 0.0;
};

class Tape;

/// Handle to a tape node. A `Var` without a tape is a constant that has not
/// been recorded; arithmetic between such constants stays off the tape.
class Var {
 public:
  Var() = default;
  Var(double constant) : value_(constant) {}  // NOLINT: implicit lift

  double value() const { return value_; }
  std::int32_t index() const { return index_; }
  Tape* tape() const { return tape_; }
  bool on_tape() const { return tape_ != nullptr; }

 private:
  friend class Tape;
  Var(Tape* tape, std::int32_t index, double value)
      : tape_(tape), index_(index), value_(value) {}

  Tape* tape_ = nullptr;
  std::int32_t index_ = -1;
  double value_ = 0.0;
};

/// Append-only record of primitive operations in topological order.
///
/// Local partials are evaluated when a node is recorded, so the reverse
/// sweep is a single pass over the nodes with no re-evaluation. A tape is
/// not modified by `adjoints`/`gradient`, so a finished tape may be shared.
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var input(double value);
  Var constant(double value);

  /// Records a primitive. Throws StructuralError for an unsupported op, a
  /// wrong operand count, or operands that do not precede the new node.
  Var apply(Op op, std::span<const Var> operands, double param = 0.0);

  /// Adjoint of every node with respect to `output` (one reverse sweep).
  std::vector<double> adjoints(const Var& output) const;

  /// d output / d input for each `input()` node, in creation order.
  std::vector<double> gradient(const Var& output) const;

  std::span<const Node> nodes() const { return nodes_; }
  std::span<const std::int32_t> inputs() const { return inputs_; }
  std::size_t size() const { return nodes_.size(); }
  void reserve(std::size_t n) { nodes_.reserve(n); }

 private:
  std::int32_t push(const Node& node);
  std::int32_t operand_index(const Var& v) const;

  std::vector<Node> nodes_;
  std::vector<std::int32_t> inputs_;
};

// -- Var arithmetic --------------------------------------------------------

Var operator+(const Var& a, const Var& b);
Var operator-(const Var& a, const Var& b);
Var operator*(const Var& a, const Var& b);
Var operator/(const Var& a, const Var& b);
Var operator-(const Var& a);
Var tanh(const Var& a);
Var sqrt(const Var& a);
Var pow(const Var& a, double p);
Var positive_part(const Var& a);

inline Var& operator+=(Var& a, const Var& b) { return a = a + b; }
inline Var& operator-=(Var& a, const Var& b) { return a = a - b; }
inline Var& operator*=(Var& a, const Var& b) { return a = a * b; }

// -- Dual numbers ----------------------------------------------------------

/// Value plus one directional derivative. `T` may itself be a Dual or a Var.
template <class T>
struct Dual {
  T value{};
  T tangent{};

  Dual() = default;
  Dual(double v) : value(v), tangent(0.0) {}  // NOLINT: implicit lift
  Dual(T v, T t) : value(std::move(v)), tangent(std::move(t)) {}
  template <class U>
    requires(!std::is_arithmetic_v<U> && std::is_constructible_v<T, const U&>)
  explicit Dual(const U& v) : value(T(v)), tangent(0.0) {}

  Dual& operator+=(const Dual& o) { return *this = *this + o; }
  Dual& operator-=(const Dual& o) { return *this = *this - o; }
  Dual& operator*=(const Dual& o) { return *this = *this * o; }
};

template <class T>
Dual<T> operator+(const Dual<T>& a, const Dual<T>& b) {
  return {a.value + b.value, a.tangent + b.tangent};
}
template <class T>
Dual<T> operator-(const Dual<T>& a, const Dual<T>& b) {
  return {a.value - b.value, a.tangent - b.tangent};
}
template <class T>
Dual<T> operator-(const Dual<T>& a) {
  return {-a.value, -a.tangent};
}
template <class T>
Dual<T> operator*(const Dual<T>& a, const Dual<T>& b) {
  return {a.value * b.value, a.tangent * b.value + a.value * b.tangent};
}
template <class T>
Dual<T> operator/(const Dual<T>& a, const Dual<T>& b) {
  T q = a.value / b.value;
  return {q, (a.tangent - q * b.tangent) / b.value};
}
template <class T>
Dual<T> operator+(const Dual<T>& a, double b) { return a + Dual<T>(b); }
template <class T>
Dual<T> operator+(double a, const Dual<T>& b) { return Dual<T>(a) + b; }
template <class T>
Dual<T> operator-(const Dual<T>& a, double b) { return a - Dual<T>(b); }
template <class T>
Dual<T> operator-(double a, const Dual<T>& b) { return Dual<T>(a) - b; }
template <class T>
Dual<T> operator*(const Dual<T>& a, double b) { return {a.value * b, a.tangent * b}; }
template <class T>
Dual<T> operator*(double a, const Dual<T>& b) { return {a * b.value, a * b.tangent}; }
template <class T>
Dual<T> operator/(const Dual<T>& a, double b) { return {a.value / b, a.tangent / b}; }
template <class T>
Dual<T> operator/(double a, const Dual<T>& b) { return Dual<T>(a) / b; }

/// Underlying double of any scalar used by this module.
inline double primal(double x) { return x; }
inline double primal(const Var& x) { return x.value(); }
template <class T>
double primal(const Dual<T>& x) {
  return primal(x.value);
}

template <class T>
Dual<T> tanh(const Dual<T>& a) {
  using std::tanh;
  T v = tanh(a.value);
  return {v, (1.0 - v * v) * a.tangent};
}
template <class T>
Dual<T> sqrt(const Dual<T>& a) {
  using std::sqrt;
  T v = sqrt(a.value);
  return {v, a.tangent / (2.0 * v)};
}
template <class T>
Dual<T> pow(const Dual<T>& a, double p) {
  using std::pow;
  return {pow(a.value, p), p * pow(a.value, p - 1.0) * a.tangent};
}
template <class T>
Dual<T> positive_part(const Dual<T>& a) {
  return {positive_part(a.value), a.tangent * positive_part_derivative(primal(a.value))};
}

/// Converts a span of scalars to another scalar type (constant lift).
template <class To, class From>
std::vector<To> lift(std::span<const From> xs) {
  std::vector<To> out;
  out.reserve(xs.size());
  for (const auto& x : xs) out.push_back(To(x));
  return out;
}

// -- Derivative drivers ----------------------------------------------------

/// Row-major square matrix of an arbitrary scalar.
template <class S>
struct SquareMatrix {
  int dim = 0;
  std::vector<S> entries;

  S& operator()(int i, int j) { return entries[static_cast<std::size_t>(i * dim + j)]; }
  const S& operator()(int i, int j) const {
    return entries[static_cast<std::size_t>(i * dim + j)];
  }
};

/// Exact gradient of `f` at `z` by forward mode. `f` must accept
/// `std::span<const Dual<S>>` (a generic lambda is the usual choice).
template <class S, class F>
std::vector<S> grad_inputs(F&& f, std::span<const S> z) {
  const std::size_t d = z.size();
  std::vector<Dual<S>> seeded(d);
  std::vector<S> out(d);
  for (std::size_t k = 0; k < d; ++k) {
    for (std::size_t j = 0; j < d; ++j) seeded[j] = Dual<S>(z[j], S(j == k ? 1.0 : 0.0));
    out[k] = f(std::span<const Dual<S>>(seeded)).tangent;
  }
  return out;
}

/// Hessian of `f` at `z` by forward-over-forward duals. Only i <= j is
/// evaluated and mirrored, so the result is exactly symmetric.
template <class S, class F>
SquareMatrix<S> second_derivs_inputs(F&& f, std::span<const S> z) {
  using D2 = Dual<Dual<S>>;
  const int d = static_cast<int>(z.size());
  SquareMatrix<S> h{d, std::vector<S>(static_cast<std::size_t>(d * d), S(0.0))};
  std::vector<D2> seeded(static_cast<std::size_t>(d));
  for (int i = 0; i < d; ++i) {
    for (int j = i; j < d; ++j) {
      for (int k = 0; k < d; ++k) {
        Dual<S> inner(z[k], S(k == i ? 1.0 : 0.0));
        Dual<S> outer_tangent(S(k == j ? 1.0 : 0.0), S(0.0));
        seeded[static_cast<std::size_t>(k)] = D2(inner, outer_tangent);
      }
      S hij = f(std::span<const D2>(seeded)).tangent.tangent;
      h(i, j) = hij;
      h(j, i) = hij;
    }
  }
  return h;
}

/// Gradient of a scalar loss with respect to `theta`. `loss` receives the
/// parameters as tape variables and returns a Var (possibly a constant).
template <class F>
std::vector<double> grad_params(F&& loss, std::span<const double> theta) {
  Tape tape;
  std::vector<Var> vars;
  vars.reserve(theta.size());
  for (double v : theta) vars.push_back(tape.input(v));
  Var out = loss(std::span<const Var>(vars));
  if (out.on_tape() && out.tape() != &tape) {
    throw StructuralError("grad_params: loss output was recorded on a foreign tape");
  }
  std::vector<double> g = tape.gradient(out);
  if (g.size() != theta.size()) {
    throw StructuralError("grad_params: gradient layout does not match parameters");
  }
  return g;
}

}  // namespace dpinn::ad
