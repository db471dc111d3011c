#include "dpinn/autodiff.hpp"

#include "test_util.hpp"

#include <gtest/gtest.h>

#include <array>
#include <cmath>

using namespace dpinn;
using namespace dpinn::ad;
using dpinn::testing::fd_best_rel_err;
using dpinn::testing::uniform;

namespace {

// f(x, y) = x^2 y, written once for every scalar type.
template <class T>
T x2y(std::span<const T> z) {
  return z[0] * z[0] * z[1];
}

// A smooth composition touching every primitive.
template <class T>
T composite(std::span<const T> z) {
  using std::pow;
  using std::sqrt;
  using std::tanh;
  const T a = tanh(0.7 * z[0] - z[1] * z[2] + 0.3);
  const T b = sqrt(1.5 + z[0] * z[0] + 0.5 * z[2] * z[2]);
  const T c = pow(2.0 + z[1] * z[1], 1.7);
  return a * b / c + (z[0] - 2.0 * z[2]) * a - (-z[1]);
}

}  // namespace

TEST(PositivePart, SubgradientConvention) {
  EXPECT_EQ(positive_part_derivative(0.5), 1.0);
  EXPECT_EQ(positive_part_derivative(-0.5), 0.0);
  EXPECT_EQ(positive_part_derivative(0.0), 0.0);
  EXPECT_EQ(positive_part(-2.0), 0.0);
  EXPECT_EQ(positive_part(2.0), 2.0);
}

TEST(GradInputs, HandDifferentiatedMonomial) {
  const std::array<double, 2> z{2.0, 3.0};
  const auto g = grad_inputs<double>([](auto s) { return x2y(s); }, std::span<const double>(z));
  EXPECT_DOUBLE_EQ(g[0], 12.0);
  EXPECT_DOUBLE_EQ(g[1], 4.0);
}

TEST(GradInputs, ConstantHasZeroGradient) {
  const std::array<double, 2> z{-0.3, 7.0};
  const auto g = grad_inputs<double>(
      [](auto s) { return typename decltype(s)::value_type(3.25); }, std::span<const double>(z));
  EXPECT_EQ(g[0], 0.0);
  EXPECT_EQ(g[1], 0.0);
}

TEST(SecondDerivs, HandDifferentiatedMonomial) {
  const std::array<double, 2> z{2.0, 3.0};
  const auto h =
      second_derivs_inputs<double>([](auto s) { return x2y(s); }, std::span<const double>(z));
  EXPECT_DOUBLE_EQ(h(0, 0), 6.0);
  EXPECT_DOUBLE_EQ(h(0, 1), 4.0);
  EXPECT_DOUBLE_EQ(h(1, 0), 4.0);
  EXPECT_DOUBLE_EQ(h(1, 1), 0.0);
}

TEST(SecondDerivs, HalfSquaredNormGivesIdentity) {
  for (int trial = 0; trial < 5; ++trial) {
    const std::array<double, 2> z{uniform(-1, 1), uniform(-1, 1)};
    const auto h = second_derivs_inputs<double>(
        [](auto s) { return 0.5 * (s[0] * s[0] + s[1] * s[1]); }, std::span<const double>(z));
    EXPECT_DOUBLE_EQ(h(0, 0), 1.0);
    EXPECT_DOUBLE_EQ(h(1, 1), 1.0);
    EXPECT_EQ(h(0, 1), 0.0);
  }
}

TEST(SecondDerivs, ExactlySymmetric) {
  for (int trial = 0; trial < 20; ++trial) {
    const std::array<double, 3> z{uniform(-1, 1), uniform(-1, 1), uniform(-1, 1)};
    const auto h = second_derivs_inputs<double>([](auto s) { return composite(s); },
                                                std::span<const double>(z));
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) EXPECT_EQ(h(i, j), h(j, i));
    }
  }
}

TEST(FiniteDifferenceOracle, GradientAndHessianOfComposite) {
  for (int trial = 0; trial < 25; ++trial) {
    std::array<double, 3> z{uniform(-1, 1), uniform(-1, 1), uniform(-1, 1)};
    const auto f = [](auto s) { return composite(s); };
    const auto g = grad_inputs<double>(f, std::span<const double>(z));
    const auto h = second_derivs_inputs<double>(f, std::span<const double>(z));
    for (int k = 0; k < 3; ++k) {
      const auto along = [&](double v) {
        auto w = z;
        w[static_cast<std::size_t>(k)] = v;
        return composite(std::span<const double>(w));
      };
      EXPECT_LE(fd_best_rel_err(along, z[static_cast<std::size_t>(k)], g[static_cast<std::size_t>(k)]), 1e-5);
      for (int j = 0; j < 3; ++j) {
        const auto grad_j = [&](double v) {
          auto w = z;
          w[static_cast<std::size_t>(k)] = v;
          return grad_inputs<double>(f, std::span<const double>(w))[static_cast<std::size_t>(j)];
        };
        EXPECT_LE(fd_best_rel_err(grad_j, z[static_cast<std::size_t>(k)], h(j, k)), 1e-5);
      }
    }
  }
}

TEST(Dual, TanhChainRule) {
  const Dual<double> a(0.37, 2.5);
  const Dual<double> t = tanh(a);
  EXPECT_EQ(t.value, std::tanh(0.37));
  EXPECT_EQ(t.tangent, (1.0 - std::tanh(0.37) * std::tanh(0.37)) * 2.5);
}

struct PrimitiveCase {
  const char* name;
  std::function<Var(Var, Var)> build;
  std::function<double(double, double)> d_da;
  std::function<double(double, double)> d_db;
};

TEST(Tape, EveryPrimitiveMatchesClosedFormDerivative) {
  const std::vector<PrimitiveCase> cases = {
      {"add", [](Var a, Var b) { return a + b; }, [](double, double) { return 1.0; },
       [](double, double) { return 1.0; }},
      {"sub", [](Var a, Var b) { return a - b; }, [](double, double) { return 1.0; },
       [](double, double) { return -1.0; }},
      {"mul", [](Var a, Var b) { return a * b; }, [](double, double b) { return b; },
       [](double a, double) { return a; }},
      {"div", [](Var a, Var b) { return a / b; }, [](double, double b) { return 1.0 / b; },
       [](double a, double b) { return -a / (b * b); }},
      {"neg", [](Var a, Var) { return -a; }, [](double, double) { return -1.0; },
       [](double, double) { return 0.0; }},
      {"add_const", [](Var a, Var) { return a + 2.5; }, [](double, double) { return 1.0; },
       [](double, double) { return 0.0; }},
      {"mul_const", [](Var a, Var) { return a * -1.75; }, [](double, double) { return -1.75; },
       [](double, double) { return 0.0; }},
      {"tanh", [](Var a, Var) { return tanh(a); },
       [](double a, double) { return 1.0 - std::tanh(a) * std::tanh(a); },
       [](double, double) { return 0.0; }},
      {"sqrt", [](Var, Var b) { return sqrt(b); }, [](double, double) { return 0.0; },
       [](double, double b) { return 0.5 / std::sqrt(b); }},
      {"pow", [](Var, Var b) { return pow(b, 2.3); }, [](double, double) { return 0.0; },
       [](double, double b) { return 2.3 * std::pow(b, 1.3); }},
      {"positive_part", [](Var a, Var) { return positive_part(a); },
       [](double a, double) { return a > 0.0 ? 1.0 : 0.0; }, [](double, double) { return 0.0; }},
  };
  for (const auto& c : cases) {
    for (int trial = 0; trial < 50; ++trial) {
      const double a = uniform(-2, 2);
      const double b = uniform(0.2, 3);  // positive for div/sqrt/pow
      Tape tape;
      const Var va = tape.input(a);
      const Var vb = tape.input(b);
      const auto g = tape.gradient(c.build(va, vb));
      EXPECT_NEAR(g[0], c.d_da(a, b), 2e-15 * std::max(1.0, std::abs(c.d_da(a, b)))) << c.name;
      EXPECT_NEAR(g[1], c.d_db(a, b), 2e-15 * std::max(1.0, std::abs(c.d_db(a, b)))) << c.name;
    }
  }
}

TEST(Tape, UnsupportedPrimitiveIsRejected) {
  Tape tape;
  const Var a = tape.input(1.0);
  EXPECT_THROW(tape.apply(Op::kAbs, std::array{a}), StructuralError);
  EXPECT_THROW(tape.apply(Op::kInput, std::array{a}), StructuralError);
}

TEST(Tape, ArityAndOwnershipAreChecked) {
  Tape tape;
  Tape other;
  const Var a = tape.input(1.0);
  const Var b = other.input(2.0);
  EXPECT_THROW(tape.apply(Op::kAdd, std::array{a}), StructuralError);
  EXPECT_THROW(tape.apply(Op::kTanh, std::array{a, a}), StructuralError);
  EXPECT_THROW(tape.apply(Op::kAdd, std::array{a, b}), StructuralError);
  EXPECT_THROW((void)(a * b), StructuralError);
}

TEST(Tape, TopologicalOrder) {
  Tape tape;
  std::vector<Var> in;
  for (int i = 0; i < 3; ++i) in.push_back(tape.input(uniform(-1, 1)));
  composite(std::span<const Var>(in));
  const auto nodes = tape.nodes();
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    for (auto op : nodes[i].operands) EXPECT_LT(op, static_cast<std::int32_t>(i));
  }
}

TEST(Tape, Deterministic) {
  const std::array<double, 3> z{0.1, -0.4, 0.9};
  std::vector<double> first;
  for (int run = 0; run < 2; ++run) {
    Tape tape;
    std::vector<Var> in;
    for (double v : z) in.push_back(tape.input(v));
    const auto g = tape.gradient(composite(std::span<const Var>(in)));
    if (run == 0) {
      first = g;
    } else {
      EXPECT_EQ(first, g);
    }
  }
}

TEST(GradParams, HalfSquaredNormGivesTheta) {
  const std::vector<double> theta{0.3, -1.2, 2.0, 0.0};
  const auto g = grad_params(
      [](std::span<const Var> th) {
        Var s = 0.0;
        for (const Var& v : th) s = s + v * v;
        return 0.5 * s;
      },
      theta);
  ASSERT_EQ(g.size(), theta.size());
  for (std::size_t i = 0; i < g.size(); ++i) EXPECT_DOUBLE_EQ(g[i], theta[i]);
}

TEST(GradParams, LossIgnoringThetaGivesZero) {
  const std::vector<double> theta{1.0, 2.0, 3.0};
  const auto g = grad_params([](std::span<const Var>) { return Var(4.0); }, theta);
  for (double v : g) EXPECT_EQ(v, 0.0);
}

TEST(GradParams, ForeignTapeIsRejected) {
  Tape other;
  const Var stray = other.input(1.0);
  const std::vector<double> theta{1.0};
  EXPECT_THROW(grad_params([&](std::span<const Var>) { return stray; }, theta),
               StructuralError);
}

// u = tanh(w x + b), L = (du/dx - 1)^2 at x = 0: the input derivative is
// carried by a dual over tape variables so L stays differentiable in (w, b).
TEST(GradParams, SeesThroughInputDerivatives) {
  const auto loss = [](std::span<const Var> th) {
    const Dual<Var> x(Var(0.0), Var(1.0));
    const Dual<Var> w(th[0]);
    const Dual<Var> b(th[1]);
    const Dual<Var> u = tanh(w * x + b);
    const Var r = u.tangent - 1.0;
    return r * r;
  };
  const auto g = grad_params(loss, std::vector<double>{0.0, 0.0});
  EXPECT_DOUBLE_EQ(g[0], -2.0);
  EXPECT_DOUBLE_EQ(g[1], 0.0);

  // Finite-difference confirmation at a generic point.
  const std::vector<double> theta{0.4, -0.3};
  const auto ga = grad_params(loss, theta);
  const auto plain = [](double w, double b) {
    const double s = 1.0 - std::tanh(b) * std::tanh(b);
    return (w * s - 1.0) * (w * s - 1.0);
  };
  EXPECT_LE(fd_best_rel_err([&](double w) { return plain(w, theta[1]); }, theta[0], ga[0]), 1e-7);
  EXPECT_LE(fd_best_rel_err([&](double b) { return plain(theta[0], b); }, theta[1], ga[1]), 1e-7);
}
