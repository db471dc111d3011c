#include "dpinn/operator.hpp"
#include "dpinn/problems.hpp"

#include "exact_oracle.hpp"
#include "test_util.hpp"

#include <gtest/gtest.h>

#include <numbers>

using namespace dpinn;
using namespace dpinn::testing;

namespace {

constexpr double kPi = std::numbers::pi;

Vec v(std::initializer_list<double> xs) {
  Vec out(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) out(i++) = x;
  return out;
}

ProblemSpec build(const ExactCase& c) {
  ProblemParams p;
  p.T = c.T;
  if (c.alpha > 0) p.alpha = c.alpha;
  if (c.id == ProblemId::kP1Regularized) p.eps = 0.0;
  return make_problem(c.id, p);
}

const std::vector<ExactCase>& cases() {
  static const std::vector<ExactCase> all{
      {ProblemId::kP1, 0, 1},   {ProblemId::kP2, 0.5, 2}, {ProblemId::kP2, 1.3, 2},
      {ProblemId::kP3, 0, 1},   {ProblemId::kP4, 0, 1},   {ProblemId::kP5, 0.5, 2},
      {ProblemId::kP5, 1.3, 2}, {ProblemId::kP1Regularized, 0, 1}};
  return all;
}

std::string label(const ExactCase& c) {
  return to_string(c.id) + " alpha=" + std::to_string(c.alpha);
}

}  // namespace

TEST(MakeProblem, ExactSolutionExamples) {
  ProblemParams p;
  p.T = 1.0;
  const ProblemSpec p1 = make_problem(ProblemId::kP1, p);
  EXPECT_EQ(p1.exact(v({0, 0}), 0.0), 0.0);
  const ProblemSpec p3 = make_problem(ProblemId::kP3, p);
  for (double t : {0.0, 0.3, 1.0}) {
    EXPECT_DOUBLE_EQ(p3.exact(v({-0.5, 0.2}), t), 1 + t);
    EXPECT_DOUBLE_EQ(p3.exact(v({0.5, 0.2}), t), 0.5 + t);
  }
}

TEST(MakeProblem, MissingParametersAreNamed) {
  for (ProblemId id : {ProblemId::kP2, ProblemId::kP5}) {
    try {
      make_problem(id, {});
      FAIL() << "expected ConfigError";
    } catch (const ConfigError& e) {
      EXPECT_EQ(e.key(), "alpha");
    }
  }
  try {
    make_problem(ProblemId::kP1Regularized, {});
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.key(), "eps");
  }
  ProblemParams bad;
  bad.alpha = -1.0;
  EXPECT_THROW(make_problem(ProblemId::kP2, bad), ConfigError);
  EXPECT_THROW(problem_id_from_string("P9"), ConfigError);
}

TEST(MakeProblem, IdsRoundTrip) {
  for (ProblemId id : {ProblemId::kP1, ProblemId::kP2, ProblemId::kP3, ProblemId::kP4,
                       ProblemId::kP5, ProblemId::kP1Regularized}) {
    EXPECT_EQ(problem_id_from_string(to_string(id)), id);
  }
}

TEST(MakeProblem, RegularizedDefaults) {
  ProblemParams p;
  p.eps = 1e-3;
  const ProblemSpec s = make_problem(ProblemId::kP1Regularized, p);
  EXPECT_EQ(s.t1, 1.75);
  EXPECT_EQ(s.t2, 2.0);
  EXPECT_EQ(s.domain.radius(), 0.5);
  EXPECT_EQ(s.eps, 1e-3);
}

TEST(Forcing, Examples) {
  ProblemParams p;
  p.T = 1.0;
  const ProblemSpec p1 = make_problem(ProblemId::kP1, p);
  for (int i = 0; i < 10; ++i) {
    EXPECT_EQ(forcing_value(p1, v({uniform(-0.7, 0.7), uniform(-0.7, 0.7), uniform(0, 1)})), 1.0);
  }

  p.alpha = 1.3;
  const ProblemSpec p2a = make_problem(ProblemId::kP2, p);
  for (int i = 0; i < 10; ++i) {
    const Vec x = v({uniform(-0.7, 0.7), uniform(-0.7, 0.7)});
    EXPECT_DOUBLE_EQ(p2a.forcing(x, 0.0), std::pow(x.norm(), 2.6));
  }

  p.alpha = 0.5;
  p.T = 2.0;
  const ProblemSpec p2b = make_problem(ProblemId::kP2, p);
  EXPECT_NEAR(p2b.forcing(v({0.9, 0.0}), 2.0), 0.9 - 1 / 0.9, 1e-14);
  EXPECT_NEAR(p2b.forcing(v({0.0, 0.9}), 2.0), -0.2111, 1e-4);
}

TEST(Forcing, BranchTieGoesToFirstBranch) {
  // alpha = 1/2: |grad u| = t, so the switch sits exactly at t = 1.
  ProblemParams p;
  p.alpha = 0.5;
  p.T = 2.0;
  for (ProblemId id : {ProblemId::kP2, ProblemId::kP5}) {
    const ProblemSpec s = make_problem(id, p);
    const int n = s.spatial_dim();
    for (double r : {0.2, 0.5, 0.9}) {
      Vec x = Vec::Zero(n);
      x(0) = r;
      EXPECT_EQ(s.forcing(x, 1.0), r);
      EXPECT_EQ(s.forcing(x, std::nextafter(1.0, 0.0)), r);
      // Past the switch: r - 0.5/r (2D) and r - 1/r (3D) at t = 1.5.
      const double past = id == ProblemId::kP2 ? r - 0.5 / r : r - 1 / r;
      EXPECT_NEAR(s.forcing(x, 1.5), past, 1e-12);
    }
  }
}

TEST(ExactSolutions, ResidualVanishesAtAdmissiblePoints) {
  for (const ExactCase& c : cases()) {
    const ProblemSpec spec = build(c);
    int checked = 0, active = 0;
    while (checked < 1000) {
      const auto pt = admissible_point(c, spec);
      if (!pt) continue;
      const auto& [x, t] = *pt;
      const DerivativeBundle b = oracle_bundle(c, x, t);
      const double f = spec.forcing(x, t);
      EXPECT_NEAR(f, reference_forcing(c, x, t), 1e-12 * std::max(1.0, std::abs(f))) << label(c);
      EXPECT_LE(std::abs(residual(b, f, spec.eps)), 1e-9) << label(c);
      if (b.grad_x.norm() > 1) ++active;
      ++checked;
    }
    if (c.id == ProblemId::kP2 || c.id == ProblemId::kP5) {
      EXPECT_GT(active, 50) << label(c);
      EXPECT_LT(active, 950) << label(c);
    }
  }
}

TEST(ExactSolutions, LibraryDerivativesMatchOracle) {
  for (const ExactCase& c : cases()) {
    const ProblemSpec spec = build(c);
    for (int i = 0; i < 200; ++i) {
      const auto pt = admissible_point(c, spec);
      if (!pt) continue;
      const auto& [x, t] = *pt;
      const DerivativeBundle want = oracle_bundle(c, x, t);
      const DerivativeBundle got = spec.exact_derivatives(x, t);
      EXPECT_NEAR(got.value, want.value, 1e-12) << label(c);
      EXPECT_NEAR(spec.exact(x, t), want.value, 1e-12) << label(c);
      EXPECT_NEAR(got.du_dt, want.du_dt, 1e-12) << label(c);
      EXPECT_LE((got.grad_x - want.grad_x).norm(), 1e-12) << label(c);
      EXPECT_LE((got.hess_x - want.hess_x).norm(), 1e-10) << label(c);
    }
  }
}

TEST(ExactSolutions, DataMatchParabolicBoundaryTrace) {
  for (const ExactCase& c : cases()) {
    const ProblemSpec spec = build(c);
    const int n = spec.spatial_dim();
    for (int i = 0; i < 200; ++i) {
      Vec x(n);
      for (int k = 0; k < n; ++k) x(k) = uniform(spec.domain.lower()(k), spec.domain.upper()(k));
      if (spec.domain.contains(x)) {
        EXPECT_NEAR(spec.initial(x), spec.exact(x, spec.t1), 1e-12) << label(c);
      }
      // Project onto the boundary.
      Vec y = x;
      if (spec.domain.kind() == Domain::Kind::kSquare) {
        y(i % n) = (i % 2 == 0) ? spec.domain.lower()(i % n) : spec.domain.upper()(i % n);
      } else {
        y = spec.domain.center() + spec.domain.radius() * (x - spec.domain.center()).normalized();
      }
      const double t = uniform(spec.t1, spec.t2);
      EXPECT_NEAR(spec.boundary(y, t), spec.exact(y, t), 1e-12) << label(c);
      EXPECT_NEAR(spec.boundary(y, spec.t1), spec.initial(y), 1e-12) << label(c);
    }
  }
}

TEST(NormClosedForm, Examples) {
  ProblemParams p;
  p.T = 1.0;
  EXPECT_NEAR(norm_sq_exact(make_problem(ProblemId::kP1, p), 0.0), kPi / 12, 1e-15);
  EXPECT_NEAR(norm_sq_exact(make_problem(ProblemId::kP3, p), 1.0), 38.0 / 3, 1e-14);
  p.alpha = 0.5;
  EXPECT_NEAR(norm_sq_exact(make_problem(ProblemId::kP2, p), 1.0), kPi / 2, 1e-15);
}

TEST(NormClosedForm, AgreesWithReferenceFormulas) {
  for (const ExactCase& c : cases()) {
    const ProblemSpec spec = build(c);
    for (double t : {0.0, 0.5, 1.0, 1.75, 2.0, 7.0}) {
      EXPECT_NEAR(norm_sq_exact(spec, t), reference_norm_sq(c, t), 1e-13 * std::max(1.0, reference_norm_sq(c, t)))
          << label(c);
    }
  }
  // Self-consistency of the regularized denominator at t = 2.
  ProblemParams p;
  p.eps = 1e-6;
  const ProblemSpec reg = make_problem(ProblemId::kP1Regularized, p);
  EXPECT_NEAR(norm_sq_exact(reg, 2.0) * 768 / (817 * kPi), 1.0, 1e-15);
}

TEST(Domain, MembershipAndMeasure) {
  const Domain disk = Domain::disk(1.0);
  EXPECT_TRUE(disk.contains(v({0.5, 0.5})));
  EXPECT_FALSE(disk.contains(v({1.0, 0.0})));
  EXPECT_TRUE(disk.on_boundary(v({0.6, 0.8})));
  EXPECT_NEAR(disk.measure(), kPi, 1e-15);
  const Domain sq = Domain::square(v({-1, -1}), v({1, 1}));
  EXPECT_FALSE(sq.contains(v({1.0, 0.0})));
  EXPECT_TRUE(sq.on_boundary(v({1.0, 0.3})));
  EXPECT_EQ(sq.measure(), 4.0);
  const Domain ball = Domain::ball(1.0);
  EXPECT_NEAR(ball.measure(), 4 * kPi / 3, 1e-15);
  EXPECT_THROW(ball.contains(v({0, 0})), StructuralError);
}
