#pragma once

// Hand-derived exact solutions, their derivatives and the reference
// forcings, written independently of the library's problem definitions.

#include "dpinn/core.hpp"
#include "dpinn/problems.hpp"

#include "test_util.hpp"

#include <cmath>
#include <numbers>
#include <optional>

namespace dpinn::testing {

struct ExactCase {
  ProblemId id;
  double alpha = 0.0;
  double T = 1.0;
};

/// (u, u_t, grad u, hess u) of the manufactured solution.
inline DerivativeBundle oracle_bundle(const ExactCase& c, const Vec& x, double t) {
  const int n = static_cast<int>(x.size());
  DerivativeBundle b = DerivativeBundle::zero(n);
  switch (c.id) {
    case ProblemId::kP1:
    case ProblemId::kP4:
    case ProblemId::kP1Regularized:
      b.value = 0.5 * x.squaredNorm() + t;
      b.du_dt = 1.0;
      b.grad_x = x;
      b.hess_x = Mat::Identity(n, n);
      break;
    case ProblemId::kP2:
    case ProblemId::kP5: {
      const double a = c.alpha;
      const double r = x.norm();
      const double k = 2 * a * t * std::pow(r, 2 * a - 2);
      b.value = t * std::pow(r, 2 * a);
      b.du_dt = std::pow(r, 2 * a);
      b.grad_x = k * x;
      b.hess_x = k * (Mat::Identity(n, n) + (2 * a - 2) * x * x.transpose() / (r * r));
      break;
    }
    case ProblemId::kP3:
      b.value = x(0) <= 0 ? 1 + t : 1 - x(0) + t;
      b.du_dt = 1.0;
      if (x(0) > 0) b.grad_x(0) = -1.0;
      break;
  }
  return b;
}

/// Reference right-hand sides.
inline double reference_forcing(const ExactCase& c, const Vec& x, double t) {
  if (c.id != ProblemId::kP2 && c.id != ProblemId::kP5) return 1.0;
  const double a = c.alpha;
  const double r = x.norm();
  const double p = std::pow(r, 2 * a);
  if (2 * a * t * std::pow(r, 2 * a - 1) <= 1) return p;
  if (c.id == ProblemId::kP2) return p - 4 * a * a * t * std::pow(r, 2 * a - 2) + 1 / r;
  const double omega = 2 * a * (2 * a + 1);
  return p - omega * t * std::pow(r, 2 * a - 2) + 2 / r;
}

/// Random interior space-time point away from the non-smooth sets: the
/// origin and branch interface for the power solutions, the crease x = 0
/// for P3. Returns nullopt for rejected draws.
inline std::optional<std::pair<Vec, double>> admissible_point(const ExactCase& c,
                                                              const ProblemSpec& spec) {
  const int n = spec.spatial_dim();
  Vec x(n);
  for (int k = 0; k < n; ++k) x(k) = uniform(spec.domain.lower()(k), spec.domain.upper()(k));
  const double t = uniform(spec.t1, spec.t2);
  if (!spec.domain.contains(x)) return std::nullopt;
  if (c.id == ProblemId::kP3 && std::abs(x(0)) < 1e-3) return std::nullopt;
  if (c.id == ProblemId::kP2 || c.id == ProblemId::kP5) {
    const double r = x.norm();
    if (r < 1e-2) return std::nullopt;
    const double g = 2 * c.alpha * t * std::pow(r, 2 * c.alpha - 1);
    if (std::abs(g - 1) < 1e-3) return std::nullopt;
  }
  return std::make_pair(x, t);
}

inline double reference_norm_sq(const ExactCase& c, double t) {
  const double pi = std::numbers::pi;
  switch (c.id) {
    case ProblemId::kP1: return pi * (t * t + t / 2 + 1.0 / 12);
    case ProblemId::kP2: return pi * t * t / (2 * c.alpha + 1);
    case ProblemId::kP3: return 4 * t * t + 6 * t + 8.0 / 3;
    case ProblemId::kP4: return pi * (4 * t * t / 3 + 4 * t / 5 + 1.0 / 7);
    case ProblemId::kP5: return 4 * pi * t * t / (4 * c.alpha + 3);
    case ProblemId::kP1Regularized: return pi / 4 * (t * t + t / 8 + 1.0 / 192);
  }
  return 0.0;
}

}  // namespace dpinn::testing
