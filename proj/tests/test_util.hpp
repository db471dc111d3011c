#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <initializer_list>
#include <random>

namespace dpinn::testing {

inline double rel_err(double got, double want, double floor = 1e-12) {
  return std::abs(got - want) / std::max(std::abs(want), floor);
}

/// Central difference of f at step h.
inline double central(const std::function<double(double)>& f, double x, double h) {
  return (f(x + h) - f(x - h)) / (2.0 * h);
}

/// Relative error of `analytic` against central differences, taking the
/// best agreement over a range of steps (truncation vs rounding tradeoff).
inline double fd_best_rel_err(const std::function<double(double)>& f, double x, double analytic,
                              std::initializer_list<double> steps = {1e-3, 1e-4, 1e-5, 1e-6},
                              double floor = 1e-8) {
  double best = INFINITY;
  for (double h : steps) best = std::min(best, rel_err(central(f, x, h), analytic, floor));
  return best;
}

inline std::mt19937_64& rng() {
  static std::mt19937_64 gen(20240611);
  return gen;
}

inline double uniform(double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng());
}

}  // namespace dpinn::testing
