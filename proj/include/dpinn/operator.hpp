#pragma once

// The degenerate flux H(xi) = (|xi| - 1)_+ xi / |xi| (H(0) = 0), its Jacobian,
// and the pointwise strong-form residual
//
//   R = u_t - tr(DH(grad u) . hess u) - eps * tr(hess u) - f,
//
// which is the degenerate equation for eps = 0 and its uniformly parabolic
// regularization for eps > 0. On the closed set |xi| <= 1 both H and DH are
// zero; the active branch is |xi| > 1 strictly.

#include "dpinn/autodiff.hpp"
#include "dpinn/core.hpp"

#include <span>

namespace dpinn {

enum class Regime { kDegenerate, kActive };

struct GradientState {
  Vec xi;
  double norm = 0.0;
  Regime regime = Regime::kDegenerate;

  static GradientState of(const Vec& xi);
};

Vec h_map(const Vec& xi);
Mat h_jacobian(const Vec& xi);

/// Residual from the time derivative, spatial gradient and spatial Hessian
/// held in `bundle` (its `value` is not used).
double residual(const DerivativeBundle& bundle, double f_val, double eps);

/// dR / d(du_dt, grad_x, hess_x) at `bundle`. Hessian entries are treated as
/// independent, so for a symmetric input the (i, j) and (j, i) partials are
/// equal and both must be accounted for by the caller.
struct ResidualPartials {
  double du_dt = 1.0;
  Vec grad;
  Mat hess;
};
ResidualPartials residual_partials(const DerivativeBundle& bundle, double eps);

/// Residual and its partials on raw arrays, for the training loop.
/// `hess` and `d_hess` are row-major n x n (n <= 3); the partials follow the
/// same convention as residual_partials (du_dt partial is 1).
double residual_with_partials(int n, double du_dt, const double* grad, const double* hess,
                              double f_val, double eps, double* d_grad, double* d_hess);

/// tr(DH(xi) . hess): the expanded form of div H(grad u).
double flux_divergence(const Vec& xi, const Mat& hess);

// -- Generic-scalar forms (tape/dual evaluation) ---------------------------

template <class T>
T flux_divergence_generic(std::span<const T> xi, const ad::SquareMatrix<T>& hess) {
  using std::sqrt;
  using ad::sqrt;
  const int n = static_cast<int>(xi.size());
  T sq(0.0);
  for (int i = 0; i < n; ++i) sq = sq + xi[i] * xi[i];
  if (!(ad::primal(sq) > 1.0)) return T(0.0);
  const T rho = sqrt(sq);
  const T rho3 = rho * rho * rho;
  T trace(0.0);
  T quad(0.0);
  for (int i = 0; i < n; ++i) {
    trace = trace + hess(i, i);
    for (int j = 0; j < n; ++j) quad = quad + xi[i] * hess(i, j) * xi[j];
  }
  return (1.0 - 1.0 / rho) * trace + quad / rho3;
}

template <class T>
T residual_generic(const T& du_dt, std::span<const T> grad, const ad::SquareMatrix<T>& hess,
                   double f_val, double eps) {
  T lap(0.0);
  for (int i = 0; i < hess.dim; ++i) lap = lap + hess(i, i);
  return du_dt - flux_divergence_generic<T>(grad, hess) - eps * lap - f_val;
}

}  // namespace dpinn
