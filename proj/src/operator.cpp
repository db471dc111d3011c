#include "dpinn/operator.hpp"

#include <cmath>

namespace dpinn {

GradientState GradientState::of(const Vec& xi) {
  GradientState s;
  s.xi = xi;
  s.norm = xi.norm();
  s.regime = s.norm > 1.0 ? Regime::kActive : Regime::kDegenerate;
  return s;
}

Vec h_map(const Vec& xi) {
  const double rho = xi.norm();
  if (!(rho > 1.0)) return Vec::Zero(xi.size());
  return (1.0 - 1.0 / rho) * xi;
}

Mat h_jacobian(const Vec& xi) {
  const auto n = xi.size();
  const double rho = xi.norm();
  if (!(rho > 1.0)) return Mat::Zero(n, n);
  Mat j = (1.0 - 1.0 / rho) * Mat::Identity(n, n);
  j.noalias() += (xi * xi.transpose()) / (rho * rho * rho);
  return j;
}

double flux_divergence(const Vec& xi, const Mat& hess) {
  const double rho = xi.norm();
  if (!(rho > 1.0)) return 0.0;
  return (1.0 - 1.0 / rho) * hess.trace() + xi.dot(hess * xi) / (rho * rho * rho);
}

double residual(const DerivativeBundle& b, double f_val, double eps) {
  return b.du_dt - flux_divergence(b.grad_x, b.hess_x) - eps * b.hess_x.trace() - f_val;
}

ResidualPartials residual_partials(const DerivativeBundle& b, double eps) {
  const auto n = b.grad_x.size();
  ResidualPartials p;
  p.du_dt = 1.0;
  p.hess = -(h_jacobian(b.grad_x) + eps * Mat::Identity(n, n));
  p.grad = Vec::Zero(n);
  const double rho = b.grad_x.norm();
  if (rho > 1.0) {
    const Vec& xi = b.grad_x;
    const Mat& m = b.hess_x;
    const double rho3 = rho * rho * rho;
    const double rho5 = rho3 * rho * rho;
    const Vec sym_m_xi = (m + m.transpose()) * xi;
    p.grad = -(xi * (m.trace() / rho3) + sym_m_xi / rho3 - xi * (3.0 * xi.dot(m * xi) / rho5));
  }
  return p;
}

double residual_with_partials(int n, double du_dt, const double* grad, const double* hess,
                              double f_val, double eps, double* d_grad, double* d_hess) {
  double sq = 0.0;
  double trace = 0.0;
  for (int i = 0; i < n; ++i) {
    sq += grad[i] * grad[i];
    trace += hess[i * n + i];
  }
  for (int i = 0; i < n * n; ++i) d_hess[i] = 0.0;
  for (int i = 0; i < n; ++i) {
    d_grad[i] = 0.0;
    d_hess[i * n + i] = -eps;
  }
  double r = du_dt - eps * trace - f_val;
  if (!(sq > 1.0)) return r;

  const double rho = std::sqrt(sq);
  const double rho3 = rho * sq;
  const double rho5 = rho3 * sq;
  const double c = 1.0 - 1.0 / rho;
  double m_xi[3] = {0.0, 0.0, 0.0};   // M xi
  double mt_xi[3] = {0.0, 0.0, 0.0};  // M^T xi
  double quad = 0.0;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      m_xi[i] += hess[i * n + j] * grad[j];
      mt_xi[j] += hess[i * n + j] * grad[i];
    }
  }
  for (int i = 0; i < n; ++i) quad += grad[i] * m_xi[i];
  r -= c * trace + quad / rho3;
  for (int i = 0; i < n; ++i) {
    d_grad[i] = -(grad[i] * trace / rho3 + (m_xi[i] + mt_xi[i]) / rho3 -
                  3.0 * grad[i] * quad / rho5);
    for (int j = 0; j < n; ++j) {
      d_hess[i * n + j] -= grad[i] * grad[j] / rho3 + (i == j ? c : 0.0);
    }
  }
  return r;
}

}  // namespace dpinn
