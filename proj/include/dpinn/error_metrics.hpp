#pragma once

// Squared L2 norms over the spatial domains by tensor midpoint quadrature,
// and the error functionals
//
//   E(T)     = sup_t ||u_hat(., t) - u(., t)||^2      (squared, as tabulated)
//   E_rel(T) = E(T) / sup_t ||u(., t)||^2
//
// with the supremum taken over a discrete time set.

#include "dpinn/core.hpp"
#include "dpinn/problems.hpp"
#include "dpinn/trainer.hpp"

#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

namespace dpinn {

struct QuadratureRule {
  Domain::Kind kind = Domain::Kind::kDisk;
  int refinement = 0;
  PointMatrix nodes;  // spatial_dim x N
  Eigen::VectorXd weights;

  Eigen::Index size() const { return weights.size(); }
};

/// Refinement used when none is given: 200 cells per dimension in 2D, 64 in 3D.
int default_refinement(const Domain& domain);

/// Disk: n_r = refinement radial cells times 4 * refinement angular cells,
/// nodes at cell midpoints with exact annular-sector areas as weights.
/// Square: refinement^2 Cartesian cells. Ball: refinement radial cells,
/// refinement cells in cos(polar angle), 2 * refinement azimuthal cells,
/// exact shell-sector volumes. Weights sum to the domain measure.
QuadratureRule make_quadrature(const Domain& domain, int refinement = 0);

/// sum_i w_i g(x_i)^2.
double l2_norm_sq(const std::function<double(const Vec&)>& g, const QuadratureRule& rule);

enum class DenominatorSource { kClosedForm, kQuadrature };
std::string to_string(DenominatorSource s);

struct ErrorReport {
  std::vector<double> times;
  std::vector<double> error_sq;  // squared L2 error at each time
  double E = 0.0;
  double E_rel = 0.0;
  double denominator = 0.0;      // sup of ||u(., t)||^2
  DenominatorSource denominator_source = DenominatorSource::kClosedForm;
  std::string time_discretization;
  int refinement = 0;
};

/// Sup of the squared error over `eval_times`. The denominator is the
/// closed-form norm maximized over `eval_times` and the window end t2, or
/// quadrature of the exact solution when there is no closed form. Throws
/// UnsupportedOperation if the problem has no exact solution.
ErrorReport sup_error(const Surrogate& model, const ProblemSpec& spec,
                      const std::vector<double>& eval_times, const QuadratureRule& rule);

/// Same, on the training time grid of the problem's window.
ErrorReport sup_error(const Surrogate& model, const ProblemSpec& spec, int refinement = 0);

struct EpsSweepRow {
  double eps = 0.0;
  ErrorReport report;
};

/// One row per (eps, model). Each model is scored on the regularized
/// problem built with its eps and the given window/radius.
std::vector<EpsSweepRow> eps_sweep_error(
    const std::vector<std::pair<double, const Surrogate*>>& models,
    const ProblemParams& base = {}, int refinement = 0);

/// 768 E / (817 pi): E_rel on B_{1/2}(0) x (7/4, 2).
double eps_sweep_relative_error(double E);

/// "T,E,E_rel" rows.
void write_error_table_csv(std::ostream& out, const std::vector<double>& T,
                           const std::vector<ErrorReport>& reports);
/// "eps,E,E_rel" rows.
void write_eps_table_csv(std::ostream& out, const std::vector<EpsSweepRow>& rows);

}  // namespace dpinn
