#pragma once

// The five benchmark problems of the degenerate equation, plus the
// eps-regularized variant of the first one on a sub-cylinder.
//
//   P1  unit disk,  f = 1,           u = |x|^2 / 2 + t
//   P2  unit disk,  piecewise f,     u = t |x|^(2 alpha)
//   P3  (-1,1)^2,   f = 1,           u = 1 + t (x <= 0),  1 - x + t (x > 0)
//   P4  unit ball,  f = 1,           u = |x|^2 / 2 + t
//   P5  unit ball,  piecewise f,     u = t |x|^(2 alpha)
//   P1_regularized  B_rho(0) x (t1, t2), f = 1, data taken from P1's u.

#include "dpinn/core.hpp"

#include <functional>
#include <optional>
#include <string>
#include <utility>

namespace dpinn {

enum class ProblemId { kP1, kP2, kP3, kP4, kP5, kP1Regularized };

std::string to_string(ProblemId id);
/// Accepts "P1".."P5" and "P1_regularized". Throws ConfigError("id").
ProblemId problem_id_from_string(const std::string& s);

class Domain {
 public:
  enum class Kind { kDisk, kSquare, kBall };

  static Domain disk(double radius, Vec center = Vec::Zero(2));
  static Domain ball(double radius, Vec center = Vec::Zero(3));
  static Domain square(Vec lower, Vec upper);

  Kind kind() const { return kind_; }
  int dim() const { return static_cast<int>(center_.size()); }
  const Vec& center() const { return center_; }
  double radius() const { return radius_; }
  /// Axis-aligned bounding box.
  const Vec& lower() const { return lower_; }
  const Vec& upper() const { return upper_; }

  /// Open-set membership.
  bool contains(const Vec& x) const;
  bool on_boundary(const Vec& x, double tol = 1e-12) const;
  double measure() const;

 private:
  Kind kind_ = Kind::kDisk;
  Vec center_;
  double radius_ = 0.0;
  Vec lower_, upper_;
};

struct ProblemParams {
  std::optional<double> alpha;
  std::optional<double> eps;
  std::optional<double> T;
  std::optional<std::pair<double, double>> window;
  std::optional<double> subdomain_radius;
};

struct ProblemSpec {
  using SpaceTimeFn = std::function<double(const Vec& x, double t)>;

  ProblemId id = ProblemId::kP1;
  Domain domain = Domain::disk(1.0);
  double t1 = 0.0;
  double t2 = 1.0;
  double alpha = 0.0;  // P2/P5 only
  double eps = 0.0;
  /// Forcing has a 1/|x| term that blows up at the origin (P2/P5).
  bool singular_at_origin = false;
  /// Parameters the spec was built from (recorded in checkpoints).
  ProblemParams parameters;

  SpaceTimeFn forcing;
  std::function<double(const Vec& x)> initial;
  SpaceTimeFn boundary;
  SpaceTimeFn exact;  // empty if no exact solution
  std::function<DerivativeBundle(const Vec& x, double t)> exact_derivatives;
  std::function<double(double t)> norm_sq_closed_form;  // ||u(., t)||^2 over the domain

  int spatial_dim() const { return domain.dim(); }
  int input_dim() const { return domain.dim() + 1; }
  bool has_exact() const { return static_cast<bool>(exact); }
  bool has_norm_closed_form() const { return static_cast<bool>(norm_sq_closed_form); }
};

/// Throws ConfigError naming the missing or invalid field.
ProblemSpec make_problem(ProblemId id, const ProblemParams& params);

/// f at z = (x, t).
double forcing_value(const ProblemSpec& spec, const Vec& z);

/// Closed-form ||u(., t)||^2. Throws UnsupportedOperation if there is none.
double norm_sq_exact(const ProblemSpec& spec, double t);

}  // namespace dpinn
