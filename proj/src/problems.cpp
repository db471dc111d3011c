#include "dpinn/problems.hpp"

#include <cmath>
#include <numbers>

namespace dpinn {

namespace {

constexpr double kPi = std::numbers::pi;

DerivativeBundle quadratic_bundle(const Vec& x, double t) {
  DerivativeBundle b;
  b.value = 0.5 * x.squaredNorm() + t;
  b.du_dt = 1.0;
  b.grad_x = x;
  b.hess_x = Mat::Identity(x.size(), x.size());
  return b;
}

// u = t r^(2 alpha) in any dimension.
DerivativeBundle power_bundle(const Vec& x, double t, double alpha) {
  const double r2 = x.squaredNorm();
  const auto n = x.size();
  DerivativeBundle b;
  b.value = t * std::pow(r2, alpha);
  b.du_dt = std::pow(r2, alpha);
  const double c1 = 2.0 * alpha * t * std::pow(r2, alpha - 1.0);
  b.grad_x = c1 * x;
  b.hess_x = c1 * Mat::Identity(n, n);
  b.hess_x.noalias() +=
      (2.0 * alpha * t * (2.0 * alpha - 2.0) * std::pow(r2, alpha - 2.0)) * (x * x.transpose());
  return b;
}

// Piecewise forcing of P2 (n = 2) and P5 (n = 3). Branch 1 when
// 2 alpha t r^(2 alpha - 1) <= 1, including the tie.
double power_forcing(const Vec& x, double t, double alpha) {
  const double r2 = x.squaredNorm();
  const double lhs = t == 0.0 ? 0.0 : 2.0 * alpha * t * std::pow(r2, alpha - 0.5);
  if (lhs <= 1.0) return std::pow(r2, alpha);
  const double n = static_cast<double>(x.size());
  // Laplacian coefficient of r^(2 alpha): 2 alpha (2 alpha + n - 2).
  const double lap_coeff = 2.0 * alpha * (2.0 * alpha + n - 2.0);
  return std::pow(r2, alpha) - lap_coeff * t * std::pow(r2, alpha - 1.0) +
         (n - 1.0) / std::sqrt(r2);
}

double p3_exact(const Vec& x, double t) { return x(0) <= 0.0 ? 1.0 + t : 1.0 - x(0) + t; }

double require(const std::optional<double>& v, const char* key) {
  if (!v) throw ConfigError(key, std::string("missing required parameter '") + key + "'");
  if (!std::isfinite(*v)) throw ConfigError(key, std::string("parameter '") + key + "' is not finite");
  return *v;
}

void set_window(ProblemSpec& spec, const ProblemParams& params) {
  if (params.window) {
    spec.t1 = params.window->first;
    spec.t2 = params.window->second;
  } else {
    const double T = require(params.T, "T");
    spec.t1 = 0.0;
    spec.t2 = T;
  }
  if (!(spec.t1 < spec.t2)) throw ConfigError("T", "time window must satisfy t1 < t2");
}

}  // namespace

std::string to_string(ProblemId id) {
  switch (id) {
    case ProblemId::kP1: return "P1";
    case ProblemId::kP2: return "P2";
    case ProblemId::kP3: return "P3";
    case ProblemId::kP4: return "P4";
    case ProblemId::kP5: return "P5";
    case ProblemId::kP1Regularized: return "P1_regularized";
  }
  return "?";
}

ProblemId problem_id_from_string(const std::string& s) {
  if (s == "P1") return ProblemId::kP1;
  if (s == "P2") return ProblemId::kP2;
  if (s == "P3") return ProblemId::kP3;
  if (s == "P4") return ProblemId::kP4;
  if (s == "P5") return ProblemId::kP5;
  if (s == "P1_regularized") return ProblemId::kP1Regularized;
  throw ConfigError("id", "unknown problem id '" + s + "'");
}

// -- Domain -----------------------------------------------------------------

Domain Domain::disk(double radius, Vec center) {
  if (center.size() != 2) throw StructuralError("disk center must be 2D");
  Domain d;
  d.kind_ = Kind::kDisk;
  d.center_ = center;
  d.radius_ = radius;
  d.lower_ = center.array() - radius;
  d.upper_ = center.array() + radius;
  return d;
}

Domain Domain::ball(double radius, Vec center) {
  if (center.size() != 3) throw StructuralError("ball center must be 3D");
  Domain d = disk(radius, Vec::Zero(2));
  d.kind_ = Kind::kBall;
  d.center_ = center;
  d.lower_ = center.array() - radius;
  d.upper_ = center.array() + radius;
  return d;
}

Domain Domain::square(Vec lower, Vec upper) {
  if (lower.size() != 2 || upper.size() != 2) throw StructuralError("square must be 2D");
  Domain d;
  d.kind_ = Kind::kSquare;
  d.lower_ = lower;
  d.upper_ = upper;
  d.center_ = 0.5 * (lower + upper);
  return d;
}

bool Domain::contains(const Vec& x) const {
  if (x.size() != dim()) throw StructuralError("Domain::contains: dimension mismatch");
  if (kind_ == Kind::kSquare) {
    return (x.array() > lower_.array()).all() && (x.array() < upper_.array()).all();
  }
  return (x - center_).norm() < radius_;
}

bool Domain::on_boundary(const Vec& x, double tol) const {
  if (x.size() != dim()) throw StructuralError("Domain::on_boundary: dimension mismatch");
  if (kind_ == Kind::kSquare) {
    const bool inside_closed = (x.array() >= lower_.array() - tol).all() &&
                               (x.array() <= upper_.array() + tol).all();
    const bool on_face = ((x - lower_).array().abs() <= tol).any() ||
                         ((x - upper_).array().abs() <= tol).any();
    return inside_closed && on_face;
  }
  return std::abs((x - center_).norm() - radius_) <= tol;
}

double Domain::measure() const {
  switch (kind_) {
    case Kind::kDisk: return kPi * radius_ * radius_;
    case Kind::kBall: return 4.0 / 3.0 * kPi * radius_ * radius_ * radius_;
    case Kind::kSquare: return (upper_ - lower_).prod();
  }
  return 0.0;
}

// -- Problems ---------------------------------------------------------------

ProblemSpec make_problem(ProblemId id, const ProblemParams& params) {
  ProblemSpec spec;
  spec.id = id;
  spec.parameters = params;
  spec.eps = params.eps.value_or(0.0);
  if (!(spec.eps >= 0.0) || !std::isfinite(spec.eps)) {
    throw ConfigError("eps", "eps must be finite and >= 0");
  }

  const auto need_alpha = [&] {
    const double a = require(params.alpha, "alpha");
    if (!(a > 0.0)) throw ConfigError("alpha", "alpha must be > 0");
    return a;
  };

  switch (id) {
    case ProblemId::kP1:
    case ProblemId::kP4: {
      spec.domain = id == ProblemId::kP1 ? Domain::disk(1.0) : Domain::ball(1.0);
      set_window(spec, params);
      spec.forcing = [](const Vec&, double) { return 1.0; };
      spec.initial = [](const Vec& x) { return 0.5 * x.squaredNorm(); };
      spec.boundary = [](const Vec&, double t) { return 0.5 + t; };
      spec.exact = [](const Vec& x, double t) { return 0.5 * x.squaredNorm() + t; };
      spec.exact_derivatives = quadratic_bundle;
      if (id == ProblemId::kP1) {
        spec.norm_sq_closed_form = [](double t) { return kPi * (t * t + t / 2.0 + 1.0 / 12.0); };
      } else {
        spec.norm_sq_closed_form = [](double t) {
          return kPi * (4.0 * t * t / 3.0 + 4.0 * t / 5.0 + 1.0 / 7.0);
        };
      }
      break;
    }
    case ProblemId::kP2:
    case ProblemId::kP5: {
      const double alpha = need_alpha();
      spec.alpha = alpha;
      spec.domain = id == ProblemId::kP2 ? Domain::disk(1.0) : Domain::ball(1.0);
      set_window(spec, params);
      spec.singular_at_origin = true;
      spec.forcing = [alpha](const Vec& x, double t) { return power_forcing(x, t, alpha); };
      spec.initial = [](const Vec&) { return 0.0; };
      spec.boundary = [](const Vec&, double t) { return t; };
      spec.exact = [alpha](const Vec& x, double t) { return t * std::pow(x.squaredNorm(), alpha); };
      spec.exact_derivatives = [alpha](const Vec& x, double t) { return power_bundle(x, t, alpha); };
      if (id == ProblemId::kP2) {
        spec.norm_sq_closed_form = [alpha](double t) { return kPi * t * t / (2.0 * alpha + 1.0); };
      } else {
        spec.norm_sq_closed_form = [alpha](double t) {
          return 4.0 * kPi * t * t / (4.0 * alpha + 3.0);
        };
      }
      break;
    }
    case ProblemId::kP3: {
      spec.domain = Domain::square(Vec::Constant(2, -1.0), Vec::Constant(2, 1.0));
      set_window(spec, params);
      spec.forcing = [](const Vec&, double) { return 1.0; };
      spec.initial = [](const Vec& x) { return x(0) <= 0.0 ? 1.0 : 1.0 - x(0); };
      // Lateral data: 1 + t on the left part of the boundary, 1 - x + t on
      // the right part (which gives t on the face x = 1).
      spec.boundary = p3_exact;
      spec.exact = p3_exact;
      spec.exact_derivatives = [](const Vec& x, double t) {
        DerivativeBundle b = DerivativeBundle::zero(2);
        b.value = p3_exact(x, t);
        b.du_dt = 1.0;
        if (x(0) > 0.0) b.grad_x(0) = -1.0;
        return b;
      };
      spec.norm_sq_closed_form = [](double t) { return 4.0 * t * t + 6.0 * t + 8.0 / 3.0; };
      break;
    }
    case ProblemId::kP1Regularized: {
      require(params.eps, "eps");
      const double rho = params.subdomain_radius.value_or(0.5);
      if (!(rho > 0.0 && rho <= 1.0)) {
        throw ConfigError("subdomain_radius", "subdomain_radius must lie in (0, 1]");
      }
      spec.domain = Domain::disk(rho);
      if (params.window) {
        spec.t1 = params.window->first;
        spec.t2 = params.window->second;
      } else {
        spec.t1 = 7.0 / 4.0;
        spec.t2 = 2.0;
      }
      if (!(spec.t1 < spec.t2) || spec.t1 < 0.0) {
        throw ConfigError("window", "time window must satisfy 0 <= t1 < t2");
      }
      const double t1 = spec.t1;
      spec.forcing = [](const Vec&, double) { return 1.0; };
      spec.initial = [t1](const Vec& x) { return 0.5 * x.squaredNorm() + t1; };
      spec.boundary = [](const Vec& x, double t) { return 0.5 * x.squaredNorm() + t; };
      spec.exact = [](const Vec& x, double t) { return 0.5 * x.squaredNorm() + t; };
      spec.exact_derivatives = quadratic_bundle;
      // Integral of (r^2/2 + t)^2 over B_rho: pi (rho^6/12 + t rho^4/2 + t^2 rho^2);
      // (pi/4)(t^2 + t/8 + 1/192) at rho = 1/2.
      spec.norm_sq_closed_form = [rho](double t) {
        const double r2 = rho * rho;
        return kPi * (r2 * r2 * r2 / 12.0 + t * r2 * r2 / 2.0 + t * t * r2);
      };
      break;
    }
  }
  return spec;
}

double forcing_value(const ProblemSpec& spec, const Vec& z) {
  if (z.size() != spec.input_dim()) throw StructuralError("forcing_value: dimension mismatch");
  return spec.forcing(z.head(spec.spatial_dim()), z(spec.spatial_dim()));
}

double norm_sq_exact(const ProblemSpec& spec, double t) {
  if (!spec.norm_sq_closed_form) {
    throw UnsupportedOperation("problem " + to_string(spec.id) + " has no closed-form norm");
  }
  return spec.norm_sq_closed_form(t);
}

}  // namespace dpinn
