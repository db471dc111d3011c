#include "dpinn/error_metrics.hpp"

#include "dpinn/checkpoint.hpp"
#include "dpinn/collocation.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <ostream>

namespace dpinn {

namespace {

constexpr double kPi = std::numbers::pi;

QuadratureRule disk_rule(const Domain& d, int m) {
  const int n_r = m;
  const int n_th = 4 * m;
  const double R = d.radius();
  QuadratureRule q;
  q.nodes.resize(2, n_r * n_th);
  q.weights.resize(n_r * n_th);
  const double dth = 2.0 * kPi / n_th;
  Eigen::Index c = 0;
  for (int i = 0; i < n_r; ++i) {
    const double r0 = R * i / n_r;
    const double r1 = R * (i + 1) / n_r;
    const double r = 0.5 * (r0 + r1);
    const double w = 0.5 * (r1 * r1 - r0 * r0) * dth;
    for (int j = 0; j < n_th; ++j, ++c) {
      const double th = (j + 0.5) * dth;
      q.nodes(0, c) = d.center()(0) + r * std::cos(th);
      q.nodes(1, c) = d.center()(1) + r * std::sin(th);
      q.weights(c) = w;
    }
  }
  return q;
}

QuadratureRule square_rule(const Domain& d, int m) {
  QuadratureRule q;
  q.nodes.resize(2, m * m);
  q.weights.resize(m * m);
  const Vec lo = d.lower();
  const Vec hi = d.upper();
  const double hx = (hi(0) - lo(0)) / m;
  const double hy = (hi(1) - lo(1)) / m;
  Eigen::Index c = 0;
  for (int j = 0; j < m; ++j) {
    for (int i = 0; i < m; ++i, ++c) {
      q.nodes(0, c) = lo(0) + (i + 0.5) * hx;
      q.nodes(1, c) = lo(1) + (j + 0.5) * hy;
      q.weights(c) = hx * hy;
    }
  }
  return q;
}

QuadratureRule ball_rule(const Domain& d, int m) {
  const int n_r = m;
  const int n_mu = m;
  const int n_ph = 2 * m;
  const double R = d.radius();
  const Eigen::Index n = static_cast<Eigen::Index>(n_r) * n_mu * n_ph;
  QuadratureRule q;
  q.nodes.resize(3, n);
  q.weights.resize(n);
  const double dmu = 2.0 / n_mu;
  const double dph = 2.0 * kPi / n_ph;
  Eigen::Index c = 0;
  for (int i = 0; i < n_r; ++i) {
    const double r0 = R * i / n_r;
    const double r1 = R * (i + 1) / n_r;
    const double r = 0.5 * (r0 + r1);
    const double w = (r1 * r1 * r1 - r0 * r0 * r0) / 3.0 * dmu * dph;
    for (int j = 0; j < n_mu; ++j) {
      const double mu = -1.0 + (j + 0.5) * dmu;
      const double s = std::sqrt(1.0 - mu * mu);
      for (int k = 0; k < n_ph; ++k, ++c) {
        const double ph = (k + 0.5) * dph;
        q.nodes(0, c) = d.center()(0) + r * s * std::cos(ph);
        q.nodes(1, c) = d.center()(1) + r * s * std::sin(ph);
        q.nodes(2, c) = d.center()(2) + r * mu;
        q.weights(c) = w;
      }
    }
  }
  return q;
}

// Pairwise sum keeps the reduction order fixed and the rounding small.
double pairwise_sum(const double* v, Eigen::Index n) {
  if (n <= 64) {
    double s = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) s += v[i];
    return s;
  }
  const Eigen::Index h = n / 2;
  return pairwise_sum(v, h) + pairwise_sum(v + h, n - h);
}

}  // namespace

int default_refinement(const Domain& domain) { return domain.dim() == 3 ? 64 : 200; }

QuadratureRule make_quadrature(const Domain& domain, int refinement) {
  if (refinement == 0) refinement = default_refinement(domain);
  if (refinement < 1) throw ConfigError("refinement", "quadrature refinement must be positive");
  QuadratureRule q;
  switch (domain.kind()) {
    case Domain::Kind::kDisk: q = disk_rule(domain, refinement); break;
    case Domain::Kind::kSquare: q = square_rule(domain, refinement); break;
    case Domain::Kind::kBall: q = ball_rule(domain, refinement); break;
  }
  q.kind = domain.kind();
  q.refinement = refinement;
  return q;
}

double l2_norm_sq(const std::function<double(const Vec&)>& g, const QuadratureRule& rule) {
  Eigen::VectorXd terms(rule.size());
  for (Eigen::Index c = 0; c < rule.size(); ++c) {
    const double v = g(Vec(rule.nodes.col(c)));
    terms(c) = rule.weights(c) * v * v;
  }
  return pairwise_sum(terms.data(), terms.size());
}

std::string to_string(DenominatorSource s) {
  return s == DenominatorSource::kClosedForm ? "closed_form" : "quadrature";
}

ErrorReport sup_error(const Surrogate& model, const ProblemSpec& spec,
                      const std::vector<double>& eval_times, const QuadratureRule& rule) {
  if (!spec.has_exact()) {
    throw UnsupportedOperation("problem " + to_string(spec.id) + " has no exact solution");
  }
  if (rule.kind != spec.domain.kind() || rule.nodes.rows() != spec.spatial_dim()) {
    throw StructuralError("sup_error: quadrature rule does not match the problem domain");
  }
  if (eval_times.empty()) throw ConfigError("times", "no evaluation times");

  const int n = spec.spatial_dim();
  const Eigen::Index N = rule.size();
  PointMatrix pts(n + 1, N);
  pts.topRows(n) = rule.nodes;

  ErrorReport report;
  report.times = eval_times;
  report.refinement = rule.refinement;
  Eigen::VectorXd exact(N);
  Eigen::VectorXd terms(N);
  for (double t : eval_times) {
    pts.row(n).setConstant(t);
    const Eigen::VectorXd u_hat = model.values(pts);
    for (Eigen::Index c = 0; c < N; ++c) {
      const double d = u_hat(c) - spec.exact(rule.nodes.col(c), t);
      terms(c) = rule.weights(c) * d * d;
    }
    report.error_sq.push_back(pairwise_sum(terms.data(), N));
  }
  report.E = *std::max_element(report.error_sq.begin(), report.error_sq.end());

  std::vector<double> denom_times = eval_times;
  denom_times.push_back(spec.t2);
  double denom = 0.0;
  if (spec.has_norm_closed_form()) {
    report.denominator_source = DenominatorSource::kClosedForm;
    for (double t : denom_times) denom = std::max(denom, spec.norm_sq_closed_form(t));
  } else {
    report.denominator_source = DenominatorSource::kQuadrature;
    for (double t : denom_times) {
      denom = std::max(denom, l2_norm_sq([&](const Vec& x) { return spec.exact(x, t); }, rule));
    }
  }
  report.denominator = denom;
  report.E_rel = denom > 0.0 ? report.E / denom : 0.0;
  return report;
}

ErrorReport sup_error(const Surrogate& model, const ProblemSpec& spec, int refinement) {
  ErrorReport r = sup_error(model, spec, time_grid(spec.t1, spec.t2, true),
                            make_quadrature(spec.domain, refinement));
  r.time_discretization = "training time grid";
  return r;
}

std::vector<EpsSweepRow> eps_sweep_error(
    const std::vector<std::pair<double, const Surrogate*>>& models, const ProblemParams& base,
    int refinement) {
  std::vector<EpsSweepRow> rows;
  for (const auto& [eps, model] : models) {
    ProblemParams p = base;
    p.eps = eps;
    const ProblemSpec spec = make_problem(ProblemId::kP1Regularized, p);
    rows.push_back({eps, sup_error(*model, spec, refinement)});
  }
  return rows;
}

double eps_sweep_relative_error(double E) { return 768.0 * E / (817.0 * kPi); }

void write_error_table_csv(std::ostream& out, const std::vector<double>& T,
                           const std::vector<ErrorReport>& reports) {
  if (T.size() != reports.size()) throw StructuralError("error table: row count mismatch");
  out << "T,E,E_rel\n";
  for (std::size_t i = 0; i < T.size(); ++i) {
    out << format_real(T[i]) << ',' << format_real(reports[i].E) << ','
        << format_real(reports[i].E_rel) << '\n';
  }
}

void write_eps_table_csv(std::ostream& out, const std::vector<EpsSweepRow>& rows) {
  out << "eps,E,E_rel\n";
  for (const EpsSweepRow& r : rows) {
    out << format_real(r.eps) << ',' << format_real(r.report.E) << ','
        << format_real(r.report.E_rel) << '\n';
  }
}

}  // namespace dpinn
