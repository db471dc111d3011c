#include "dpinn/collocation.hpp"

#include "dpinn/checkpoint.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <ostream>
#include <random>

namespace dpinn {

namespace {

constexpr double kPi = std::numbers::pi;

// Splits `total` into parts proportional to `weights` (largest remainder,
// ties to the outer shell so the boundary is never starved).
std::vector<int> apportion(int total, const std::vector<double>& weights) {
  const double sum = std::accumulate(weights.begin(), weights.end(), 0.0);
  std::vector<int> counts(weights.size());
  std::vector<std::pair<double, std::size_t>> remainders;
  int assigned = 0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    const double exact = total * weights[i] / sum;
    counts[i] = static_cast<int>(std::floor(exact));
    assigned += counts[i];
    remainders.emplace_back(exact - counts[i], i);
  }
  std::sort(remainders.begin(), remainders.end(), [](const auto& a, const auto& b) {
    return a.first != b.first ? a.first > b.first : a.second > b.second;
  });
  for (int k = 0; k < total - assigned; ++k) counts[remainders[static_cast<std::size_t>(k)].second]++;
  return counts;
}

// Uniformly random rotation from a unit quaternion.
Eigen::Matrix3d random_rotation(std::mt19937_64& rng) {
  std::normal_distribution<double> n01(0.0, 1.0);
  Eigen::Quaterniond q(n01(rng), n01(rng), n01(rng), n01(rng));
  q.normalize();
  return q.toRotationMatrix();
}

SpatialPoints square_grid(const Domain& domain, int target_count, double origin_exclusion) {
  const int m = static_cast<int>(std::lround(std::sqrt(static_cast<double>(target_count))));
  if (m * m != target_count || m < 3) {
    throw ConfigError("spatial_points",
                      "square domains need a perfect-square point count m^2 with m >= 3");
  }
  SpatialPoints sp;
  sp.strategy = "tensor-grid";
  const Vec lo = domain.lower();
  const Vec hi = domain.upper();
  sp.nominal_spacing = (hi(0) - lo(0)) / (m - 1);
  for (int j = 0; j < m; ++j) {
    for (int i = 0; i < m; ++i) {
      Vec x(2);
      // Edge nodes are set exactly so they sit on the boundary.
      x(0) = i == m - 1 ? hi(0) : lo(0) + (hi(0) - lo(0)) * i / (m - 1);
      x(1) = j == m - 1 ? hi(1) : lo(1) + (hi(1) - lo(1)) * j / (m - 1);
      if (origin_exclusion > 0.0 && (x - domain.center()).norm() < origin_exclusion) {
        throw ConfigError("origin_exclusion",
                          "tensor grid has a node inside the origin-exclusion radius");
      }
      const bool edge = i == 0 || j == 0 || i == m - 1 || j == m - 1;
      (edge ? sp.boundary : sp.interior).push_back(x);
    }
  }
  return sp;
}

SpatialPoints shells(const Domain& domain, int target_count, std::uint64_t seed,
                     double origin_exclusion) {
  const int dim = domain.dim();
  const double radius = domain.radius();
  const double h = std::pow(domain.measure() / target_count, 1.0 / dim);
  const int n_shells = std::max(1, static_cast<int>(std::lround(radius / h)));
  const bool with_centre = !(origin_exclusion > 0.0);
  if (radius / n_shells <= origin_exclusion) {
    throw ConfigError("origin_exclusion", "origin-exclusion radius swallows the innermost shell");
  }

  std::vector<double> weights;
  for (int k = 1; k <= n_shells; ++k) weights.push_back(dim == 2 ? k : double(k) * k);
  const std::vector<int> per_shell = apportion(target_count - (with_centre ? 1 : 0), weights);
  if (*std::min_element(per_shell.begin(), per_shell.end()) < 1) {
    throw ConfigError("spatial_points", "too few points for the shell construction");
  }

  SpatialPoints sp;
  sp.strategy = dim == 2 ? "polar-shells" : "spherical-shells";
  sp.nominal_spacing = radius / n_shells;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  if (with_centre) sp.interior.push_back(domain.center());

  const double golden = kPi * (3.0 - std::sqrt(5.0));
  for (int k = 1; k <= n_shells; ++k) {
    const int count = per_shell[static_cast<std::size_t>(k - 1)];
    const double r = k == n_shells ? radius : radius * k / n_shells;
    auto& dest = k == n_shells ? sp.boundary : sp.interior;
    if (dim == 2) {
      const double phase = unit(rng) * 2.0 * kPi / count;
      for (int j = 0; j < count; ++j) {
        const double th = phase + 2.0 * kPi * j / count;
        Vec x(2);
        x << std::cos(th), std::sin(th);
        dest.push_back(domain.center() + r * x);
      }
    } else {
      const Eigen::Matrix3d rot = random_rotation(rng);
      for (int j = 0; j < count; ++j) {
        const double z = 1.0 - (2.0 * j + 1.0) / count;
        const double rho = std::sqrt(std::max(0.0, 1.0 - z * z));
        const double ph = golden * j;
        Eigen::Vector3d u(rho * std::cos(ph), rho * std::sin(ph), z);
        u = (rot * u).normalized();
        Vec x = domain.center() + r * Vec(u);
        dest.push_back(x);
      }
    }
  }
  return sp;
}

}  // namespace

std::string to_string(Role role) {
  switch (role) {
    case Role::kInterior: return "interior";
    case Role::kBoundary: return "boundary";
    case Role::kInitial: return "initial";
  }
  return "?";
}

std::vector<double> time_grid(double t1, double t2, bool long_horizon_rule, int base_count) {
  if (!(t1 < t2)) throw ConfigError("window", "time grid needs t1 < t2");
  if (base_count < 2) throw ConfigError("time_points", "time grid needs at least 2 points");
  int count = base_count;
  const double span = t2 - t1;
  if (long_horizon_rule && span >= 100.0) {
    // 2.1 * span carries representation error (2.1 * 100 = 210.00000000000003).
    count = static_cast<int>(std::ceil(2.1 * span - 1e-9));
  }
  std::vector<double> grid(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) grid[static_cast<std::size_t>(i)] = t1 + span * i / (count - 1);
  grid.back() = t2;
  return grid;
}

SpatialPoints spatial_points(const Domain& domain, int target_count, std::uint64_t seed,
                             double origin_exclusion) {
  if (target_count < 9) throw ConfigError("spatial_points", "need at least 9 spatial points");
  if (domain.kind() == Domain::Kind::kSquare) {
    return square_grid(domain, target_count, origin_exclusion);
  }
  return shells(domain, target_count, seed, origin_exclusion);
}

CollocationSet assemble(const ProblemSpec& spec, const CollocationCounts& counts,
                        std::uint64_t seed) {
  const double exclusion = spec.singular_at_origin ? counts.origin_exclusion : 0.0;
  const SpatialPoints sp = spatial_points(spec.domain, counts.spatial, seed, exclusion);

  CollocationSet set;
  set.times = time_grid(spec.t1, spec.t2, counts.long_horizon_rule, counts.time);
  set.provenance.strategy = sp.strategy;
  set.provenance.seed = seed;
  set.provenance.spatial_target = counts.spatial;
  set.provenance.time_count = static_cast<int>(set.times.size());
  set.provenance.nominal_spacing = sp.nominal_spacing;
  set.provenance.origin_exclusion = exclusion;

  for (std::size_t i = 1; i < set.times.size(); ++i) {
    const double t = set.times[i];
    for (const Vec& x : sp.interior) set.interior.push_back({x, t, Role::kInterior});
    for (const Vec& x : sp.boundary) set.boundary.push_back({x, t, Role::kBoundary});
  }
  for (const Vec& x : sp.interior) set.initial.push_back({x, spec.t1, Role::kInitial});
  for (const Vec& x : sp.boundary) set.initial.push_back({x, spec.t1, Role::kInitial});
  return set;
}

PointMatrix to_matrix(const std::vector<EvalPoint>& points) {
  if (points.empty()) return PointMatrix(0, 0);
  const auto n = points.front().x.size();
  PointMatrix m(n + 1, static_cast<Eigen::Index>(points.size()));
  for (std::size_t i = 0; i < points.size(); ++i) {
    const auto c = static_cast<Eigen::Index>(i);
    m.col(c).head(n) = points[i].x;
    m(n, c) = points[i].t;
  }
  return m;
}

void write_points_csv(std::ostream& out, const CollocationSet& set) {
  const EvalPoint* any = !set.initial.empty() ? &set.initial.front() : nullptr;
  const auto n = any ? any->x.size() : 2;
  static const char* kAxes[] = {"x", "y", "z"};
  for (Eigen::Index k = 0; k < n; ++k) out << kAxes[k] << ',';
  out << "t,role\n";
  for (const auto* group : {&set.interior, &set.boundary, &set.initial}) {
    for (const EvalPoint& p : *group) {
      for (Eigen::Index k = 0; k < n; ++k) out << format_real(p.x(k)) << ',';
      out << format_real(p.t) << ',' << to_string(p.role) << '\n';
    }
  }
}

}  // namespace dpinn
