#pragma once

// Fixed collocation sets: a spatial point cloud crossed with an equispaced
// time grid, split by role. Interior points feed the physics loss; lateral
// boundary and initial-slab points feed the data loss.

#include "dpinn/core.hpp"
#include "dpinn/problems.hpp"

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace dpinn {

enum class Role { kInterior, kBoundary, kInitial };
std::string to_string(Role role);

struct EvalPoint {
  Vec x;
  double t = 0.0;
  Role role = Role::kInterior;
};

/// Equispaced grid on [t1, t2] including both endpoints. `base_count`
/// points, or ceil(2.1 (t2 - t1)) points when the long-horizon rule is on
/// and t2 - t1 >= 100.
std::vector<double> time_grid(double t1, double t2, bool long_horizon_rule, int base_count = 21);

struct SpatialPoints {
  std::vector<Vec> interior;
  std::vector<Vec> boundary;
  std::string strategy;
  double nominal_spacing = 0.0;
};

/// Deterministic spatial cloud with exactly `target_count` points.
///
/// Square: m x m tensor grid (target must be a perfect square m^2, m >= 3);
/// boundary = grid points on the edges. Disk/ball: concentric shells at
/// radii R k / K with per-shell counts proportional to k (disk) or k^2
/// (ball), a centre point unless excluded, outermost shell exactly on the
/// boundary. The seed sets the angular phase (disk) or rotation (ball) of
/// each shell.
SpatialPoints spatial_points(const Domain& domain, int target_count, std::uint64_t seed,
                             double origin_exclusion = 0.0);

struct CollocationCounts {
  int spatial = 441;
  int time = 21;
  bool long_horizon_rule = true;
  /// Applied only to problems whose forcing is singular at the origin.
  double origin_exclusion = 1e-3;
};

struct CollocationProvenance {
  std::string strategy;
  std::uint64_t seed = 0;
  int spatial_target = 0;
  int time_count = 0;
  double nominal_spacing = 0.0;
  double origin_exclusion = 0.0;  // radius actually applied
};

struct CollocationSet {
  std::vector<EvalPoint> interior;
  std::vector<EvalPoint> boundary;
  std::vector<EvalPoint> initial;
  std::vector<double> times;
  CollocationProvenance provenance;
};

/// interior = spatial interior x times after t1; boundary = spatial boundary
/// x times after t1; initial = every spatial point at t1. Roles are disjoint.
CollocationSet assemble(const ProblemSpec& spec, const CollocationCounts& counts,
                        std::uint64_t seed);

/// Stacks points as columns (x..., t).
PointMatrix to_matrix(const std::vector<EvalPoint>& points);

/// CSV with header "x,y[,z],t,role".
void write_points_csv(std::ostream& out, const CollocationSet& set);

}  // namespace dpinn
