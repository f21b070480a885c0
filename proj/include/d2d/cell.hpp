#pragma once

#include <algorithm>
#include <cmath>

namespace d2d {

// Largest legal collaboration distance: the cluster square may cover the
// whole cell (occupancy fraction r^2/2 = 1).
inline constexpr double kMaxCollabDistance = 1.4142135623730951;

// One cell: n users dropped uniformly, library of m files, clusters of side
// r. Cluster count 2/r^2 and occupancy fraction r^2/2 hold exactly in a
// square cell of side sqrt(2); the simulators use that convention.
struct CellConfig {
  int n = 0;
  int m = 0;
  double r = 0.0;
  double request_gamma = 0.0;

  double cluster_area_fraction() const { return std::min(1.0, r * r / 2.0); }
  double cluster_count() const { return 2.0 / (r * r); }

  // Throws std::invalid_argument naming the offending field.
  void validate() const;
};

// Expected-activity summary at one collaboration distance. se_active is a
// Monte Carlo standard error where applicable, 0 for closed-form results.
struct DetPoint {
  double r = 0.0;
  double expected_active = 0.0;
  double expected_self = 0.0;
  double active_prob = 0.0;
  double se_active = 0.0;
};

}  // namespace d2d
