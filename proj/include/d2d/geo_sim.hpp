#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <vector>

#include "d2d/cell.hpp"
#include "d2d/popularity.hpp"

namespace d2d {

enum class CachingMode { deterministic, random_zipf, most_popular };

const char* caching_mode_name(CachingMode mode);

// One dropped cell: the square has side sqrt(2) so that the analytic cluster
// count 2/r^2 and occupancy fraction r^2/2 hold exactly. The grid keeps
// floor(side/r) full clusters per side; users in the remainder strip carry
// cluster -1 and are served by the base station. Strip users still hold a
// cache under the distributed placement rules (random, most-popular) and can
// self-serve, but never join a D2D link; deterministic placement is defined
// per cluster, so there they hold nothing (cache 0).
struct ClusterRealization {
  double side = 0.0;
  double r = 0.0;
  int clusters_per_side = 0;
  Eigen::ArrayX2d positions;      // n x 2
  std::vector<int> cluster_of;    // -1 for the remainder strip
  std::vector<int> cache;         // 1-based rank, 0 when the user has no cache
  std::vector<int> request;       // 1-based rank

  int cluster_count() const { return clusters_per_side * clusters_per_side; }
};

struct TrialOutcome {
  int active_clusters = 0;   // clusters with at least one potential link
  int self_requests = 0;     // users who requested their own cached file
  int potential_links = 0;   // ordered (receiver, transmitter) pairs
};

struct GeoSummary {
  long trials = 0;
  int clusters_per_side = 0;
  double mean_active = 0.0;
  double se_active = 0.0;
  double mean_self = 0.0;
  double se_self = 0.0;
  double mean_potential_links = 0.0;
};

// Drops users, assigns caches per mode (pop_cache required for random_zipf),
// samples requests.
ClusterRealization sample_realization(const CellConfig& cfg, const PopularityModel& pop_req,
                                      CachingMode mode, const PopularityModel* pop_cache,
                                      Rng& rng);

TrialOutcome evaluate_trial(const ClusterRealization& real);

GeoSummary run_trials(const CellConfig& cfg, const PopularityModel& pop_req, CachingMode mode,
                      const PopularityModel* pop_cache, long trials, std::uint64_t seed,
                      int threads = 1);

}  // namespace d2d
