#pragma once

#include <cstdint>
#include <vector>

#include "d2d/geo_sim.hpp"

namespace d2d {

// Power-law pathloss with independent log-normal shadowing per ordered
// (tx, rx) pair. Rates are log2(1 + SINR); the default noise floor gives a
// reference_snr_db SNR at distance r/2 without shadowing (the transmit power
// is whatever makes range r feasible), so rates stay finite for isolated
// links while noise_power = 0 recovers pure SIR.
struct ChannelParams {
  double pathloss_exponent = 2.6;
  double shadowing_sigma_db = 4.0;
  double tx_power = 1.0;
  double noise_power = -1.0;      // < 0: derive from reference_snr_db at r/2
  double reference_snr_db = 30.0;
  double min_distance = 1e-3;     // pathloss regularization radius
  int max_iterations = 100;
  double switch_rel_tol = 1e-6;

  void validate() const;
  double effective_noise(double r) const;
};

// distance^-alpha pathloss times the shadowing factor 10^(shadow_db/10),
// with distance floored at min_distance.
double link_gain(double distance, double shadow_db, const ChannelParams& channel);

struct PotentialLink {
  int tx = 0;
  int rx = 0;
};

// Potential links grouped by cluster id: (tx caches exactly what rx
// requests, rx is not self-served).
std::vector<std::vector<PotentialLink>> potential_links_by_cluster(
    const ClusterRealization& real);

struct ScheduledLink {
  int cluster_id = -1;
  int tx = 0;
  int rx = 0;
  double signal = 0.0;
  double interference = 0.0;
  double sinr = 0.0;
  double rate = 0.0;
};

struct PhyLinkSchedule {
  std::vector<ScheduledLink> links;  // one per cluster that has potential links
  int iterations = 0;
  bool converged = true;
  double sum_rate = 0.0;
};

// Iterative link selection: round 0 picks the highest received power link in
// every cluster; later rounds sweep clusters in ascending index and switch a
// cluster to a strictly better-SINR link under the interference of the
// current schedule. Stops at a fixed point, or returns the best-sum-rate
// schedule seen when max_iterations is hit (converged = false).
PhyLinkSchedule schedule_links(const ClusterRealization& real, const ChannelParams& channel,
                               std::uint64_t shadow_seed);

// Brute-force optimum over every per-cluster link combination; every cluster
// with potential links picks exactly one, as the iterative rule does.
// Testing oracle for small instances.
PhyLinkSchedule exhaustive_best_schedule(const ClusterRealization& real,
                                         const ChannelParams& channel,
                                         std::uint64_t shadow_seed);

struct RatePoint {
  double r = 0.0;
  double mean_rate = 0.0;
  double se_rate = 0.0;
  double mean_links = 0.0;
  double nonconverged_frac = 0.0;
};

struct RateSweep {
  std::vector<RatePoint> points;
  double r_opt = 0.0;
  double rate_at_opt = 0.0;
};

// Mean total D2D rate versus the collaboration distance under deterministic
// caching; r_opt is the grid argmax.
RateSweep rate_vs_r_sweep(int n, const PopularityModel& pop_req, const ChannelParams& channel,
                          const std::vector<double>& r_grid, long trials, std::uint64_t seed,
                          int threads = 1);

}  // namespace d2d
