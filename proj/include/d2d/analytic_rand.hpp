#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

#include "d2d/cell.hpp"
#include "d2d/popularity.hpp"

namespace d2d {

// Random caching: each user independently caches one file drawn from a Zipf
// law with exponent caching_gamma. Requests are conditionally independent
// given the realized cache contents H, so
//   P[cluster active | K=k] = 1 - E_H[ prod_i (1 - (mass(H~) - f_{h_i})) ],
// where H~ is the de-duplicated cache set. product_of_marginals switches to
// the weaker 1 - prod_i E_H[...] reading for comparison runs.
struct RandCachingParams {
  double caching_gamma = 0.0;
  long mc_samples = 10000;
  std::uint64_t seed = 0;
  bool product_of_marginals = false;
  int threads = 1;

  void validate() const {
    if (mc_samples < 1) throw std::invalid_argument("rand.mc_samples: must be >= 1");
    if (!(caching_gamma >= 0.0))
      throw std::invalid_argument("rand.gamma_c: must be finite and >= 0");
  }
};

// One realized cache assignment for a cluster of k users.
struct CacheProfile {
  std::vector<int> assignments;  // 1-based file ranks, one per user
  double distinct_mass = 0.0;    // request-pmf mass of the de-duplicated set
};

CacheProfile make_profile(const PopularityModel& pop_req, std::vector<int> assignments);

// P[cluster active | caches fixed to this profile].
double rand_active_given_profile(const PopularityModel& pop_req, const CacheProfile& profile);

// Exact E[a|K=k] by enumerating all m^k cache profiles.
double rand_active_given_k_exact(const PopularityModel& pop_req, const PopularityModel& pop_cache,
                                 long k, bool product_of_marginals = false);

// Thrown when exact enumeration would exceed the profile budget; carries the
// Monte Carlo fallback suggestion.
class EnumerationInfeasible : public std::runtime_error {
 public:
  EnumerationInfeasible(long k_max, double log10_profiles, long suggested_mc_samples);
  long k_max;
  double log10_profiles;
  long suggested_mc_samples;
};

// Exact E[A]: feasible only while m^k_max <= 1e7 over the occupancy levels
// that matter (P[K=k] > 1e-12); throws EnumerationInfeasible otherwise.
DetPoint rand_expected_active_exact(const CellConfig& cfg, const PopularityModel& pop_req,
                                    const RandCachingParams& params);

// Monte Carlo E[A] with a standard error: stratified over the occupancy k
// (the binomial mixture is known analytically), cache profiles sampled
// i.i.d. per stratum from a substream derived from (seed, k) — the same
// substream regardless of r or gamma_c, so grid sweeps share random numbers.
DetPoint rand_expected_active_mc(const CellConfig& cfg, const PopularityModel& pop_req,
                                 const RandCachingParams& params);

// Expected per-user self-request probability sum_h p_h f_h (n_self = n times
// this); exact, shared by both estimators.
double rand_self_rate(const PopularityModel& pop_req, const PopularityModel& pop_cache);

}  // namespace d2d
