#include "d2d/analytic_rand.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "d2d/analytic_det.hpp"
#include "d2d/parallel.hpp"

namespace d2d {

namespace {

constexpr double kStratumWeightFloor = 1e-9;   // MC path
constexpr double kEnumWeightFloor = 1e-12;     // exact path
constexpr double kEnumProfileBudget = 1e7;

// Scratch for distinct-mass bookkeeping, reused across samples.
struct MassScratch {
  std::vector<unsigned char> seen;
  std::vector<int> touched;

  explicit MassScratch(int m) : seen(static_cast<std::size_t>(m) + 1, 0) {
    touched.reserve(64);
  }

  double distinct_mass(const PopularityModel& pop_req, const int* ranks, long k) {
    double mass = 0.0;
    for (long i = 0; i < k; ++i) {
      int h = ranks[i];
      if (!seen[h]) {
        seen[h] = 1;
        touched.push_back(h);
        mass += pop_req.pmf_at(h);
      }
    }
    for (int h : touched) seen[h] = 0;
    touched.clear();
    return mass;
  }
};

double active_given_caches(const PopularityModel& pop_req, const int* ranks, long k,
                           double distinct_mass) {
  double product = 1.0;
  for (long i = 0; i < k; ++i)
    product *= 1.0 - (distinct_mass - pop_req.pmf_at(ranks[i]));
  return 1.0 - product;
}

// Mean miss probability over the profile's users, for the
// product-of-marginals variant.
double mean_miss_given_caches(const PopularityModel& pop_req, const int* ranks, long k,
                              double distinct_mass) {
  double sum = 0.0;
  for (long i = 0; i < k; ++i) sum += 1.0 - (distinct_mass - pop_req.pmf_at(ranks[i]));
  return sum / static_cast<double>(k);
}

struct StratumEstimate {
  double mean = 0.0;
  double variance_of_mean = 0.0;
};

StratumEstimate estimate_stratum(const PopularityModel& pop_req, const PopularityModel& pop_cache,
                                 long k, const RandCachingParams& params, Rng rng,
                                 MassScratch& scratch, std::vector<int>& ranks) {
  const long nsamp = params.mc_samples;
  double sum = 0.0, sumsq = 0.0;
  for (long s = 0; s < nsamp; ++s) {
    for (long i = 0; i < k; ++i) ranks[i] = pop_cache.sample_rank(rng);
    double mass = scratch.distinct_mass(pop_req, ranks.data(), k);
    double v = params.product_of_marginals
                   ? mean_miss_given_caches(pop_req, ranks.data(), k, mass)
                   : active_given_caches(pop_req, ranks.data(), k, mass);
    sum += v;
    sumsq += v * v;
  }
  StratumEstimate est;
  double mean = sum / static_cast<double>(nsamp);
  double var = std::max(0.0, sumsq / static_cast<double>(nsamp) - mean * mean);
  if (params.product_of_marginals) {
    // delta method through a(q) = 1 - q^k
    double dq = static_cast<double>(k) * std::pow(mean, static_cast<double>(k - 1));
    est.mean = 1.0 - std::pow(mean, static_cast<double>(k));
    est.variance_of_mean = dq * dq * var / static_cast<double>(nsamp);
  } else {
    est.mean = mean;
    est.variance_of_mean = var / static_cast<double>(nsamp);
  }
  return est;
}

}  // namespace

CacheProfile make_profile(const PopularityModel& pop_req, std::vector<int> assignments) {
  CacheProfile profile;
  for (int h : assignments)
    if (h < 1 || h > pop_req.size())
      throw std::invalid_argument("cache profile rank out of range 1..m");
  MassScratch scratch(pop_req.size());
  profile.distinct_mass = scratch.distinct_mass(pop_req, assignments.data(),
                                                static_cast<long>(assignments.size()));
  profile.assignments = std::move(assignments);
  return profile;
}

double rand_active_given_profile(const PopularityModel& pop_req, const CacheProfile& profile) {
  const long k = static_cast<long>(profile.assignments.size());
  if (k <= 1) return 0.0;
  return active_given_caches(pop_req, profile.assignments.data(), k, profile.distinct_mass);
}

double rand_active_given_k_exact(const PopularityModel& pop_req, const PopularityModel& pop_cache,
                                 long k, bool product_of_marginals) {
  if (k <= 1) return 0.0;
  const int m = pop_req.size();
  std::vector<int> ranks(k, 1);
  MassScratch scratch(m);
  double acc = 0.0;
  // odometer over {1..m}^k
  for (;;) {
    double prob = 1.0;
    for (long i = 0; i < k; ++i) prob *= pop_cache.pmf_at(ranks[i]);
    double mass = scratch.distinct_mass(pop_req, ranks.data(), k);
    acc += prob * (product_of_marginals
                       ? mean_miss_given_caches(pop_req, ranks.data(), k, mass)
                       : active_given_caches(pop_req, ranks.data(), k, mass));
    long pos = k - 1;
    while (pos >= 0 && ranks[pos] == m) ranks[pos--] = 1;
    if (pos < 0) break;
    ++ranks[pos];
  }
  if (product_of_marginals) return 1.0 - std::pow(acc, static_cast<double>(k));
  return acc;
}

EnumerationInfeasible::EnumerationInfeasible(long k_max_, double log10_profiles_,
                                             long suggested_mc_samples_)
    : std::runtime_error("exact enumeration infeasible: m^" + std::to_string(k_max_) +
                         " = 10^" + std::to_string(log10_profiles_) +
                         " cache profiles; use the Monte Carlo estimator (mc_samples >= " +
                         std::to_string(suggested_mc_samples_) + ")"),
      k_max(k_max_),
      log10_profiles(log10_profiles_),
      suggested_mc_samples(suggested_mc_samples_) {}

double rand_self_rate(const PopularityModel& pop_req, const PopularityModel& pop_cache) {
  return (pop_req.pmf() * pop_cache.pmf()).sum();
}

DetPoint rand_expected_active_exact(const CellConfig& cfg, const PopularityModel& pop_req,
                                    const RandCachingParams& params) {
  cfg.validate();
  params.validate();
  if (pop_req.size() != cfg.m)
    throw std::invalid_argument("cell.m: popularity model has different library size");
  const PopularityModel pop_cache(cfg.m, params.caching_gamma);

  const double p = cfg.cluster_area_fraction();
  const auto win = detail::occupancy_window(cfg.n, p);
  const auto kpmf = detail::occupancy_pmf_window(cfg.n, p, win);
  long k_max = 0;
  for (long k = win.lo; k <= win.hi; ++k)
    if (kpmf[k - win.lo] > kEnumWeightFloor) k_max = k;
  double log10_profiles = static_cast<double>(k_max) * std::log10(static_cast<double>(cfg.m));
  if (log10_profiles > std::log10(kEnumProfileBudget))
    throw EnumerationInfeasible(k_max, log10_profiles, std::max(10000L, params.mc_samples));

  double active = 0.0, self = 0.0, mean_k = 0.0;
  for (long k = win.lo; k <= win.hi; ++k) {
    double pk = kpmf[k - win.lo];
    if (pk <= kEnumWeightFloor) continue;
    active += pk * rand_active_given_k_exact(pop_req, pop_cache, k, params.product_of_marginals);
    mean_k += pk * static_cast<double>(k);
  }
  self = mean_k * rand_self_rate(pop_req, pop_cache);

  DetPoint point;
  point.r = cfg.r;
  point.active_prob = active;
  point.expected_active = cfg.cluster_count() * active;
  point.expected_self = cfg.cluster_count() * self;
  return point;
}

DetPoint rand_expected_active_mc(const CellConfig& cfg, const PopularityModel& pop_req,
                                 const RandCachingParams& params) {
  cfg.validate();
  params.validate();
  if (pop_req.size() != cfg.m)
    throw std::invalid_argument("cell.m: popularity model has different library size");
  const PopularityModel pop_cache(cfg.m, params.caching_gamma);

  const double p = cfg.cluster_area_fraction();
  const auto win = detail::occupancy_window(cfg.n, p);
  const auto kpmf = detail::occupancy_pmf_window(cfg.n, p, win);

  struct Stratum {
    long k;
    double weight;
    StratumEstimate est;
  };
  std::vector<Stratum> strata;
  double mean_k = 0.0;
  for (long k = win.lo; k <= win.hi; ++k) {
    double pk = kpmf[k - win.lo];
    if (pk <= kStratumWeightFloor) continue;
    mean_k += pk * static_cast<double>(k);
    if (k >= 2) strata.push_back({k, pk, {}});
  }

  parallel_for(strata.size(), static_cast<unsigned>(std::max(1, params.threads)),
               [&](std::size_t idx) {
                 Stratum& st = strata[idx];
                 MassScratch scratch(cfg.m);
                 std::vector<int> ranks(st.k);
                 Rng rng(derive_seed(params.seed, static_cast<std::uint64_t>(st.k)));
                 st.est = estimate_stratum(pop_req, pop_cache, st.k, params, rng, scratch, ranks);
               });

  double active = 0.0, var = 0.0;
  for (const Stratum& st : strata) {
    active += st.weight * st.est.mean;
    var += st.weight * st.weight * st.est.variance_of_mean;
  }

  DetPoint point;
  point.r = cfg.r;
  point.active_prob = active;
  point.expected_active = cfg.cluster_count() * active;
  point.expected_self = cfg.cluster_count() * mean_k * rand_self_rate(pop_req, pop_cache);
  point.se_active = cfg.cluster_count() * std::sqrt(var);
  return point;
}

}  // namespace d2d
