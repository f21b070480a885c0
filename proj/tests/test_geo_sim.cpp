#include <doctest.h>

#include <cmath>
#include <vector>

#include "d2d/analytic_det.hpp"
#include "d2d/analytic_rand.hpp"
#include "d2d/geo_sim.hpp"

using namespace d2d;

namespace {

// chi-squared critical value via the Wilson-Hilferty cube approximation
double chi2_critical(int df, double z) {
  double d = static_cast<double>(df);
  double t = 1.0 - 2.0 / (9.0 * d) + z * std::sqrt(2.0 / (9.0 * d));
  return d * t * t * t;
}

}  // namespace

TEST_SUITE("geo_sim") {

TEST_CASE("a single user never activates anything") {
  PopularityModel pop(10, 0.6);
  CellConfig cfg{1, 10, 0.5, 0.6};
  GeoSummary s = run_trials(cfg, pop, CachingMode::deterministic, nullptr, 2000, 17);
  CHECK(s.mean_active == 0.0);
}

TEST_CASE("realizations respect the geometry and the cache rule") {
  PopularityModel pop(8, 0.7);
  PopularityModel cache_pop(8, 1.2);
  CellConfig cfg{40, 8, 0.45, 0.7};
  Rng rng(400);
  for (int trial = 0; trial < 200; ++trial) {
    auto real = sample_realization(cfg, pop, CachingMode::deterministic, nullptr, rng);
    int c = real.clusters_per_side;
    CHECK(c == static_cast<int>(std::floor(kMaxCollabDistance / cfg.r + 1e-9)));
    std::vector<std::vector<int>> caches_by_cluster(real.cluster_count());
    for (int i = 0; i < cfg.n; ++i) {
      CHECK(real.positions(i, 0) >= 0.0);
      CHECK(real.positions(i, 0) < real.side);
      CHECK(real.positions(i, 1) >= 0.0);
      CHECK(real.positions(i, 1) < real.side);
      int cx = static_cast<int>(real.positions(i, 0) / cfg.r);
      int cy = static_cast<int>(real.positions(i, 1) / cfg.r);
      int expected = (cx < c && cy < c) ? cy * c + cx : -1;
      CHECK(real.cluster_of[i] == expected);
      if (real.cluster_of[i] >= 0) caches_by_cluster[real.cluster_of[i]].push_back(real.cache[i]);
    }
    // deterministic rule: a cluster of k users holds ranks 1..k without
    // repetition, wrapping past the library size
    for (auto& caches : caches_by_cluster) {
      std::vector<int> expected(caches.size());
      for (std::size_t j = 0; j < caches.size(); ++j)
        expected[j] = static_cast<int>(j) % cfg.m + 1;
      std::sort(caches.begin(), caches.end());
      std::sort(expected.begin(), expected.end());
      CHECK(caches == expected);
    }
  }
}

TEST_CASE("two users forced into one cluster match the two-file formula") {
  PopularityModel pop(2, 1.0);
  CellConfig cfg{2, 2, kMaxCollabDistance, 1.0};
  GeoSummary s = run_trials(cfg, pop, CachingMode::deterministic, nullptr, 100000, 31);
  double expected = 7.0 / 9.0;
  CHECK(std::abs(s.mean_active - expected) < 3.0 * s.se_active);
}

TEST_CASE("most-popular-only caching never yields a link") {
  PopularityModel pop(20, 0.6);
  CellConfig cfg{30, 20, 0.5, 0.6};
  GeoSummary s = run_trials(cfg, pop, CachingMode::most_popular, nullptr, 20000, 23);
  CHECK(s.mean_active == 0.0);
  CHECK(s.mean_potential_links == 0.0);
  // every user holds file 1, so each self-requests with probability f1
  double expected = cfg.n * pop.pmf_at(1);
  CHECK(std::abs(s.mean_self - expected) < 4.0 * s.se_self);
}

TEST_CASE("analytic expectation sits inside the simulator error bars") {
  PopularityModel pop(60, 0.8);
  CellConfig cfg{30, 60, 0.4, 0.8};
  GeoSummary s = run_trials(cfg, pop, CachingMode::deterministic, nullptr, 60000, 7);
  DetPoint pt = det_expected_active(cfg, pop);
  double clusters = static_cast<double>(s.clusters_per_side) * s.clusters_per_side;
  // compare per-cluster expectations: the simulator keeps floor(side/r)^2
  // clusters while the analytic count is 2/r^2
  double expected_active = pt.active_prob * clusters;
  CHECK(std::abs(s.mean_active - expected_active) < 3.0 * s.se_active);
  double expected_self = pt.expected_self / cfg.cluster_count() * clusters;
  CHECK(std::abs(s.mean_self - expected_self) < 3.0 * s.se_self);
}

TEST_CASE("oracle equivalence across the exponent and distance grid") {
  for (double gamma : {0.6, 1.0, 1.4}) {
    PopularityModel pop(100, gamma);
    for (double r : {0.2, 0.4, 0.8}) {
      CellConfig cfg{50, 100, r, gamma};
      GeoSummary s = run_trials(cfg, pop, CachingMode::deterministic, nullptr, 30000,
                                derive_seed(52, static_cast<std::uint64_t>(r * 100)));
      DetPoint pt = det_expected_active(cfg, pop);
      double clusters = static_cast<double>(s.clusters_per_side) * s.clusters_per_side;
      double expected = pt.active_prob * clusters;
      double se_floor =
          std::sqrt(std::max(clusters * pt.active_prob * (1.0 - pt.active_prob), 1e-300) /
                    30000.0);
      CHECK(std::abs(s.mean_active - expected) < 3.0 * std::max(s.se_active, se_floor));
    }
  }
}

TEST_CASE("random caching matches the stratified estimator") {
  PopularityModel pop(40, 0.6);
  PopularityModel cache_pop(40, 1.5);
  CellConfig cfg{25, 40, 0.5, 0.6};
  GeoSummary s = run_trials(cfg, pop, CachingMode::random_zipf, &cache_pop, 60000, 71);
  RandCachingParams params;
  params.caching_gamma = 1.5;
  params.mc_samples = 40000;
  params.seed = 8;
  DetPoint pt = rand_expected_active_mc(cfg, pop, params);
  double clusters = static_cast<double>(s.clusters_per_side) * s.clusters_per_side;
  double expected = pt.active_prob * clusters;
  double se = std::sqrt(s.se_active * s.se_active +
                        std::pow(pt.se_active / cfg.cluster_count() * clusters, 2.0));
  CHECK(std::abs(s.mean_active - expected) < 3.0 * se);
}

TEST_CASE("occupancy histogram passes a chi-squared test against the binomial") {
  CellConfig cfg{20, 5, 0.6, 0.0};
  PopularityModel pop(5, 0.0);
  const long trials = 100000;
  auto pmf = cluster_occupancy_pmf(cfg);
  std::vector<long> counts(cfg.n + 1, 0);
  Rng rng(1234);
  for (long t = 0; t < trials; ++t) {
    auto real = sample_realization(cfg, pop, CachingMode::deterministic, nullptr, rng);
    int k = 0;
    for (int i = 0; i < cfg.n; ++i)
      if (real.cluster_of[i] == 0) ++k;
    ++counts[k];
  }
  // pool bins with expected count < 10 into the tail
  double chi2 = 0.0;
  int df = -1;
  double pooled_obs = 0.0, pooled_exp = 0.0;
  for (int k = 0; k <= cfg.n; ++k) {
    double expect = pmf[k] * trials;
    if (expect < 10.0) {
      pooled_obs += counts[k];
      pooled_exp += expect;
      continue;
    }
    chi2 += (counts[k] - expect) * (counts[k] - expect) / expect;
    ++df;
  }
  if (pooled_exp > 0.0) {
    chi2 += (pooled_obs - pooled_exp) * (pooled_obs - pooled_exp) / pooled_exp;
    ++df;
  }
  CHECK(chi2 < chi2_critical(df, 3.09));  // 0.1% level
}

TEST_CASE("identical seeds reproduce identical summaries") {
  PopularityModel pop(30, 1.0);
  CellConfig cfg{20, 30, 0.6, 1.0};
  GeoSummary a = run_trials(cfg, pop, CachingMode::deterministic, nullptr, 5000, 12);
  GeoSummary b = run_trials(cfg, pop, CachingMode::deterministic, nullptr, 5000, 12);
  CHECK(a.mean_active == b.mean_active);
  CHECK(a.mean_self == b.mean_self);
  GeoSummary c = run_trials(cfg, pop, CachingMode::deterministic, nullptr, 5000, 12, 4);
  CHECK(a.mean_active == c.mean_active);  // thread count cannot matter
}

TEST_CASE("active clusters never exceed nonempty clusters and links imply activity") {
  PopularityModel pop(12, 0.9);
  PopularityModel cache_pop(12, 0.5);
  CellConfig cfg{25, 12, 0.55, 0.9};
  Rng rng(3131);
  for (int t = 0; t < 300; ++t) {
    auto real = sample_realization(cfg, pop, CachingMode::random_zipf, &cache_pop, rng);
    auto outcome = evaluate_trial(real);
    std::vector<int> occupancy(real.cluster_count(), 0);
    for (int i = 0; i < cfg.n; ++i)
      if (real.cluster_of[i] >= 0) ++occupancy[real.cluster_of[i]];
    int nonempty = 0;
    for (int o : occupancy)
      if (o > 0) ++nonempty;
    CHECK(outcome.active_clusters <= nonempty);
    if (outcome.potential_links > 0) CHECK(outcome.active_clusters > 0);
    if (outcome.active_clusters > 0) CHECK(outcome.potential_links > 0);
  }
}

TEST_CASE("random mode needs a caching distribution") {
  PopularityModel pop(10, 0.6);
  CellConfig cfg{5, 10, 0.5, 0.6};
  Rng rng(1);
  CHECK_THROWS_AS(sample_realization(cfg, pop, CachingMode::random_zipf, nullptr, rng),
                  std::invalid_argument);
}

}  // TEST_SUITE
