#include <doctest.h>

#include <cmath>

#include "d2d/analytic_det.hpp"
#include "d2d/analytic_rand.hpp"
#include "d2d/rng.hpp"

using namespace d2d;

TEST_SUITE("analytic_rand") {

TEST_CASE("activity of a fixed profile") {
  PopularityModel req(2, 1.0);
  CHECK(rand_active_given_profile(req, make_profile(req, {1, 2})) ==
        doctest::Approx(7.0 / 9.0).epsilon(1e-14));
  // identical caches leave only self-requests
  CHECK(rand_active_given_profile(req, make_profile(req, {1, 1})) == doctest::Approx(0.0));

  PopularityModel req3(3, 0.0);
  CHECK(rand_active_given_profile(req3, make_profile(req3, {1, 2, 3})) ==
        doctest::Approx(26.0 / 27.0).epsilon(1e-14));
}

TEST_CASE("profiles with identical entries are never active") {
  Rng rng(31);
  for (int trial = 0; trial < 50; ++trial) {
    int m = 2 + static_cast<int>(rng.uniform() * 20);
    int k = 2 + static_cast<int>(rng.uniform() * 6);
    int h = 1 + static_cast<int>(rng.uniform() * m);
    PopularityModel req(m, rng.uniform() * 2.0);
    std::vector<int> same(k, h);
    CHECK(rand_active_given_profile(req, make_profile(req, same)) == doctest::Approx(0.0));
  }
}

TEST_CASE("profile activity stays within [0, 1]") {
  Rng rng(77);
  PopularityModel req(30, 1.1);
  PopularityModel cache(30, 0.4);
  for (int trial = 0; trial < 300; ++trial) {
    int k = 2 + static_cast<int>(rng.uniform() * 8);
    std::vector<int> v(k);
    for (int& x : v) x = cache.sample_rank(rng);
    double a = rand_active_given_profile(req, make_profile(req, v));
    CHECK(a >= 0.0);
    CHECK(a <= 1.0);
  }
}

TEST_CASE("profile ranks outside the library are rejected") {
  PopularityModel req(5, 0.5);
  CHECK_THROWS_AS(make_profile(req, {1, 6}), std::invalid_argument);
  CHECK_THROWS_AS(make_profile(req, {0, 3}), std::invalid_argument);
}

TEST_CASE("deterministic placement reproduces the deterministic formula") {
  Rng rng(13);
  for (int trial = 0; trial < 40; ++trial) {
    int m = 3 + static_cast<int>(rng.uniform() * 40);
    int k = 2 + static_cast<int>(std::min<double>(m - 2, rng.uniform() * 10));
    PopularityModel req(m, rng.uniform() * 1.6);
    std::vector<int> topk(k);
    for (int i = 0; i < k; ++i) topk[i] = i + 1;
    CHECK(rand_active_given_profile(req, make_profile(req, topk)) ==
          doctest::Approx(det_active_given_k(req, k)).epsilon(1e-12));
  }
}

TEST_CASE("exact conditional activity by enumeration") {
  PopularityModel req(2, 1.0);
  PopularityModel cache(2, 0.0);
  // profiles (1,1),(2,2) inactive; (1,2),(2,1) each 7/9 at probability 1/4
  CHECK(rand_active_given_k_exact(req, cache, 2) ==
        doctest::Approx(7.0 / 18.0).epsilon(1e-14));
}

TEST_CASE("exact E[A] on a forced two-user cluster") {
  PopularityModel req(2, 1.0);
  RandCachingParams params;
  params.caching_gamma = 0.0;
  CellConfig cfg{2, 2, kMaxCollabDistance, 1.0};  // occupancy one, K = 2 always
  DetPoint pt = rand_expected_active_exact(cfg, req, params);
  CHECK(pt.active_prob == doctest::Approx(7.0 / 18.0).epsilon(1e-12));
  CHECK(pt.expected_active == doctest::Approx(7.0 / 18.0).epsilon(1e-12));
}

TEST_CASE("k <= 1 clusters are never active") {
  PopularityModel req(6, 0.7);
  RandCachingParams params;
  params.caching_gamma = 1.0;
  CellConfig cfg{1, 6, 0.9, 0.7};
  CHECK(rand_expected_active_exact(cfg, req, params).expected_active == 0.0);
}

TEST_CASE("product-of-marginals variant differs as the dependence argument says") {
  PopularityModel req(2, 1.0);
  PopularityModel cache(2, 0.0);
  double joint = rand_active_given_k_exact(req, cache, 2, false);
  double marginal = rand_active_given_k_exact(req, cache, 2, true);
  CHECK(joint == doctest::Approx(7.0 / 18.0).epsilon(1e-12));
  CHECK(marginal == doctest::Approx(7.0 / 16.0).epsilon(1e-12));
  CHECK(marginal > joint);
}

TEST_CASE("enumeration guard reports the Monte Carlo fallback") {
  PopularityModel req(1000, 0.6);
  RandCachingParams params;
  params.caching_gamma = 1.5;
  CellConfig cfg{500, 1000, 0.2, 0.6};
  CHECK_THROWS_AS(rand_expected_active_exact(cfg, req, params), EnumerationInfeasible);
  try {
    rand_expected_active_exact(cfg, req, params);
  } catch (const EnumerationInfeasible& e) {
    CHECK(e.k_max > 1);
    CHECK(e.suggested_mc_samples >= 10000);
  }
}

TEST_CASE("monte carlo agrees with exact enumeration") {
  PopularityModel req(4, 0.6);
  RandCachingParams params;
  params.caching_gamma = 1.5;
  params.mc_samples = 40000;
  params.seed = 2718;
  CellConfig cfg{6, 4, 0.8, 0.6};
  DetPoint exact = rand_expected_active_exact(cfg, req, params);
  DetPoint mc = rand_expected_active_mc(cfg, req, params);
  CHECK(std::abs(mc.expected_active - exact.expected_active) < 3.0 * mc.se_active);
  CHECK(mc.expected_self == doctest::Approx(exact.expected_self).epsilon(1e-9));
}

TEST_CASE("monte carlo agreement holds over random small instances") {
  Rng rng(4242);
  for (int trial = 0; trial < 8; ++trial) {
    int m = 2 + static_cast<int>(rng.uniform() * 4);
    int n = 2 + static_cast<int>(rng.uniform() * 5);
    double gr = rng.uniform() * 1.4;
    double gc = rng.uniform() * 2.0;
    double r = 0.5 + rng.uniform() * (kMaxCollabDistance - 0.5);
    PopularityModel req(m, gr);
    RandCachingParams params;
    params.caching_gamma = gc;
    params.mc_samples = 20000;
    params.seed = 1000 + trial;
    CellConfig cfg{n, m, r, gr};
    DetPoint exact = rand_expected_active_exact(cfg, req, params);
    DetPoint mc = rand_expected_active_mc(cfg, req, params);
    CHECK(std::abs(mc.expected_active - exact.expected_active) <
          3.0 * mc.se_active + 1e-9);
  }
}

TEST_CASE("degenerate caching stores only the top file") {
  PopularityModel req(50, 0.6);
  RandCachingParams params;
  params.caching_gamma = 50.0;
  params.mc_samples = 4000;
  params.seed = 5;
  CellConfig cfg{40, 50, 0.5, 0.6};
  DetPoint pt = rand_expected_active_mc(cfg, req, params);
  CHECK(pt.expected_active == doctest::Approx(0.0).epsilon(1e-9));
  CHECK(pt.expected_self ==
        doctest::Approx(40.0 * req.pmf_at(1)).epsilon(1e-6));
}

TEST_CASE("fixed seeds reproduce the estimate bit for bit") {
  PopularityModel req(100, 0.8);
  RandCachingParams params;
  params.caching_gamma = 1.2;
  params.mc_samples = 5000;
  params.seed = 99;
  CellConfig cfg{50, 100, 0.4, 0.8};
  DetPoint a = rand_expected_active_mc(cfg, req, params);
  DetPoint b = rand_expected_active_mc(cfg, req, params);
  CHECK(a.expected_active == b.expected_active);
  CHECK(a.se_active == b.se_active);
  params.threads = 3;  // thread count must not alter the estimate
  DetPoint c = rand_expected_active_mc(cfg, req, params);
  CHECK(a.expected_active == c.expected_active);
}

TEST_CASE("self-request rate is the cache/request pmf overlap") {
  PopularityModel req(200, 0.6);
  PopularityModel cache(200, 1.5);
  double rate = rand_self_rate(req, cache);
  long double expected = 0.0L;
  for (int h = 1; h <= 200; ++h)
    expected += (long double)req.pmf_at(h) * cache.pmf_at(h);
  CHECK(rate == doctest::Approx(static_cast<double>(expected)).epsilon(1e-12));
}

}  // TEST_SUITE
