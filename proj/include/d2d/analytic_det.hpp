#pragma once

#include <Eigen/Core>

#include "d2d/cell.hpp"
#include "d2d/popularity.hpp"

namespace d2d {

// Closed-form expectations for deterministic caching: in a cluster holding k
// users, the users cache the k most popular files without repetition (users
// beyond rank m wrap around to the head of the catalog).

// Binomial occupancy law of one cluster: entry k is
// C(n,k) (r^2/2)^k (1-r^2/2)^(n-k), k = 0..n. Log-space inside, so n up to
// 1e5 is fine.
Eigen::ArrayXd cluster_occupancy_pmf(const CellConfig& cfg);

// P[cluster active | K = k]: 1 - prod_i (1 - (P_hit(k) - f_i)), where
// P_hit(k) is the head mass of the cached set and the f_i subtraction
// removes self-requests. 0 for k <= 1.
double det_active_given_k(const PopularityModel& pop, long k);

// Expected self-requests per cluster given k occupants: sum of f over the
// cached multiset (head mass for k <= m, wraps beyond).
double det_self_mass_given_k(const PopularityModel& pop, long k);

// E[A], n_self and E[a] at one r. pop.size() must equal cfg.m.
DetPoint det_expected_active(const CellConfig& cfg, const PopularityModel& pop);

// Mean download delay (n - n_self - E[A]) w_bs + E[A] w_d2d for a
// precomputed point. Throws on negative weights.
double delay_objective(const DetPoint& point, int n, double omega_bs, double omega_d2d);

double det_delay_objective(const CellConfig& cfg, const PopularityModel& pop,
                           double omega_bs, double omega_d2d);

namespace detail {
// Index range [lo, hi] outside which Binomial(n, p) mass is negligible
// (< ~1e-16 per tail); keeps E[A] evaluation O(sqrt(n)) wide.
struct KWindow {
  long lo;
  long hi;
};
KWindow occupancy_window(long n, double p);

// Binomial(n, p) probabilities for k in [win.lo, win.hi], built by the
// ratio recurrence from the mode and normalized with compensated summation;
// accurate to a few ulp even for n ~ 1e5 where lgamma differences lose
// digits.
Eigen::ArrayXd occupancy_pmf_window(long n, double p, KWindow win);
}  // namespace detail

}  // namespace d2d
