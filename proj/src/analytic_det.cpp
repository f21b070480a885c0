#include "d2d/analytic_det.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace d2d {

void CellConfig::validate() const {
  if (n < 1) throw std::invalid_argument("cell.n: must be >= 1");
  if (m < 1) throw std::invalid_argument("cell.m: must be >= 1");
  if (!(r > 0.0) || r > kMaxCollabDistance + 1e-12)
    throw std::invalid_argument("cell.r: must lie in (0, sqrt(2)]");
  if (!std::isfinite(request_gamma) || request_gamma < 0.0)
    throw std::invalid_argument("cell.gamma_r: must be finite and >= 0");
}

namespace detail {

KWindow occupancy_window(long n, double p) {
  if (p <= 0.0) return {0, 0};
  if (p >= 1.0) return {n, n};
  double mean = static_cast<double>(n) * p;
  double sd = std::sqrt(mean * (1.0 - p));
  long lo = static_cast<long>(std::floor(mean - 12.0 * sd - 8.0));
  long hi = static_cast<long>(std::ceil(mean + 12.0 * sd + 40.0));
  return {std::max(0L, lo), std::min(n, hi)};
}

Eigen::ArrayXd occupancy_pmf_window(long n, double p, KWindow win) {
  Eigen::ArrayXd pmf = Eigen::ArrayXd::Zero(win.hi - win.lo + 1);
  if (p <= 0.0) {
    if (win.lo == 0) pmf[0] = 1.0;
    return pmf;
  }
  if (p >= 1.0) {
    if (win.hi == n) pmf[pmf.size() - 1] = 1.0;
    return pmf;
  }
  long mode = std::min(win.hi, std::max(win.lo,
               static_cast<long>(std::floor((static_cast<double>(n) + 1.0) * p))));
  const double odds = p / (1.0 - p);
  pmf[mode - win.lo] = 1.0;
  for (long k = mode + 1; k <= win.hi; ++k)
    pmf[k - win.lo] =
        pmf[k - 1 - win.lo] * (static_cast<double>(n - k + 1) / static_cast<double>(k)) * odds;
  for (long k = mode - 1; k >= win.lo; --k)
    pmf[k - win.lo] = pmf[k + 1 - win.lo] *
                      (static_cast<double>(k + 1) / static_cast<double>(n - k)) / odds;
  // the window holds all the mass up to ~1e-16, so normalizing against the
  // compensated window sum reproduces the true probabilities
  double sum = 0.0, comp = 0.0;
  for (Eigen::Index i = 0; i < pmf.size(); ++i) {
    double t = sum + pmf[i];
    comp += std::abs(sum) >= std::abs(pmf[i]) ? (sum - t) + pmf[i] : (pmf[i] - t) + sum;
    sum = t;
  }
  pmf /= sum + comp;
  return pmf;
}

}  // namespace detail

Eigen::ArrayXd cluster_occupancy_pmf(const CellConfig& cfg) {
  cfg.validate();
  const double p = cfg.cluster_area_fraction();
  return detail::occupancy_pmf_window(cfg.n, p, {0, cfg.n});
}

double det_active_given_k(const PopularityModel& pop, long k) {
  if (k <= 1) return 0.0;
  const long m = pop.size();
  double product = 1.0;
  if (k <= m) {
    const double hit = pop.head_mass(k);
    for (long i = 1; i <= k; ++i) product *= 1.0 - (hit - pop.pmf_at(static_cast<int>(i)));
  } else {
    // every file is cached somewhere, so user i misses only by requesting
    // its own (wrapped) file
    for (long i = 0; i < k; ++i) {
      product *= pop.pmf_at(static_cast<int>(i % m) + 1);
      if (product == 0.0) break;
    }
  }
  return 1.0 - product;
}

double det_self_mass_given_k(const PopularityModel& pop, long k) {
  if (k <= 0) return 0.0;
  const long m = pop.size();
  if (k <= m) return pop.head_mass(k);
  return static_cast<double>(k / m) + pop.head_mass(k % m);
}

DetPoint det_expected_active(const CellConfig& cfg, const PopularityModel& pop) {
  cfg.validate();
  if (pop.size() != cfg.m)
    throw std::invalid_argument("cell.m: popularity model has different library size");

  const double p = cfg.cluster_area_fraction();
  const auto win = detail::occupancy_window(cfg.n, p);
  const auto pmf = detail::occupancy_pmf_window(cfg.n, p, win);
  double active = 0.0, self = 0.0;
  for (long k = win.lo; k <= win.hi; ++k) {
    double pk = pmf[k - win.lo];
    if (pk == 0.0) continue;
    active += pk * det_active_given_k(pop, k);
    self += pk * det_self_mass_given_k(pop, k);
  }
  DetPoint point;
  point.r = cfg.r;
  point.active_prob = active;
  point.expected_active = cfg.cluster_count() * active;
  point.expected_self = cfg.cluster_count() * self;
  return point;
}

double delay_objective(const DetPoint& point, int n, double omega_bs, double omega_d2d) {
  if (omega_bs < 0.0 || omega_d2d < 0.0)
    throw std::invalid_argument("delay.omega: download times must be >= 0");
  return (n - point.expected_self - point.expected_active) * omega_bs +
         point.expected_active * omega_d2d;
}

double det_delay_objective(const CellConfig& cfg, const PopularityModel& pop,
                           double omega_bs, double omega_d2d) {
  return delay_objective(det_expected_active(cfg, pop), cfg.n, omega_bs, omega_d2d);
}

}  // namespace d2d
