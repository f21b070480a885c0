#pragma once

#include <optional>
#include <vector>

#include "d2d/analytic_rand.hpp"
#include "d2d/cell.hpp"
#include "d2d/popularity.hpp"

namespace d2d {

enum class ObjectiveKind { max_active, min_delay, max_rate };

const char* objective_name(ObjectiveKind kind);

// Evaluation grid for the r (and optionally gamma_c) sweeps. Axes must be
// strictly increasing with at least 3 points.
struct SweepGrid {
  std::vector<double> r_values;
  std::vector<double> gamma_c_values;  // empty for 1-D sweeps
  int refinement_levels = 2;

  static std::vector<double> linspace(double lo, double hi, int points);
  void validate(bool need_gamma_axis) const;
};

struct CurvePoint {
  double r = 0.0;
  double gamma_c = 0.0;
  double value = 0.0;
  double se = 0.0;
};

struct OptimumReport {
  double r_opt = 0.0;
  std::optional<double> gamma_c_opt;
  double objective_at_opt = 0.0;
  double se_at_opt = 0.0;
  ObjectiveKind objective_kind = ObjectiveKind::max_active;
  std::vector<CurvePoint> curve;  // coarse grid plus refined points, sorted
  bool flat_objective = false;    // curve varies by < 1e-9
  bool ambiguous_optimum = false; // top-2 cells within one standard error
};

struct DelayWeights {
  double omega_bs = 0.0;
  double omega_d2d = 0.0;
};

// Deterministic caching: coarse grid scan plus golden-section refinement on
// the bracketing interval (|dr| < 1e-3). Ties break toward smaller r.
OptimumReport optimize_r_deterministic(int n, const PopularityModel& pop_req,
                                       ObjectiveKind kind, const SweepGrid& grid,
                                       std::optional<DelayWeights> delay = std::nullopt);

// Random caching: evaluates the Monte Carlo objective over the (r, gamma_c)
// grid with common random numbers, then refines locally around the best
// cell; refinement stops once the improvement falls under 2 standard errors.
OptimumReport optimize_r_gamma_random(int n, const PopularityModel& pop_req,
                                      const SweepGrid& grid, const RandCachingParams& params);

// gamma_c sweep at a fixed collaboration distance.
OptimumReport optimize_gamma_random_fixed_r(int n, const PopularityModel& pop_req, double r,
                                            const SweepGrid& grid,
                                            const RandCachingParams& params);

// Power-law fits of r_opt(n) and E[A]_opt(n) when the library grows as
// m = m_coefficient * sqrt(n). theory(n) is sqrt(m^eta / n) with
// eta = (1-gamma_r)/(2-gamma_r) below gamma_r = 1, sqrt(1/n) above.
// slope comes from a free log-log regression; constant from the slope-1
// constrained fit (geometric mean of the ratio), which is what the reference
// curves use.
struct AsymptoticFit {
  double eta = 0.0;
  double r_slope = 0.0;
  double r_constant = 0.0;
  double ea_slope = 0.0;
  double ea_constant = 0.0;
  double m_coefficient = 0.0;
  std::vector<long> n_values;
  std::vector<long> m_values;
  std::vector<double> r_opts;
  std::vector<double> ea_opts;
  std::vector<double> r_theory;
  std::vector<double> ea_theory;
};

AsymptoticFit fit_asymptotics(double gamma_r, const std::vector<long>& n_values,
                              double m_coefficient = 30.0);

}  // namespace d2d
