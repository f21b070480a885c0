#include "d2d/optimize.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>

#include "d2d/analytic_det.hpp"
#include "d2d/parallel.hpp"

namespace d2d {

namespace {

constexpr double kGoldenRatio = 0.6180339887498949;
constexpr double kRefineTol = 1e-3;
constexpr double kFlatTol = 1e-9;

struct Eval {
  double value = 0.0;
  double se = 0.0;
};

// Golden-section maximization; assumes f is cheap and deterministic.
double golden_max(const std::function<double(double)>& f, double a, double b) {
  double c = b - kGoldenRatio * (b - a);
  double d = a + kGoldenRatio * (b - a);
  double fc = f(c), fd = f(d);
  while (b - a > kRefineTol) {
    if (fc > fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - kGoldenRatio * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + kGoldenRatio * (b - a);
      fd = f(d);
    }
  }
  return 0.5 * (a + b);
}

void sort_curve(std::vector<CurvePoint>& curve) {
  std::sort(curve.begin(), curve.end(), [](const CurvePoint& x, const CurvePoint& y) {
    if (x.r != y.r) return x.r < y.r;
    return x.gamma_c < y.gamma_c;
  });
  curve.erase(std::unique(curve.begin(), curve.end(),
                          [](const CurvePoint& x, const CurvePoint& y) {
                            return x.r == y.r && x.gamma_c == y.gamma_c;
                          }),
              curve.end());
}

}  // namespace

const char* objective_name(ObjectiveKind kind) {
  switch (kind) {
    case ObjectiveKind::max_active: return "max_active";
    case ObjectiveKind::min_delay: return "min_delay";
    case ObjectiveKind::max_rate: return "max_rate";
  }
  return "unknown";
}

std::vector<double> SweepGrid::linspace(double lo, double hi, int points) {
  std::vector<double> v(points);
  for (int i = 0; i < points; ++i)
    v[i] = points == 1 ? lo : lo + (hi - lo) * static_cast<double>(i) / (points - 1);
  return v;
}

void SweepGrid::validate(bool need_gamma_axis) const {
  auto check_axis = [](const std::vector<double>& axis, const char* name, double lo, double hi) {
    if (axis.size() < 3)
      throw std::invalid_argument(std::string(name) + ": need at least 3 grid points");
    for (std::size_t i = 0; i < axis.size(); ++i) {
      if (!(axis[i] > lo) || axis[i] > hi)
        throw std::invalid_argument(std::string(name) + ": grid point out of range");
      if (i > 0 && axis[i] <= axis[i - 1])
        throw std::invalid_argument(std::string(name) + ": grid must be strictly increasing");
    }
  };
  check_axis(r_values, "grid.r_values", 0.0, kMaxCollabDistance + 1e-12);
  if (need_gamma_axis) {
    if (gamma_c_values.size() < 3)
      throw std::invalid_argument("grid.gamma_c_values: need at least 3 grid points");
    for (std::size_t i = 0; i < gamma_c_values.size(); ++i) {
      if (gamma_c_values[i] < 0.0)
        throw std::invalid_argument("grid.gamma_c_values: grid point out of range");
      if (i > 0 && gamma_c_values[i] <= gamma_c_values[i - 1])
        throw std::invalid_argument("grid.gamma_c_values: grid must be strictly increasing");
    }
  }
  if (refinement_levels < 0 || refinement_levels > 8)
    throw std::invalid_argument("grid.refine_levels: must lie in 0..8");
}

OptimumReport optimize_r_deterministic(int n, const PopularityModel& pop_req,
                                       ObjectiveKind kind, const SweepGrid& grid,
                                       std::optional<DelayWeights> delay) {
  grid.validate(false);
  if (kind == ObjectiveKind::max_rate)
    throw std::invalid_argument("objective: max_rate needs the physical-layer sweep");
  if (kind == ObjectiveKind::min_delay && !delay)
    throw std::invalid_argument("delay.omega_bs: min_delay requires download times");

  // maximize either E[A] or the negated delay
  auto objective = [&](double r) {
    CellConfig cfg{n, pop_req.size(), r, pop_req.gamma()};
    DetPoint point = det_expected_active(cfg, pop_req);
    if (kind == ObjectiveKind::max_active) return point.expected_active;
    return -delay_objective(point, n, delay->omega_bs, delay->omega_d2d);
  };

  const auto& rs = grid.r_values;
  std::vector<double> values(rs.size());
  for (std::size_t i = 0; i < rs.size(); ++i) values[i] = objective(rs[i]);

  std::size_t best = 0;
  for (std::size_t i = 1; i < rs.size(); ++i)
    if (values[i] > values[best]) best = i;

  OptimumReport report;
  report.objective_kind = kind;
  double spread = *std::max_element(values.begin(), values.end()) -
                  *std::min_element(values.begin(), values.end());
  report.flat_objective = spread < kFlatTol;

  double lo = rs[best == 0 ? 0 : best - 1];
  double hi = rs[best + 1 < rs.size() ? best + 1 : rs.size() - 1];
  double r_opt = report.flat_objective ? rs[best] : golden_max(objective, lo, hi);
  double v_opt = objective(r_opt);
  if (v_opt < values[best]) {  // keep the grid point if refinement lost to it
    r_opt = rs[best];
    v_opt = values[best];
  }

  report.r_opt = r_opt;
  report.objective_at_opt = kind == ObjectiveKind::min_delay ? -v_opt : v_opt;
  for (std::size_t i = 0; i < rs.size(); ++i)
    report.curve.push_back({rs[i], 0.0,
                            kind == ObjectiveKind::min_delay ? -values[i] : values[i], 0.0});
  if (std::none_of(rs.begin(), rs.end(), [&](double r) { return r == r_opt; }))
    report.curve.push_back({r_opt, 0.0, report.objective_at_opt, 0.0});
  sort_curve(report.curve);
  return report;
}

namespace {

OptimumReport optimize_random_impl(int n, const PopularityModel& pop_req,
                                   std::vector<double> r_axis, std::vector<double> g_axis,
                                   int refinement_levels, const RandCachingParams& params) {
  struct Cell {
    double r, g;
    Eval eval;
  };
  auto evaluate = [&](double r, double g) {
    CellConfig cfg{n, pop_req.size(), r, pop_req.gamma()};
    RandCachingParams p = params;
    p.caching_gamma = g;
    p.threads = 1;  // parallelism lives at the grid level
    DetPoint point = rand_expected_active_mc(cfg, pop_req, p);
    return Eval{point.expected_active, point.se_active};
  };

  OptimumReport report;
  report.objective_kind = ObjectiveKind::max_active;

  auto run_grid = [&](const std::vector<double>& rv, const std::vector<double>& gv) {
    std::vector<Cell> cells;
    for (double r : rv)
      for (double g : gv) cells.push_back({r, g, {}});
    parallel_for(cells.size(), static_cast<unsigned>(std::max(1, params.threads)),
                 [&](std::size_t i) { cells[i].eval = evaluate(cells[i].r, cells[i].g); });
    for (const Cell& c : cells)
      report.curve.push_back({c.r, c.g, c.eval.value, c.eval.se});
    return cells;
  };

  auto cells = run_grid(r_axis, g_axis);
  std::size_t best = 0;
  double second = -1.0;
  for (std::size_t i = 1; i < cells.size(); ++i) {
    if (cells[i].eval.value > cells[best].eval.value) {
      second = cells[best].eval.value;
      best = i;
    } else if (cells[i].eval.value > second) {
      second = cells[i].eval.value;
    }
  }
  Cell best_cell = cells[best];
  if (second >= 0.0 && best_cell.eval.value - second < best_cell.eval.se)
    report.ambiguous_optimum = true;

  double vmax = best_cell.eval.value, vmin = best_cell.eval.value;
  for (const Cell& c : cells) {
    vmax = std::max(vmax, c.eval.value);
    vmin = std::min(vmin, c.eval.value);
  }
  report.flat_objective = vmax - vmin < kFlatTol;

  // local refinement: successively halve the cell around the incumbent,
  // stopping once gains drop below 2 standard errors
  auto neighbor_span = [](const std::vector<double>& axis, double at) {
    auto it = std::lower_bound(axis.begin(), axis.end(), at);
    std::size_t i = static_cast<std::size_t>(std::distance(axis.begin(), it));
    double lo = i == 0 ? axis.front() : axis[i - 1];
    double hi = i + 1 >= axis.size() ? axis.back() : axis[i + 1];
    return std::pair<double, double>{lo, hi};
  };

  auto [rlo, rhi] = neighbor_span(r_axis, best_cell.r);
  auto [glo, ghi] = neighbor_span(g_axis, best_cell.g);
  bool refine_r = r_axis.size() > 1;
  bool refine_gamma = g_axis.size() > 1;

  for (int level = 0; level < refinement_levels && !report.flat_objective; ++level) {
    std::vector<double> rv =
        refine_r ? SweepGrid::linspace(rlo, rhi, 5) : std::vector<double>{best_cell.r};
    std::vector<double> gv =
        refine_gamma ? SweepGrid::linspace(glo, ghi, 5) : std::vector<double>{best_cell.g};
    auto sub = run_grid(rv, gv);
    std::size_t sbest = 0;
    for (std::size_t i = 1; i < sub.size(); ++i)
      if (sub[i].eval.value > sub[sbest].eval.value) sbest = i;
    double gain = sub[sbest].eval.value - best_cell.eval.value;
    if (sub[sbest].eval.value > best_cell.eval.value) best_cell = sub[sbest];
    if (refine_r) std::tie(rlo, rhi) = neighbor_span(rv, best_cell.r);
    if (refine_gamma) std::tie(glo, ghi) = neighbor_span(gv, best_cell.g);
    if (gain < 2.0 * best_cell.eval.se) break;
  }

  report.r_opt = best_cell.r;
  if (refine_gamma || !g_axis.empty()) report.gamma_c_opt = best_cell.g;
  report.objective_at_opt = best_cell.eval.value;
  report.se_at_opt = best_cell.eval.se;
  sort_curve(report.curve);
  return report;
}

}  // namespace

OptimumReport optimize_r_gamma_random(int n, const PopularityModel& pop_req,
                                      const SweepGrid& grid, const RandCachingParams& params) {
  grid.validate(true);
  params.validate();
  return optimize_random_impl(n, pop_req, grid.r_values, grid.gamma_c_values,
                              grid.refinement_levels, params);
}

OptimumReport optimize_gamma_random_fixed_r(int n, const PopularityModel& pop_req, double r,
                                            const SweepGrid& grid,
                                            const RandCachingParams& params) {
  SweepGrid probe = grid;
  probe.r_values = {r * 0.25, r * 0.5, r};  // only to satisfy axis validation
  probe.validate(true);
  params.validate();
  auto report = optimize_random_impl(n, pop_req, {r}, grid.gamma_c_values,
                                     grid.refinement_levels, params);
  report.r_opt = r;
  return report;
}

AsymptoticFit fit_asymptotics(double gamma_r, const std::vector<long>& n_values,
                              double m_coefficient) {
  if (gamma_r == 1.0)
    throw std::invalid_argument("asymptotics.gamma_r: scaling regime undefined at exactly 1");
  if (n_values.size() < 4)
    throw std::invalid_argument("asymptotics.n_values: need at least 4 points");
  for (long n : n_values)
    if (n < 2) throw std::invalid_argument("asymptotics.n_values: users per cell must be >= 2");
  auto [mn, mx] = std::minmax_element(n_values.begin(), n_values.end());
  if (static_cast<double>(*mx) < 10.0 * static_cast<double>(*mn))
    throw std::invalid_argument("asymptotics.n_values: must span at least one decade");

  AsymptoticFit fit;
  fit.eta = (1.0 - gamma_r) / (2.0 - gamma_r);
  fit.m_coefficient = m_coefficient;
  fit.n_values = n_values;

  for (long n : n_values) {
    long m = std::max(2L, std::lround(m_coefficient * std::sqrt(static_cast<double>(n))));
    PopularityModel pop(static_cast<int>(m), gamma_r);
    double theory_r = gamma_r < 1.0
                          ? std::sqrt(std::pow(static_cast<double>(m), fit.eta) / n)
                          : std::sqrt(1.0 / static_cast<double>(n));
    // bracket the optimum around the theoretical scale, widening if the
    // coarse argmax lands on the bracket edge
    OptimumReport report;
    double lo = 0.3 * theory_r, hi = 3.5 * theory_r;
    for (int attempt = 0; attempt < 4; ++attempt) {
      SweepGrid grid;
      grid.r_values = SweepGrid::linspace(std::max(1e-4, lo),
                                          std::min(kMaxCollabDistance, hi), 25);
      report = optimize_r_deterministic(static_cast<int>(n), pop, ObjectiveKind::max_active,
                                        grid);
      bool at_edge = report.r_opt <= grid.r_values[1] || report.r_opt >= grid.r_values[23];
      if (!at_edge) break;
      lo *= 0.4;
      hi = std::min(kMaxCollabDistance, hi * 2.0);
    }
    fit.m_values.push_back(m);
    fit.r_opts.push_back(report.r_opt);
    fit.ea_opts.push_back(report.objective_at_opt);
    fit.r_theory.push_back(theory_r);
    fit.ea_theory.push_back(gamma_r < 1.0
                                ? static_cast<double>(n) /
                                      std::pow(static_cast<double>(m), fit.eta)
                                : static_cast<double>(n));
  }

  auto regress = [](const std::vector<double>& theory, const std::vector<double>& observed,
                    double& slope, double& constant) {
    const std::size_t count = theory.size();
    double mx = 0.0, my = 0.0;
    std::vector<double> lx(count), ly(count);
    for (std::size_t i = 0; i < count; ++i) {
      lx[i] = std::log(theory[i]);
      ly[i] = std::log(observed[i]);
      mx += lx[i];
      my += ly[i];
    }
    mx /= count;
    my /= count;
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < count; ++i) {
      sxx += (lx[i] - mx) * (lx[i] - mx);
      sxy += (lx[i] - mx) * (ly[i] - my);
    }
    slope = sxy / sxx;
    constant = std::exp(my - mx);  // slope-1 constrained fit
  };

  regress(fit.r_theory, fit.r_opts, fit.r_slope, fit.r_constant);
  regress(fit.ea_theory, fit.ea_opts, fit.ea_slope, fit.ea_constant);
  return fit;
}

}  // namespace d2d
