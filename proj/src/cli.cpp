#include "d2d/cli.hpp"

#include <CLI11.hpp>
#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <map>
#include <optional>

#include "d2d/analytic_det.hpp"
#include "d2d/analytic_rand.hpp"
#include "d2d/config.hpp"
#include "d2d/csv.hpp"
#include "d2d/geo_sim.hpp"
#include "d2d/optimize.hpp"
#include "d2d/parallel.hpp"
#include "d2d/phy_sim.hpp"

namespace d2d::cli {

namespace {

struct Ctx {
  Config cfg;
  std::string out_dir = ".";
  int threads = 0;  // 0: use run.threads / hardware
  std::optional<std::uint64_t> seed_flag;

  int effective_threads() const {
    if (threads > 0) return threads;
    long c = cfg.has("run.threads") ? cfg.get_long("run.threads", 1) : 0;
    return c > 0 ? static_cast<int>(c) : static_cast<int>(default_threads());
  }

  std::uint64_t need_seed() const {
    if (seed_flag) return *seed_flag;
    if (cfg.has("run.seed")) return cfg.get_u64("run.seed", 0);
    throw ConfigError("run.seed",
                      "required for stochastic scenarios (pass --seed or set run.seed)");
  }

  std::string out_path(const std::string& name) const {
    std::filesystem::create_directories(out_dir);
    return (std::filesystem::path(out_dir) / (name + ".csv")).string();
  }
};

struct CellParams {
  int n;
  int m;
  double gamma_r;
};

CellParams cell_params(const Config& cfg) {
  CellParams p;
  p.n = static_cast<int>(cfg.get_long("cell.n", 500));
  p.m = static_cast<int>(cfg.get_long("cell.m", 1000));
  p.gamma_r = cfg.get_double("cell.gamma_r", 0.6);
  CellConfig probe{p.n, p.m, 0.2, p.gamma_r};
  probe.validate();
  return p;
}

std::vector<double> r_axis(const Config& cfg) {
  if (cfg.has("grid.r_list")) {
    auto v = cfg.get_double_list("grid.r_list", {});
    return v;
  }
  double lo = cfg.get_double("grid.r_min", 0.05);
  double hi = cfg.get_double("grid.r_max", 1.0);
  long points = cfg.get_long("grid.r_points", 30);
  if (points < 0) points = 0;
  return SweepGrid::linspace(lo, hi, static_cast<int>(points));
}

std::vector<double> gamma_c_axis(const Config& cfg) {
  if (cfg.has("grid.gamma_c_list")) return cfg.get_double_list("grid.gamma_c_list", {});
  double lo = cfg.get_double("grid.gamma_c_min", 0.0);
  double hi = cfg.get_double("grid.gamma_c_max", 3.0);
  long points = cfg.get_long("grid.gamma_c_points", 13);
  if (points < 0) points = 0;
  return SweepGrid::linspace(lo, hi, static_cast<int>(points));
}

RandCachingParams rand_params(const Ctx& ctx, bool need_seed) {
  RandCachingParams p;
  p.caching_gamma = ctx.cfg.get_double("rand.gamma_c", 1.5);
  p.mc_samples = ctx.cfg.get_long("rand.mc_samples", 10000);
  p.product_of_marginals = ctx.cfg.get_bool("rand.product_of_marginals", false);
  p.seed = need_seed ? ctx.need_seed() : 0;
  p.threads = ctx.effective_threads();
  p.validate();
  return p;
}

ChannelParams phy_params(const Ctx& ctx) {
  ChannelParams p;
  p.pathloss_exponent = ctx.cfg.get_double("phy.pathloss_exponent", 2.6);
  p.shadowing_sigma_db = ctx.cfg.get_double("phy.shadowing_sigma_db", 4.0);
  p.tx_power = ctx.cfg.get_double("phy.tx_power", 1.0);
  p.noise_power = ctx.cfg.get_double("phy.noise_power", -1.0);
  if (p.noise_power < 0.0) {
    // the reference SNR pins the absolute rate scale; no blessed default
    p.reference_snr_db = ctx.cfg.require_double("phy.reference_snr_db");
  }
  p.min_distance = ctx.cfg.get_double("phy.min_distance", 1e-3);
  p.max_iterations = static_cast<int>(ctx.cfg.get_long("phy.max_iterations", 100));
  p.switch_rel_tol = ctx.cfg.get_double("phy.switch_rel_tol", 1e-6);
  p.validate();
  return p;
}

DelayWeights delay_weights(const Ctx& ctx) {
  DelayWeights w{ctx.cfg.require_double("delay.omega_bs"),
                 ctx.cfg.require_double("delay.omega_d2d")};
  if (w.omega_bs < w.omega_d2d)
    std::fprintf(stderr, "warning: delay.omega_bs < delay.omega_d2d (D2D slower than BS)\n");
  return w;
}

CachingMode caching_mode(const Config& cfg) {
  std::string mode = cfg.get_string("geo.caching", "deterministic");
  if (mode == "deterministic" || mode == "det") return CachingMode::deterministic;
  if (mode == "random" || mode == "rand") return CachingMode::random_zipf;
  if (mode == "most_popular" || mode == "mostpop") return CachingMode::most_popular;
  throw ConfigError("geo.caching", "expected deterministic | random | most_popular");
}

std::string fmt_double_meta(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

// Metadata block: tool version, geometry convention, every effective
// parameter. Sorted keys keep reruns byte-identical.
void write_meta(CsvWriter& csv, const std::string& scenario,
                std::map<std::string, std::string> extra) {
  csv.metadata("tool", std::string(kToolName) + " " + kToolVersion);
  csv.metadata("scenario", scenario);
  csv.metadata("geometry",
               "square cell side sqrt(2); clusters_per_side floor(sqrt(2)/r); "
               "occupancy fraction r^2/2; remainder strip served by the base station");
  for (const auto& [k, v] : extra) csv.metadata(k, v);
}

std::map<std::string, std::string> grid_meta(const std::vector<double>& rs) {
  return {{"r_grid_points", std::to_string(rs.size())},
          {"r_min", fmt_double_meta(rs.front())},
          {"r_max", fmt_double_meta(rs.back())}};
}

// ---------------------------------------------------------------- scenarios

int run_analytic_det(const Ctx& ctx) {
  auto cell = cell_params(ctx.cfg);
  auto rs = r_axis(ctx.cfg);
  SweepGrid grid;
  grid.r_values = rs;
  grid.validate(false);
  PopularityModel pop(cell.m, cell.gamma_r);

  bool with_delay = ctx.cfg.has("delay.omega_bs") || ctx.cfg.has("delay.omega_d2d");
  double wbs = 0.0, wd2d = 0.0;
  if (with_delay) {
    DelayWeights w = delay_weights(ctx);
    wbs = w.omega_bs;
    wd2d = w.omega_d2d;
  }

  CsvWriter csv(ctx.out_path("analytic_det"));
  auto meta = grid_meta(rs);
  meta["n"] = std::to_string(cell.n);
  meta["m"] = std::to_string(cell.m);
  meta["gamma_r"] = fmt_double_meta(cell.gamma_r);
  if (with_delay) {
    meta["omega_bs"] = fmt_double_meta(wbs);
    meta["omega_d2d"] = fmt_double_meta(wd2d);
  }
  write_meta(csv, "analytic-det", meta);

  std::vector<std::string> cols = {"r", "expected_active", "expected_self", "active_prob"};
  if (with_delay) cols.push_back("mean_delay");
  csv.header(cols);
  for (double r : rs) {
    CellConfig cfg{cell.n, cell.m, r, cell.gamma_r};
    DetPoint pt = det_expected_active(cfg, pop);
    std::vector<std::string> row = {CsvWriter::fmt(r), CsvWriter::fmt(pt.expected_active),
                                    CsvWriter::fmt(pt.expected_self),
                                    CsvWriter::fmt(pt.active_prob)};
    if (with_delay) row.push_back(CsvWriter::fmt(delay_objective(pt, cell.n, wbs, wd2d)));
    csv.row(row);
  }
  std::printf("analytic-det: %zu grid points written\n", rs.size());
  return 0;
}

int run_analytic_rand(const Ctx& ctx, const std::string& method) {
  auto cell = cell_params(ctx.cfg);
  auto rs = r_axis(ctx.cfg);
  SweepGrid grid;
  grid.r_values = rs;
  grid.validate(false);
  PopularityModel pop(cell.m, cell.gamma_r);
  bool exact = method == "exact";
  RandCachingParams params = rand_params(ctx, !exact);

  CsvWriter csv(ctx.out_path("analytic_rand"));
  auto meta = grid_meta(rs);
  meta["n"] = std::to_string(cell.n);
  meta["m"] = std::to_string(cell.m);
  meta["gamma_r"] = fmt_double_meta(cell.gamma_r);
  meta["gamma_c"] = fmt_double_meta(params.caching_gamma);
  meta["method"] = method;
  if (!exact) {
    meta["mc_samples"] = std::to_string(params.mc_samples);
    meta["seed"] = std::to_string(params.seed);
    meta["product_of_marginals"] = params.product_of_marginals ? "true" : "false";
  }
  write_meta(csv, "analytic-rand", meta);
  csv.header({"r", "expected_active", "se_active", "expected_self", "active_prob"});

  for (double r : rs) {
    CellConfig cfg{cell.n, cell.m, r, cell.gamma_r};
    DetPoint pt = exact ? rand_expected_active_exact(cfg, pop, params)
                        : rand_expected_active_mc(cfg, pop, params);
    csv.row({CsvWriter::fmt(r), CsvWriter::fmt(pt.expected_active),
             CsvWriter::fmt(pt.se_active), CsvWriter::fmt(pt.expected_self),
             CsvWriter::fmt(pt.active_prob)});
  }
  std::printf("analytic-rand (%s): %zu grid points written\n", method.c_str(), rs.size());
  return 0;
}

int run_geo_sim(const Ctx& ctx) {
  auto cell = cell_params(ctx.cfg);
  auto rs = r_axis(ctx.cfg);
  SweepGrid grid;
  grid.r_values = rs;
  grid.validate(false);
  PopularityModel pop(cell.m, cell.gamma_r);
  CachingMode mode = caching_mode(ctx.cfg);
  long trials = ctx.cfg.get_long("geo.trials", 100000);
  std::uint64_t seed = ctx.need_seed();
  std::optional<PopularityModel> pop_cache;
  if (mode == CachingMode::random_zipf)
    pop_cache.emplace(cell.m, ctx.cfg.get_double("rand.gamma_c", 1.5));

  CsvWriter csv(ctx.out_path("geo_sim"));
  auto meta = grid_meta(rs);
  meta["n"] = std::to_string(cell.n);
  meta["m"] = std::to_string(cell.m);
  meta["gamma_r"] = fmt_double_meta(cell.gamma_r);
  meta["caching"] = caching_mode_name(mode);
  if (pop_cache) meta["gamma_c"] = fmt_double_meta(pop_cache->gamma());
  meta["trials"] = std::to_string(trials);
  meta["seed"] = std::to_string(seed);
  write_meta(csv, "geo-sim", meta);
  csv.header({"r", "clusters", "mean_active", "se_active", "mean_self", "se_self",
              "mean_potential_links"});

  for (double r : rs) {
    CellConfig cfg{cell.n, cell.m, r, cell.gamma_r};
    GeoSummary s = run_trials(cfg, pop, mode, pop_cache ? &*pop_cache : nullptr, trials, seed,
                              ctx.effective_threads());
    long clusters = static_cast<long>(s.clusters_per_side) * s.clusters_per_side;
    csv.row({CsvWriter::fmt(r), CsvWriter::fmt(clusters), CsvWriter::fmt(s.mean_active),
             CsvWriter::fmt(s.se_active), CsvWriter::fmt(s.mean_self),
             CsvWriter::fmt(s.se_self), CsvWriter::fmt(s.mean_potential_links)});
  }
  std::printf("geo-sim: %zu grid points x %ld trials written\n", rs.size(), trials);
  return 0;
}

int run_phy_sim(const Ctx& ctx) {
  auto cell = cell_params(ctx.cfg);
  auto rs = r_axis(ctx.cfg);
  SweepGrid grid;
  grid.r_values = rs;
  grid.validate(false);
  PopularityModel pop(cell.m, cell.gamma_r);
  ChannelParams channel = phy_params(ctx);
  long trials = ctx.cfg.get_long("phy.trials", 200);
  std::uint64_t seed = ctx.need_seed();

  RateSweep sweep = rate_vs_r_sweep(cell.n, pop, channel, rs, trials, seed,
                                    ctx.effective_threads());

  CsvWriter csv(ctx.out_path("phy_sim"));
  auto meta = grid_meta(rs);
  meta["n"] = std::to_string(cell.n);
  meta["m"] = std::to_string(cell.m);
  meta["gamma_r"] = fmt_double_meta(cell.gamma_r);
  meta["pathloss_exponent"] = fmt_double_meta(channel.pathloss_exponent);
  meta["shadowing_sigma_db"] = fmt_double_meta(channel.shadowing_sigma_db);
  meta["noise"] = channel.noise_power >= 0.0
                      ? fmt_double_meta(channel.noise_power)
                      : "derived from reference_snr_db " +
                            fmt_double_meta(channel.reference_snr_db) + " at distance r/2";
  meta["trials"] = std::to_string(trials);
  meta["seed"] = std::to_string(seed);
  meta["r_opt_rate"] = fmt_double_meta(sweep.r_opt);
  write_meta(csv, "phy-sim", meta);
  csv.header({"r", "mean_rate", "se_rate", "mean_links", "nonconverged_frac"});
  for (const RatePoint& pt : sweep.points)
    csv.row({CsvWriter::fmt(pt.r), CsvWriter::fmt(pt.mean_rate), CsvWriter::fmt(pt.se_rate),
             CsvWriter::fmt(pt.mean_links), CsvWriter::fmt(pt.nonconverged_frac)});
  std::printf("phy-sim: r_opt_rate = %.4f (mean rate %.4f)\n", sweep.r_opt, sweep.rate_at_opt);
  return 0;
}

int run_optimize(const Ctx& ctx, const std::string& caching, const std::string& objective) {
  auto cell = cell_params(ctx.cfg);
  PopularityModel pop(cell.m, cell.gamma_r);
  SweepGrid grid;
  grid.r_values = r_axis(ctx.cfg);
  grid.refinement_levels = static_cast<int>(ctx.cfg.get_long("grid.refine_levels", 2));

  OptimumReport report;
  std::map<std::string, std::string> meta = grid_meta(grid.r_values);
  meta["n"] = std::to_string(cell.n);
  meta["m"] = std::to_string(cell.m);
  meta["gamma_r"] = fmt_double_meta(cell.gamma_r);
  meta["caching"] = caching;

  if (caching == "det") {
    ObjectiveKind kind;
    std::optional<DelayWeights> delay;
    if (objective == "max-active") {
      kind = ObjectiveKind::max_active;
    } else if (objective == "min-delay") {
      kind = ObjectiveKind::min_delay;
      delay = delay_weights(ctx);
      meta["omega_bs"] = fmt_double_meta(delay->omega_bs);
      meta["omega_d2d"] = fmt_double_meta(delay->omega_d2d);
    } else {
      throw ConfigError("objective", "expected max-active | min-delay");
    }
    report = optimize_r_deterministic(cell.n, pop, kind, grid, delay);
  } else if (caching == "rand") {
    grid.gamma_c_values = gamma_c_axis(ctx.cfg);
    RandCachingParams params = rand_params(ctx, true);
    meta["gamma_c_grid_points"] = std::to_string(grid.gamma_c_values.size());
    meta["mc_samples"] = std::to_string(params.mc_samples);
    meta["seed"] = std::to_string(params.seed);
    report = optimize_r_gamma_random(cell.n, pop, grid, params);
  } else {
    throw ConfigError("caching", "expected det | rand");
  }

  meta["objective"] = objective_name(report.objective_kind);
  meta["r_opt"] = fmt_double_meta(report.r_opt);
  if (report.gamma_c_opt) meta["gamma_c_opt"] = fmt_double_meta(*report.gamma_c_opt);
  meta["objective_at_opt"] = fmt_double_meta(report.objective_at_opt);
  if (report.flat_objective) meta["warning"] = "flat objective (varies by < 1e-9)";
  if (report.ambiguous_optimum)
    meta["warning"] = "top-2 grid cells within one standard error";

  CsvWriter csv(ctx.out_path("optimize"));
  write_meta(csv, "optimize", meta);
  csv.header({"r", "gamma_c", "objective", "se"});
  // rows cover exactly the configured grid; refined optima live in the
  // metadata block
  auto on_axis = [](const std::vector<double>& axis, double v) {
    return std::find(axis.begin(), axis.end(), v) != axis.end();
  };
  for (const CurvePoint& pt : report.curve) {
    if (!on_axis(grid.r_values, pt.r)) continue;
    if (!grid.gamma_c_values.empty() && !on_axis(grid.gamma_c_values, pt.gamma_c)) continue;
    csv.row({CsvWriter::fmt(pt.r), CsvWriter::fmt(pt.gamma_c), CsvWriter::fmt(pt.value),
             CsvWriter::fmt(pt.se)});
  }
  if (report.gamma_c_opt)
    std::printf("optimize: r_opt = %.4f gamma_c_opt = %.4f (objective %.4f)\n", report.r_opt,
                *report.gamma_c_opt, report.objective_at_opt);
  else
    std::printf("optimize: r_opt = %.4f (objective %.4f)\n", report.r_opt,
                report.objective_at_opt);
  if (report.flat_objective) std::fprintf(stderr, "warning: objective is flat on the grid\n");
  if (report.ambiguous_optimum)
    std::fprintf(stderr, "warning: top-2 cells within one standard error\n");
  return 0;
}

int run_asymptotics(const Ctx& ctx, const std::string& out_name = "asymptotics") {
  double gamma_r = ctx.cfg.get_double("cell.gamma_r", 0.6);
  std::vector<double> n_list =
      ctx.cfg.get_double_list("asymptotics.n_list", {100, 200, 500, 1000, 2000});
  double m_coeff = ctx.cfg.get_double("asymptotics.m_coefficient", 30.0);
  std::vector<long> ns(n_list.begin(), n_list.end());

  AsymptoticFit fit = fit_asymptotics(gamma_r, ns, m_coeff);

  CsvWriter csv(ctx.out_path(out_name));
  std::map<std::string, std::string> meta;
  meta["gamma_r"] = fmt_double_meta(gamma_r);
  meta["eta"] = fmt_double_meta(fit.eta);
  meta["m_rule"] = "m = " + fmt_double_meta(m_coeff) + " * sqrt(n)";
  meta["r_slope"] = fmt_double_meta(fit.r_slope);
  meta["r_constant"] = fmt_double_meta(fit.r_constant);
  meta["ea_slope"] = fmt_double_meta(fit.ea_slope);
  meta["ea_constant"] = fmt_double_meta(fit.ea_constant);
  write_meta(csv, "asymptotics", meta);
  csv.header({"n", "m", "r_opt", "ea_opt", "r_theory", "ea_theory"});
  for (std::size_t i = 0; i < fit.n_values.size(); ++i)
    csv.row({CsvWriter::fmt(fit.n_values[i]), CsvWriter::fmt(fit.m_values[i]),
             CsvWriter::fmt(fit.r_opts[i]), CsvWriter::fmt(fit.ea_opts[i]),
             CsvWriter::fmt(fit.r_theory[i]), CsvWriter::fmt(fit.ea_theory[i])});
  std::printf("asymptotics: gamma_r=%.2f r-fit slope %.3f constant %.3f; "
              "E[A]-fit slope %.3f constant %.3f\n",
              gamma_r, fit.r_slope, fit.r_constant, fit.ea_slope, fit.ea_constant);
  return 0;
}

int run_compare(const Ctx& ctx, const std::string& out_name = "compare") {
  auto cell = cell_params(ctx.cfg);
  auto rs = r_axis(ctx.cfg);
  SweepGrid grid;
  grid.r_values = rs;
  grid.validate(false);
  PopularityModel pop(cell.m, cell.gamma_r);
  RandCachingParams params = rand_params(ctx, true);
  double f1 = pop.pmf_at(1);
  double nself_mostpop = static_cast<double>(cell.n) * f1;

  struct Row {
    DetPoint det, rnd;
  };
  std::vector<Row> rows(rs.size());
  parallel_for(rs.size(), static_cast<unsigned>(ctx.effective_threads()), [&](std::size_t i) {
    CellConfig cfg{cell.n, cell.m, rs[i], cell.gamma_r};
    RandCachingParams p = params;
    p.threads = 1;
    rows[i].det = det_expected_active(cfg, pop);
    rows[i].rnd = rand_expected_active_mc(cfg, pop, p);
  });

  CsvWriter csv(ctx.out_path(out_name));
  auto meta = grid_meta(rs);
  meta["n"] = std::to_string(cell.n);
  meta["m"] = std::to_string(cell.m);
  meta["gamma_r"] = fmt_double_meta(cell.gamma_r);
  meta["gamma_c"] = fmt_double_meta(params.caching_gamma);
  meta["mc_samples"] = std::to_string(params.mc_samples);
  meta["seed"] = std::to_string(params.seed);
  meta["f1"] = fmt_double_meta(f1);
  write_meta(csv, "compare", meta);
  csv.header({"r", "ea_det", "ea_rand", "se_rand", "satisfied_det", "satisfied_rand",
              "se_satisfied_rand", "nself_det", "nself_rand", "nself_mostpop"});
  for (std::size_t i = 0; i < rs.size(); ++i) {
    const Row& row = rows[i];
    csv.row({CsvWriter::fmt(rs[i]), CsvWriter::fmt(row.det.expected_active),
             CsvWriter::fmt(row.rnd.expected_active), CsvWriter::fmt(row.rnd.se_active),
             CsvWriter::fmt(row.det.expected_active + row.det.expected_self),
             CsvWriter::fmt(row.rnd.expected_active + row.rnd.expected_self),
             CsvWriter::fmt(row.rnd.se_active), CsvWriter::fmt(row.det.expected_self),
             CsvWriter::fmt(row.rnd.expected_self), CsvWriter::fmt(nself_mostpop)});
  }
  std::printf("compare: %zu grid points written (most-popular-only has no D2D links)\n",
              rs.size());
  return 0;
}

// ------------------------------------------------------------------ figures

int run_figure(Ctx& ctx, int number) {
  auto cell = cell_params(ctx.cfg);
  switch (number) {
    case 3: {  // E[A] vs r, deterministic, one curve per gamma_r
      auto gammas = ctx.cfg.get_double_list("figure.gamma_r_list", {0.6, 0.8, 1.0, 1.2, 1.4});
      auto rs = r_axis(ctx.cfg);
      CsvWriter csv(ctx.out_path("figure3"));
      auto meta = grid_meta(rs);
      meta["n"] = std::to_string(cell.n);
      meta["m"] = std::to_string(cell.m);
      write_meta(csv, "figure 3", meta);
      std::vector<std::string> cols = {"r"};
      for (double g : gammas) cols.push_back("ea_gamma_r_" + fmt_double_meta(g));
      csv.header(cols);
      std::vector<PopularityModel> pops;
      for (double g : gammas) pops.emplace_back(cell.m, g);
      for (double r : rs) {
        std::vector<std::string> row = {CsvWriter::fmt(r)};
        for (const auto& pop : pops) {
          CellConfig cfg{cell.n, cell.m, r, pop.gamma()};
          row.push_back(CsvWriter::fmt(det_expected_active(cfg, pop).expected_active));
        }
        csv.row(row);
      }
      std::printf("figure 3: %zu rows written\n", rs.size());
      return 0;
    }
    case 4: {  // mean rate vs r, one curve per gamma_r
      auto gammas = ctx.cfg.get_double_list("figure.gamma_r_list", {0.6, 0.8, 1.0, 1.2, 1.4});
      auto rs = r_axis(ctx.cfg);
      ChannelParams channel = phy_params(ctx);
      long trials = ctx.cfg.get_long("phy.trials", 200);
      std::uint64_t seed = ctx.need_seed();
      std::vector<RateSweep> sweeps;
      for (double g : gammas) {
        PopularityModel pop(cell.m, g);
        sweeps.push_back(rate_vs_r_sweep(cell.n, pop, channel, rs, trials, seed,
                                         ctx.effective_threads()));
      }
      CsvWriter csv(ctx.out_path("figure4"));
      auto meta = grid_meta(rs);
      meta["n"] = std::to_string(cell.n);
      meta["m"] = std::to_string(cell.m);
      meta["trials"] = std::to_string(trials);
      meta["seed"] = std::to_string(seed);
      for (std::size_t gi = 0; gi < gammas.size(); ++gi)
        meta["r_opt_rate_gamma_r_" + fmt_double_meta(gammas[gi])] =
            fmt_double_meta(sweeps[gi].r_opt);
      write_meta(csv, "figure 4", meta);
      std::vector<std::string> cols = {"r"};
      for (double g : gammas) {
        cols.push_back("rate_gamma_r_" + fmt_double_meta(g));
        cols.push_back("se_gamma_r_" + fmt_double_meta(g));
      }
      csv.header(cols);
      for (std::size_t ri = 0; ri < rs.size(); ++ri) {
        std::vector<std::string> row = {CsvWriter::fmt(rs[ri])};
        for (const auto& sweep : sweeps) {
          row.push_back(CsvWriter::fmt(sweep.points[ri].mean_rate));
          row.push_back(CsvWriter::fmt(sweep.points[ri].se_rate));
        }
        csv.row(row);
      }
      std::printf("figure 4: %zu rows written\n", rs.size());
      return 0;
    }
    case 5:    // optimal cluster count and E[A] vs gamma_r
    case 6: {  // r_opt by objective vs gamma_r
      auto gammas = ctx.cfg.get_double_list("figure.gamma_r_list",
                                            {0.2, 0.4, 0.6, 0.8, 1.0, 1.2, 1.4});
      SweepGrid grid;
      grid.r_values = r_axis(ctx.cfg);
      std::optional<DelayWeights> delay;
      if (number == 6) delay = delay_weights(ctx);
      CsvWriter csv(ctx.out_path("figure" + std::to_string(number)));
      auto meta = grid_meta(grid.r_values);
      meta["n"] = std::to_string(cell.n);
      meta["m"] = std::to_string(cell.m);
      if (delay) {
        meta["omega_bs"] = fmt_double_meta(delay->omega_bs);
        meta["omega_d2d"] = fmt_double_meta(delay->omega_d2d);
      }
      write_meta(csv, "figure " + std::to_string(number), meta);
      if (number == 5)
        csv.header({"gamma_r", "r_opt", "clusters_at_opt", "ea_at_opt"});
      else
        csv.header({"gamma_r", "r_opt_max_active", "r_opt_min_delay"});
      for (double g : gammas) {
        PopularityModel pop(cell.m, g);
        auto max_ea =
            optimize_r_deterministic(cell.n, pop, ObjectiveKind::max_active, grid);
        if (number == 5) {
          csv.row({CsvWriter::fmt(g), CsvWriter::fmt(max_ea.r_opt),
                   CsvWriter::fmt(2.0 / (max_ea.r_opt * max_ea.r_opt)),
                   CsvWriter::fmt(max_ea.objective_at_opt)});
        } else {
          auto min_delay =
              optimize_r_deterministic(cell.n, pop, ObjectiveKind::min_delay, grid, delay);
          csv.row({CsvWriter::fmt(g), CsvWriter::fmt(max_ea.r_opt),
                   CsvWriter::fmt(min_delay.r_opt)});
        }
      }
      std::printf("figure %d: %zu rows written\n", number, gammas.size());
      return 0;
    }
    case 7: {  // optimum vs library size
      auto ms = ctx.cfg.get_double_list("figure.m_list", {250, 500, 1000, 2000, 4000});
      SweepGrid grid;
      grid.r_values = r_axis(ctx.cfg);
      CsvWriter csv(ctx.out_path("figure7"));
      auto meta = grid_meta(grid.r_values);
      meta["n"] = std::to_string(cell.n);
      meta["gamma_r"] = fmt_double_meta(cell.gamma_r);
      write_meta(csv, "figure 7", meta);
      csv.header({"m", "r_opt", "clusters_at_opt", "ea_at_opt"});
      for (double md : ms) {
        int m = static_cast<int>(md);
        PopularityModel pop(m, cell.gamma_r);
        auto report = optimize_r_deterministic(cell.n, pop, ObjectiveKind::max_active, grid);
        csv.row({CsvWriter::fmt(static_cast<long>(m)), CsvWriter::fmt(report.r_opt),
                 CsvWriter::fmt(2.0 / (report.r_opt * report.r_opt)),
                 CsvWriter::fmt(report.objective_at_opt)});
      }
      std::printf("figure 7: %zu rows written\n", ms.size());
      return 0;
    }
    case 8:
    case 9: {  // asymptotic scaling of E[A] (8) and r_opt (9); same sweep
      std::string out = "figure" + std::to_string(number);
      CsvWriter csv(ctx.out_path(out));
      std::vector<double> gammas =
          ctx.cfg.get_double_list("figure.gamma_r_list", {0.6, 1.4});
      auto n_list = ctx.cfg.get_double_list("asymptotics.n_list",
                                            {100, 200, 500, 1000, 2000});
      double m_coeff = ctx.cfg.get_double("asymptotics.m_coefficient", 30.0);
      std::vector<long> ns(n_list.begin(), n_list.end());
      std::map<std::string, std::string> meta;
      meta["m_rule"] = "m = " + fmt_double_meta(m_coeff) + " * sqrt(n)";
      std::vector<AsymptoticFit> fits;
      for (double g : gammas) {
        fits.push_back(fit_asymptotics(g, ns, m_coeff));
        std::string tag = "gamma_r_" + fmt_double_meta(g);
        meta["r_constant_" + tag] = fmt_double_meta(fits.back().r_constant);
        meta["r_slope_" + tag] = fmt_double_meta(fits.back().r_slope);
        meta["ea_constant_" + tag] = fmt_double_meta(fits.back().ea_constant);
        meta["ea_slope_" + tag] = fmt_double_meta(fits.back().ea_slope);
      }
      write_meta(csv, "figure " + std::to_string(number), meta);
      csv.header({"gamma_r", "n", "m", "r_opt", "ea_opt", "r_theory", "ea_theory"});
      for (std::size_t gi = 0; gi < gammas.size(); ++gi)
        for (std::size_t i = 0; i < ns.size(); ++i)
          csv.row({CsvWriter::fmt(gammas[gi]), CsvWriter::fmt(fits[gi].n_values[i]),
                   CsvWriter::fmt(fits[gi].m_values[i]), CsvWriter::fmt(fits[gi].r_opts[i]),
                   CsvWriter::fmt(fits[gi].ea_opts[i]), CsvWriter::fmt(fits[gi].r_theory[i]),
                   CsvWriter::fmt(fits[gi].ea_theory[i])});
      std::printf("figure %d: %zu rows written\n", number, gammas.size() * ns.size());
      return 0;
    }
    case 10: {  // E[A] surface over (r, gamma_c), random caching
      SweepGrid grid;
      grid.r_values = r_axis(ctx.cfg);
      grid.gamma_c_values = gamma_c_axis(ctx.cfg);
      grid.refinement_levels = static_cast<int>(ctx.cfg.get_long("grid.refine_levels", 0));
      PopularityModel pop(cell.m, cell.gamma_r);
      RandCachingParams params = rand_params(ctx, true);
      auto report = optimize_r_gamma_random(cell.n, pop, grid, params);
      CsvWriter csv(ctx.out_path("figure10"));
      auto meta = grid_meta(grid.r_values);
      meta["n"] = std::to_string(cell.n);
      meta["m"] = std::to_string(cell.m);
      meta["gamma_r"] = fmt_double_meta(cell.gamma_r);
      meta["mc_samples"] = std::to_string(params.mc_samples);
      meta["seed"] = std::to_string(params.seed);
      meta["r_opt"] = fmt_double_meta(report.r_opt);
      meta["gamma_c_opt"] = fmt_double_meta(report.gamma_c_opt.value_or(0.0));
      meta["ea_at_opt"] = fmt_double_meta(report.objective_at_opt);
      write_meta(csv, "figure 10", meta);
      csv.header({"r", "gamma_c", "ea", "se"});
      auto on_axis = [](const std::vector<double>& axis, double v) {
        return std::find(axis.begin(), axis.end(), v) != axis.end();
      };
      for (const CurvePoint& pt : report.curve) {
        if (!on_axis(grid.r_values, pt.r) || !on_axis(grid.gamma_c_values, pt.gamma_c))
          continue;
        csv.row({CsvWriter::fmt(pt.r), CsvWriter::fmt(pt.gamma_c), CsvWriter::fmt(pt.value),
                 CsvWriter::fmt(pt.se)});
      }
      std::printf("figure 10: argmax (r, gamma_c) = (%.4f, %.4f)\n", report.r_opt,
                  report.gamma_c_opt.value_or(0.0));
      return 0;
    }
    case 11: {  // E[A] vs r, one curve per gamma_c
      auto gcs = ctx.cfg.get_double_list("figure.gamma_c_list", {0.5, 1.0, 1.5, 2.0, 2.5, 3.0});
      auto rs = r_axis(ctx.cfg);
      PopularityModel pop(cell.m, cell.gamma_r);
      RandCachingParams params = rand_params(ctx, true);
      CsvWriter csv(ctx.out_path("figure11"));
      auto meta = grid_meta(rs);
      meta["n"] = std::to_string(cell.n);
      meta["m"] = std::to_string(cell.m);
      meta["gamma_r"] = fmt_double_meta(cell.gamma_r);
      meta["mc_samples"] = std::to_string(params.mc_samples);
      meta["seed"] = std::to_string(params.seed);
      write_meta(csv, "figure 11", meta);
      std::vector<std::string> cols = {"r"};
      for (double g : gcs) {
        cols.push_back("ea_gamma_c_" + fmt_double_meta(g));
        cols.push_back("se_gamma_c_" + fmt_double_meta(g));
      }
      csv.header(cols);
      struct Cell {
        DetPoint pt;
      };
      std::vector<DetPoint> grid_vals(rs.size() * gcs.size());
      parallel_for(grid_vals.size(), static_cast<unsigned>(ctx.effective_threads()),
                   [&](std::size_t idx) {
                     std::size_t ri = idx / gcs.size(), gi = idx % gcs.size();
                     CellConfig cfg{cell.n, cell.m, rs[ri], cell.gamma_r};
                     RandCachingParams p = params;
                     p.caching_gamma = gcs[gi];
                     p.threads = 1;
                     grid_vals[idx] = rand_expected_active_mc(cfg, pop, p);
                   });
      for (std::size_t ri = 0; ri < rs.size(); ++ri) {
        std::vector<std::string> row = {CsvWriter::fmt(rs[ri])};
        for (std::size_t gi = 0; gi < gcs.size(); ++gi) {
          const DetPoint& pt = grid_vals[ri * gcs.size() + gi];
          row.push_back(CsvWriter::fmt(pt.expected_active));
          row.push_back(CsvWriter::fmt(pt.se_active));
        }
        csv.row(row);
      }
      std::printf("figure 11: %zu rows written\n", rs.size());
      return 0;
    }
    case 12: {  // gamma_c_opt vs gamma_r at fixed r
      auto gammas = ctx.cfg.get_double_list("figure.gamma_r_list",
                                            {0.2, 0.4, 0.6, 0.8, 1.0, 1.2, 1.4});
      double r_fixed = ctx.cfg.get_double("figure.r_fixed", 0.2);
      SweepGrid grid;
      grid.gamma_c_values = ctx.cfg.has("grid.gamma_c_list") || ctx.cfg.has("grid.gamma_c_min")
                                ? gamma_c_axis(ctx.cfg)
                                : SweepGrid::linspace(0.0, 5.0, 21);
      grid.refinement_levels = static_cast<int>(ctx.cfg.get_long("grid.refine_levels", 0));
      RandCachingParams params = rand_params(ctx, true);
      CsvWriter csv(ctx.out_path("figure12"));
      std::map<std::string, std::string> meta;
      meta["n"] = std::to_string(cell.n);
      meta["m"] = std::to_string(cell.m);
      meta["r"] = fmt_double_meta(r_fixed);
      meta["mc_samples"] = std::to_string(params.mc_samples);
      meta["seed"] = std::to_string(params.seed);
      write_meta(csv, "figure 12", meta);
      csv.header({"gamma_r", "gamma_c_opt", "ea_at_opt", "se_at_opt"});
      for (double g : gammas) {
        PopularityModel pop(cell.m, g);
        auto report = optimize_gamma_random_fixed_r(cell.n, pop, r_fixed, grid, params);
        csv.row({CsvWriter::fmt(g), CsvWriter::fmt(report.gamma_c_opt.value_or(0.0)),
                 CsvWriter::fmt(report.objective_at_opt), CsvWriter::fmt(report.se_at_opt)});
      }
      std::printf("figure 12: %zu rows written\n", gammas.size());
      return 0;
    }
    case 13:
      return run_compare(ctx, "figure13");
    case 14: {  // self-requests vs r for deterministic and random caching
      auto gammas = ctx.cfg.get_double_list("figure.gamma_r_list", {0.6, 1.0, 1.4});
      auto rs = r_axis(ctx.cfg);
      RandCachingParams params = rand_params(ctx, true);
      CsvWriter csv(ctx.out_path("figure14"));
      auto meta = grid_meta(rs);
      meta["n"] = std::to_string(cell.n);
      meta["m"] = std::to_string(cell.m);
      meta["gamma_c"] = fmt_double_meta(params.caching_gamma);
      write_meta(csv, "figure 14", meta);
      csv.header({"gamma_r", "r", "nself_det", "nself_rand"});
      for (double g : gammas) {
        PopularityModel pop(cell.m, g);
        PopularityModel cache(cell.m, params.caching_gamma);
        double self_rate = rand_self_rate(pop, cache);
        for (double r : rs) {
          CellConfig cfg{cell.n, cell.m, r, g};
          DetPoint det = det_expected_active(cfg, pop);
          csv.row({CsvWriter::fmt(g), CsvWriter::fmt(r), CsvWriter::fmt(det.expected_self),
                   CsvWriter::fmt(static_cast<double>(cell.n) * self_rate)});
        }
      }
      std::printf("figure 14: %zu rows written\n", gammas.size() * rs.size());
      return 0;
    }
    default:
      throw ConfigError("figure", "figure number must lie in 3..14");
  }
}

}  // namespace

int run(const std::vector<std::string>& args) {
  std::vector<const char*> argv;
  argv.push_back(kToolName);
  for (const auto& a : args) argv.push_back(a.c_str());
  return run(static_cast<int>(argv.size()), argv.data());
}

int run(int argc, const char* const* argv) {
  CLI::App app{"analytic models, simulators and optimizers for cellular D2D video caching"};
  app.set_version_flag("--version", std::string(kToolName) + " " + kToolVersion);

  Ctx ctx;
  std::string config_path;
  std::vector<std::string> overrides;
  std::optional<std::uint64_t> seed_opt;

  app.add_option("--config", config_path, "configuration file (INI-style sections)");
  app.add_option("--seed", seed_opt, "seed for stochastic scenarios");
  app.add_option("--out", ctx.out_dir, "output directory for CSV files");
  app.add_option("--set", overrides, "override as section.key=value (repeatable)")
      ->take_all();
  app.add_option("--threads", ctx.threads, "worker threads (default: hardware)");
  app.require_subcommand(1);

  auto* sc_det = app.add_subcommand("analytic-det", "closed-form E[A] curve, deterministic caching");
  auto* sc_rand = app.add_subcommand("analytic-rand", "E[A] curve under random caching");
  std::string rand_method = "mc";
  sc_rand->add_option("--method", rand_method, "mc | exact")
      ->check(CLI::IsMember({"mc", "exact"}));
  auto* sc_geo = app.add_subcommand("geo-sim", "protocol-model Monte Carlo simulator");
  auto* sc_phy = app.add_subcommand("phy-sim", "pathloss/shadowing/SIR rate simulator");
  auto* sc_opt = app.add_subcommand("optimize", "search the optimal collaboration distance");
  std::string opt_caching = "det", opt_objective = "max-active";
  sc_opt->add_option("--caching", opt_caching, "det | rand")
      ->check(CLI::IsMember({"det", "rand"}));
  sc_opt->add_option("--objective", opt_objective, "max-active | min-delay (det only)")
      ->check(CLI::IsMember({"max-active", "min-delay"}));
  auto* sc_asym = app.add_subcommand("asymptotics", "power-law fits of r_opt(n) and E[A](n)");
  auto* sc_fig = app.add_subcommand("figure", "reproduce the data behind one figure");
  int figure_number = 0;
  sc_fig->add_option("number", figure_number, "figure number (3..14)")->required();
  auto* sc_cmp = app.add_subcommand("compare", "deterministic vs random vs most-popular-only");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (!config_path.empty()) ctx.cfg.load_file(config_path);
    for (const auto& pair : overrides) ctx.cfg.set_pair(pair);
    ctx.seed_flag = seed_opt;

    if (sc_det->parsed()) return run_analytic_det(ctx);
    if (sc_rand->parsed()) return run_analytic_rand(ctx, rand_method);
    if (sc_geo->parsed()) return run_geo_sim(ctx);
    if (sc_phy->parsed()) return run_phy_sim(ctx);
    if (sc_opt->parsed()) return run_optimize(ctx, opt_caching, opt_objective);
    if (sc_asym->parsed()) return run_asymptotics(ctx);
    if (sc_fig->parsed()) return run_figure(ctx, figure_number);
    if (sc_cmp->parsed()) return run_compare(ctx);
    return 1;
  } catch (const EnumerationInfeasible& e) {
    std::fprintf(stderr, "%s\n", e.what());
    return 3;
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "%s\n", e.what());
    return 2;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "config error: field '%s'\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}

}  // namespace d2d::cli
