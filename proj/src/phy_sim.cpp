#include "d2d/phy_sim.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <stdexcept>
#include <unordered_map>

#include "d2d/parallel.hpp"

namespace d2d {

void ChannelParams::validate() const {
  if (!(pathloss_exponent > 2.0))
    throw std::invalid_argument("phy.pathloss_exponent: must be > 2");
  if (!(shadowing_sigma_db >= 0.0))
    throw std::invalid_argument("phy.shadowing_sigma_db: must be >= 0");
  if (!(tx_power > 0.0)) throw std::invalid_argument("phy.tx_power: must be > 0");
  if (!(min_distance > 0.0)) throw std::invalid_argument("phy.min_distance: must be > 0");
  if (max_iterations < 1) throw std::invalid_argument("phy.max_iterations: must be >= 1");
  if (!(switch_rel_tol >= 0.0))
    throw std::invalid_argument("phy.switch_rel_tol: must be >= 0");
  if (!std::isfinite(reference_snr_db))
    throw std::invalid_argument("phy.reference_snr_db: must be finite");
}

double ChannelParams::effective_noise(double r) const {
  if (noise_power >= 0.0) return noise_power;
  double ref_gain = std::pow(std::max(r / 2.0, min_distance), -pathloss_exponent);
  return tx_power * ref_gain * std::pow(10.0, -reference_snr_db / 10.0);
}

double link_gain(double distance, double shadow_db, const ChannelParams& channel) {
  double d = std::max(distance, channel.min_distance);
  return std::pow(d, -channel.pathloss_exponent) * std::pow(10.0, shadow_db / 10.0);
}

std::vector<std::vector<PotentialLink>> potential_links_by_cluster(
    const ClusterRealization& real) {
  const int n = static_cast<int>(real.cluster_of.size());
  std::vector<std::vector<PotentialLink>> by_cluster(real.cluster_count());
  std::vector<std::vector<int>> members(real.cluster_count());
  for (int i = 0; i < n; ++i)
    if (real.cluster_of[i] >= 0) members[real.cluster_of[i]].push_back(i);
  for (int cl = 0; cl < real.cluster_count(); ++cl) {
    for (int rx : members[cl]) {
      if (real.request[rx] == real.cache[rx]) continue;  // self-served
      for (int tx : members[cl])
        if (tx != rx && real.cache[tx] == real.request[rx])
          by_cluster[cl].push_back({tx, rx});
    }
  }
  return by_cluster;
}

namespace {

// Lazily evaluated link gains; the shadowing draw of an ordered (tx, rx)
// pair is a pure function of (shadow_seed, tx, rx), so schedules are
// reproducible and iterative/exhaustive searches see the same channel.
class GainTable {
 public:
  GainTable(const ClusterRealization& real, const ChannelParams& channel,
            std::uint64_t shadow_seed)
      : real_(real), channel_(channel), shadow_seed_(shadow_seed) {}

  double operator()(int tx, int rx) {
    std::uint64_t key = (static_cast<std::uint64_t>(tx) << 32) | static_cast<std::uint32_t>(rx);
    auto it = memo_.find(key);
    if (it != memo_.end()) return it->second;
    double dx = real_.positions(tx, 0) - real_.positions(rx, 0);
    double dy = real_.positions(tx, 1) - real_.positions(rx, 1);
    double dist = std::sqrt(dx * dx + dy * dy);
    double shadow = 0.0;
    if (channel_.shadowing_sigma_db > 0.0) {
      Rng rng(derive_seed(shadow_seed_, key));
      shadow = channel_.shadowing_sigma_db * rng.normal();
    }
    double g = link_gain(dist, shadow, channel_);
    memo_.emplace(key, g);
    return g;
  }

 private:
  const ClusterRealization& real_;
  const ChannelParams& channel_;
  std::uint64_t shadow_seed_;
  std::unordered_map<std::uint64_t, double> memo_;
};

struct Instance {
  std::vector<int> cluster_ids;                    // clusters with candidates
  std::vector<std::vector<PotentialLink>> cands;   // aligned with cluster_ids
};

Instance collect(const ClusterRealization& real) {
  Instance inst;
  auto by_cluster = potential_links_by_cluster(real);
  for (int cl = 0; cl < static_cast<int>(by_cluster.size()); ++cl)
    if (!by_cluster[cl].empty()) {
      inst.cluster_ids.push_back(cl);
      inst.cands.push_back(std::move(by_cluster[cl]));
    }
  return inst;
}

double sinr_of(const Instance& inst, const std::vector<int>& choice, std::size_t ci,
               const PotentialLink& link, GainTable& gains, const ChannelParams& channel,
               double noise) {
  double signal = channel.tx_power * gains(link.tx, link.rx);
  double interference = 0.0;
  for (std::size_t cj = 0; cj < inst.cluster_ids.size(); ++cj) {
    if (cj == ci) continue;
    const PotentialLink& other = inst.cands[cj][choice[cj]];
    interference += channel.tx_power * gains(other.tx, link.rx);
  }
  return signal / (noise + interference);
}

double sum_rate_of(const Instance& inst, const std::vector<int>& choice, GainTable& gains,
                   const ChannelParams& channel, double noise) {
  double total = 0.0;
  for (std::size_t ci = 0; ci < inst.cluster_ids.size(); ++ci) {
    double sinr = sinr_of(inst, choice, ci, inst.cands[ci][choice[ci]], gains, channel, noise);
    total += std::log2(1.0 + sinr);
  }
  return total;
}

PhyLinkSchedule materialize(const Instance& inst, const std::vector<int>& choice,
                            GainTable& gains, const ChannelParams& channel, double noise) {
  PhyLinkSchedule schedule;
  for (std::size_t ci = 0; ci < inst.cluster_ids.size(); ++ci) {
    const PotentialLink& link = inst.cands[ci][choice[ci]];
    ScheduledLink out;
    out.cluster_id = inst.cluster_ids[ci];
    out.tx = link.tx;
    out.rx = link.rx;
    out.signal = channel.tx_power * gains(link.tx, link.rx);
    out.sinr = sinr_of(inst, choice, ci, link, gains, channel, noise);
    out.interference = out.sinr > 0.0 ? std::max(0.0, out.signal / out.sinr - noise) : 0.0;
    out.rate = std::log2(1.0 + out.sinr);
    schedule.links.push_back(out);
    schedule.sum_rate += out.rate;
  }
  return schedule;
}

}  // namespace

PhyLinkSchedule schedule_links(const ClusterRealization& real, const ChannelParams& channel,
                               std::uint64_t shadow_seed) {
  channel.validate();
  GainTable gains(real, channel, shadow_seed);
  const double noise = channel.effective_noise(real.r);
  Instance inst = collect(real);
  if (inst.cluster_ids.empty()) return {};

  // round 0: per cluster, the candidate with the highest received power
  std::vector<int> choice(inst.cluster_ids.size(), 0);
  for (std::size_t ci = 0; ci < inst.cands.size(); ++ci) {
    double best = -1.0;
    for (std::size_t li = 0; li < inst.cands[ci].size(); ++li) {
      double power = channel.tx_power * gains(inst.cands[ci][li].tx, inst.cands[ci][li].rx);
      if (power > best) {
        best = power;
        choice[ci] = static_cast<int>(li);
      }
    }
  }

  std::vector<int> best_choice = choice;
  double best_rate = sum_rate_of(inst, choice, gains, channel, noise);
  int rounds = 0;
  bool converged = false;

  while (rounds < channel.max_iterations) {
    ++rounds;
    bool changed = false;
    for (std::size_t ci = 0; ci < inst.cluster_ids.size(); ++ci) {
      if (inst.cands[ci].size() < 2) continue;
      double current_sinr =
          sinr_of(inst, choice, ci, inst.cands[ci][choice[ci]], gains, channel, noise);
      int best_li = choice[ci];
      double best_sinr = current_sinr;
      for (std::size_t li = 0; li < inst.cands[ci].size(); ++li) {
        if (static_cast<int>(li) == choice[ci]) continue;
        double s = sinr_of(inst, choice, ci, inst.cands[ci][li], gains, channel, noise);
        if (s > best_sinr * (1.0 + channel.switch_rel_tol)) {
          best_sinr = s;
          best_li = static_cast<int>(li);
        }
      }
      if (best_li != choice[ci]) {
        assert(best_sinr >= current_sinr);
        choice[ci] = best_li;
        changed = true;
      }
    }
    double rate = sum_rate_of(inst, choice, gains, channel, noise);
    if (rate > best_rate) {
      best_rate = rate;
      best_choice = choice;
    }
    if (!changed) {
      converged = true;
      break;
    }
  }

  PhyLinkSchedule schedule =
      materialize(inst, converged ? choice : best_choice, gains, channel, noise);
  schedule.iterations = rounds;
  schedule.converged = converged;
  return schedule;
}

PhyLinkSchedule exhaustive_best_schedule(const ClusterRealization& real,
                                         const ChannelParams& channel,
                                         std::uint64_t shadow_seed) {
  channel.validate();
  GainTable gains(real, channel, shadow_seed);
  const double noise = channel.effective_noise(real.r);
  Instance inst = collect(real);
  if (inst.cluster_ids.empty()) return {};

  double combos = 1.0;
  for (const auto& c : inst.cands) combos *= static_cast<double>(c.size());
  if (combos > 2e6)
    throw std::invalid_argument("exhaustive schedule search: too many link combinations");

  std::vector<int> choice(inst.cluster_ids.size(), 0);
  std::vector<int> best_choice = choice;
  double best_rate = -1.0;
  for (;;) {
    double rate = sum_rate_of(inst, choice, gains, channel, noise);
    if (rate > best_rate) {
      best_rate = rate;
      best_choice = choice;
    }
    std::size_t pos = 0;
    while (pos < choice.size() &&
           choice[pos] + 1 == static_cast<int>(inst.cands[pos].size()))
      choice[pos++] = 0;
    if (pos == choice.size()) break;
    ++choice[pos];
  }
  PhyLinkSchedule schedule = materialize(inst, best_choice, gains, channel, noise);
  schedule.converged = true;
  return schedule;
}

RateSweep rate_vs_r_sweep(int n, const PopularityModel& pop_req, const ChannelParams& channel,
                          const std::vector<double>& r_grid, long trials, std::uint64_t seed,
                          int threads) {
  channel.validate();
  if (trials < 1) throw std::invalid_argument("phy.trials: must be >= 1");
  if (r_grid.empty()) throw std::invalid_argument("grid.r_values: empty");

  RateSweep sweep;
  sweep.points.resize(r_grid.size());

  struct Task {
    std::size_t point;
    long trial_lo, trial_hi;
  };
  constexpr long kChunk = 32;
  std::vector<Task> tasks;
  for (std::size_t gi = 0; gi < r_grid.size(); ++gi)
    for (long lo = 0; lo < trials; lo += kChunk)
      tasks.push_back({gi, lo, std::min(trials, lo + kChunk)});

  struct Accum {
    double rate = 0.0, rate_sq = 0.0, links = 0.0;
    long nonconverged = 0;
  };
  std::vector<Accum> acc(tasks.size());

  parallel_for(tasks.size(), static_cast<unsigned>(std::max(1, threads)), [&](std::size_t ti) {
    const Task& task = tasks[ti];
    CellConfig cfg{n, pop_req.size(), r_grid[task.point], pop_req.gamma()};
    Accum& a = acc[ti];
    for (long t = task.trial_lo; t < task.trial_hi; ++t) {
      // realizations share the trial stream across grid points (common
      // random numbers); shadowing gets its own stream
      Rng rng(derive_seed(seed, static_cast<std::uint64_t>(t)));
      auto real = sample_realization(cfg, pop_req, CachingMode::deterministic, nullptr, rng);
      std::uint64_t shadow_seed = derive_seed(seed ^ 0x5deece66dULL, static_cast<std::uint64_t>(t));
      auto schedule = schedule_links(real, channel, shadow_seed);
      a.rate += schedule.sum_rate;
      a.rate_sq += schedule.sum_rate * schedule.sum_rate;
      a.links += static_cast<double>(schedule.links.size());
      if (!schedule.converged) ++a.nonconverged;
    }
  });

  std::vector<Accum> per_point(r_grid.size());
  for (std::size_t ti = 0; ti < tasks.size(); ++ti) {
    Accum& p = per_point[tasks[ti].point];
    p.rate += acc[ti].rate;
    p.rate_sq += acc[ti].rate_sq;
    p.links += acc[ti].links;
    p.nonconverged += acc[ti].nonconverged;
  }

  std::size_t best = 0;
  for (std::size_t gi = 0; gi < r_grid.size(); ++gi) {
    RatePoint& pt = sweep.points[gi];
    pt.r = r_grid[gi];
    double inv = 1.0 / static_cast<double>(trials);
    pt.mean_rate = per_point[gi].rate * inv;
    double var = std::max(0.0, per_point[gi].rate_sq * inv - pt.mean_rate * pt.mean_rate);
    pt.se_rate = trials > 1 ? std::sqrt(var / static_cast<double>(trials - 1)) : 0.0;
    pt.mean_links = per_point[gi].links * inv;
    pt.nonconverged_frac = static_cast<double>(per_point[gi].nonconverged) * inv;
    if (pt.mean_rate > sweep.points[best].mean_rate) best = gi;
  }
  sweep.r_opt = sweep.points[best].r;
  sweep.rate_at_opt = sweep.points[best].mean_rate;
  return sweep;
}

}  // namespace d2d
