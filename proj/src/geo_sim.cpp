#include "d2d/geo_sim.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "d2d/parallel.hpp"

namespace d2d {

const char* caching_mode_name(CachingMode mode) {
  switch (mode) {
    case CachingMode::deterministic: return "deterministic";
    case CachingMode::random_zipf: return "random";
    case CachingMode::most_popular: return "most_popular";
  }
  return "unknown";
}

ClusterRealization sample_realization(const CellConfig& cfg, const PopularityModel& pop_req,
                                      CachingMode mode, const PopularityModel* pop_cache,
                                      Rng& rng) {
  cfg.validate();
  if (pop_req.size() != cfg.m)
    throw std::invalid_argument("cell.m: popularity model has different library size");
  if (mode == CachingMode::random_zipf && pop_cache == nullptr)
    throw std::invalid_argument("geo.caching: random mode needs a caching distribution");

  ClusterRealization real;
  real.side = kMaxCollabDistance;
  real.r = cfg.r;
  real.clusters_per_side = static_cast<int>(std::floor(real.side / cfg.r + 1e-9));
  if (real.clusters_per_side < 1)
    throw std::invalid_argument("cell.r: exceeds the cell side");

  const int n = cfg.n;
  real.positions.resize(n, 2);
  real.cluster_of.resize(n);
  real.cache.assign(n, 0);
  real.request.resize(n);

  const int c = real.clusters_per_side;
  for (int i = 0; i < n; ++i) {
    double x = rng.uniform() * real.side;
    double y = rng.uniform() * real.side;
    real.positions(i, 0) = x;
    real.positions(i, 1) = y;
    int cx = static_cast<int>(x / cfg.r);
    int cy = static_cast<int>(y / cfg.r);
    real.cluster_of[i] = (cx < c && cy < c) ? cy * c + cx : -1;
  }

  // deterministic placement exists only inside a cluster, so strip users
  // stay cache-less there; the distributed rules cache independently of
  // position and strip users can still self-serve
  switch (mode) {
    case CachingMode::deterministic: {
      // occupants of each cluster store ranks 1..k in user-index order,
      // wrapping past the library size
      std::vector<int> fill(static_cast<std::size_t>(c) * c, 0);
      for (int i = 0; i < n; ++i) {
        int cl = real.cluster_of[i];
        if (cl < 0) continue;
        real.cache[i] = fill[cl] % cfg.m + 1;
        ++fill[cl];
      }
      break;
    }
    case CachingMode::random_zipf:
      for (int i = 0; i < n; ++i) real.cache[i] = pop_cache->sample_rank(rng);
      break;
    case CachingMode::most_popular:
      for (int i = 0; i < n; ++i) real.cache[i] = 1;
      break;
  }

  for (int i = 0; i < n; ++i) real.request[i] = pop_req.sample_rank(rng);
  return real;
}

TrialOutcome evaluate_trial(const ClusterRealization& real) {
  const int n = static_cast<int>(real.cluster_of.size());
  const int clusters = real.cluster_count();

  // bucket users by cluster
  std::vector<int> count(clusters, 0);
  for (int i = 0; i < n; ++i)
    if (real.cluster_of[i] >= 0) ++count[real.cluster_of[i]];
  std::vector<int> start(clusters + 1, 0);
  for (int cl = 0; cl < clusters; ++cl) start[cl + 1] = start[cl] + count[cl];
  std::vector<int> members(start[clusters]);
  std::vector<int> cursor(start.begin(), start.end() - 1);
  for (int i = 0; i < n; ++i)
    if (real.cluster_of[i] >= 0) members[cursor[real.cluster_of[i]]++] = i;

  TrialOutcome outcome;
  for (int i = 0; i < n; ++i)
    if (real.cache[i] > 0 && real.request[i] == real.cache[i]) ++outcome.self_requests;

  std::vector<int> cachers;  // per-file cacher count, reset per cluster
  std::vector<int> touched;
  int max_rank = 0;
  for (int i = 0; i < n; ++i) max_rank = std::max(max_rank, std::max(real.cache[i], real.request[i]));
  cachers.assign(max_rank + 1, 0);

  for (int cl = 0; cl < clusters; ++cl) {
    bool active = false;
    for (int s = start[cl]; s < start[cl + 1]; ++s) {
      int file = real.cache[members[s]];
      if (cachers[file]++ == 0) touched.push_back(file);
    }
    for (int s = start[cl]; s < start[cl + 1]; ++s) {
      int user = members[s];
      if (real.request[user] == real.cache[user]) continue;  // self-served
      int links = cachers[real.request[user]];
      if (links > 0) {
        outcome.potential_links += links;
        active = true;
      }
    }
    if (active) ++outcome.active_clusters;
    for (int f : touched) cachers[f] = 0;
    touched.clear();
  }
  return outcome;
}

GeoSummary run_trials(const CellConfig& cfg, const PopularityModel& pop_req, CachingMode mode,
                      const PopularityModel* pop_cache, long trials, std::uint64_t seed,
                      int threads) {
  if (trials < 1) throw std::invalid_argument("geo.trials: must be >= 1");

  constexpr long kChunk = 512;  // fixed chunking keeps results thread-count independent
  const long chunks = (trials + kChunk - 1) / kChunk;
  struct Accum {
    double active = 0.0, active_sq = 0.0;
    double self = 0.0, self_sq = 0.0;
    double links = 0.0;
  };
  std::vector<Accum> acc(chunks);

  parallel_for(static_cast<std::size_t>(chunks), static_cast<unsigned>(std::max(1, threads)),
               [&](std::size_t chunk) {
                 Accum& a = acc[chunk];
                 long lo = static_cast<long>(chunk) * kChunk;
                 long hi = std::min(trials, lo + kChunk);
                 for (long t = lo; t < hi; ++t) {
                   Rng rng(derive_seed(seed, static_cast<std::uint64_t>(t)));
                   auto real = sample_realization(cfg, pop_req, mode, pop_cache, rng);
                   auto outcome = evaluate_trial(real);
                   a.active += outcome.active_clusters;
                   a.active_sq += static_cast<double>(outcome.active_clusters) *
                                  outcome.active_clusters;
                   a.self += outcome.self_requests;
                   a.self_sq += static_cast<double>(outcome.self_requests) *
                                outcome.self_requests;
                   a.links += outcome.potential_links;
                 }
               });

  Accum total;
  for (const Accum& a : acc) {
    total.active += a.active;
    total.active_sq += a.active_sq;
    total.self += a.self;
    total.self_sq += a.self_sq;
    total.links += a.links;
  }

  GeoSummary summary;
  summary.trials = trials;
  summary.clusters_per_side =
      static_cast<int>(std::floor(kMaxCollabDistance / cfg.r + 1e-9));
  const double inv = 1.0 / static_cast<double>(trials);
  summary.mean_active = total.active * inv;
  summary.mean_self = total.self * inv;
  summary.mean_potential_links = total.links * inv;
  auto se = [&](double sum, double sumsq, double mean) {
    if (trials < 2) return 0.0;
    double var = std::max(0.0, sumsq * inv - mean * mean);
    return std::sqrt(var / static_cast<double>(trials - 1));
  };
  summary.se_active = se(total.active, total.active_sq, summary.mean_active);
  summary.se_self = se(total.self, total.self_sq, summary.mean_self);
  return summary;
}

}  // namespace d2d
