#pragma once

#include <Eigen/Core>
#include <cstdint>

#include "d2d/rng.hpp"

namespace d2d {

// Truncated Zipf popularity over m ranked files: pmf[i] proportional to
// (i+1)^-gamma, rank 1 most popular. The same type models the request
// distribution (exponent gamma_r) and the random-caching placement
// distribution (exponent gamma_c).
class PopularityModel {
 public:
  // Throws std::invalid_argument for m < 1 or non-finite / negative gamma.
  PopularityModel(int m, double gamma);

  int size() const { return m_; }
  double gamma() const { return gamma_; }

  const Eigen::ArrayXd& pmf() const { return pmf_; }

  // Probability of the file with the given 1-based rank.
  double pmf_at(int rank) const { return pmf_[rank - 1]; }

  // Head mass: sum of the k most popular probabilities. Exactly 1 for
  // k >= m, 0 for k <= 0.
  double head_mass(long k) const {
    if (k <= 0) return 0.0;
    if (k >= m_) return 1.0;
    return cdf_[k - 1];
  }

  // Draws a 1-based rank; inverse-CDF with binary search so that equal
  // uniforms map to nearby ranks across nearby exponents (common random
  // numbers stay effective).
  int sample_rank(Rng& rng) const { return rank_from_uniform(rng.uniform()); }
  int rank_from_uniform(double u) const;

 private:
  int m_;
  double gamma_;
  Eigen::ArrayXd pmf_;
  Eigen::ArrayXd cdf_;
};

}  // namespace d2d
