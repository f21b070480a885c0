#include "d2d/popularity.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace d2d {

namespace {

// Neumaier-compensated sum; m can reach 1e6 and the normalization must hold
// to 1e-12, which plain summation does not guarantee.
double compensated_sum(const Eigen::ArrayXd& v) {
  double sum = 0.0, comp = 0.0;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    double t = sum + v[i];
    if (std::abs(sum) >= std::abs(v[i]))
      comp += (sum - t) + v[i];
    else
      comp += (v[i] - t) + sum;
    sum = t;
  }
  return sum + comp;
}

}  // namespace

PopularityModel::PopularityModel(int m, double gamma) : m_(m), gamma_(gamma) {
  if (m < 1) throw std::invalid_argument("popularity: library size m must be >= 1");
  if (!std::isfinite(gamma) || gamma < 0.0)
    throw std::invalid_argument("popularity: zipf exponent must be finite and >= 0");

  pmf_ = Eigen::ArrayXd::LinSpaced(m, 1.0, static_cast<double>(m)).pow(-gamma);
  pmf_ /= compensated_sum(pmf_);

  cdf_.resize(m);
  double sum = 0.0, comp = 0.0;
  for (int i = 0; i < m; ++i) {
    double t = sum + pmf_[i];
    if (std::abs(sum) >= std::abs(pmf_[i]))
      comp += (sum - t) + pmf_[i];
    else
      comp += (pmf_[i] - t) + sum;
    sum = t;
    cdf_[i] = sum + comp;
  }
  cdf_[m - 1] = 1.0;  // closes the sampling table against rounding
}

int PopularityModel::rank_from_uniform(double u) const {
  const double* first = cdf_.data();
  const double* last = first + m_;
  const double* it = std::upper_bound(first, last, u);
  return static_cast<int>(std::min<long>(it - first, m_ - 1)) + 1;
}

}  // namespace d2d
