#include "agmlab/stats.hpp"

#include <boost/math/distributions/chi_squared.hpp>
#include <cmath>
#include <numeric>

#include "agmlab/errors.hpp"

namespace agmlab {

ChiSquared two_sample_chi2(std::span<const std::uint64_t> a, std::span<const std::uint64_t> b) {
  const std::size_t bins = std::max(a.size(), b.size());
  auto at = [](std::span<const std::uint64_t> h, std::size_t i) -> double {
    return i < h.size() ? static_cast<double>(h[i]) : 0.0;
  };
  const double na = std::accumulate(a.begin(), a.end(), 0.0);
  const double nb = std::accumulate(b.begin(), b.end(), 0.0);
  if (na == 0 || nb == 0) throw ConfigError("chi-squared: empty sample");
  const double ka = std::sqrt(nb / na);
  const double kb = std::sqrt(na / nb);
  ChiSquared out;
  std::size_t used = 0;
  for (std::size_t i = 0; i < bins; ++i) {
    const double x = at(a, i), y = at(b, i);
    if (x + y == 0) continue;
    ++used;
    const double d = ka * x - kb * y;
    out.statistic += d * d / (x + y);
  }
  if (used < 2) return out;  // identical single-bin histograms
  out.dof = used - 1;
  const boost::math::chi_squared dist(static_cast<double>(out.dof));
  out.p_value = boost::math::cdf(boost::math::complement(dist, out.statistic));
  return out;
}

bool within_binomial_band(std::uint64_t observed, std::uint64_t n, double p, double z) {
  const double mean = static_cast<double>(n) * p;
  const double sd = std::sqrt(static_cast<double>(n) * p * (1 - p));
  return std::abs(static_cast<double>(observed) - mean) <= z * sd;
}

}  // namespace agmlab
