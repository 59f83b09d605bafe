#pragma once

#include <cstdint>
#include <span>

namespace agmlab {

struct ChiSquared {
  double statistic = 0;
  std::size_t dof = 0;
  double p_value = 1;
};

/// Two-sample chi-squared homogeneity test on histograms over the same bins.
/// Bins empty in both samples are dropped.
ChiSquared two_sample_chi2(std::span<const std::uint64_t> a, std::span<const std::uint64_t> b);

// Two-sided normal band check: |observed - n p| <= z sqrt(n p (1 - p)).
bool within_binomial_band(std::uint64_t observed, std::uint64_t n, double p, double z = 3.0);

}  // namespace agmlab
