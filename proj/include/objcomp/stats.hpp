#pragma once

#include <cstdint>
#include <span>
#include <utility>

namespace objcomp {

/// One-sided Mann-Whitney U test of "a tends to exceed b". Exact (midrank enumeration) when
/// |a|*|b| <= 400, normal approximation with tie correction otherwise. Identical pooled values give 1.
double mann_whitney_u(std::span<const double> a, std::span<const double> b);

/// U statistic of a over b: pairs with a_i > b_j plus half the ties.
double mann_whitney_statistic(std::span<const double> a, std::span<const double> b);

struct ConfidenceInterval {
  double mean = 0.0;
  double lo = 0.0;
  double hi = 0.0;
};

/// Percentile bootstrap interval of the mean; always contains the sample mean.
ConfidenceInterval bootstrap_ci(std::span<const double> values, std::uint64_t seed, int resamples = 10000,
                                double level = 0.95);

/// Standard normal CDF.
double normal_cdf(double z);

}  // namespace objcomp
