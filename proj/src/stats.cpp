#include "objcomp/stats.hpp"

#include "objcomp/rng.hpp"
#include "objcomp/types.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

namespace objcomp {

namespace {

/// Doubled midranks of the pooled sample, a first then b.
std::vector<long> doubled_midranks(std::span<const double> a, std::span<const double> b) {
  std::vector<double> pooled(a.begin(), a.end());
  pooled.insert(pooled.end(), b.begin(), b.end());
  const std::size_t n = pooled.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return pooled[x] < pooled[y]; });
  std::vector<long> ranks(n);
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j + 1 < n && pooled[order[j + 1]] == pooled[order[i]]) ++j;
    // ranks i+1..j+1 share their mean; doubled: (i+1)+(j+1)
    const long r2 = static_cast<long>(i + j + 2);
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = r2;
    i = j + 1;
  }
  return ranks;
}

}  // namespace

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

double mann_whitney_statistic(std::span<const double> a, std::span<const double> b) {
  double u = 0.0;
  for (double x : a)
    for (double y : b) u += x > y ? 1.0 : (x == y ? 0.5 : 0.0);
  return u;
}

double mann_whitney_u(std::span<const double> a, std::span<const double> b) {
  if (a.size() < 3 || b.size() < 3) throw Error("mann_whitney_u: both samples need at least 3 values");
  const std::size_t n = a.size(), m = b.size(), total = n + m;
  const double first = a[0];
  const bool all_equal = std::all_of(a.begin(), a.end(), [&](double x) { return x == first; }) &&
                         std::all_of(b.begin(), b.end(), [&](double x) { return x == first; });
  if (all_equal) return 1.0;

  const auto ranks = doubled_midranks(a, b);
  long observed = 0;
  for (std::size_t i = 0; i < n; ++i) observed += ranks[i];

  if (n * m <= 400) {
    // count size-n subsets of the pooled ranks by doubled rank sum
    const long max_sum = std::accumulate(ranks.begin(), ranks.end(), 0L);
    std::vector<std::vector<double>> dp(n + 1, std::vector<double>(static_cast<std::size_t>(max_sum) + 1, 0.0));
    dp[0][0] = 1.0;
    for (std::size_t item = 0; item < total; ++item) {
      const long r = ranks[item];
      for (std::size_t k = std::min(n, item + 1); k >= 1; --k) {
        auto& to = dp[k];
        const auto& from = dp[k - 1];
        for (long s = max_sum; s >= r; --s) to[static_cast<std::size_t>(s)] += from[static_cast<std::size_t>(s - r)];
      }
    }
    double hits = 0.0, all = 0.0;
    for (long s = 0; s <= max_sum; ++s) {
      const double c = dp[n][static_cast<std::size_t>(s)];
      all += c;
      if (s >= observed) hits += c;
    }
    return std::clamp(hits / all, 0.0, 1.0);
  }

  // normal approximation with tie correction and continuity correction
  const double nn = static_cast<double>(n), mm = static_cast<double>(m), N = static_cast<double>(total);
  const double u = static_cast<double>(observed) / 2.0 - nn * (nn + 1.0) / 2.0;
  std::vector<long> sorted = ranks;
  std::sort(sorted.begin(), sorted.end());
  double tie_term = 0.0;
  for (std::size_t i = 0; i < sorted.size();) {
    std::size_t j = i;
    while (j < sorted.size() && sorted[j] == sorted[i]) ++j;
    const double t = static_cast<double>(j - i);
    tie_term += t * t * t - t;
    i = j;
  }
  const double var = nn * mm / 12.0 * ((N + 1.0) - tie_term / (N * (N - 1.0)));
  if (var <= 0.0) return 1.0;
  const double z = (u - nn * mm / 2.0 - 0.5) / std::sqrt(var);
  return std::clamp(1.0 - normal_cdf(z), std::numeric_limits<double>::min(), 1.0);
}

ConfidenceInterval bootstrap_ci(std::span<const double> values, std::uint64_t seed, int resamples, double level) {
  ConfidenceInterval ci;
  if (values.empty()) return ci;
  const std::size_t n = values.size();
  ci.mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(n);
  Rng rng(seed);
  std::vector<double> means(static_cast<std::size_t>(resamples));
  for (auto& mu : means) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += values[rng.index(n)];
    mu = s / static_cast<double>(n);
  }
  std::sort(means.begin(), means.end());
  const double alpha = (1.0 - level) / 2.0;
  auto at = [&](double q) {
    const auto k = static_cast<std::size_t>(std::clamp(q * static_cast<double>(resamples - 1), 0.0,
                                                       static_cast<double>(resamples - 1)));
    return means[k];
  };
  ci.lo = std::min(at(alpha), ci.mean);
  ci.hi = std::max(at(1.0 - alpha), ci.mean);
  return ci;
}

}  // namespace objcomp
