#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

namespace hompool::stats {

//! Linear-interpolation quantile of an ascending sample (R's type 7).
inline double
sorted_quantile(std::span<const double> sorted, double prob)
{
  if (sorted.empty())
    throw std::invalid_argument("quantile of an empty sample");
  const double pos = prob * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

inline double
quantile(std::vector<double> sample, double prob)
{
  std::sort(sample.begin(), sample.end());
  return sorted_quantile(sample, prob);
}

inline double
mean(std::span<const double> sample)
{
  double sum = 0.0;
  for (double v : sample)
    sum += v;
  return sample.empty() ? 0.0 : sum / static_cast<double>(sample.size());
}

//! Unbiased sample variance.
inline double
variance(std::span<const double> sample)
{
  if (sample.size() < 2)
    return 0.0;
  const double m = mean(sample);
  double ss = 0.0;
  for (double v : sample)
    ss += (v - m) * (v - m);
  return ss / static_cast<double>(sample.size() - 1);
}

} // namespace hompool::stats
