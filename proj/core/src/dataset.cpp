#include "hompool/dataset.hpp"

#include "hompool/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace hompool {

RawDataset
RawDataset::univariate(std::vector<double> x,
                       std::optional<std::vector<std::uint8_t>> y)
{
  RawDataset raw;
  raw.dim = 1;
  raw.covariates = std::move(x);
  raw.responses = std::move(y);
  raw.validate();
  return raw;
}

void
RawDataset::validate() const
{
  if (dim == 0)
    throw InvalidArgument("dataset dimension must be at least 1");
  if (covariates.size() % dim != 0)
    throw InvalidArgument("covariate array is not a multiple of the dimension");
  for (std::size_t i = 0; i < covariates.size(); ++i) {
    if (!std::isfinite(covariates[i]))
      throw InvalidArgument("non-finite covariate for individual " +
                            std::to_string(i / dim));
  }
  if (responses) {
    if (responses->size() != size())
      throw InvalidArgument("responses are not aligned with covariates");
    for (std::size_t i = 0; i < responses->size(); ++i) {
      if ((*responses)[i] > 1)
        throw InvalidArgument("response of individual " + std::to_string(i) +
                              " is not 0 or 1");
    }
  }
}

const char*
to_string(PoolingStrategy strategy) noexcept
{
  switch (strategy) {
    case PoolingStrategy::homogeneous_sorted:
      return "homogeneous_sorted";
    case PoolingStrategy::random:
      return "random";
    case PoolingStrategy::binned:
      return "binned";
    case PoolingStrategy::generic:
      return "generic";
  }
  return "unknown";
}

std::optional<std::size_t>
BinGeometry::axis_index(double coordinate) const
{
  if (!(coordinate >= 0.0 && coordinate <= 1.0))
    return std::nullopt;
  if (coordinate == 0.0)
    return 0;
  const double scaled = coordinate * static_cast<double>(bins_per_axis);
  const auto k = static_cast<std::size_t>(std::ceil(scaled)) - 1;
  return std::min(k, bins_per_axis - 1);
}

std::optional<std::size_t>
BinGeometry::bin_of(std::span<const double> point) const
{
  if (point.size() != dim)
    throw InvalidArgument("point dimension does not match the bin geometry");
  std::size_t linear = 0;
  for (double c : point) {
    const auto k = axis_index(c);
    if (!k)
      return std::nullopt;
    linear = linear * bins_per_axis + *k;
  }
  return linear;
}

std::vector<double>
BinGeometry::center(std::size_t linear) const
{
  std::vector<double> c(dim);
  for (std::size_t a = dim; a-- > 0;) {
    const std::size_t k = linear % bins_per_axis;
    linear /= bins_per_axis;
    c[a] = 0.5 * static_cast<double>(2 * k + 1) /
           static_cast<double>(bins_per_axis);
  }
  return c;
}

std::optional<std::size_t>
PooledDataset::common_size() const
{
  if (groups.empty())
    return std::nullopt;
  const std::size_t n = groups.front().size;
  for (const Group& g : groups) {
    if (g.size != n)
      return std::nullopt;
  }
  return n;
}

std::size_t
PooledDataset::individuals() const
{
  std::size_t n = 0;
  for (const Group& g : groups)
    n += g.size;
  return n;
}

bool
PooledDataset::has_results() const
{
  return std::all_of(groups.begin(), groups.end(), [](const Group& g) {
    return g.pooled_positive.has_value();
  });
}

bool
PooledDataset::contiguous() const
{
  if (dim != 1)
    return false;
  struct Span
  {
    double center, lo, hi;
  };
  std::vector<Span> spans;
  spans.reserve(groups.size());
  for (const Group& g : groups) {
    if (g.member_covariates.empty())
      return false;
    const auto [lo, hi] = std::minmax_element(g.member_covariates.begin(),
                                              g.member_covariates.end());
    spans.push_back({ g.center.at(0), *lo, *hi });
  }
  std::sort(spans.begin(), spans.end(), [](const Span& a, const Span& b) {
    return a.center < b.center;
  });
  for (std::size_t j = 1; j < spans.size(); ++j) {
    if (spans[j - 1].hi > spans[j].lo)
      return false;
  }
  return true;
}

} // namespace hompool
