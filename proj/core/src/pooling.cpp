#include "hompool/pooling.hpp"

#include "hompool/error.hpp"
#include "hompool/random.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace hompool {

namespace {

void
require_univariate(const RawDataset& raw, const char* what)
{
  raw.validate();
  if (raw.dim != 1)
    throw PoolingError(std::string(what) +
                       " pools univariate data only; use pool_binned for "
                       "d > 1");
}

void
require_divides(std::size_t n, int nu, const char* what)
{
  if (nu < 1)
    throw PoolingError("group size nu must be at least 1");
  if (n == 0)
    throw PoolingError("cannot pool an empty dataset");
  if (n % static_cast<std::size_t>(nu) != 0) {
    std::ostringstream msg;
    msg << what << " needs nu to divide N (N=" << n << ", nu=" << nu
        << "); unequal groups are handled by pool_binned";
    throw PoolingError(msg.str());
  }
}

Group
make_group(const RawDataset& raw, std::span<const std::size_t> members,
           std::size_t index)
{
  Group g;
  g.id = std::to_string(index);
  g.size = members.size();
  g.center.assign(raw.dim, 0.0);
  g.member_covariates.reserve(members.size() * raw.dim);
  std::uint8_t positive = 0;
  for (std::size_t i : members) {
    const auto p = raw.point(i);
    g.member_covariates.insert(g.member_covariates.end(), p.begin(), p.end());
    for (std::size_t c = 0; c < raw.dim; ++c)
      g.center[c] += p[c];
    if (raw.responses)
      positive = std::max(positive, (*raw.responses)[i]);
  }
  for (double& c : g.center)
    c /= static_cast<double>(members.size());
  if (raw.responses)
    g.pooled_positive = positive;
  return g;
}

PooledDataset
chunk(const RawDataset& raw, const std::vector<std::size_t>& order, int nu,
      PoolingStrategy strategy)
{
  PooledDataset out;
  out.strategy = strategy;
  out.nu = nu;
  out.dim = 1;
  const auto size = static_cast<std::size_t>(nu);
  const std::size_t groups = order.size() / size;
  out.groups.reserve(groups);
  for (std::size_t j = 0; j < groups; ++j) {
    out.groups.push_back(
      make_group(raw, std::span(order).subspan(j * size, size), j));
  }
  return out;
}

} // namespace

PooledDataset
pool_homogeneous(const RawDataset& raw, int nu)
{
  require_univariate(raw, "pool_homogeneous");
  require_divides(raw.size(), nu, "homogeneous pooling");
  std::vector<std::size_t> order(raw.size());
  std::iota(order.begin(), order.end(), std::size_t{ 0 });
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return raw.x(a) < raw.x(b);
  });
  return chunk(raw, order, nu, PoolingStrategy::homogeneous_sorted);
}

PooledDataset
pool_random(const RawDataset& raw, int nu, std::uint64_t seed)
{
  require_univariate(raw, "pool_random");
  require_divides(raw.size(), nu, "random pooling");
  std::vector<std::size_t> order(raw.size());
  std::iota(order.begin(), order.end(), std::size_t{ 0 });
  Rng rng(seed);
  for (std::size_t i = order.size(); i > 1; --i) {
    const auto j = static_cast<std::size_t>(uniform_index(rng, i));
    std::swap(order[i - 1], order[j]);
  }
  return chunk(raw, order, nu, PoolingStrategy::random);
}

PooledDataset
pool_binned(const RawDataset& raw, double nu)
{
  raw.validate();
  const std::size_t n = raw.size();
  if (n == 0)
    throw PoolingError("cannot pool an empty dataset");
  if (!(nu > 0.0) || !std::isfinite(nu))
    throw PoolingError("nominal bin occupancy nu must be positive");
  const double d = static_cast<double>(raw.dim);
  const double exact = std::pow(static_cast<double>(n) / nu, 1.0 / d);
  const double rounded = std::round(exact);
  if (rounded < 1.0 || std::abs(exact - rounded) > 1e-9 * std::max(1.0, exact)) {
    std::ostringstream msg;
    msg.precision(10);
    msg << "binned pooling needs J=(N/nu)^(1/d) to be an integer; N=" << n
        << ", nu=" << nu << ", d=" << raw.dim << " gives J=" << exact
        << ". Nearest valid nu:";
    for (double j : { std::floor(exact), std::ceil(exact) }) {
      if (j >= 1.0)
        msg << ' ' << static_cast<double>(n) / std::pow(j, d) << " (J=" << j
            << ')';
    }
    throw PoolingError(msg.str());
  }

  BinGeometry geometry;
  geometry.dim = raw.dim;
  geometry.bins_per_axis = static_cast<std::size_t>(rounded);
  geometry.width = 1.0 / rounded;
  std::size_t total = 1;
  for (std::size_t a = 0; a < raw.dim; ++a)
    total *= geometry.bins_per_axis;
  geometry.counts.assign(total, 0);

  std::vector<std::vector<std::size_t>> members(total);
  for (std::size_t i = 0; i < n; ++i) {
    const auto bin = geometry.bin_of(raw.point(i));
    if (!bin) {
      ++geometry.outside;
      continue;
    }
    ++geometry.counts[*bin];
    members[*bin].push_back(i);
  }

  PooledDataset out;
  out.strategy = PoolingStrategy::binned;
  out.nu = nu;
  out.dim = raw.dim;
  for (std::size_t b = 0; b < total; ++b) {
    if (members[b].empty())
      continue;
    Group g = make_group(raw, members[b], b);
    g.center = geometry.center(b);
    g.bin = b;
    out.groups.push_back(std::move(g));
  }
  out.bins = std::move(geometry);
  return out;
}

double
pooled_negative_probability(std::span<const double> p)
{
  double product = 1.0;
  for (double v : p) {
    if (!(v >= 0.0 && v < 1.0))
      throw InvalidArgument("member prevalences must lie in [0, 1)");
    product *= 1.0 - v;
  }
  return product;
}

} // namespace hompool
