#include "hompool/estimators.hpp"

#include "hompool/bandwidth.hpp"
#include "hompool/error.hpp"
#include "hompool/local_poly.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace hompool {

const char*
to_string(EstimatorKind kind) noexcept
{
  switch (kind) {
    case EstimatorKind::DH:
      return "DH";
    case EstimatorKind::DM:
      return "DM";
    case EstimatorKind::LL:
      return "LL";
    case EstimatorKind::DH_binned:
      return "DH_binned";
  }
  return "unknown";
}

EstimatorKind
parse_estimator(const std::string& text)
{
  if (text == "DH" || text == "dh")
    return EstimatorKind::DH;
  if (text == "DM" || text == "dm")
    return EstimatorKind::DM;
  if (text == "LL" || text == "ll")
    return EstimatorKind::LL;
  if (text == "DH_binned" || text == "dh_binned" || text == "binned")
    return EstimatorKind::DH_binned;
  throw InvalidArgument("unknown estimator '" + text +
                        "' (expected DH, DM, LL or DH_binned)");
}

const char*
to_string(ClampFlag flag) noexcept
{
  switch (flag) {
    case ClampFlag::none:
      return "none";
    case ClampFlag::clamped_low:
      return "clamped_low";
    case ClampFlag::clamped_high:
      return "clamped_high";
  }
  return "unknown";
}

const char*
to_string(PointStatus status) noexcept
{
  switch (status) {
    case PointStatus::ok:
      return "ok";
    case PointStatus::fit_failed:
      return "fit_failed";
    case PointStatus::near_singular:
      return "near_singular";
    case PointStatus::empty_bin:
      return "empty_bin";
  }
  return "unknown";
}

std::size_t
EstimateResult::failed_count() const noexcept
{
  return static_cast<std::size_t>(
    std::count_if(p_hat.begin(), p_hat.end(), [](const auto& v) { return !v; }));
}

std::size_t
EstimateResult::clamped_count() const noexcept
{
  return static_cast<std::size_t>(std::count_if(
    clamp.begin(), clamp.end(), [](ClampFlag f) { return f != ClampFlag::none; }));
}

std::vector<double>
linspace(double a, double b, std::size_t points)
{
  std::vector<double> out(points);
  if (points == 1) {
    out[0] = a;
    return out;
  }
  for (std::size_t i = 0; i < points; ++i)
    out[i] = a + (b - a) * static_cast<double>(i) / static_cast<double>(points - 1);
  if (points > 1)
    out.back() = b;
  return out;
}

std::vector<double>
unit_cube_grid(std::size_t dim, std::size_t per_axis)
{
  const std::vector<double> axis = linspace(0.0, 1.0, per_axis);
  std::size_t total = 1;
  for (std::size_t a = 0; a < dim; ++a)
    total *= per_axis;
  std::vector<double> out;
  out.reserve(total * dim);
  for (std::size_t i = 0; i < total; ++i) {
    std::size_t rest = i;
    std::vector<double> point(dim);
    for (std::size_t a = dim; a-- > 0;) {
      point[a] = axis[rest % per_axis];
      rest /= per_axis;
    }
    out.insert(out.end(), point.begin(), point.end());
  }
  return out;
}

namespace {

constexpr int max_widenings = 3;

struct PointFit
{
  std::optional<double> value;
  PointStatus status = PointStatus::fit_failed;
  std::size_t local_count = 0;
};

PointStatus
point_status(FitStatus s)
{
  switch (s) {
    case FitStatus::ok:
      return PointStatus::ok;
    case FitStatus::near_singular:
      return PointStatus::near_singular;
    case FitStatus::failed:
      break;
  }
  return PointStatus::fit_failed;
}

template<typename FitFn>
PointFit
fit_with_widening(FitFn&& fit, double h, bool widen)
{
  for (int attempt = 0;; ++attempt) {
    const LocalFit f = fit(h);
    if (f.ok() || !widen || attempt == max_widenings)
      return { f.value, point_status(f.status), f.local_count };
    h *= 2.0;
  }
}

void
reserve_result(EstimateResult& r, std::size_t n)
{
  r.p_hat.reserve(n);
  r.mu_hat.reserve(n);
  r.clamp.reserve(n);
  r.status.reserve(n);
  r.local_count.reserve(n);
  r.exponent.reserve(n);
}

void
push_failed(EstimateResult& r, const PointFit& f, double exponent)
{
  r.p_hat.emplace_back();
  r.mu_hat.emplace_back();
  r.clamp.push_back(ClampFlag::none);
  r.status.push_back(f.status);
  r.local_count.push_back(f.local_count);
  r.exponent.push_back(exponent);
}

// Clamps a smoother value into [0, 1] and reports which side was hit.
std::pair<double, ClampFlag>
clamp_unit(double v)
{
  if (v < 0.0)
    return { 0.0, ClampFlag::clamped_low };
  if (v > 1.0)
    return { 1.0, ClampFlag::clamped_high };
  return { v, ClampFlag::none };
}

void
push_root(EstimateResult& r, const PointFit& f, double exponent)
{
  const auto [mu, flag] = clamp_unit(*f.value);
  r.p_hat.push_back(1.0 - std::pow(mu, 1.0 / exponent));
  r.mu_hat.push_back(f.value);
  r.clamp.push_back(flag);
  r.status.push_back(PointStatus::ok);
  r.local_count.push_back(f.local_count);
  r.exponent.push_back(exponent);
}

void
require_results(const PooledDataset& pooled, const char* who)
{
  if (pooled.groups.empty())
    throw InvalidArgument(std::string(who) + ": pooled dataset has no groups");
  if (!pooled.has_results())
    throw EstimatorError(std::string(who) +
                         ": every group needs a pooled test result");
}

} // namespace

EstimateResult
estimate_dh(const PooledDataset& pooled, const SmootherSpec& spec,
            std::span<const double> grid)
{
  spec.validate();
  require_results(pooled, "estimate_dh");
  if (pooled.dim != 1)
    throw EstimatorError("estimate_dh is univariate; use estimate_dh_binned "
                         "for d > 1");
  const auto nu = pooled.common_size();
  if (!nu)
    throw EstimatorError("estimate_dh needs equal group sizes (nu must be "
                         "constant); use estimate_dh_binned for unequal "
                         "groups");
  if (pooled.strategy != PoolingStrategy::homogeneous_sorted)
    throw EstimatorError(std::string("estimate_dh needs homogeneous (sorted, "
                                     "contiguous) pools, got ") +
                         to_string(pooled.strategy) +
                         "; use estimate_dm for random pools");

  std::vector<double> u;
  std::vector<double> z;
  u.reserve(pooled.groups.size());
  z.reserve(pooled.groups.size());
  for (const Group& g : pooled.groups) {
    u.push_back(g.center[0]);
    z.push_back(*g.pooled_negative());
  }
  const auto [lo, hi] = std::minmax_element(u.begin(), u.end());
  for (double x : grid) {
    if (x < *lo || x > *hi) {
      std::ostringstream msg;
      msg << "grid point " << x << " lies outside the range of group means ["
          << *lo << ", " << *hi << "]";
      throw InvalidArgument(msg.str());
    }
  }

  const double exponent = static_cast<double>(*nu);
  EstimateResult r;
  r.estimator = EstimatorKind::DH;
  r.nu = exponent;
  r.grid.assign(grid.begin(), grid.end());
  r.bandwidth = select_bandwidth(
    u, z, spec,
    PluginTarget::homogeneous_pools(static_cast<int>(*nu), pooled.individuals()));

  const LocalPolynomial smoother(u, z, spec.kernel, spec.degree);
  reserve_result(r, grid.size());
  for (double x : grid) {
    const PointFit f = fit_with_widening(
      [&](double h) { return smoother.fit(h, x); }, r.bandwidth,
      spec.widen_on_failure);
    if (f.value)
      push_root(r, f, exponent);
    else
      push_failed(r, f, exponent);
  }
  return r;
}

EstimateResult
estimate_ll(const RawDataset& raw, const SmootherSpec& spec,
            std::span<const double> grid)
{
  spec.validate();
  raw.validate();
  if (!raw.responses)
    throw EstimatorError("estimate_ll needs individual responses Y");
  if (raw.dim != 1)
    throw EstimatorError("estimate_ll is univariate");

  std::vector<double> z(raw.responses->begin(), raw.responses->end());
  EstimateResult r;
  r.estimator = EstimatorKind::LL;
  r.nu = 1.0;
  r.grid.assign(grid.begin(), grid.end());
  r.bandwidth = select_bandwidth(raw.covariates, z, spec, PluginTarget{});

  const LocalPolynomial smoother(raw.covariates, z, spec.kernel, spec.degree);
  reserve_result(r, grid.size());
  for (double x : grid) {
    const PointFit f = fit_with_widening(
      [&](double h) { return smoother.fit(h, x); }, r.bandwidth,
      spec.widen_on_failure);
    if (!f.value) {
      push_failed(r, f, 1.0);
      continue;
    }
    const auto [p, flag] = clamp_unit(*f.value);
    r.p_hat.push_back(p);
    r.mu_hat.push_back(f.value);
    r.clamp.push_back(flag);
    r.status.push_back(PointStatus::ok);
    r.local_count.push_back(f.local_count);
    r.exponent.push_back(1.0);
  }
  return r;
}

EstimateResult
estimate_dm(const PooledDataset& pooled, const SmootherSpec& spec,
            std::span<const double> grid)
{
  spec.validate();
  require_results(pooled, "estimate_dm");
  if (pooled.dim != 1)
    throw EstimatorError("estimate_dm is univariate");
  if (pooled.strategy == PoolingStrategy::homogeneous_sorted ||
      pooled.strategy == PoolingStrategy::binned)
    throw EstimatorError("estimate_dm is only valid for randomly formed "
                         "pools");
  const auto nu = pooled.common_size();
  if (!nu)
    throw EstimatorError("estimate_dm needs equal group sizes");

  std::vector<double> u;
  std::vector<double> z;
  double negatives = 0.0;
  for (const Group& g : pooled.groups) {
    negatives += *g.pooled_negative();
    for (double x : g.member_covariates) {
      u.push_back(x);
      z.push_back(*g.pooled_positive);
    }
  }
  const double nu_d = static_cast<double>(*nu);
  const double q_hat =
    std::pow(negatives / static_cast<double>(pooled.groups.size()), 1.0 / nu_d);
  if (!(q_hat > 0.0))
    throw EstimatorError("every pool tested positive, so E{1-p(X)} is "
                         "estimated as 0 and the random-pool estimator is "
                         "undefined; use a smaller nu");
  const double scale = std::pow(q_hat, nu_d - 1.0);

  EstimateResult r;
  r.estimator = EstimatorKind::DM;
  r.nu = nu_d;
  r.q_hat = q_hat;
  r.grid.assign(grid.begin(), grid.end());
  r.bandwidth = select_bandwidth(
    u, z, spec,
    PluginTarget::random(static_cast<int>(*nu), q_hat, pooled.individuals()));

  const LocalPolynomial smoother(u, z, spec.kernel, spec.degree);
  reserve_result(r, grid.size());
  for (double x : grid) {
    const PointFit f = fit_with_widening(
      [&](double h) { return smoother.fit(h, x); }, r.bandwidth,
      spec.widen_on_failure);
    if (!f.value) {
      push_failed(r, f, 1.0);
      continue;
    }
    const auto [p, flag] = clamp_unit(1.0 - (1.0 - *f.value) / scale);
    r.p_hat.push_back(p);
    r.mu_hat.push_back(f.value);
    r.clamp.push_back(flag);
    r.status.push_back(PointStatus::ok);
    r.local_count.push_back(f.local_count);
    r.exponent.push_back(1.0);
  }
  return r;
}

EstimateResult
estimate_dh_binned(const PooledDataset& pooled, const SmootherSpec& spec,
                   std::span<const double> grid)
{
  spec.validate();
  require_results(pooled, "estimate_dh_binned");
  const std::size_t dim = pooled.dim;
  const bool generic = !pooled.bins.has_value();
  if (generic && dim != 1)
    throw EstimatorError("estimate_dh_binned needs a bin geometry for d > 1");
  if (pooled.strategy == PoolingStrategy::random)
    throw EstimatorError("estimate_dh_binned needs homogeneous bins or "
                         "groups, not random pools");
  if (grid.size() % dim != 0)
    throw InvalidArgument("grid size is not a multiple of the dimension");
  if (!generic) {
    for (double c : grid) {
      if (!(c >= 0.0 && c <= 1.0))
        throw InvalidArgument("binned estimates are defined on [0,1]^d only");
    }
  }
  const std::size_t needed = 2 * (dim + 1);
  if (pooled.groups.size() < needed)
    throw EstimatorError("binned estimator needs at least " +
                         std::to_string(needed) + " nonempty bins, got " +
                         std::to_string(pooled.groups.size()));
  if (dim > 1 && spec.degree != 1)
    throw InvalidArgument("the multivariate binned estimator is local linear "
                          "(degree 1)");

  std::vector<double> centers;
  std::vector<double> z;
  for (const Group& g : pooled.groups) {
    centers.insert(centers.end(), g.center.begin(), g.center.end());
    z.push_back(*g.pooled_negative());
  }

  EstimateResult r;
  r.estimator = EstimatorKind::DH_binned;
  r.dim = dim;
  r.nu = pooled.nu;
  r.grid.assign(grid.begin(), grid.end());
  const std::size_t points = grid.size() / dim;
  reserve_result(r, points);

  // m(x): occupancy of the bin (or nearest group) containing x.
  std::vector<std::pair<double, double>> by_center;
  if (generic) {
    for (const Group& g : pooled.groups)
      by_center.emplace_back(g.center[0], static_cast<double>(g.size));
    std::sort(by_center.begin(), by_center.end());
  }
  const auto occupancy = [&](std::span<const double> x) -> double {
    if (!generic) {
      const auto bin = pooled.bins->bin_of(x);
      return bin ? static_cast<double>(pooled.bins->counts[*bin]) : 0.0;
    }
    auto it = std::lower_bound(
      by_center.begin(), by_center.end(), x[0],
      [](const auto& e, double v) { return e.first < v; });
    if (it == by_center.end())
      return std::prev(it)->second;
    if (it != by_center.begin() && x[0] - std::prev(it)->first < it->first - x[0])
      return std::prev(it)->second;
    return it->second;
  };

  if (dim == 1) {
    r.bandwidth = select_bandwidth(
      centers, z, spec,
      PluginTarget::homogeneous_pools(
        std::max(1, static_cast<int>(std::lround(pooled.nu))),
        pooled.individuals()));
    const LocalPolynomial smoother(centers, z, spec.kernel, spec.degree);
    for (std::size_t i = 0; i < points; ++i) {
      const double m = occupancy(grid.subspan(i, 1));
      if (m == 0.0) {
        push_failed(r, { std::nullopt, PointStatus::empty_bin, 0 }, 0.0);
        continue;
      }
      const PointFit f = fit_with_widening(
        [&](double h) { return smoother.fit(h, grid[i]); }, r.bandwidth,
        spec.widen_on_failure);
      if (f.value)
        push_root(r, f, m);
      else
        push_failed(r, f, m);
    }
    return r;
  }

  r.bandwidth = select_bandwidth_nd(centers, dim, z, spec).h;
  const LocalLinearNd smoother(centers, dim, z, spec.kernel);
  for (std::size_t i = 0; i < points; ++i) {
    const auto x = grid.subspan(i * dim, dim);
    const double m = occupancy(x);
    if (m == 0.0) {
      push_failed(r, { std::nullopt, PointStatus::empty_bin, 0 }, 0.0);
      continue;
    }
    const PointFit f = fit_with_widening(
      [&](double h) { return smoother.fit(h, x); }, r.bandwidth,
      spec.widen_on_failure);
    if (f.value)
      push_root(r, f, m);
    else
      push_failed(r, f, m);
  }
  return r;
}

} // namespace hompool
