#include "hompool/bandwidth.hpp"

#include "hompool/error.hpp"
#include "hompool/local_poly.hpp"
#include "hompool/stats.hpp"
#include "small_solve.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

namespace hompool {

PluginTarget
PluginTarget::homogeneous_pools(int nu, std::size_t individuals)
{
  PluginTarget target;
  target.kind = Kind::homogeneous;
  target.nu = nu;
  target.individuals = individuals;
  return target;
}

PluginTarget
PluginTarget::random(int nu, double q, std::size_t individuals)
{
  PluginTarget target;
  target.kind = Kind::random_pools;
  target.nu = nu;
  target.q = q;
  target.individuals = individuals;
  return target;
}

namespace {

constexpr double pilot_factor = 1.5;
constexpr std::size_t plugin_grid_points = 101;

std::vector<double>
resolve_candidates(const BandwidthRule& rule, double range)
{
  std::vector<double> grid =
    rule.candidates.empty() ? default_candidates(range) : rule.candidates;
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  return grid;
}

double
clamp_to_bounds(double h, const BandwidthRule& rule)
{
  return std::clamp(h, rule.h_min, rule.h_max);
}

// Index of the smallest score; near-ties resolve to the smallest bandwidth
// (candidates are ascending).
std::optional<std::size_t>
argmin_smallest(const std::vector<std::optional<double>>& scores,
                double tolerance)
{
  std::optional<double> best;
  for (const auto& s : scores) {
    if (s && (!best || *s < *best))
      best = s;
  }
  if (!best)
    return std::nullopt;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (scores[i] && *scores[i] <= *best + tolerance)
      return i;
  }
  return std::nullopt;
}

[[noreturn]] void
throw_no_usable(std::span<const double> u, std::span<const double> z,
                const SmootherSpec& spec, const std::vector<double>& grid)
{
  const LocalPolynomial smoother(u, z, spec.kernel, spec.degree);
  const double usable = smoother.smallest_usable_bandwidth();
  std::ostringstream msg;
  msg.precision(6);
  msg << "no bandwidth candidate in [" << grid.front() << ", " << grid.back()
      << "] gives a usable " << spec.kernel.name() << " smoother of degree "
      << spec.degree << " on " << u.size()
      << " design points; smallest usable h is about " << usable;
  throw BandwidthError(msg.str(), usable);
}

BandwidthSelection
cross_validate(std::span<const double> u, std::span<const double> z,
               const SmootherSpec& spec)
{
  const auto [lo, hi] = std::minmax_element(u.begin(), u.end());
  const double range = *hi - *lo;
  if (!(range > 0.0))
    throw InvalidArgument("bandwidth selection needs at least two distinct "
                          "design points");
  BandwidthSelection out;
  out.mode = BandwidthMode::cross_validation;
  out.candidates = resolve_candidates(spec.bandwidth, range);
  out.binned = u.size() > cv_exact_limit;

  if (out.binned) {
    for (double h : out.candidates)
      out.scores.push_back(
        binned_cv_score(u, z, spec.kernel, spec.degree, h));
  } else {
    const LocalPolynomial smoother(u, z, spec.kernel, spec.degree);
    for (double h : out.candidates)
      out.scores.push_back(smoother.loo_cv_score(h));
  }

  const double spread = std::max(stats::variance(z), 1e-300);
  const auto best = argmin_smallest(out.scores, 1e-12 * spread);
  if (!best)
    throw_no_usable(u, z, spec, out.candidates);
  out.h = clamp_to_bounds(out.candidates[*best], spec.bandwidth);
  return out;
}

struct PilotCurve
{
  double p = 0.0;
  double dp = 0.0;
  double d2p = 0.0;
};

// Converts pilot estimates of m, m', m'' into p, p', p''.
std::optional<PilotCurve>
to_prevalence(const PluginTarget& target, double m, double dm, double d2m)
{
  PilotCurve c;
  switch (target.kind) {
    case PluginTarget::Kind::direct:
      c = { m, dm, d2m };
      break;
    case PluginTarget::Kind::homogeneous: {
      const double nu = target.nu;
      const double mu = std::clamp(m, 1e-6, 1.0);
      const double root = std::pow(mu, 1.0 / nu);
      c.p = 1.0 - root;
      c.dp = -(root / (nu * mu)) * dm;
      c.d2p = -(root / (nu * mu)) * ((1.0 / nu - 1.0) * dm * dm / mu + d2m);
      break;
    }
    case PluginTarget::Kind::random_pools: {
      const double scale = std::pow(target.q, target.nu - 1);
      c = { 1.0 - (1.0 - m) / scale, dm / scale, d2m / scale };
      break;
    }
  }
  if (!std::isfinite(c.p) || !std::isfinite(c.dp) || !std::isfinite(c.d2p))
    return std::nullopt;
  c.p = std::clamp(c.p, 1e-8, 1.0 - 1e-6);
  return c;
}

BandwidthSelection
plug_in(std::span<const double> u, std::span<const double> z,
        const SmootherSpec& spec, const PluginTarget& target)
{
  if (target.nu < 1)
    throw InvalidArgument("plug-in target needs nu >= 1");
  if (target.kind == PluginTarget::Kind::random_pools &&
      !(target.q > 0.0 && target.q <= 1.0))
    throw InvalidArgument("plug-in target for random pools needs q in (0,1]");

  BandwidthSelection cv = cross_validate(u, z, spec);
  BandwidthSelection out;
  out.mode = BandwidthMode::plugin;
  out.candidates = cv.candidates;
  out.cv_h = cv.h;
  out.binned = cv.binned;

  std::vector<double> sorted(u.begin(), u.end());
  std::sort(sorted.begin(), sorted.end());
  const double a = target.lower.value_or(stats::sorted_quantile(sorted, 0.05));
  const double b = target.upper.value_or(stats::sorted_quantile(sorted, 0.95));
  if (!(a < b))
    throw InvalidArgument("plug-in integration interval is empty");

  const double individuals = static_cast<double>(
    target.individuals != 0
      ? target.individuals
      : (target.kind == PluginTarget::Kind::homogeneous
           ? u.size() * static_cast<std::size_t>(target.nu)
           : u.size()));
  const double nu = target.nu;
  const double b_const = spec.kernel.second_moment();
  const double roughness = spec.kernel.roughness();

  const LocalPolynomial pilot(u, z, spec.kernel, 2);
  const NormalReferenceDensity density(u);
  const double h_pilot = pilot_factor * cv.h;

  // Per-point variance coefficient (times 1/h) and bias coefficient (times
  // h^2) on the integration grid.
  std::vector<double> var_coef;
  std::vector<double> bias_coef;
  std::vector<double> xs;
  for (std::size_t g = 0; g < plugin_grid_points; ++g) {
    const double x =
      a + (b - a) * static_cast<double>(g) / (plugin_grid_points - 1);
    const LocalDerivatives d = pilot.derivatives(h_pilot, x);
    if (!d.ok())
      continue;
    const auto c =
      to_prevalence(target, d.derivative[0], d.derivative[1], d.derivative[2]);
    const double f = density(x);
    if (!c || !(f > 0.0))
      continue;
    const double v = roughness / f;
    const double one_minus = 1.0 - c->p;
    double var = 0.0;
    double bias = 0.0;
    switch (target.kind) {
      case PluginTarget::Kind::direct:
      case PluginTarget::Kind::homogeneous: {
        var = std::pow(one_minus, 2.0 - nu) *
              (1.0 - std::pow(one_minus, nu)) * v / (nu * individuals);
        bias = 0.5 * (c->d2p - (nu - 1.0) * c->dp * c->dp / one_minus) *
               b_const;
        break;
      }
      case PluginTarget::Kind::random_pools: {
        const double qpow = std::pow(target.q, nu - 1.0);
        var = one_minus / qpow * (1.0 - one_minus * qpow) * v / individuals;
        bias = 0.5 * c->d2p * b_const;
        break;
      }
    }
    xs.push_back(x);
    var_coef.push_back(std::max(var, 0.0));
    bias_coef.push_back(bias);
  }

  if (xs.size() < 2) {
    // Pilot unusable on the whole interval; fall back to cross-validation.
    out.h = cv.h;
    out.scores = cv.scores;
    return out;
  }

  double int_var = 0.0;
  double int_bias2 = 0.0;
  for (std::size_t i = 1; i < xs.size(); ++i) {
    const double w = 0.5 * (xs[i] - xs[i - 1]);
    int_var += w * (var_coef[i] + var_coef[i - 1]);
    int_bias2 += w * (bias_coef[i] * bias_coef[i] +
                      bias_coef[i - 1] * bias_coef[i - 1]);
  }
  for (double h : out.candidates)
    out.scores.emplace_back(int_var / h + int_bias2 * h * h * h * h);

  const auto best = argmin_smallest(out.scores, 0.0);
  out.h = clamp_to_bounds(out.candidates[*best], spec.bandwidth);
  return out;
}

} // namespace

BandwidthSelection
select_bandwidth_detailed(std::span<const double> u, std::span<const double> z,
                          const SmootherSpec& spec, const PluginTarget& target)
{
  spec.validate();
  if (u.size() != z.size())
    throw InvalidArgument("design covariates and responses differ in length");
  if (spec.bandwidth.mode == BandwidthMode::fixed) {
    BandwidthSelection out;
    out.h = spec.bandwidth.fixed_h;
    out.mode = BandwidthMode::fixed;
    return out;
  }
  const auto needed = 2 * static_cast<std::size_t>(spec.degree + 1);
  if (u.size() < needed)
    throw InvalidArgument("bandwidth selection needs at least " +
                          std::to_string(needed) + " design points, got " +
                          std::to_string(u.size()));
  if (spec.bandwidth.mode == BandwidthMode::cross_validation)
    return cross_validate(u, z, spec);
  return plug_in(u, z, spec, target);
}

double
select_bandwidth(std::span<const double> u, std::span<const double> z,
                 const SmootherSpec& spec, const PluginTarget& target)
{
  return select_bandwidth_detailed(u, z, spec, target).h;
}

std::optional<double>
binned_cv_score(std::span<const double> u, std::span<const double> z,
                const Kernel& kernel, int degree, double h, std::size_t bins)
{
  if (u.empty() || u.size() != z.size())
    throw InvalidArgument("binned cross-validation needs a nonempty design");
  if (bins < 2)
    throw InvalidArgument("binned cross-validation needs at least two bins");
  if (degree < 1 || degree > max_degree)
    throw InvalidArgument("local polynomial degree out of range");
  const auto [lo_it, hi_it] = std::minmax_element(u.begin(), u.end());
  const double lo = *lo_it;
  const double range = *hi_it - lo;
  if (!(range > 0.0))
    return std::nullopt;
  const double delta = range / static_cast<double>(bins - 1);

  std::vector<double> count(bins, 0.0);
  std::vector<double> sum(bins, 0.0);
  std::vector<double> sum_sq(bins, 0.0);
  for (std::size_t i = 0; i < u.size(); ++i) {
    const auto g = static_cast<std::size_t>(std::lround((u[i] - lo) / delta));
    count[g] += 1.0;
    sum[g] += z[i];
    sum_sq[g] += z[i] * z[i];
  }

  const auto reach = static_cast<std::size_t>(std::min<double>(
    static_cast<double>(bins - 1),
    std::floor(kernel.evaluation_radius() * h / delta)));
  std::vector<double> weight(reach + 1);
  std::vector<double> offset(reach + 1);
  for (std::size_t k = 0; k <= reach; ++k) {
    offset[k] = static_cast<double>(k) * delta / h;
    weight[k] = kernel(offset[k]);
  }
  const double self_weight = weight[0];

  const auto n = static_cast<std::size_t>(degree + 1);
  const auto moments = 2 * n - 1;
  double total = 0.0;
  for (std::size_t g = 0; g < bins; ++g) {
    if (count[g] == 0.0)
      continue;
    std::array<double, 2 * max_degree + 1> s{};
    std::array<double, max_degree + 1> t{};
    std::size_t distinct = 0;
    const std::size_t first = g >= reach ? g - reach : 0;
    const std::size_t last = std::min(bins - 1, g + reach);
    for (std::size_t g2 = first; g2 <= last; ++g2) {
      if (count[g2] == 0.0)
        continue;
      const std::size_t k = g2 >= g ? g2 - g : g - g2;
      const double w = weight[k];
      if (w == 0.0)
        continue;
      const double d = g2 >= g ? offset[k] : -offset[k];
      const double c = g2 == g ? count[g2] - 1.0 : count[g2];
      if (c > 0.0)
        ++distinct;
      double power = w;
      for (std::size_t m = 0; m < moments; ++m) {
        s[m] += c * power;
        if (m < n)
          t[m] += sum[g2] * power;
        power *= d;
      }
    }
    if (distinct < n)
      return std::nullopt;
    std::array<double, (max_degree + 1) * (max_degree + 1)> a{};
    std::array<double, max_degree + 1> row{};
    for (std::size_t r = 0; r < n; ++r) {
      for (std::size_t c = 0; c < n; ++c)
        a[r * n + c] = s[r + c];
    }
    row[0] = 1.0;
    if (!detail::solve_small(a, row, n))
      return std::nullopt;
    // Leave-one-out prediction for a point with response y in bin g is
    // alpha - beta * y.
    double alpha = 0.0;
    for (std::size_t r = 0; r < n; ++r)
      alpha += row[r] * t[r];
    const double beta = row[0] * self_weight;
    if (!(beta <= detail::max_loo_inflation))
      return std::nullopt;
    const double scale = 1.0 + beta;
    const double mean = sum[g] / count[g];
    const double spread = std::max(sum_sq[g] - sum[g] * mean, 0.0);
    const double shift = scale * mean - alpha;
    total += scale * scale * spread + count[g] * shift * shift;
  }
  return total / static_cast<double>(u.size());
}

BandwidthSelection
select_bandwidth_nd(std::span<const double> points, std::size_t dim,
                    std::span<const double> z, const SmootherSpec& spec)
{
  spec.validate();
  if (spec.degree != 1)
    throw InvalidArgument("the multivariate smoother is local linear only");
  BandwidthSelection out;
  if (spec.bandwidth.mode == BandwidthMode::fixed) {
    out.h = spec.bandwidth.fixed_h;
    out.mode = BandwidthMode::fixed;
    return out;
  }
  if (spec.bandwidth.mode == BandwidthMode::plugin && dim > 1)
    throw InvalidArgument("the plug-in bandwidth is univariate; use cv for "
                          "d > 1");
  const LocalLinearNd smoother(points, dim, z, spec.kernel);
  out.mode = BandwidthMode::cross_validation;
  out.candidates = resolve_candidates(spec.bandwidth, 1.0);
  for (double h : out.candidates)
    out.scores.push_back(smoother.loo_cv_score(h));
  const double spread = std::max(stats::variance(z), 1e-300);
  const auto best = argmin_smallest(out.scores, 1e-12 * spread);
  if (!best) {
    std::ostringstream msg;
    msg << "no bandwidth candidate up to " << out.candidates.back()
        << " gives a usable " << dim << "-variate local linear smoother";
    throw BandwidthError(msg.str(), std::numeric_limits<double>::infinity());
  }
  out.h = clamp_to_bounds(out.candidates[*best], spec.bandwidth);
  return out;
}

NormalReferenceDensity::NormalReferenceDensity(std::span<const double> sample)
  : sample_(sample.begin(), sample.end())
{
  if (sample_.size() < 2)
    throw InvalidArgument("density estimate needs at least two points");
  std::sort(sample_.begin(), sample_.end());
  const double sd = std::sqrt(stats::variance(sample_));
  const double iqr = stats::sorted_quantile(sample_, 0.75) -
                     stats::sorted_quantile(sample_, 0.25);
  double scale = std::min(sd, iqr / 1.349);
  if (!(scale > 0.0))
    scale = sd > 0.0 ? sd : 1.0;
  h_ = 1.06 * scale * std::pow(static_cast<double>(sample_.size()), -0.2);
}

double
NormalReferenceDensity::operator()(double x) const
{
  const Kernel gauss(KernelFamily::gaussian);
  const double radius = gauss.evaluation_radius() * h_;
  const auto first = std::lower_bound(sample_.begin(), sample_.end(), x - radius);
  const auto last = std::upper_bound(first, sample_.end(), x + radius);
  double sum = 0.0;
  for (auto it = first; it != last; ++it)
    sum += gauss((*it - x) / h_);
  return sum / (static_cast<double>(sample_.size()) * h_);
}

} // namespace hompool
