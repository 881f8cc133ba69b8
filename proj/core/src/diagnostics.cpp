#include "hompool/diagnostics.hpp"

#include "hompool/bandwidth.hpp"
#include "hompool/error.hpp"
#include "hompool/local_poly.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace hompool {

AsymptoticDiagnostics
asymptotic_diagnostics(const CurvePoint& curve, double q, const Kernel& kernel,
                       int nu, std::size_t n, double h, double x)
{
  if (nu < 1)
    throw InvalidArgument("group size nu must be at least 1");
  if (n == 0)
    throw InvalidArgument("sample size must be positive");
  if (!(h > 0.0))
    throw InvalidArgument("bandwidth must be positive");
  if (!(curve.f > 0.0)) {
    std::ostringstream msg;
    msg << "covariate density vanishes at x=" << x
        << "; the asymptotic formulas need f(x) > 0";
    throw InvalidArgument(msg.str());
  }
  if (!(curve.p >= 0.0 && curve.p < 1.0))
    throw InvalidArgument("diagnostics need p(x) in [0, 1)");
  if (!(q > 0.0 && q <= 1.0))
    throw InvalidArgument("q must lie in (0, 1]");

  const double nu_d = nu;
  const double n_d = static_cast<double>(n);
  const double one_minus = 1.0 - curve.p;

  AsymptoticDiagnostics d;
  d.x = x;
  d.p = curve.p;
  d.dp = curve.dp;
  d.d2p = curve.d2p;
  d.f = curve.f;
  d.q = q;
  d.b_const = kernel.second_moment();
  d.v = kernel.roughness() / curve.f;

  const double var = std::pow(one_minus, 2.0 - nu_d) *
                     (1.0 - std::pow(one_minus, nu_d)) * d.v /
                     (nu_d * n_d * h);
  d.A = std::sqrt(std::max(var, 0.0));
  d.B = 0.5 * h * h *
        (curve.d2p - (nu_d - 1.0) * curve.dp * curve.dp / one_minus) *
        d.b_const;

  const double qpow = std::pow(q, nu_d - 1.0);
  const double var1 = one_minus / qpow * (1.0 - one_minus * qpow) * d.v /
                      (n_d * h);
  d.A1 = std::sqrt(std::max(var1, 0.0));
  d.B1 = 0.5 * h * h * curve.d2p * d.b_const;
  d.lambda_N = std::pow(one_minus, -nu_d / 5.0);
  return d;
}

AsymptoticDiagnostics
asymptotic_diagnostics(const Model& model, const SmootherSpec& spec, int nu,
                       std::size_t n, double h, double x)
{
  const CurvePoint c{ model.p(x), model.dp(x), model.d2p(x), model.density(x) };
  return asymptotic_diagnostics(c, model.q(), spec.kernel, nu, n, h, x);
}

namespace {

// Integrals over [a, b] of the variance coefficient (A^2 h) and of the
// squared bias coefficient (B / h^2)^2.
std::pair<double, double>
error_coefficients(const Model& model, const Kernel& kernel, int nu,
                   std::size_t n, double a, double b, std::size_t points,
                   bool random_pools)
{
  if (!(a < b) || points < 2)
    throw InvalidArgument("integration interval needs a < b and two nodes");
  const double q = model.q();
  double int_var = 0.0;
  double int_bias2 = 0.0;
  double prev_var = 0.0;
  double prev_bias2 = 0.0;
  for (std::size_t i = 0; i < points; ++i) {
    const double x = a + (b - a) * static_cast<double>(i) /
                           static_cast<double>(points - 1);
    const CurvePoint c{ model.p(x), model.dp(x), model.d2p(x),
                        model.density(x) };
    const auto d = asymptotic_diagnostics(c, q, kernel, nu, n, 1.0, x);
    const double var = random_pools ? d.A1 * d.A1 : d.A * d.A;
    const double bias2 = random_pools ? d.B1 * d.B1 : d.B * d.B;
    if (i > 0) {
      const double w = 0.5 * (b - a) / static_cast<double>(points - 1);
      int_var += w * (var + prev_var);
      int_bias2 += w * (bias2 + prev_bias2);
    }
    prev_var = var;
    prev_bias2 = bias2;
  }
  return { int_var, int_bias2 };
}

} // namespace

double
asymptotic_ise(const Model& model, const Kernel& kernel, int nu, std::size_t n,
               double h, double a, double b, std::size_t points,
               bool random_pools)
{
  if (!(h > 0.0))
    throw InvalidArgument("bandwidth must be positive");
  const auto [v, b2] =
    error_coefficients(model, kernel, nu, n, a, b, points, random_pools);
  return v / h + b2 * h * h * h * h;
}

double
asymptotic_optimal_bandwidth(const Model& model, const Kernel& kernel, int nu,
                             std::size_t n, double a, double b,
                             std::size_t points, bool random_pools)
{
  const auto [v, b2] =
    error_coefficients(model, kernel, nu, n, a, b, points, random_pools);
  if (!(b2 > 0.0))
    throw InvalidArgument("the bias term vanishes on the interval, so the "
                          "error has no finite minimizing bandwidth");
  return std::pow(v / (4.0 * b2), 0.2);
}

PilotEstimate
pilot_from_pools(const PooledDataset& pooled, const Kernel& kernel,
                 double pilot_h, std::span<const double> grid)
{
  if (pooled.dim != 1 || !pooled.has_results())
    throw EstimatorError("data-mode diagnostics need univariate pools with "
                         "results");
  const auto nu = pooled.common_size();
  if (!nu)
    throw EstimatorError("data-mode diagnostics need equal group sizes");
  std::vector<double> u;
  std::vector<double> z;
  double negatives = 0.0;
  for (const Group& g : pooled.groups) {
    u.push_back(g.center[0]);
    z.push_back(*g.pooled_negative());
    negatives += *g.pooled_negative();
  }
  const double nu_d = static_cast<double>(*nu);
  PilotEstimate out;
  out.pilot_h = pilot_h;
  out.q = std::pow(negatives / static_cast<double>(u.size()), 1.0 / nu_d);
  if (!(out.q > 0.0))
    throw EstimatorError("every pool tested positive; q cannot be estimated");

  const LocalPolynomial pilot(u, z, kernel, 2);
  const NormalReferenceDensity density(u);
  for (double x : grid) {
    out.x.push_back(x);
    const LocalDerivatives d = pilot.derivatives(pilot_h, x);
    CurvePoint c;
    c.f = density(x);
    if (!d.ok()) {
      out.curve.push_back(c);
      out.ok.push_back(false);
      continue;
    }
    const double mu = std::clamp(d.derivative[0], 1e-12, 1.0);
    const double dm = d.derivative[1];
    const double d2m = d.derivative[2];
    const double root = std::pow(mu, 1.0 / nu_d);
    c.p = std::clamp(1.0 - root, 0.0, 1.0 - 1e-12);
    c.dp = -(root / (nu_d * mu)) * dm;
    c.d2p = -(root / (nu_d * mu)) * ((1.0 / nu_d - 1.0) * dm * dm / mu + d2m);
    out.curve.push_back(c);
    out.ok.push_back(true);
  }
  return out;
}

} // namespace hompool
