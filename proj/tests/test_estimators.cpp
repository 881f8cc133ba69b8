#include "hompool/diagnostics.hpp"
#include "hompool/error.hpp"
#include "hompool/estimators.hpp"
#include "hompool/local_poly.hpp"
#include "hompool/pooling.hpp"
#include "hompool/random.hpp"
#include "hompool/simulation.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>

using namespace hompool;

namespace {

RawDataset
linear_sample(std::uint64_t seed, std::size_t n)
{
  Rng rng(seed);
  std::vector<double> x(n);
  std::vector<std::uint8_t> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    x[i] = uniform01(rng);
    y[i] = uniform01(rng) < 0.05 + 0.2 * x[i];
  }
  return RawDataset::univariate(std::move(x), std::move(y));
}

SmootherSpec
fixed_spec(double h, int degree = 1)
{
  SmootherSpec s;
  s.degree = degree;
  s.bandwidth = BandwidthRule::fixed(h);
  return s;
}

void
check_range(const EstimateResult& r)
{
  for (const auto& p : r.p_hat) {
    if (p) {
      CHECK(*p >= 0.0);
      CHECK(*p <= 1.0);
    }
  }
}

} // namespace

TEST_CASE("DH with nu = 1 coincides with LL")
{
  const RawDataset raw = linear_sample(1, 400);
  const std::vector<double> grid = linspace(0.05, 0.95, 37);
  for (const char* rule : { "fixed:0.1", "cv", "plugin" }) {
    for (int degree : { 1, 2 }) {
      SmootherSpec s;
      s.degree = degree;
      s.bandwidth = BandwidthRule::parse(rule);
      const EstimateResult dh = estimate_dh(pool_homogeneous(raw, 1), s, grid);
      const EstimateResult ll = estimate_ll(raw, s, grid);
      CAPTURE(rule);
      CHECK(dh.bandwidth == ll.bandwidth);
      for (std::size_t i = 0; i < grid.size(); ++i) {
        REQUIRE(dh.p_hat[i].has_value() == ll.p_hat[i].has_value());
        if (dh.p_hat[i])
          CHECK(std::abs(*dh.p_hat[i] - *ll.p_hat[i]) < 1e-12);
      }
    }
  }
}

TEST_CASE("DM with nu = 1 coincides with LL")
{
  const RawDataset raw = linear_sample(2, 300);
  const std::vector<double> grid = linspace(0.1, 0.9, 17);
  const SmootherSpec s = fixed_spec(0.12);
  const EstimateResult dm = estimate_dm(pool_random(raw, 1, 5), s, grid);
  const EstimateResult ll = estimate_ll(raw, s, grid);
  REQUIRE(dm.q_hat);
  for (std::size_t i = 0; i < grid.size(); ++i)
    CHECK(std::abs(*dm.p_hat[i] - *ll.p_hat[i]) < 1e-12);
}

TEST_CASE("DH root transform and clamping")
{
  const RawDataset raw = linear_sample(3, 1000);
  const PooledDataset pooled = pool_homogeneous(raw, 5);
  const std::vector<double> grid = linspace(0.05, 0.95, 51);
  const EstimateResult r = estimate_dh(pooled, fixed_spec(0.08), grid);
  check_range(r);
  for (std::size_t i = 0; i < r.size(); ++i) {
    REQUIRE(r.p_hat[i]);
    CHECK(r.exponent[i] == 5.0);
    const double mu = *r.mu_hat[i];
    if (r.clamp[i] == ClampFlag::none)
      CHECK(std::abs(std::pow(1.0 - *r.p_hat[i], 5.0) - mu) < 1e-12);
    else if (r.clamp[i] == ClampFlag::clamped_high)
      CHECK(*r.p_hat[i] == 0.0);
    else
      CHECK(*r.p_hat[i] == 1.0);
  }

  // One positive group in ten; a near-global linear fit at the mean center
  // returns the mean of Z*, 0.9.
  std::vector<double> x(50);
  std::vector<std::uint8_t> y(50, 0);
  for (std::size_t j = 0; j < 50; ++j)
    x[j] = static_cast<double>(j);
  for (std::size_t j = 0; j < 10; ++j)
    y[j * 5] = j == 4 ? 1 : 0;
  const PooledDataset tenth = pool_homogeneous(RawDataset::univariate(x, y), 5);
  const std::vector<double> mid{ 24.5 };
  const EstimateResult big = estimate_dh(tenth, fixed_spec(1e6), mid);
  CHECK(*big.mu_hat[0] == doctest::Approx(0.9).epsilon(1e-9));
  CHECK(*big.p_hat[0] == doctest::Approx(1.0 - std::pow(0.9, 0.2)).epsilon(1e-9));
}

TEST_CASE("scaling Z* scales mu-hat")
{
  const RawDataset raw = linear_sample(4, 500);
  const PooledDataset pooled = pool_homogeneous(raw, 5);
  std::vector<double> u, z, zc;
  for (const Group& g : pooled.groups) {
    u.push_back(g.center[0]);
    z.push_back(*g.pooled_negative());
    zc.push_back(3.5 * *g.pooled_negative());
  }
  const LocalPolynomial a(u, z, Kernel{}, 1);
  const LocalPolynomial b(u, zc, Kernel{}, 1);
  for (double x : { 0.2, 0.5, 0.8 })
    CHECK(*b.value(0.1, x) == doctest::Approx(3.5 * *a.value(0.1, x)).epsilon(1e-13));
}

TEST_CASE("trivial response patterns")
{
  std::vector<double> x(200);
  for (std::size_t i = 0; i < 200; ++i)
    x[i] = (static_cast<double>(i) + 0.5) / 200.0;
  const std::vector<double> grid = linspace(0.1, 0.9, 9);
  const SmootherSpec s = fixed_spec(0.1);

  const RawDataset zeros = RawDataset::univariate(x, std::vector<std::uint8_t>(200, 0));
  const RawDataset ones = RawDataset::univariate(x, std::vector<std::uint8_t>(200, 1));
  for (const auto& p : estimate_ll(zeros, s, grid).p_hat)
    CHECK(std::abs(*p) < 1e-12);
  for (const auto& p : estimate_ll(ones, s, grid).p_hat)
    CHECK(std::abs(*p - 1.0) < 1e-12);

  // No positives anywhere: q-hat = 1 and p-hat = 0.
  const EstimateResult dm = estimate_dm(pool_random(zeros, 5, 1), s, grid);
  CHECK(*dm.q_hat == 1.0);
  for (const auto& p : dm.p_hat)
    CHECK(std::abs(*p) < 1e-12);

  // All Z* = 1 in bins: mu = 1, p = 0.
  const EstimateResult binned = estimate_dh_binned(pool_binned(zeros, 5.0), s, grid);
  for (const auto& p : binned.p_hat)
    CHECK(std::abs(*p) < 1e-12);

  // Every pool positive: DM undefined.
  CHECK_THROWS_AS(estimate_dm(pool_random(ones, 5, 1), s, grid), EstimatorError);
}

TEST_CASE("estimator preconditions")
{
  const RawDataset raw = linear_sample(5, 100);
  const std::vector<double> grid = linspace(0.2, 0.8, 5);
  const SmootherSpec s = fixed_spec(0.2);
  CHECK_THROWS_AS(estimate_dh(pool_random(raw, 5, 2), s, grid), EstimatorError);
  CHECK_THROWS_AS(estimate_dm(pool_homogeneous(raw, 5), s, grid), EstimatorError);
  CHECK_THROWS_AS(estimate_ll(RawDataset::univariate(raw.covariates), s, grid),
                  EstimatorError);
  CHECK_THROWS_AS(estimate_dh(pool_homogeneous(RawDataset::univariate(raw.covariates), 5),
                              s, grid),
                  EstimatorError);
  const std::vector<double> outside{ -1.0 };
  CHECK_THROWS_AS(estimate_dh(pool_homogeneous(raw, 5), s, outside), InvalidArgument);

  PooledDataset unequal = pool_homogeneous(raw, 5);
  unequal.groups.back().size = 4;
  unequal.groups.back().member_covariates.pop_back();
  try {
    estimate_dh(unequal, s, grid);
    FAIL("expected an error");
  } catch (const EstimatorError& e) {
    CHECK(std::string(e.what()).find("estimate_dh_binned") != std::string::npos);
  }
}

TEST_CASE("binned estimator: empty bins and multivariate fits")
{
  std::vector<double> x;
  std::vector<std::uint8_t> y;
  Rng rng(6);
  for (int i = 0; i < 400; ++i) {
    const double v = 0.5 * uniform01(rng);
    x.push_back(v);
    y.push_back(uniform01(rng) < 0.1);
  }
  // Data only in [0, 0.5]: bins above are empty.
  const PooledDataset p = pool_binned(RawDataset::univariate(x, y), 4.0);
  const std::vector<double> grid{ 0.25, 0.75 };
  const EstimateResult r = estimate_dh_binned(p, fixed_spec(0.1), grid);
  CHECK(r.p_hat[0]);
  CHECK(!r.p_hat[1]);
  CHECK(r.status[1] == PointStatus::empty_bin);

  RawDataset two;
  two.dim = 2;
  std::vector<std::uint8_t> y2;
  for (int i = 0; i < 2500; ++i) {
    const double a = uniform01(rng), b = uniform01(rng);
    two.covariates.push_back(a);
    two.covariates.push_back(b);
    y2.push_back(uniform01(rng) < 0.05 + 0.1 * a * b);
  }
  two.responses = y2;
  const PooledDataset p2 = pool_binned(two, 4.0);
  CHECK(p2.bins->bins_per_axis == 25);
  const std::vector<double> g2 = unit_cube_grid(2, 5);
  const EstimateResult r2 = estimate_dh_binned(p2, fixed_spec(0.15), g2);
  CHECK(r2.dim == 2);
  CHECK(r2.size() == 25);
  check_range(r2);
  for (std::size_t i = 0; i < r2.size(); ++i) {
    if (r2.p_hat[i] && r2.clamp[i] == ClampFlag::none)
      CHECK(std::abs(std::pow(1.0 - *r2.p_hat[i], r2.exponent[i]) - *r2.mu_hat[i]) <
            1e-12);
  }
  SmootherSpec cv;
  const EstimateResult r3 = estimate_dh_binned(p2, cv, g2);
  CHECK(r3.bandwidth > 0.0);
}

TEST_CASE("generic unequal groups use the nearest group's size as exponent")
{
  PooledDataset p;
  p.dim = 1;
  p.strategy = PoolingStrategy::generic;
  Rng rng(8);
  for (int j = 0; j < 40; ++j) {
    Group g;
    g.id = std::to_string(j);
    g.size = j % 2 ? 3 : 6;
    for (std::size_t m = 0; m < g.size; ++m)
      g.member_covariates.push_back((j + uniform01(rng)) / 40.0);
    double c = 0;
    for (double v : g.member_covariates)
      c += v;
    g.center = { c / static_cast<double>(g.size) };
    g.pooled_positive = uniform01(rng) < 0.3;
    p.groups.push_back(g);
  }
  p.nu = 4.5;
  const EstimateResult r =
    estimate_dh_binned(p, fixed_spec(0.1), std::vector<double>{ p.groups[4].center[0],
                                                                 p.groups[7].center[0] });
  CHECK(r.exponent[0] == 6.0);
  CHECK(r.exponent[1] == 3.0);
}

TEST_CASE("estimates stay in [0, 1] across estimators and kernels")
{
  const Model m = Model::builtin(ModelId::i, CovariateLaw::Family::uniform);
  const RawDataset raw = sample_replicate(m, 1000, 3);
  const std::vector<double> grid = linspace(-2.5, 2.5, 41);
  for (KernelFamily k : { KernelFamily::gaussian, KernelFamily::epanechnikov }) {
    SmootherSpec s = fixed_spec(0.3);
    s.kernel = Kernel(k);
    check_range(estimate_ll(raw, s, grid));
    check_range(estimate_dh(pool_homogeneous(raw, 10), s, grid));
    check_range(estimate_dm(pool_random(raw, 10, 4), s, grid));
  }
}

TEST_CASE("LL tracks a linear prevalence within a Monte Carlo band")
{
  const std::vector<double> grid{ 0.25, 0.5, 0.75 };
  std::vector<std::vector<double>> values(grid.size());
  for (std::uint64_t rep = 0; rep < 100; ++rep) {
    const EstimateResult r = estimate_ll(linear_sample(100 + rep, 4000),
                                         fixed_spec(0.1), grid);
    for (std::size_t i = 0; i < grid.size(); ++i)
      values[i].push_back(*r.p_hat[i]);
  }
  for (std::size_t i = 0; i < grid.size(); ++i) {
    double mean = 0, sq = 0;
    for (double v : values[i])
      mean += v;
    mean /= 100.0;
    for (double v : values[i])
      sq += (v - mean) * (v - mean);
    const double sd = std::sqrt(sq / 99.0);
    CHECK(std::abs(mean - (0.05 + 0.2 * grid[i])) < 3.0 * sd);
  }
}

TEST_CASE("asymptotic diagnostics")
{
  const Kernel k;
  const double v = 0.5 / std::sqrt(std::numbers::pi);

  SUBCASE("constant p has no bias")
  {
    const AsymptoticDiagnostics d =
      asymptotic_diagnostics(CurvePoint{ 0.1, 0.0, 0.0, 1.0 }, 0.9, k, 5, 1000, 0.2, 0.5);
    CHECK(d.B == 0.0);
    CHECK(d.B1 == 0.0);
    CHECK(d.A > 0.0);
  }
  SUBCASE("nu = 1 collapses to the regression variance")
  {
    const double p = 0.2;
    const AsymptoticDiagnostics d =
      asymptotic_diagnostics(CurvePoint{ p, 0.1, 0.3, 2.0 }, 0.8, k, 1, 500, 0.1, 0.0);
    CHECK(d.A * d.A ==
          doctest::Approx(p * (1 - p) * (v / 2.0) / (500 * 0.1)).epsilon(1e-12));
    CHECK(d.B == doctest::Approx(0.5 * 0.01 * 0.3).epsilon(1e-12));
    CHECK(d.lambda_N == doctest::Approx(std::pow(0.8, -0.2)));
  }
  SUBCASE("formulas at model (iii), x = 0.5")
  {
    const Model m = Model::builtin(ModelId::iii, CovariateLaw::Family::uniform);
    SmootherSpec s;
    const AsymptoticDiagnostics d = asymptotic_diagnostics(m, s, 5, 10000, 0.2, 0.5);
    const double p = 0.25 / 8.0;
    const double A2 = std::pow(1 - p, -3.0) * (1 - std::pow(1 - p, 5.0)) * v /
                      (5.0 * 10000 * 0.2);
    CHECK(d.A * d.A == doctest::Approx(A2).epsilon(1e-12));
    const double B = 0.5 * 0.04 * (0.25 - 4.0 * 0.125 * 0.125 / (1 - p));
    CHECK(d.B == doctest::Approx(B).epsilon(1e-12));
    CHECK(d.q == doctest::Approx(1.0 - 1.0 / 24.0).epsilon(1e-12));
    CHECK(d.b_const == 1.0);
    CHECK(d.v == doctest::Approx(v));
  }
  SUBCASE("halving delta roughly halves A^2 when nu delta is small")
  {
    const Model m = Model::builtin(ModelId::iii, CovariateLaw::Family::uniform);
    SmootherSpec s;
    const double full = asymptotic_diagnostics(m, s, 5, 10000, 0.2, 0.5).A;
    const double half = asymptotic_diagnostics(m.scaled(0.5), s, 5, 10000, 0.2, 0.5).A;
    CHECK(half * half / (full * full) == doctest::Approx(0.5).epsilon(0.1));
  }
  SUBCASE("lambda_N at p = 0.1, nu = 40")
  {
    const AsymptoticDiagnostics d =
      asymptotic_diagnostics(CurvePoint{ 0.1, 0.0, 0.0, 1.0 }, 0.9, k, 40, 10000, 0.2, 0.5);
    CHECK(std::pow(d.lambda_N, 5.0) == doctest::Approx(std::pow(0.9, -40.0)));
    CHECK(std::pow(d.lambda_N, 5.0) == doctest::Approx(67.6).epsilon(1e-3));
    CHECK(d.lambda_N == doctest::Approx(2.32).epsilon(1e-3));
  }
  SUBCASE("zero density is refused")
  {
    CHECK_THROWS_AS(asymptotic_diagnostics(CurvePoint{ 0.1, 0, 0, 0.0 }, 0.9, k, 5,
                                           100, 0.2, 0.5),
                    InvalidArgument);
  }
  SUBCASE("optimal bandwidth minimizes the asymptotic error and scales as N^-1/5")
  {
    const Model m = Model::builtin(ModelId::iii, CovariateLaw::Family::uniform);
    const double h1 = asymptotic_optimal_bandwidth(m, k, 5, 1000, 0.05, 0.95);
    const double h2 = asymptotic_optimal_bandwidth(m, k, 5, 32000, 0.05, 0.95);
    CHECK(h2 / h1 == doctest::Approx(std::pow(32.0, -0.2)).epsilon(1e-9));
    const double at = asymptotic_ise(m, k, 5, 1000, h1, 0.05, 0.95);
    CHECK(asymptotic_ise(m, k, 5, 1000, 0.9 * h1, 0.05, 0.95) > at);
    CHECK(asymptotic_ise(m, k, 5, 1000, 1.1 * h1, 0.05, 0.95) > at);
  }
}
