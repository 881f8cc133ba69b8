#include "hompool/bandwidth.hpp"
#include "hompool/error.hpp"
#include "hompool/kernel.hpp"
#include "hompool/local_poly.hpp"
#include "hompool/pooling.hpp"
#include "hompool/random.hpp"
#include "hompool/simulation.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <vector>

using namespace hompool;

namespace {

// Trapezoidal integral of g over [-r, r].
template<typename G>
double
integrate(G g, double r, int n = 200000)
{
  const double step = 2.0 * r / n;
  double total = 0.5 * (g(-r) + g(r));
  for (int i = 1; i < n; ++i)
    total += g(-r + i * step);
  return total * step;
}

std::vector<double>
random_design(std::uint64_t seed, std::size_t n, double lo, double hi)
{
  Rng rng(seed);
  std::vector<double> u(n);
  for (double& v : u)
    v = lo + (hi - lo) * uniform01(rng);
  return u;
}

const Kernel all_kernels[] = { Kernel(KernelFamily::gaussian),
                               Kernel(KernelFamily::epanechnikov),
                               Kernel(KernelFamily::uniform) };

} // namespace

TEST_CASE("kernels are normalized, symmetric and carry the tabulated constants")
{
  for (const Kernel& k : all_kernels) {
    CAPTURE(k.name());
    const double r = k.compact() ? 1.0 : 12.0;
    CHECK(integrate([&](double u) { return k(u); }, r) ==
          doctest::Approx(1.0).epsilon(1e-6));
    CHECK(integrate([&](double u) { return u * u * k(u); }, r) ==
          doctest::Approx(k.second_moment()).epsilon(1e-6));
    CHECK(integrate([&](double u) { return k(u) * k(u); }, r) ==
          doctest::Approx(k.roughness()).epsilon(1e-6));
    for (double u : { 0.1, 0.5, 0.9, 2.0 }) {
      CHECK(k(u) == k(-u));
      CHECK(k(u) >= 0.0);
    }
  }
  CHECK(Kernel(KernelFamily::gaussian).roughness() ==
        doctest::Approx(0.5 / std::sqrt(std::numbers::pi)));
  CHECK(Kernel(KernelFamily::epanechnikov)(1.01) == 0.0);
  CHECK(Kernel::from_name("epanechnikov").family() ==
        KernelFamily::epanechnikov);
  CHECK_THROWS_AS(Kernel::from_name("triweight"), InvalidArgument);
}

TEST_CASE("local linear fit matches an explicit 2x2 weighted normal-equations solve")
{
  const std::vector<double> u{ 0.0, 1.0, 2.0 };
  const std::vector<double> z{ 0.0, 1.0, 0.0 };
  const double h = 1.0;
  const double x = 1.0;

  double s0 = 0, s1 = 0, s2 = 0, t0 = 0, t1 = 0;
  for (std::size_t j = 0; j < u.size(); ++j) {
    const double d = u[j] - x;
    const double w =
      std::exp(-0.5 * (d / h) * (d / h)) / std::sqrt(2.0 * std::numbers::pi);
    s0 += w;
    s1 += w * d;
    s2 += w * d * d;
    t0 += w * z[j];
    t1 += w * d * z[j];
  }
  const double oracle = (s2 * t0 - s1 * t1) / (s0 * s2 - s1 * s1);

  const LocalFit fit =
    local_poly_fit(u, z, Kernel(KernelFamily::gaussian), 1, h, x);
  REQUIRE(fit.ok());
  CHECK(std::abs(*fit.value - oracle) < 1e-10);
  CHECK(fit.local_count == 3);
}

TEST_CASE("polynomials of degree up to l are reproduced")
{
  const std::vector<double> u = random_design(7, 60, -1.0, 2.0);
  for (const Kernel& k : all_kernels) {
    for (int degree = 1; degree <= 3; ++degree) {
      for (int q = 0; q <= degree; ++q) {
        std::vector<double> z(u.size());
        const auto poly = [&](double v) {
          double s = 0.7;
          for (int p = 1; p <= q; ++p)
            s += (p % 2 ? -1.3 : 0.4) * std::pow(v, p);
          return s;
        };
        for (std::size_t j = 0; j < u.size(); ++j)
          z[j] = poly(u[j]);
        for (double x : { -0.5, 0.3, 1.1, 1.7 }) {
          CAPTURE(k.name());
          CAPTURE(degree);
          CAPTURE(q);
          CAPTURE(x);
          const LocalFit fit = local_poly_fit(u, z, k, degree, 0.8, x);
          REQUIRE(fit.ok());
          CHECK(std::abs(*fit.value - poly(x)) <=
                1e-10 * std::max(1.0, std::abs(poly(x))));
        }
      }
    }
  }
}

TEST_CASE("constant responses give the constant")
{
  const std::vector<double> u = random_design(3, 25, 0.0, 1.0);
  const std::vector<double> z(u.size(), 0.37);
  for (int degree = 1; degree <= 4; ++degree) {
    const LocalFit fit =
      local_poly_fit(u, z, Kernel(KernelFamily::gaussian), degree, 0.3, 0.5);
    REQUIRE(fit.ok());
    CHECK(*fit.value == doctest::Approx(0.37).epsilon(1e-12));
  }
}

TEST_CASE("effective weights annihilate moments 1..l and sum to one")
{
  const std::vector<double> u = random_design(11, 80, 0.0, 1.0);
  std::vector<double> z(u.size());
  Rng rng(12);
  for (double& v : z)
    v = uniform01(rng);
  for (const Kernel& k : all_kernels) {
    for (int degree = 1; degree <= 3; ++degree) {
      for (double x : { 0.2, 0.55, 0.9 }) {
        const LocalFit fit = LocalPolynomial(u, z, k, degree).fit(0.25, x, true);
        REQUIRE(fit.ok());
        CHECK(effective_weight_moments(fit, u, x, 0) ==
              doctest::Approx(1.0).epsilon(1e-12));
        for (int m = 1; m <= degree; ++m)
          CHECK(std::abs(effective_weight_moments(fit, u, x, m)) < 1e-10);
        const double dot =
          std::inner_product(fit.effective_weights.begin(),
                             fit.effective_weights.end(), z.begin(), 0.0);
        CHECK(std::abs(dot - *fit.value) < 1e-12);
      }
    }
  }
}

TEST_CASE("compact kernels give zero weight outside the window")
{
  const std::vector<double> u = random_design(5, 100, 0.0, 1.0);
  const std::vector<double> z(u.size(), 1.0);
  const double h = 0.15;
  const double x = 0.4;
  const LocalFit fit = LocalPolynomial(u, z, Kernel(KernelFamily::epanechnikov), 1)
                         .fit(h, x, true);
  REQUIRE(fit.ok());
  std::size_t inside = 0;
  for (std::size_t j = 0; j < u.size(); ++j) {
    if (std::abs(u[j] - x) > h)
      CHECK(fit.effective_weights[j] == 0.0);
    else
      inside += std::abs(u[j] - x) < h;
  }
  CHECK(fit.local_count == inside);
}

TEST_CASE("too few local points fail instead of returning a value")
{
  const std::vector<double> u{ 0.0, 0.1, 0.9, 1.0 };
  const std::vector<double> z{ 0.0, 1.0, 0.0, 1.0 };
  const LocalFit fit =
    local_poly_fit(u, z, Kernel(KernelFamily::uniform), 1, 0.05, 0.5);
  CHECK(fit.status == FitStatus::failed);
  CHECK(!fit.value);
  const LocalFit one =
    local_poly_fit(u, z, Kernel(KernelFamily::uniform), 1, 0.15, 0.05);
  CHECK(one.ok());

  // Duplicated points are one distinct location.
  const std::vector<double> dup{ 0.5, 0.5, 0.5 };
  const std::vector<double> dz{ 1.0, 0.0, 1.0 };
  CHECK(!local_poly_fit(dup, dz, Kernel(KernelFamily::gaussian), 1, 1.0, 0.5)
           .ok());
}

TEST_CASE("smoother spec validation")
{
  SmootherSpec s;
  s.degree = 0;
  CHECK_THROWS_AS(s.validate(), InvalidArgument);
  s.degree = max_degree + 1;
  CHECK_THROWS_AS(s.validate(), InvalidArgument);
  s.degree = 1;
  CHECK_THROWS_AS(BandwidthRule::fixed(-1.0), InvalidArgument);
  s.bandwidth.mode = BandwidthMode::fixed;
  s.bandwidth.fixed_h = 0.0;
  CHECK_THROWS_AS(s.validate(), InvalidArgument);
  CHECK_THROWS_AS(BandwidthRule::parse("silverman"), InvalidArgument);
  CHECK(BandwidthRule::parse("fixed:0.25").fixed_h == 0.25);
  CHECK(BandwidthRule::parse("plugin").mode == BandwidthMode::plugin);
  BandwidthRule r = BandwidthRule::cross_validation({ 0.1, 0.2 });
  r.h_min = 0.3;
  r.h_max = 0.2;
  CHECK_THROWS_AS(r.validate(), InvalidArgument);
}

TEST_CASE("bandwidth selection")
{
  const std::vector<double> u = random_design(21, 200, 0.0, 1.0);
  std::vector<double> z(u.size());
  Rng rng(22);
  for (std::size_t j = 0; j < u.size(); ++j)
    z[j] = uniform01(rng) < 0.2 + 0.5 * u[j] ? 1.0 : 0.0;

  SUBCASE("a single candidate is returned as is")
  {
    SmootherSpec s;
    s.bandwidth = BandwidthRule::cross_validation({ 0.3 });
    CHECK(select_bandwidth(u, z, s) == 0.3);
  }
  SUBCASE("noiseless linear data ties at zero and resolves to the smallest h")
  {
    std::vector<double> lin(u.size());
    for (std::size_t j = 0; j < u.size(); ++j)
      lin[j] = 2.0 * u[j] + 1.0;
    SmootherSpec s;
    s.bandwidth = BandwidthRule::cross_validation({ 0.2, 0.1, 0.4, 0.05 });
    const BandwidthSelection sel = select_bandwidth_detailed(u, lin, s);
    for (const auto& score : sel.scores) {
      REQUIRE(score);
      CHECK(*score < 1e-20);
    }
    CHECK(sel.h == 0.05);
  }
  SUBCASE("fixed rule passes through")
  {
    SmootherSpec s;
    s.bandwidth = BandwidthRule::fixed(0.123);
    CHECK(select_bandwidth(u, z, s) == 0.123);
  }
  SUBCASE("the selected h is a candidate clamped to the bounds")
  {
    SmootherSpec s;
    s.bandwidth = BandwidthRule::cross_validation();
    s.bandwidth.h_max = 0.08;
    const double h = select_bandwidth(u, z, s);
    CHECK(h <= 0.08);
    s.bandwidth = BandwidthRule::plugin();
    const double hp = select_bandwidth(u, z, s);
    CHECK(hp > 0.0);
  }
  SUBCASE("no usable candidate names the smallest usable bandwidth")
  {
    SmootherSpec s;
    s.kernel = Kernel(KernelFamily::uniform);
    s.bandwidth = BandwidthRule::cross_validation({ 1e-6, 2e-6 });
    try {
      select_bandwidth(u, z, s);
      FAIL("expected a bandwidth error");
    } catch (const BandwidthError& e) {
      CHECK(e.smallest_usable() > 2e-6);
      CHECK(std::string(e.what()).find("smallest usable") != std::string::npos);
    }
  }
  SUBCASE("too few design points")
  {
    SmootherSpec s;
    const std::vector<double> few{ 0.1, 0.2, 0.3 };
    const std::vector<double> fz{ 0.0, 1.0, 0.0 };
    CHECK_THROWS_AS(select_bandwidth(few, fz, s), InvalidArgument);
  }
}

TEST_CASE("binned cross-validation agrees with the exact score on a fine grid")
{
  // Design points already on the 512-point binning grid, so binning is exact.
  std::vector<double> u;
  std::vector<double> z;
  Rng rng(31);
  for (int i = 0; i < 1200; ++i) {
    const auto g = uniform_index(rng, 512);
    u.push_back(static_cast<double>(g) / 511.0);
    z.push_back(uniform01(rng) < 0.3 ? 1.0 : 0.0);
  }
  u.front() = 0.0;
  u.back() = 1.0;
  const Kernel k(KernelFamily::gaussian);
  const LocalPolynomial exact(u, z, k, 1);
  for (double h : { 0.03, 0.1, 0.3 }) {
    const auto e = exact.loo_cv_score(h);
    REQUIRE(e);
    CHECK(binned_cv_score(u, z, k, 1, h, 512) ==
          doctest::Approx(*e).epsilon(1e-9));
  }
}

TEST_CASE("cross-validation picks the same bandwidth for z and 1 - z")
{
  // Normal design: sparse tails make tiny bandwidths nearly interpolating.
  const Model m = Model::builtin(ModelId::iii, CovariateLaw::Family::normal);
  const RawDataset raw = sample_replicate(m, 700, derive_seed(20240601, { 1, 5 }));
  std::vector<double> u(raw.covariates);
  std::vector<std::size_t> order(u.size());
  std::iota(order.begin(), order.end(), std::size_t{ 0 });
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return u[a] < u[b]; });
  std::vector<double> su, y, z;
  for (std::size_t i : order) {
    su.push_back(u[i]);
    y.push_back((*raw.responses)[i]);
    z.push_back(1.0 - y.back());
  }
  for (int degree : { 1, 2 }) {
    SmootherSpec spec;
    spec.degree = degree;
    spec.bandwidth = BandwidthRule::parse("cv");
    const auto a = select_bandwidth_detailed(su, y, spec, PluginTarget::homogeneous_pools(1, 700));
    const auto b = select_bandwidth_detailed(su, z, spec, PluginTarget::homogeneous_pools(1, 700));
    CHECK(a.h == b.h);
    for (double h : { 0.02, 0.04, 0.08 }) {
      const auto sy = binned_cv_score(su, y, spec.kernel, degree, h);
      const auto sz = binned_cv_score(su, z, spec.kernel, degree, h);
      CHECK(sy.has_value() == sz.has_value());
      if (sy && sz) {
        CHECK(*sy >= 0.0);
        CHECK(*sy == doctest::Approx(*sz).epsilon(1e-6));
      }
    }
  }
}

TEST_CASE("pinned cross-validated bandwidth on a pooled model (iii) design")
{
  const Model m = Model::builtin(ModelId::iii, CovariateLaw::Family::uniform);
  const PooledDataset pooled = pool_homogeneous(sample_replicate(m, 5000, 1), 5);
  std::vector<double> u, z;
  for (const Group& g : pooled.groups) {
    u.push_back(g.center[0]);
    z.push_back(*g.pooled_negative());
  }
  const double h = select_bandwidth(u, z, SmootherSpec{},
                                    PluginTarget::homogeneous_pools(5, 5000));
  CHECK(std::abs(h - 0.12947326810686499) < 1e-12);
}

TEST_CASE("multivariate local linear reproduces planes")
{
  Rng rng(41);
  std::vector<double> pts;
  std::vector<double> z;
  for (int i = 0; i < 150; ++i) {
    const double a = uniform01(rng), b = uniform01(rng);
    pts.push_back(a);
    pts.push_back(b);
    z.push_back(0.3 + 0.2 * a - 0.7 * b);
  }
  const LocalLinearNd smoother(pts, 2, z, Kernel(KernelFamily::gaussian));
  for (auto [a, b] : { std::pair{ 0.2, 0.3 }, std::pair{ 0.8, 0.5 } }) {
    const std::vector<double> x{ a, b };
    const auto v = smoother.value(0.3, x);
    REQUIRE(v);
    CHECK(std::abs(*v - (0.3 + 0.2 * a - 0.7 * b)) < 1e-10);
  }
}
