#include "hompool/error.hpp"
#include "hompool/pooling.hpp"
#include "hompool/random.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <string>

using namespace hompool;

namespace {

RawDataset
random_raw(std::uint64_t seed, std::size_t n, double p = 0.3)
{
  Rng rng(seed);
  std::vector<double> x(n);
  std::vector<std::uint8_t> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    x[i] = uniform01(rng);
    y[i] = uniform01(rng) < p;
  }
  return RawDataset::univariate(std::move(x), std::move(y));
}

// Multiset of all member covariates.
std::vector<double>
members(const PooledDataset& pooled)
{
  std::vector<double> all;
  for (const Group& g : pooled.groups)
    all.insert(all.end(), g.member_covariates.begin(), g.member_covariates.end());
  std::sort(all.begin(), all.end());
  return all;
}

} // namespace

TEST_CASE("homogeneous pools are sorted contiguous groups")
{
  const RawDataset raw = RawDataset::univariate({ 3, 1, 2, 6, 5, 4 });
  const PooledDataset p = pool_homogeneous(raw, 3);
  REQUIRE(p.groups.size() == 2);
  CHECK(p.groups[0].member_covariates == std::vector<double>{ 1, 2, 3 });
  CHECK(p.groups[1].member_covariates == std::vector<double>{ 4, 5, 6 });
  CHECK(p.groups[0].center[0] == 2.0);
  CHECK(p.groups[1].center[0] == 5.0);
  CHECK(p.strategy == PoolingStrategy::homogeneous_sorted);
  CHECK(p.contiguous());
  CHECK(!p.has_results());
  CHECK(*p.common_size() == 3);
}

TEST_CASE("nu = 1 gives singleton groups")
{
  const RawDataset raw = random_raw(1, 20);
  const PooledDataset p = pool_homogeneous(raw, 1);
  REQUIRE(p.groups.size() == 20);
  std::vector<double> sorted = raw.covariates;
  std::sort(sorted.begin(), sorted.end());
  for (std::size_t j = 0; j < 20; ++j)
    CHECK(p.groups[j].center[0] == sorted[j]);
}

TEST_CASE("pooled result is the max of member responses for every pattern, nu <= 10")
{
  for (int nu = 1; nu <= 10; ++nu) {
    std::vector<double> x(static_cast<std::size_t>(nu));
    std::iota(x.begin(), x.end(), 0.0);
    for (unsigned mask = 0; mask < (1u << nu); ++mask) {
      std::vector<std::uint8_t> y(static_cast<std::size_t>(nu));
      for (int i = 0; i < nu; ++i)
        y[static_cast<std::size_t>(i)] = (mask >> i) & 1u;
      const PooledDataset p =
        pool_homogeneous(RawDataset::univariate(x, y), nu);
      REQUIRE(p.groups.size() == 1);
      CHECK(*p.groups[0].pooled_positive == (mask != 0 ? 1 : 0));
      CHECK(*p.groups[0].pooled_negative() == (mask == 0 ? 1 : 0));
    }
  }
  const PooledDataset p = pool_homogeneous(
    RawDataset::univariate({ 0.1, 0.2, 0.3 }, std::vector<std::uint8_t>{ 0, 1, 0 }),
    3);
  CHECK(*p.groups[0].pooled_positive == 1);
  CHECK(*p.groups[0].pooled_negative() == 0);
}

TEST_CASE("sorted and random pools partition the sample")
{
  const RawDataset raw = random_raw(2, 300);
  for (int nu : { 1, 3, 5, 10, 300 }) {
    const PooledDataset h = pool_homogeneous(raw, nu);
    const PooledDataset r = pool_random(raw, nu, 9);
    std::vector<double> sorted = raw.covariates;
    std::sort(sorted.begin(), sorted.end());
    CHECK(members(h) == sorted);
    CHECK(members(r) == sorted);
    CHECK(h.groups.size() == 300 / static_cast<std::size_t>(nu));
    CHECK(r.groups.size() == h.groups.size());
    for (std::size_t j = 0; j + 1 < h.groups.size(); ++j) {
      const auto& a = h.groups[j].member_covariates;
      const auto& b = h.groups[j + 1].member_covariates;
      CHECK(*std::max_element(a.begin(), a.end()) <=
            *std::min_element(b.begin(), b.end()));
    }
  }
  CHECK(pool_random(raw, 300, 4).groups.size() == 1);
}

TEST_CASE("homogeneous pooling is invariant to input order")
{
  const RawDataset raw = random_raw(3, 60);
  RawDataset shuffled = raw;
  Rng rng(4);
  std::vector<std::size_t> perm(60);
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);
  for (std::size_t i = 0; i < 60; ++i) {
    shuffled.covariates[i] = raw.covariates[perm[i]];
    (*shuffled.responses)[i] = (*raw.responses)[perm[i]];
  }
  const PooledDataset a = pool_homogeneous(raw, 6);
  const PooledDataset b = pool_homogeneous(shuffled, 6);
  REQUIRE(a.groups.size() == b.groups.size());
  for (std::size_t j = 0; j < a.groups.size(); ++j) {
    CHECK(a.groups[j].member_covariates == b.groups[j].member_covariates);
    CHECK(a.groups[j].pooled_positive == b.groups[j].pooled_positive);
  }
}

TEST_CASE("ties are broken by original index")
{
  const RawDataset raw = RawDataset::univariate(
    { 1.0, 0.0, 1.0, 1.0 }, std::vector<std::uint8_t>{ 1, 0, 0, 0 });
  const PooledDataset p = pool_homogeneous(raw, 2);
  // Sorted order: index 1 (0.0), then indices 0, 2, 3 (all 1.0).
  CHECK(*p.groups[0].pooled_positive == 1);
  CHECK(*p.groups[1].pooled_positive == 0);
}

TEST_CASE("pooling preconditions")
{
  const RawDataset raw = random_raw(5, 10);
  try {
    pool_homogeneous(raw, 3);
    FAIL("expected an error");
  } catch (const PoolingError& e) {
    CHECK(std::string(e.what()).find("pool_binned") != std::string::npos);
  }
  CHECK_THROWS_AS(pool_random(raw, 4, 1), PoolingError);
  CHECK_THROWS_AS(pool_homogeneous(raw, 0), PoolingError);
  RawDataset two;
  two.dim = 2;
  two.covariates = { 0.1, 0.2, 0.3, 0.4 };
  CHECK_THROWS_AS(pool_homogeneous(two, 1), PoolingError);
}

TEST_CASE("random partition is seeded and pinned")
{
  std::vector<double> x(10);
  std::iota(x.begin(), x.end(), 0.0);
  const RawDataset raw = RawDataset::univariate(x);
  const PooledDataset a = pool_random(raw, 5, 42);
  const PooledDataset b = pool_random(raw, 5, 42);
  CHECK(a == b);
  REQUIRE(a.groups.size() == 2);
  CHECK(a.groups[0].member_covariates == std::vector<double>{ 1, 7, 9, 0, 3 });
  CHECK(a.groups[1].member_covariates == std::vector<double>{ 8, 4, 2, 5, 6 });
  CHECK(!(pool_random(raw, 5, 43) == a));
}

TEST_CASE("binned pooling geometry")
{
  SUBCASE("d = 1, N = 100, nu = 10 gives ten bins of width 0.1")
  {
    std::vector<double> x(100);
    for (std::size_t i = 0; i < 100; ++i)
      x[i] = (static_cast<double>(i) + 0.5) / 100.0;
    const PooledDataset p = pool_binned(RawDataset::univariate(x), 10.0);
    REQUIRE(p.bins);
    CHECK(p.bins->bins_per_axis == 10);
    CHECK(p.bins->width == doctest::Approx(0.1));
    REQUIRE(p.groups.size() == 10);
    for (std::size_t k = 0; k < 10; ++k) {
      CHECK(p.groups[k].center[0] ==
            doctest::Approx(0.05 + 0.1 * static_cast<double>(k)));
      CHECK(p.groups[k].size == 10);
    }
  }
  SUBCASE("d = 2, N = 100, nu = 4 gives a 5 x 5 grid")
  {
    RawDataset raw;
    raw.dim = 2;
    Rng rng(6);
    for (int i = 0; i < 200; ++i)
      raw.covariates.push_back(uniform01(rng));
    const PooledDataset p = pool_binned(raw, 4.0);
    REQUIRE(p.bins);
    CHECK(p.bins->bins_per_axis == 5);
    CHECK(p.bins->bin_count() == 25);
    CHECK(p.bins->width == doctest::Approx(0.2));
    std::size_t total = 0;
    for (std::size_t c : p.bins->counts)
      total += c;
    CHECK(total == 100);
  }
  SUBCASE("bins are (lo, hi] with zero in the first bin")
  {
    BinGeometry g;
    g.bins_per_axis = 10;
    g.width = 0.1;
    CHECK(*g.axis_index(0.0) == 0);
    CHECK(*g.axis_index(0.1) == 0);
    CHECK(*g.axis_index(std::nextafter(0.1, 1.0)) == 1);
    CHECK(*g.axis_index(0.15) == 1);
    CHECK(*g.axis_index(1.0) == 9);
    CHECK(!g.axis_index(-1e-12));
    CHECK(!g.axis_index(1.0 + 1e-12));
  }
  SUBCASE("points outside the cube are counted, not binned")
  {
    std::vector<double> x{ -0.5, 0.2, 0.4, 0.6, 0.8, 1.5 };
    const PooledDataset p = pool_binned(RawDataset::univariate(x), 1.5);
    REQUIRE(p.bins);
    CHECK(p.bins->bins_per_axis == 4);
    CHECK(p.bins->outside == 2);
    CHECK(p.individuals() == 4);
  }
  SUBCASE("empty bins carry no group")
  {
    const PooledDataset p =
      pool_binned(RawDataset::univariate({ 0.05, 0.06, 0.07, 0.08 }), 1.0);
    CHECK(p.bins->bins_per_axis == 4);
    CHECK(p.groups.size() == 1);
    CHECK(p.bins->counts == std::vector<std::size_t>{ 4, 0, 0, 0 });
  }
  SUBCASE("non-integer J is refused with nearby valid nu")
  {
    std::vector<double> x(100, 0.5);
    try {
      pool_binned(RawDataset::univariate(x), 7.0);
      FAIL("expected an error");
    } catch (const PoolingError& e) {
      const std::string msg = e.what();
      CHECK(msg.find("7.1428") != std::string::npos);
      CHECK(msg.find("6.6666") != std::string::npos);
    }
  }
  SUBCASE("group results aggregate responses in the bin")
  {
    const PooledDataset p = pool_binned(
      RawDataset::univariate({ 0.1, 0.2, 0.7, 0.8 },
                             std::vector<std::uint8_t>{ 0, 1, 0, 0 }),
      2.0);
    REQUIRE(p.groups.size() == 2);
    CHECK(*p.groups[0].pooled_positive == 1);
    CHECK(*p.groups[1].pooled_positive == 0);
  }
}

TEST_CASE("pooled negative probability")
{
  CHECK(pooled_negative_probability(std::vector<double>{ 0.0, 0.0, 0.0 }) == 1.0);
  CHECK(pooled_negative_probability(std::vector<double>{ 0.5, 0.5 }) == 0.25);

  // Brute force over all 2^4 outcome vectors.
  const std::vector<double> p{ 0.1, 0.2, 0.3, 0.4 };
  double negative = 0.0;
  double total = 0.0;
  for (unsigned mask = 0; mask < 16; ++mask) {
    double prob = 1.0;
    for (int i = 0; i < 4; ++i)
      prob *= (mask >> i) & 1u ? p[static_cast<std::size_t>(i)]
                               : 1.0 - p[static_cast<std::size_t>(i)];
    total += prob;
    if (mask == 0)
      negative += prob;
  }
  CHECK(total == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(pooled_negative_probability(p) == doctest::Approx(negative).epsilon(1e-15));
  CHECK(pooled_negative_probability(p) == doctest::Approx(0.3024).epsilon(1e-12));
  CHECK_THROWS_AS(pooled_negative_probability(std::vector<double>{ 1.0 }),
                  InvalidArgument);
}
