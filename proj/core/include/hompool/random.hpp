#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <numbers>
#include <random>

namespace hompool {

//! The library's random engine; its output sequence is fixed by the C++
//! standard, and the conversions below avoid implementation-defined
//! distributions so seeded runs are reproducible across toolchains.
using Rng = std::mt19937_64;

//! splitmix64 finalizer.
constexpr std::uint64_t
mix64(std::uint64_t x) noexcept
{
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

//! Derives an independent stream seed from a master seed and a path of
//! indices (e.g. cell, replicate, purpose).
constexpr std::uint64_t
derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> path) noexcept
{
  std::uint64_t s = mix64(master);
  for (std::uint64_t p : path)
    s = mix64(s ^ mix64(p + 0x632be59bd9b4e019ULL));
  return s;
}

//! Uniform draw on [0, 1) with 53 random bits.
inline double
uniform01(Rng& rng)
{
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

//! Unbiased integer in [0, bound) by rejection.
inline std::uint64_t
uniform_index(Rng& rng, std::uint64_t bound)
{
  const std::uint64_t limit = bound == 0 ? 0 : (~std::uint64_t{ 0 } / bound) * bound;
  std::uint64_t r = rng();
  while (r >= limit)
    r = rng();
  return r % bound;
}

//! Standard normal draw (Box-Muller, one value per call).
inline double
standard_normal(Rng& rng)
{
  double u1 = uniform01(rng);
  while (u1 <= 0.0)
    u1 = uniform01(rng);
  const double u2 = uniform01(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

} // namespace hompool
