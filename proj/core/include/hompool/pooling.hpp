#pragma once

#include "hompool/dataset.hpp"

#include <cstdint>
#include <span>

namespace hompool {

//! Sorts a univariate sample (ties by original index) and forms groups of
//! `nu` consecutive order statistics. Requires nu | N.
PooledDataset
pool_homogeneous(const RawDataset& raw, int nu);

//! Uniformly random partition into N/nu groups of size nu.
PooledDataset
pool_random(const RawDataset& raw, int nu, std::uint64_t seed);

//! Bins [0,1]^d into J^d cubes of side (nu/N)^(1/d); J = (N/nu)^(1/d) must
//! be an integer. Only nonempty bins become groups; points outside the
//! cube are counted in the geometry and otherwise ignored.
PooledDataset
pool_binned(const RawDataset& raw, double nu);

//! prod_i (1 - p_i): probability that a pool with member prevalences p
//! tests negative.
double
pooled_negative_probability(std::span<const double> p);

} // namespace hompool
