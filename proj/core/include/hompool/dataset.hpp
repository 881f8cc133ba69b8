#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace hompool {

//! Individual-level sample: N covariate points of dimension d with optional
//! binary responses.
struct RawDataset
{
  std::size_t dim = 1;
  //! Row-major, `dim` values per individual.
  std::vector<double> covariates;
  std::optional<std::vector<std::uint8_t>> responses;

  static RawDataset univariate(std::vector<double> x,
                               std::optional<std::vector<std::uint8_t>> y = {});

  std::size_t size() const noexcept
  {
    return dim == 0 ? 0 : covariates.size() / dim;
  }
  bool has_responses() const noexcept { return responses.has_value(); }
  std::span<const double> point(std::size_t i) const
  {
    return { covariates.data() + i * dim, dim };
  }
  //! Covariate of individual i in a univariate dataset.
  double x(std::size_t i) const { return covariates[i]; }

  //! Throws InvalidArgument when an invariant is violated.
  void validate() const;

  bool operator==(const RawDataset&) const = default;
};

struct Group
{
  std::string id;
  //! Row-major member covariates.
  std::vector<double> member_covariates;
  std::size_t size = 0;
  //! Member mean (sorted, random, generic) or bin center (binned).
  std::vector<double> center;
  //! Y*: 1 when at least one member is positive; empty when unknown.
  std::optional<std::uint8_t> pooled_positive;
  //! Linear bin index for binned pooling.
  std::optional<std::size_t> bin;

  //! Z* = 1 - Y*.
  std::optional<std::uint8_t> pooled_negative() const
  {
    if (!pooled_positive)
      return std::nullopt;
    return static_cast<std::uint8_t>(1 - *pooled_positive);
  }

  bool operator==(const Group&) const = default;
};

enum class PoolingStrategy
{
  homogeneous_sorted,
  random,
  binned,
  //! Groups supplied from outside without a recognised structure.
  generic
};

const char* to_string(PoolingStrategy strategy) noexcept;

//! Equal-width bins partitioning [0,1]^d. Bin k along an axis is the
//! interval (k w, (k+1) w]; the point 0 belongs to bin 0.
struct BinGeometry
{
  std::size_t dim = 1;
  std::size_t bins_per_axis = 0;
  double width = 0.0;
  //! Individuals per bin, row-major over (k_1, ..., k_d).
  std::vector<std::size_t> counts;
  //! Individuals outside [0,1]^d (not binned).
  std::size_t outside = 0;

  std::size_t bin_count() const noexcept { return counts.size(); }
  //! Bin index of a coordinate in [0,1]; empty outside.
  std::optional<std::size_t> axis_index(double coordinate) const;
  //! Linear bin index of a point; empty outside the cube.
  std::optional<std::size_t> bin_of(std::span<const double> point) const;
  std::vector<double> center(std::size_t linear) const;

  bool operator==(const BinGeometry&) const = default;
};

struct PooledDataset
{
  std::vector<Group> groups;
  PoolingStrategy strategy = PoolingStrategy::generic;
  //! Nominal group size.
  double nu = 1.0;
  std::size_t dim = 1;
  std::optional<BinGeometry> bins;

  //! Common group size, or empty when sizes differ.
  std::optional<std::size_t> common_size() const;
  std::size_t individuals() const;
  //! True when every group result is known.
  bool has_results() const;
  //! Univariate contiguity: max member of group j <= min member of group
  //! j+1 after ordering groups by center.
  bool contiguous() const;

  bool operator==(const PooledDataset&) const = default;
};

} // namespace hompool
