#pragma once

#include "hompool/dataset.hpp"
#include "hompool/smoother_spec.hpp"

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace hompool {

enum class EstimatorKind
{
  //! Homogeneous pools, local polynomial on (group mean, Z*).
  DH,
  //! Random pools, regression of Y* on individual covariates.
  DM,
  //! Ungrouped local polynomial regression of Y on X.
  LL,
  //! Equal-width bins, exponent 1/m(x).
  DH_binned
};

const char* to_string(EstimatorKind kind) noexcept;
EstimatorKind parse_estimator(const std::string& text);

enum class ClampFlag : std::uint8_t
{
  none,
  clamped_low,
  clamped_high
};

const char* to_string(ClampFlag flag) noexcept;

enum class PointStatus : std::uint8_t
{
  ok,
  //! Too few design points inside the kernel window.
  fit_failed,
  //! Moment matrix numerically singular.
  near_singular,
  //! Binned estimator: the bin containing x holds no data.
  empty_bin
};

const char* to_string(PointStatus status) noexcept;

//! Prevalence estimate on an evaluation grid.
struct EstimateResult
{
  EstimatorKind estimator = EstimatorKind::DH;
  std::size_t dim = 1;
  //! Row-major evaluation points.
  std::vector<double> grid;
  //! Estimated prevalence, in [0, 1]; empty where the point failed.
  std::vector<std::optional<double>> p_hat;
  //! Raw smoother output before clamping (mu for DH, g for DM and LL).
  std::vector<std::optional<double>> mu_hat;
  std::vector<ClampFlag> clamp;
  std::vector<PointStatus> status;
  //! Design points with nonzero kernel weight at each grid point.
  std::vector<std::size_t> local_count;
  //! Root exponent denominator: nu for DH, m(x) for DH_binned, 1 otherwise.
  std::vector<double> exponent;
  double bandwidth = 0.0;
  //! Nominal group size.
  double nu = 1.0;
  //! Moment estimate of E{1 - p(X)} (DM only).
  std::optional<double> q_hat;

  std::size_t size() const noexcept { return p_hat.size(); }
  std::size_t failed_count() const noexcept;
  std::size_t clamped_count() const noexcept;

  bool operator==(const EstimateResult&) const = default;
};

//! Equispaced grid of `points` values on [a, b].
std::vector<double> linspace(double a, double b, std::size_t points);

//! Tensor grid of `per_axis` points per axis over [0,1]^dim (row-major).
std::vector<double> unit_cube_grid(std::size_t dim, std::size_t per_axis);

//! Homogeneous-pool estimator: mu smoothed from (group mean, Z*), then
//! p = 1 - clamp(mu)^(1/nu).
EstimateResult
estimate_dh(const PooledDataset& pooled, const SmootherSpec& spec,
            std::span<const double> grid);

//! Binned estimator on [0,1]^d: local linear mu from (bin center, Z*) over
//! nonempty bins, p = 1 - clamp(mu)^(1/m(x)). For univariate generic pools
//! (unequal groups from a file) m(x) is the size of the group with the
//! nearest center.
EstimateResult
estimate_dh_binned(const PooledDataset& pooled, const SmootherSpec& spec,
                   std::span<const double> grid);

//! Ungrouped local polynomial estimator, clamped to [0, 1].
EstimateResult
estimate_ll(const RawDataset& raw, const SmootherSpec& spec,
            std::span<const double> grid);

//! Random-pool estimator: g regresses Y* on the individual covariates,
//! q = (mean Z*)^(1/nu) and p = 1 - (1 - g) / q^(nu-1), clamped.
EstimateResult
estimate_dm(const PooledDataset& pooled, const SmootherSpec& spec,
            std::span<const double> grid);

} // namespace hompool
