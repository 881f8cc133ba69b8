#pragma once

#include "hompool/kernel.hpp"
#include "hompool/smoother_spec.hpp"

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <vector>

namespace hompool {

enum class FitStatus
{
  ok,
  near_singular,
  failed
};

const char* to_string(FitStatus status) noexcept;

//! Result of a local polynomial fit at one point.
struct LocalFit
{
  //! Fitted value; empty unless `status == FitStatus::ok`.
  std::optional<double> value;
  //! Normalized effective weights in the original design order. Only filled
  //! when requested; they sum to one and reproduce `value` as a linear
  //! combination of the responses.
  std::vector<double> effective_weights;
  //! Number of design points with nonzero kernel weight.
  std::size_t local_count = 0;
  FitStatus status = FitStatus::failed;

  bool ok() const noexcept { return status == FitStatus::ok; }
};

//! Local polynomial estimates of the curve and its derivatives at one point.
struct LocalDerivatives
{
  FitStatus status = FitStatus::failed;
  std::size_t local_count = 0;
  //! derivative[k] estimates the k-th derivative, k = 0..degree.
  std::array<double, max_degree + 1> derivative{};

  bool ok() const noexcept { return status == FitStatus::ok; }
};

//! Univariate local polynomial regression of `z` on `u`.
//!
//! The design is copied and sorted once so that each fit only visits the
//! points inside the kernel window. Ties keep their input order. All member
//! functions are const and safe to call concurrently.
class LocalPolynomial
{
public:
  LocalPolynomial(std::span<const double> u, std::span<const double> z,
                  Kernel kernel, int degree);

  std::size_t size() const noexcept { return u_.size(); }
  int degree() const noexcept { return degree_; }
  const Kernel& kernel() const noexcept { return kernel_; }
  double min_u() const noexcept { return u_.front(); }
  double max_u() const noexcept { return u_.back(); }

  LocalFit fit(double h, double x, bool with_weights = false) const;
  std::optional<double> value(double h, double x) const;
  LocalDerivatives derivatives(double h, double x) const;

  //! Mean squared leave-one-out prediction error, or empty when some
  //! leave-one-out fit fails at this bandwidth.
  std::optional<double> loo_cv_score(double h) const;

  //! Smallest bandwidth for which every leave-one-out fit has degree+1
  //! distinct points inside the kernel's evaluation radius.
  double smallest_usable_bandwidth() const;

private:
  struct Moments;
  FitStatus accumulate(double h, double x, std::size_t skip,
                       Moments& moments) const;

  std::vector<double> u_;
  std::vector<double> z_;
  std::vector<std::size_t> original_index_;
  Kernel kernel_;
  int degree_;
};

//! One-shot local polynomial fit with a fixed bandwidth, returning effective
//! weights.
LocalFit
local_poly_fit(std::span<const double> u, std::span<const double> z,
               const Kernel& kernel, int degree, double h, double x);

//! Same, with kernel, degree and bandwidth taken from `spec`, whose
//! bandwidth rule must be fixed.
LocalFit
local_poly_fit(std::span<const double> u, std::span<const double> z,
               const SmootherSpec& spec, double x);

//! sum_j w_j (u_j - x)^k over the normalized effective weights of `fit`.
//! Throws FitError when the fit did not succeed or carries no weights.
double
effective_weight_moments(const LocalFit& fit, std::span<const double> u,
                         double x, int k);

//! d-variate local linear regression with a radially symmetric kernel.
//! `points` is row-major, `dim` coordinates per point.
class LocalLinearNd
{
public:
  LocalLinearNd(std::span<const double> points, std::size_t dim,
                std::span<const double> z, Kernel kernel);

  std::size_t size() const noexcept { return z_.size(); }
  std::size_t dim() const noexcept { return dim_; }

  LocalFit fit(double h, std::span<const double> x,
               bool with_weights = false) const;
  std::optional<double> value(double h, std::span<const double> x) const;
  std::optional<double> loo_cv_score(double h) const;

private:
  FitStatus solve(double h, std::span<const double> x, std::size_t skip,
                  std::vector<double>& coef, std::size_t& count,
                  std::vector<double>* first_row) const;

  std::vector<double> points_;
  std::vector<double> z_;
  std::size_t dim_;
  Kernel kernel_;
};

} // namespace hompool
