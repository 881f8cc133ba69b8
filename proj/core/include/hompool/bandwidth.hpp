#pragma once

#include "hompool/smoother_spec.hpp"

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

namespace hompool {

//! How the smoothed curve m relates to the prevalence curve p. The plug-in
//! rule needs this to translate pilot estimates of m into p, p', p'' and to
//! pick the matching variance and bias expressions.
struct PluginTarget
{
  enum class Kind
  {
    //! p = m (ungrouped local polynomial regression of Y on X).
    direct,
    //! p = 1 - m^(1/nu), m smoothed from homogeneous pooled negatives.
    homogeneous,
    //! p = 1 - (1 - m) / q^(nu-1), m smoothed from random-pool positives.
    random_pools
  };

  Kind kind = Kind::direct;
  int nu = 1;
  //! Number of individuals N; 0 means "nu times the design size" for
  //! homogeneous pools and "design size" otherwise.
  std::size_t individuals = 0;
  //! E{1 - p(X)}, required for random pools.
  double q = 1.0;
  //! Integration interval for the estimated error; empty means the 5% and
  //! 95% empirical quantiles of the design covariates.
  std::optional<double> lower;
  std::optional<double> upper;

  static PluginTarget homogeneous_pools(int nu, std::size_t individuals = 0);
  static PluginTarget random(int nu, double q, std::size_t individuals = 0);
};

//! Designs with at most this many points use exact leave-one-out
//! cross-validation; larger designs are first binned onto
//! `cv_bin_count` equispaced locations.
inline constexpr std::size_t cv_exact_limit = 500;
inline constexpr std::size_t cv_bin_count = 512;

struct BandwidthSelection
{
  double h = 0.0;
  BandwidthMode mode = BandwidthMode::fixed;
  std::vector<double> candidates;
  //! Cross-validation scores (empty entry: some fit failed), or estimated
  //! integrated squared error for the plug-in rule.
  std::vector<std::optional<double>> scores;
  //! Cross-validated bandwidth underlying the plug-in pilot (plug-in only).
  std::optional<double> cv_h;
  //! True when the scores were computed on binned data.
  bool binned = false;
};

//! Selects a bandwidth for smoothing `z` on `u` with `spec`. Fixed rules
//! return their value. Throws BandwidthError when no candidate is usable.
BandwidthSelection
select_bandwidth_detailed(std::span<const double> u, std::span<const double> z,
                          const SmootherSpec& spec,
                          const PluginTarget& target = {});

double
select_bandwidth(std::span<const double> u, std::span<const double> z,
                 const SmootherSpec& spec, const PluginTarget& target = {});

//! Leave-one-out score of the degree-`degree` smoother after binning the
//! design onto `bins` equispaced points (exact for the binned data).
std::optional<double>
binned_cv_score(std::span<const double> u, std::span<const double> z,
                const Kernel& kernel, int degree, double h,
                std::size_t bins = cv_bin_count);

//! Cross-validated bandwidth for the d-variate local linear smoother
//! (`points` row-major). Candidates default to the grid for a unit range.
BandwidthSelection
select_bandwidth_nd(std::span<const double> points, std::size_t dim,
                    std::span<const double> z, const SmootherSpec& spec);

//! Gaussian kernel density estimate at `x` with the normal-reference
//! bandwidth 1.06 min(sd, IQR/1.349) n^(-1/5).
class NormalReferenceDensity
{
public:
  explicit NormalReferenceDensity(std::span<const double> sample);
  double operator()(double x) const;
  double bandwidth() const noexcept { return h_; }

private:
  std::vector<double> sample_;
  double h_;
};

} // namespace hompool
