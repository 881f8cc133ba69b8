#pragma once

#include <limits>
#include <string>
#include <string_view>

namespace hompool {

enum class KernelFamily
{
  gaussian,
  epanechnikov,
  uniform
};

//! Symmetric, nonnegative smoothing kernel normalized to integrate to one.
//!
//! The gaussian kernel has unbounded support; for evaluation it is truncated
//! at `evaluation_radius()` standard deviations, beyond which its value is
//! below 1e-15 of the peak.
class Kernel
{
public:
  constexpr Kernel() = default;
  constexpr explicit Kernel(KernelFamily family)
    : family_(family)
  {}

  static Kernel from_name(std::string_view name);

  KernelFamily family() const noexcept { return family_; }
  std::string name() const;

  //! K(u).
  double operator()(double u) const noexcept;

  //! Radial profile used for the d-variate smoother: K evaluated at the
  //! Euclidean norm, unnormalized (normalization cancels in the fit).
  double radial(double norm_squared) const noexcept;

  //! Support radius; infinity for the gaussian kernel.
  double support_radius() const noexcept;

  //! Radius beyond which the kernel is treated as zero when evaluating.
  double evaluation_radius() const noexcept;

  bool compact() const noexcept { return family_ != KernelFamily::gaussian; }

  //! Second moment b = int u^2 K(u) du.
  double second_moment() const noexcept;

  //! Roughness R(K) = int K(u)^2 du.
  double roughness() const noexcept;

private:
  KernelFamily family_ = KernelFamily::gaussian;
};

} // namespace hompool
