#include "hompool/kernel.hpp"

#include "hompool/error.hpp"

#include <cmath>
#include <numbers>

namespace hompool {

namespace {
// exp(-8.5^2 / 2) ~ 2.2e-16
constexpr double gaussian_cutoff = 8.5;
} // namespace

Kernel
Kernel::from_name(std::string_view name)
{
  if (name == "gaussian" || name == "normal")
    return Kernel(KernelFamily::gaussian);
  if (name == "epanechnikov" || name == "epa")
    return Kernel(KernelFamily::epanechnikov);
  if (name == "uniform" || name == "box")
    return Kernel(KernelFamily::uniform);
  throw InvalidArgument("unknown kernel '" + std::string(name) +
                        "' (expected gaussian, epanechnikov or uniform)");
}

std::string
Kernel::name() const
{
  switch (family_) {
    case KernelFamily::gaussian:
      return "gaussian";
    case KernelFamily::epanechnikov:
      return "epanechnikov";
    case KernelFamily::uniform:
      return "uniform";
  }
  return "unknown";
}

double
Kernel::operator()(double u) const noexcept
{
  switch (family_) {
    case KernelFamily::gaussian:
      if (std::abs(u) > gaussian_cutoff)
        return 0.0;
      return std::exp(-0.5 * u * u) * (0.5 * std::numbers::inv_sqrtpi *
                                       std::numbers::sqrt2);
    case KernelFamily::epanechnikov:
      return std::abs(u) <= 1.0 ? 0.75 * (1.0 - u * u) : 0.0;
    case KernelFamily::uniform:
      return std::abs(u) <= 1.0 ? 0.5 : 0.0;
  }
  return 0.0;
}

double
Kernel::radial(double norm_squared) const noexcept
{
  switch (family_) {
    case KernelFamily::gaussian:
      if (norm_squared > gaussian_cutoff * gaussian_cutoff)
        return 0.0;
      return std::exp(-0.5 * norm_squared);
    case KernelFamily::epanechnikov:
      return norm_squared <= 1.0 ? 1.0 - norm_squared : 0.0;
    case KernelFamily::uniform:
      return norm_squared <= 1.0 ? 1.0 : 0.0;
  }
  return 0.0;
}

double
Kernel::support_radius() const noexcept
{
  return compact() ? 1.0 : std::numeric_limits<double>::infinity();
}

double
Kernel::evaluation_radius() const noexcept
{
  return compact() ? 1.0 : gaussian_cutoff;
}

double
Kernel::second_moment() const noexcept
{
  switch (family_) {
    case KernelFamily::gaussian:
      return 1.0;
    case KernelFamily::epanechnikov:
      return 0.2;
    case KernelFamily::uniform:
      return 1.0 / 3.0;
  }
  return 0.0;
}

double
Kernel::roughness() const noexcept
{
  switch (family_) {
    case KernelFamily::gaussian:
      return 0.5 * std::numbers::inv_sqrtpi;
    case KernelFamily::epanechnikov:
      return 0.6;
    case KernelFamily::uniform:
      return 0.5;
  }
  return 0.0;
}

} // namespace hompool
