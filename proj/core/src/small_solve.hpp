#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>

namespace hompool::detail {

//! Relative pivot below which a moment matrix is treated as singular.
inline constexpr double singular_pivot = 1e-12;

//! Largest leave-one-out inflation K(0) (S^-1)_00 accepted by cross-validation;
//! 99 corresponds to a full-fit leverage of 0.99.
inline constexpr double max_loo_inflation = 99.0;

//! Solves the dense n-by-n system `a x = b` for `rhs_count` right-hand sides
//! stored column-major in `b` (n entries each). `a` is row-major and is
//! overwritten. Partial pivoting; returns false when a pivot is smaller than
//! `singular_pivot` times the largest entry of the original matrix.
inline bool
solve_small(std::span<double> a, std::span<double> b, std::size_t n,
            std::size_t rhs_count = 1)
{
  double scale = 0.0;
  for (std::size_t i = 0; i < n * n; ++i)
    scale = std::max(scale, std::abs(a[i]));
  if (!(scale > 0.0) || !std::isfinite(scale))
    return false;

  for (std::size_t col = 0; col < n; ++col) {
    std::size_t pivot = col;
    for (std::size_t r = col + 1; r < n; ++r) {
      if (std::abs(a[r * n + col]) > std::abs(a[pivot * n + col]))
        pivot = r;
    }
    if (std::abs(a[pivot * n + col]) < singular_pivot * scale)
      return false;
    if (pivot != col) {
      for (std::size_t c = 0; c < n; ++c)
        std::swap(a[col * n + c], a[pivot * n + c]);
      for (std::size_t k = 0; k < rhs_count; ++k)
        std::swap(b[k * n + col], b[k * n + pivot]);
    }
    const double diag = a[col * n + col];
    for (std::size_t r = col + 1; r < n; ++r) {
      const double factor = a[r * n + col] / diag;
      if (factor == 0.0)
        continue;
      for (std::size_t c = col; c < n; ++c)
        a[r * n + c] -= factor * a[col * n + c];
      for (std::size_t k = 0; k < rhs_count; ++k)
        b[k * n + r] -= factor * b[k * n + col];
    }
  }
  for (std::size_t k = 0; k < rhs_count; ++k) {
    for (std::size_t i = n; i-- > 0;) {
      double sum = b[k * n + i];
      for (std::size_t c = i + 1; c < n; ++c)
        sum -= a[i * n + c] * b[k * n + c];
      b[k * n + i] = sum / a[i * n + i];
    }
  }
  return true;
}

} // namespace hompool::detail
