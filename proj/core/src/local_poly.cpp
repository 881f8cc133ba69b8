#include "hompool/local_poly.hpp"

#include "hompool/error.hpp"
#include "small_solve.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

namespace hompool {

namespace {

constexpr std::size_t no_skip = std::numeric_limits<std::size_t>::max();

void
check_design(std::span<const double> u, std::span<const double> z)
{
  if (u.empty())
    throw InvalidArgument("local polynomial design is empty");
  if (u.size() != z.size())
    throw InvalidArgument("design covariates and responses differ in length");
  for (std::size_t i = 0; i < u.size(); ++i) {
    if (!std::isfinite(u[i]) || !std::isfinite(z[i]))
      throw InvalidArgument("design contains a non-finite value at index " +
                            std::to_string(i));
  }
}

void
check_bandwidth(double h)
{
  if (!(h > 0.0) || !std::isfinite(h))
    throw InvalidArgument("bandwidth must be positive and finite");
}

} // namespace

const char*
to_string(FitStatus status) noexcept
{
  switch (status) {
    case FitStatus::ok:
      return "ok";
    case FitStatus::near_singular:
      return "near_singular";
    case FitStatus::failed:
      return "failed";
  }
  return "unknown";
}

struct LocalPolynomial::Moments
{
  std::array<double, 2 * max_degree + 1> s{};
  std::array<double, max_degree + 1> t{};
  std::size_t count = 0;
  std::size_t distinct = 0;
  std::size_t begin = 0;
  std::size_t end = 0;
};

LocalPolynomial::LocalPolynomial(std::span<const double> u,
                                 std::span<const double> z, Kernel kernel,
                                 int degree)
  : kernel_(kernel)
  , degree_(degree)
{
  check_design(u, z);
  if (degree < 1 || degree > max_degree)
    throw InvalidArgument("local polynomial degree must be in 1.." +
                          std::to_string(max_degree));
  original_index_.resize(u.size());
  std::iota(original_index_.begin(), original_index_.end(), std::size_t{ 0 });
  std::stable_sort(original_index_.begin(), original_index_.end(),
                   [&](std::size_t a, std::size_t b) { return u[a] < u[b]; });
  u_.reserve(u.size());
  z_.reserve(u.size());
  for (std::size_t i : original_index_) {
    u_.push_back(u[i]);
    z_.push_back(z[i]);
  }
}

FitStatus
LocalPolynomial::accumulate(double h, double x, std::size_t skip,
                            Moments& m) const
{
  const double radius = kernel_.evaluation_radius() * h;
  m.begin = static_cast<std::size_t>(
    std::lower_bound(u_.begin(), u_.end(), x - radius) - u_.begin());
  m.end = static_cast<std::size_t>(
    std::upper_bound(u_.begin(), u_.end(), x + radius) - u_.begin());

  const auto moment_count = static_cast<std::size_t>(2 * degree_ + 1);
  const auto coef_count = static_cast<std::size_t>(degree_ + 1);
  double last = std::numeric_limits<double>::quiet_NaN();
  for (std::size_t j = m.begin; j < m.end; ++j) {
    if (j == skip)
      continue;
    const double d = (u_[j] - x) / h;
    const double w = kernel_(d);
    if (w == 0.0)
      continue;
    ++m.count;
    if (!(u_[j] == last)) {
      ++m.distinct;
      last = u_[j];
    }
    double power = w;
    for (std::size_t k = 0; k < moment_count; ++k) {
      m.s[k] += power;
      if (k < coef_count)
        m.t[k] += power * z_[j];
      power *= d;
    }
  }
  if (m.distinct < coef_count)
    return FitStatus::failed;
  return FitStatus::ok;
}

LocalFit
LocalPolynomial::fit(double h, double x, bool with_weights) const
{
  check_bandwidth(h);
  LocalFit out;
  Moments m;
  out.status = accumulate(h, x, no_skip, m);
  out.local_count = m.count;
  if (out.status != FitStatus::ok)
    return out;

  const auto n = static_cast<std::size_t>(degree_ + 1);
  std::array<double, (max_degree + 1) * (max_degree + 1)> a{};
  std::array<double, 2 * (max_degree + 1)> rhs{};
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < n; ++c)
      a[r * n + c] = m.s[r + c];
    rhs[r] = m.t[r];
  }
  rhs[n] = 1.0;
  if (!detail::solve_small(a, rhs, n, 2)) {
    out.status = FitStatus::near_singular;
    return out;
  }
  if (!with_weights) {
    out.value = rhs[0];
    return out;
  }

  // rhs[n..2n) holds the first row of the inverse moment matrix.
  out.effective_weights.assign(u_.size(), 0.0);
  double value = 0.0;
  for (std::size_t j = m.begin; j < m.end; ++j) {
    const double d = (u_[j] - x) / h;
    const double w = kernel_(d);
    if (w == 0.0)
      continue;
    double poly = 0.0;
    double power = 1.0;
    for (std::size_t k = 0; k < n; ++k) {
      poly += rhs[n + k] * power;
      power *= d;
    }
    const double weight = w * poly;
    out.effective_weights[original_index_[j]] = weight;
    value += weight * z_[j];
  }
  out.value = value;
  return out;
}

std::optional<double>
LocalPolynomial::value(double h, double x) const
{
  return fit(h, x, false).value;
}

LocalDerivatives
LocalPolynomial::derivatives(double h, double x) const
{
  check_bandwidth(h);
  LocalDerivatives out;
  Moments m;
  out.status = accumulate(h, x, no_skip, m);
  out.local_count = m.count;
  if (out.status != FitStatus::ok)
    return out;
  const auto n = static_cast<std::size_t>(degree_ + 1);
  std::array<double, (max_degree + 1) * (max_degree + 1)> a{};
  std::array<double, max_degree + 1> beta{};
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < n; ++c)
      a[r * n + c] = m.s[r + c];
    beta[r] = m.t[r];
  }
  if (!detail::solve_small(a, beta, n)) {
    out.status = FitStatus::near_singular;
    return out;
  }
  double factorial = 1.0;
  double h_power = 1.0;
  for (std::size_t k = 0; k < n; ++k) {
    if (k > 0) {
      factorial *= static_cast<double>(k);
      h_power *= h;
    }
    out.derivative[k] = beta[k] * factorial / h_power;
  }
  return out;
}

std::optional<double>
LocalPolynomial::loo_cv_score(double h) const
{
  check_bandwidth(h);
  const auto n = static_cast<std::size_t>(degree_ + 1);
  double total = 0.0;
  for (std::size_t i = 0; i < u_.size(); ++i) {
    Moments m;
    if (accumulate(h, u_[i], i, m) != FitStatus::ok)
      return std::nullopt;
    std::array<double, (max_degree + 1) * (max_degree + 1)> a{};
    std::array<double, max_degree + 1> row{};
    for (std::size_t r = 0; r < n; ++r) {
      for (std::size_t c = 0; c < n; ++c)
        a[r * n + c] = m.s[r + c];
    }
    row[0] = 1.0;
    if (!detail::solve_small(a, row, n))
      return std::nullopt;
    if (!(row[0] * kernel_(0.0) <= detail::max_loo_inflation))
      return std::nullopt;
    double fit = 0.0;
    for (std::size_t r = 0; r < n; ++r)
      fit += row[r] * m.t[r];
    const double residual = z_[i] - fit;
    total += residual * residual;
  }
  return total / static_cast<double>(u_.size());
}

double
LocalPolynomial::smallest_usable_bandwidth() const
{
  std::vector<double> unique(u_);
  unique.erase(std::unique(unique.begin(), unique.end()), unique.end());
  const auto needed = static_cast<std::size_t>(degree_ + 1);
  if (unique.size() <= needed)
    return std::numeric_limits<double>::infinity();
  double worst = 0.0;
  for (std::size_t i = 0; i < unique.size(); ++i) {
    // The point itself counts as a distinct value for every other point but
    // not for its own leave-one-out fit; take `needed` nearest neighbours.
    std::size_t left = i;
    std::size_t right = i + 1;
    double reach = 0.0;
    for (std::size_t taken = 0; taken < needed; ++taken) {
      const double dl =
        left > 0 ? unique[i] - unique[left - 1]
                 : std::numeric_limits<double>::infinity();
      const double dr =
        right < unique.size() ? unique[right] - unique[i]
                              : std::numeric_limits<double>::infinity();
      if (dl <= dr) {
        reach = dl;
        --left;
      } else {
        reach = dr;
        ++right;
      }
    }
    worst = std::max(worst, reach);
  }
  return worst / kernel_.evaluation_radius();
}

LocalFit
local_poly_fit(std::span<const double> u, std::span<const double> z,
               const Kernel& kernel, int degree, double h, double x)
{
  const LocalPolynomial smoother(u, z, kernel, degree);
  return smoother.fit(h, x, true);
}

LocalFit
local_poly_fit(std::span<const double> u, std::span<const double> z,
               const SmootherSpec& spec, double x)
{
  spec.validate();
  if (spec.bandwidth.mode != BandwidthMode::fixed)
    throw InvalidArgument("local_poly_fit needs a resolved (fixed) bandwidth");
  return local_poly_fit(u, z, spec.kernel, spec.degree, spec.bandwidth.fixed_h,
                        x);
}

double
effective_weight_moments(const LocalFit& fit, std::span<const double> u,
                         double x, int k)
{
  if (!fit.ok())
    throw FitError("effective weight moments need a successful fit");
  if (fit.effective_weights.size() != u.size())
    throw InvalidArgument("fit carries no effective weights for this design");
  if (k < 0)
    throw InvalidArgument("moment order must be nonnegative");
  double sum = 0.0;
  for (std::size_t j = 0; j < u.size(); ++j) {
    if (fit.effective_weights[j] != 0.0)
      sum += fit.effective_weights[j] * std::pow(u[j] - x, k);
  }
  return sum;
}

// --- d-variate local linear ------------------------------------------------

LocalLinearNd::LocalLinearNd(std::span<const double> points, std::size_t dim,
                             std::span<const double> z, Kernel kernel)
  : points_(points.begin(), points.end())
  , z_(z.begin(), z.end())
  , dim_(dim)
  , kernel_(kernel)
{
  if (dim == 0)
    throw InvalidArgument("dimension must be at least 1");
  if (z.empty())
    throw InvalidArgument("local linear design is empty");
  if (points.size() != dim * z.size())
    throw InvalidArgument("design points and responses differ in length");
  for (double v : points_) {
    if (!std::isfinite(v))
      throw InvalidArgument("design contains a non-finite coordinate");
  }
}

FitStatus
LocalLinearNd::solve(double h, std::span<const double> x, std::size_t skip,
                     std::vector<double>& coef, std::size_t& count,
                     std::vector<double>* first_row) const
{
  const std::size_t n = dim_ + 1;
  const double radius = kernel_.evaluation_radius();
  std::vector<double> a(n * n, 0.0);
  coef.assign(n, 0.0);
  std::vector<double> t(n);
  count = 0;
  for (std::size_t j = 0; j < z_.size(); ++j) {
    if (j == skip)
      continue;
    double norm2 = 0.0;
    bool outside = false;
    for (std::size_t c = 0; c < dim_; ++c) {
      const double d = (points_[j * dim_ + c] - x[c]) / h;
      if (std::abs(d) > radius) {
        outside = true;
        break;
      }
      t[c + 1] = d;
      norm2 += d * d;
    }
    if (outside)
      continue;
    const double w = kernel_.radial(norm2);
    if (w == 0.0)
      continue;
    ++count;
    t[0] = 1.0;
    for (std::size_t r = 0; r < n; ++r) {
      for (std::size_t c = r; c < n; ++c)
        a[r * n + c] += w * t[r] * t[c];
      coef[r] += w * t[r] * z_[j];
    }
  }
  if (count < n)
    return FitStatus::failed;
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < r; ++c)
      a[r * n + c] = a[c * n + r];
  }
  if (first_row == nullptr)
    return detail::solve_small(a, coef, n) ? FitStatus::ok
                                           : FitStatus::near_singular;
  std::vector<double> rhs(2 * n, 0.0);
  std::copy(coef.begin(), coef.end(), rhs.begin());
  rhs[n] = 1.0;
  if (!detail::solve_small(a, rhs, n, 2))
    return FitStatus::near_singular;
  std::copy(rhs.begin(), rhs.begin() + static_cast<std::ptrdiff_t>(n),
            coef.begin());
  first_row->assign(rhs.begin() + static_cast<std::ptrdiff_t>(n), rhs.end());
  return FitStatus::ok;
}

LocalFit
LocalLinearNd::fit(double h, std::span<const double> x, bool with_weights) const
{
  check_bandwidth(h);
  if (x.size() != dim_)
    throw InvalidArgument("evaluation point has wrong dimension");
  LocalFit out;
  std::vector<double> coef;
  std::vector<double> row;
  out.status = solve(h, x, no_skip, coef, out.local_count,
                     with_weights ? &row : nullptr);
  if (out.status != FitStatus::ok)
    return out;
  if (!with_weights) {
    out.value = coef[0];
    return out;
  }
  out.effective_weights.assign(z_.size(), 0.0);
  double value = 0.0;
  for (std::size_t j = 0; j < z_.size(); ++j) {
    double norm2 = 0.0;
    double poly = row[0];
    for (std::size_t c = 0; c < dim_; ++c) {
      const double d = (points_[j * dim_ + c] - x[c]) / h;
      norm2 += d * d;
      poly += row[c + 1] * d;
    }
    const double w = kernel_.radial(norm2);
    if (w == 0.0)
      continue;
    out.effective_weights[j] = w * poly;
    value += w * poly * z_[j];
  }
  out.value = value;
  return out;
}

std::optional<double>
LocalLinearNd::value(double h, std::span<const double> x) const
{
  return fit(h, x, false).value;
}

std::optional<double>
LocalLinearNd::loo_cv_score(double h) const
{
  check_bandwidth(h);
  std::vector<double> coef;
  std::size_t count = 0;
  double total = 0.0;
  for (std::size_t i = 0; i < z_.size(); ++i) {
    const std::span<const double> x(points_.data() + i * dim_, dim_);
    if (solve(h, x, i, coef, count, nullptr) != FitStatus::ok)
      return std::nullopt;
    const double residual = z_[i] - coef[0];
    total += residual * residual;
  }
  return total / static_cast<double>(z_.size());
}

} // namespace hompool
