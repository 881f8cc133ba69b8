#include "hompool/model.hpp"

#include "hompool/error.hpp"

#include <boost/math/distributions/normal.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace hompool {

CovariateLaw::CovariateLaw(Family family, double first, double second)
  : family_(family)
  , first_(first)
  , second_(second)
{}

CovariateLaw
CovariateLaw::uniform(double a, double b)
{
  if (!(a < b) || !std::isfinite(a) || !std::isfinite(b))
    throw InvalidArgument("uniform law needs finite a < b");
  return { Family::uniform, a, b };
}

CovariateLaw
CovariateLaw::normal(double mean, double sd)
{
  if (!(sd > 0.0) || !std::isfinite(mean) || !std::isfinite(sd))
    throw InvalidArgument("normal law needs a finite mean and sd > 0");
  return { Family::normal, mean, sd };
}

double
CovariateLaw::sample(Rng& rng) const
{
  if (family_ == Family::uniform)
    return first_ + (second_ - first_) * uniform01(rng);
  return first_ + second_ * standard_normal(rng);
}

double
CovariateLaw::density(double x) const
{
  if (family_ == Family::uniform)
    return (x >= first_ && x <= second_) ? 1.0 / (second_ - first_) : 0.0;
  const double z = (x - first_) / second_;
  return std::exp(-0.5 * z * z) * std::numbers::inv_sqrtpi /
         (std::numbers::sqrt2 * second_);
}

double
CovariateLaw::quantile(double prob) const
{
  if (!(prob > 0.0 && prob < 1.0))
    throw InvalidArgument("quantile probability must lie in (0, 1)");
  if (family_ == Family::uniform)
    return first_ + prob * (second_ - first_);
  return boost::math::quantile(boost::math::normal(first_, second_), prob);
}

double
CovariateLaw::support_lower() const
{
  return family_ == Family::uniform ? first_ : first_ - 10.0 * second_;
}

double
CovariateLaw::support_upper() const
{
  return family_ == Family::uniform ? second_ : first_ + 10.0 * second_;
}

std::string
CovariateLaw::to_string() const
{
  std::ostringstream out;
  out.precision(17);
  out << (family_ == Family::uniform ? "U[" : "N(") << first_ << ','
      << (family_ == Family::uniform ? second_ : second_ * second_)
      << (family_ == Family::uniform ? "]" : ")");
  return out.str();
}

ModelId
parse_model_id(const std::string& text)
{
  if (text == "i" || text == "1")
    return ModelId::i;
  if (text == "ii" || text == "2")
    return ModelId::ii;
  if (text == "iii" || text == "3")
    return ModelId::iii;
  if (text == "iv" || text == "4")
    return ModelId::iv;
  if (text == "const" || text == "constant")
    return ModelId::constant;
  throw InvalidArgument("unknown model '" + text +
                        "' (expected i, ii, iii, iv or const)");
}

const char*
to_string(ModelId id) noexcept
{
  switch (id) {
    case ModelId::i:
      return "i";
    case ModelId::ii:
      return "ii";
    case ModelId::iii:
      return "iii";
    case ModelId::iv:
      return "iv";
    case ModelId::constant:
      return "const";
    case ModelId::custom:
      return "custom";
  }
  return "unknown";
}

Model::Model(ModelId id, std::string name, Curve pi, Curve dpi, Curve d2pi,
             CovariateLaw law)
  : id_(id)
  , name_(std::move(name))
  , pi_(std::move(pi))
  , dpi_(std::move(dpi))
  , d2pi_(std::move(d2pi))
  , law_(law)
{}

namespace {

constexpr double half_pi = 0.5 * std::numbers::pi;

// Model (i): {sin(pi x/2) + 1.2} / [20 + 40 x^2 {sign(x) + 1}], sign(0) = 0.
struct ModelOne
{
  static double s(double x) { return std::sin(half_pi * x) + 1.2; }
  static double ds(double x) { return half_pi * std::cos(half_pi * x); }
  static double d2s(double x) { return -half_pi * half_pi * std::sin(half_pi * x); }
  static double sign(double x) { return (x > 0.0) - (x < 0.0); }
  static double den(double x) { return 20.0 + 40.0 * x * x * (sign(x) + 1.0); }
  static double dden(double x) { return x > 0.0 ? 160.0 * x : 0.0; }
  static double d2den(double x) { return x > 0.0 ? 160.0 : 0.0; }

  static double p(double x) { return s(x) / den(x); }
  static double dp(double x)
  {
    const double d = den(x);
    return (ds(x) * d - s(x) * dden(x)) / (d * d);
  }
  static double d2p(double x)
  {
    const double d = den(x);
    const double d1 = dden(x);
    return d2s(x) / d - 2.0 * ds(x) * d1 / (d * d) - s(x) * d2den(x) / (d * d) +
           2.0 * s(x) * d1 * d1 / (d * d * d);
  }
};

// Model (ii): exp(-4 + 2x) / {8 + 8 exp(-4 + 2x)} = logistic(2x - 4) / 8.
struct ModelTwo
{
  static double sigma(double x) { return 1.0 / (1.0 + std::exp(4.0 - 2.0 * x)); }
  static double p(double x) { return sigma(x) / 8.0; }
  static double dp(double x)
  {
    const double s = sigma(x);
    return 2.0 * s * (1.0 - s) / 8.0;
  }
  static double d2p(double x)
  {
    const double s = sigma(x);
    return 4.0 * s * (1.0 - s) * (1.0 - 2.0 * s) / 8.0;
  }
};

} // namespace

Model
Model::builtin(ModelId id, CovariateLaw::Family family)
{
  const bool uniform = family == CovariateLaw::Family::uniform;
  const auto quad = [](double x) { return x * x / 8.0; };
  const auto dquad = [](double x) { return x / 4.0; };
  const auto d2quad = [](double) { return 0.25; };
  switch (id) {
    case ModelId::i:
      return { id, "i", &ModelOne::p, &ModelOne::dp, &ModelOne::d2p,
               uniform ? CovariateLaw::uniform(-3.0, 3.0)
                       : CovariateLaw::normal(0.0, 1.5) };
    case ModelId::ii:
      return { id, "ii", &ModelTwo::p, &ModelTwo::dp, &ModelTwo::d2p,
               uniform ? CovariateLaw::uniform(-1.0, 4.0)
                       : CovariateLaw::normal(2.0, 1.5) };
    case ModelId::iii:
      return { id, "iii", quad, dquad, d2quad,
               uniform ? CovariateLaw::uniform(0.0, 1.0)
                       : CovariateLaw::normal(0.5, 0.5) };
    case ModelId::iv:
      return { id, "iv", quad, dquad, d2quad,
               uniform ? CovariateLaw::uniform(-1.0, 1.0)
                       : CovariateLaw::normal(0.0, 0.75) };
    case ModelId::constant:
      return constant(0.1, uniform ? CovariateLaw::uniform(0.0, 1.0)
                                   : CovariateLaw::normal(0.5, 0.5));
    case ModelId::custom:
      break;
  }
  throw InvalidArgument("custom models have no built-in definition");
}

Model
Model::constant(double p, CovariateLaw law)
{
  if (!(p >= 0.0 && p < 1.0))
    throw InvalidArgument("constant prevalence must lie in [0, 1)");
  std::ostringstream name;
  name.precision(17);
  name << "const(" << p << ')';
  return { ModelId::constant, name.str(), [p](double) { return p; },
           [](double) { return 0.0; }, [](double) { return 0.0; }, law };
}

Model
Model::custom(std::string name, Curve p, Curve dp, Curve d2p, CovariateLaw law)
{
  if (!p || !dp || !d2p)
    throw InvalidArgument("custom model needs p, p' and p''");
  return { ModelId::custom, std::move(name), std::move(p), std::move(dp),
           std::move(d2p), law };
}

Model
Model::scaled(double delta) const
{
  if (!(delta > 0.0) || !std::isfinite(delta))
    throw InvalidArgument("delta scale must be positive");
  Model out = *this;
  out.delta_ = delta;
  return out;
}

double
Model::q() const
{
  using boost::math::quadrature::gauss_kronrod;
  const auto integrand = [this](double x) {
    return (1.0 - p(x)) * law_.density(x);
  };
  const double lo = law_.support_lower();
  const double hi = law_.support_upper();
  // Split at 0, where model (i) has a kink.
  if (lo < 0.0 && hi > 0.0)
    return gauss_kronrod<double, 61>::integrate(integrand, lo, 0.0, 15, 1e-13) +
           gauss_kronrod<double, 61>::integrate(integrand, 0.0, hi, 15, 1e-13);
  return gauss_kronrod<double, 61>::integrate(integrand, lo, hi, 15, 1e-13);
}

double
Model::sup_p() const
{
  const double lo = law_.family() == CovariateLaw::Family::uniform
                      ? law_.support_lower()
                      : law_.quantile(1e-4);
  const double hi = law_.family() == CovariateLaw::Family::uniform
                      ? law_.support_upper()
                      : law_.quantile(1.0 - 1e-4);
  double sup = 0.0;
  constexpr int points = 4001;
  for (int i = 0; i < points; ++i) {
    const double x = lo + (hi - lo) * i / (points - 1);
    sup = std::max(sup, p(x));
  }
  return sup;
}

void
Model::validate() const
{
  const double lo = law_.family() == CovariateLaw::Family::uniform
                      ? law_.support_lower()
                      : law_.quantile(1e-4);
  const double hi = law_.family() == CovariateLaw::Family::uniform
                      ? law_.support_upper()
                      : law_.quantile(1.0 - 1e-4);
  constexpr int points = 4001;
  for (int i = 0; i < points; ++i) {
    const double x = lo + (hi - lo) * i / (points - 1);
    const double v = p(x);
    if (!(v >= 0.0 && v < 1.0)) {
      std::ostringstream msg;
      msg << "model " << name_ << " has p(" << x << ")=" << v
          << " outside [0, 1)";
      throw InvalidArgument(msg.str());
    }
  }
}

} // namespace hompool
