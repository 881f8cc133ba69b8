#pragma once

#include "hompool/random.hpp"

#include <functional>
#include <string>

namespace hompool {

//! Distribution of a univariate covariate.
class CovariateLaw
{
public:
  enum class Family
  {
    uniform,
    normal
  };

  static CovariateLaw uniform(double a, double b);
  static CovariateLaw normal(double mean, double sd);

  Family family() const noexcept { return family_; }
  //! (a, b) for uniform, (mean, sd) for normal.
  double first() const noexcept { return first_; }
  double second() const noexcept { return second_; }

  double sample(Rng& rng) const;
  double density(double x) const;
  double quantile(double prob) const;
  //! Interval carrying all but a negligible amount of the mass.
  double support_lower() const;
  double support_upper() const;
  std::string to_string() const;

private:
  CovariateLaw(Family family, double first, double second);

  Family family_;
  double first_;
  double second_;
};

enum class ModelId
{
  i,
  ii,
  iii,
  iv,
  constant,
  custom
};

ModelId parse_model_id(const std::string& text);
const char* to_string(ModelId id) noexcept;

//! True prevalence curve p = delta * pi together with its covariate law.
//! Derivatives are analytic for the built-in models.
class Model
{
public:
  using Curve = std::function<double(double)>;

  //! Built-in models (i)-(iv) with the uniform or normal covariate law used
  //! in the simulation tables.
  static Model builtin(ModelId id, CovariateLaw::Family family);
  //! p(x) = p everywhere.
  static Model constant(double p, CovariateLaw law);
  static Model custom(std::string name, Curve p, Curve dp, Curve d2p,
                      CovariateLaw law);

  ModelId id() const noexcept { return id_; }
  const std::string& name() const noexcept { return name_; }
  const CovariateLaw& law() const noexcept { return law_; }

  double delta() const noexcept { return delta_; }
  //! Returns a copy with p replaced by delta * p.
  Model scaled(double delta) const;

  double p(double x) const { return delta_ * pi_(x); }
  double dp(double x) const { return delta_ * dpi_(x); }
  double d2p(double x) const { return delta_ * d2pi_(x); }
  double pi(double x) const { return pi_(x); }
  double density(double x) const { return law_.density(x); }

  //! q = E{1 - p(X)}.
  double q() const;
  //! Largest p over the law's effective support (sampled on a fine grid).
  double sup_p() const;
  //! Throws when p leaves [0, 1) on the support.
  void validate() const;

private:
  Model(ModelId id, std::string name, Curve pi, Curve dpi, Curve d2pi,
        CovariateLaw law);

  ModelId id_;
  std::string name_;
  Curve pi_;
  Curve dpi_;
  Curve d2pi_;
  CovariateLaw law_;
  double delta_ = 1.0;
};

} // namespace hompool
