#include "hompool/smoother_spec.hpp"

#include "hompool/error.hpp"

#include <cmath>
#include <cstdlib>
#include <sstream>

namespace hompool {

BandwidthRule
BandwidthRule::fixed(double h)
{
  BandwidthRule rule;
  rule.mode = BandwidthMode::fixed;
  rule.fixed_h = h;
  rule.validate();
  return rule;
}

BandwidthRule
BandwidthRule::cross_validation(std::vector<double> candidates)
{
  BandwidthRule rule;
  rule.mode = BandwidthMode::cross_validation;
  rule.candidates = std::move(candidates);
  rule.validate();
  return rule;
}

BandwidthRule
BandwidthRule::plugin(std::vector<double> candidates)
{
  BandwidthRule rule;
  rule.mode = BandwidthMode::plugin;
  rule.candidates = std::move(candidates);
  rule.validate();
  return rule;
}

BandwidthRule
BandwidthRule::parse(const std::string& text)
{
  if (text == "cv")
    return cross_validation();
  if (text == "plugin")
    return plugin();
  if (text.rfind("fixed:", 0) == 0) {
    const std::string value = text.substr(6);
    char* end = nullptr;
    const double h = std::strtod(value.c_str(), &end);
    if (value.empty() || end != value.c_str() + value.size())
      throw InvalidArgument("bad bandwidth value in '" + text + "'");
    return fixed(h);
  }
  throw InvalidArgument("bandwidth must be fixed:H, cv or plugin, got '" +
                        text + "'");
}

std::string
BandwidthRule::to_string() const
{
  switch (mode) {
    case BandwidthMode::fixed: {
      std::ostringstream out;
      out.precision(17);
      out << "fixed:" << fixed_h;
      return out.str();
    }
    case BandwidthMode::cross_validation:
      return "cv";
    case BandwidthMode::plugin:
      return "plugin";
  }
  return "unknown";
}

void
BandwidthRule::validate() const
{
  if (mode == BandwidthMode::fixed) {
    if (!(fixed_h > 0.0) || !std::isfinite(fixed_h))
      throw InvalidArgument("fixed bandwidth must be positive and finite");
    return;
  }
  for (double h : candidates) {
    if (!(h > 0.0) || !std::isfinite(h))
      throw InvalidArgument("bandwidth candidates must be positive and finite");
  }
  if (!(h_min < h_max))
    throw InvalidArgument("bandwidth bounds require h_min < h_max");
  if (h_min < 0.0)
    throw InvalidArgument("bandwidth lower bound must be nonnegative");
}

void
SmootherSpec::validate() const
{
  if (degree < 1)
    throw InvalidArgument("local polynomial degree must be at least 1");
  if (degree > max_degree)
    throw InvalidArgument("local polynomial degree above 6 is not supported");
  bandwidth.validate();
}

std::vector<double>
default_candidates(double range, int count)
{
  if (!(range > 0.0))
    throw InvalidArgument("design range must be positive to build a "
                          "bandwidth grid");
  if (count < 1)
    throw InvalidArgument("bandwidth grid needs at least one candidate");
  std::vector<double> grid(static_cast<std::size_t>(count));
  const double lo = std::log(0.01 * range);
  const double hi = std::log(0.5 * range);
  for (int i = 0; i < count; ++i) {
    const double t = count == 1 ? 0.0 : static_cast<double>(i) / (count - 1);
    grid[static_cast<std::size_t>(i)] = std::exp(lo + t * (hi - lo));
  }
  return grid;
}

} // namespace hompool
