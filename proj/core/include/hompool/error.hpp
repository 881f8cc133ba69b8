#pragma once

#include <stdexcept>
#include <string>

namespace hompool {

//! Base class of every error raised by the library.
class Error : public std::runtime_error
{
public:
  explicit Error(const std::string& what)
    : std::runtime_error(what)
  {}
};

//! Invalid argument or violated precondition.
class InvalidArgument : public Error
{
public:
  using Error::Error;
};

//! A local polynomial fit could not be computed (too few points in the
//! window or a numerically singular moment matrix).
class FitError : public Error
{
public:
  using Error::Error;
};

//! No bandwidth candidate produced a usable smoother.
class BandwidthError : public Error
{
public:
  BandwidthError(const std::string& what, double smallest_usable)
    : Error(what)
    , smallest_usable_(smallest_usable)
  {}

  //! Estimated smallest bandwidth for which every fit succeeds.
  double smallest_usable() const noexcept { return smallest_usable_; }

private:
  double smallest_usable_;
};

//! Pooling could not be performed with the requested parameters.
class PoolingError : public Error
{
public:
  using Error::Error;
};

//! The estimator is undefined for the supplied data.
class EstimatorError : public Error
{
public:
  using Error::Error;
};

//! Malformed input file or failed output.
class IoError : public Error
{
public:
  using Error::Error;
};

} // namespace hompool
