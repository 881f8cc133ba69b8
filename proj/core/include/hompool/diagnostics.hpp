#pragma once

#include "hompool/dataset.hpp"
#include "hompool/kernel.hpp"
#include "hompool/model.hpp"
#include "hompool/smoother_spec.hpp"

#include <cstddef>
#include <span>
#include <vector>

namespace hompool {

//! First-order error terms of the pooled estimators at one point, for the
//! local linear smoother.
struct AsymptoticDiagnostics
{
  double x = 0.0;
  //! Standard deviation scale of the homogeneous-pool estimator.
  double A = 0.0;
  //! Leading bias of the homogeneous-pool estimator.
  double B = 0.0;
  //! Random-pool analogues.
  double A1 = 0.0;
  double B1 = 0.0;
  //! E{1 - p(X)}.
  double q = 1.0;
  //! lambda_N(x), with lambda_N^5 = {1 - p(x)}^(-nu).
  double lambda_N = 1.0;
  //! int u^2 K(u) du.
  double b_const = 0.0;
  //! f(x)^(-1) int K^2.
  double v = 0.0;

  double p = 0.0;
  double dp = 0.0;
  double d2p = 0.0;
  double f = 0.0;
};

//! Point inputs to the diagnostic formulas.
struct CurvePoint
{
  double p = 0.0;
  double dp = 0.0;
  double d2p = 0.0;
  double f = 0.0;
};

//! Evaluates the formulas from curve values, the covariate density and q.
AsymptoticDiagnostics
asymptotic_diagnostics(const CurvePoint& curve, double q, const Kernel& kernel,
                       int nu, std::size_t n, double h, double x);

//! Same, with p, p', p'', f and q taken from a simulation model.
AsymptoticDiagnostics
asymptotic_diagnostics(const Model& model, const SmootherSpec& spec, int nu,
                       std::size_t n, double h, double x);

//! Asymptotic integrated error int_a^b (A^2 + B^2) of the homogeneous-pool
//! estimator for a model, by the trapezoidal rule on `points` nodes.
//! With `random_pools` the random-pool terms A1, B1 are used instead.
double
asymptotic_ise(const Model& model, const Kernel& kernel, int nu, std::size_t n,
               double h, double a, double b, std::size_t points = 401,
               bool random_pools = false);

//! Bandwidth minimizing `asymptotic_ise` (closed form of the h^-1 / h^4
//! trade-off); scales as n^(-1/5).
double
asymptotic_optimal_bandwidth(const Model& model, const Kernel& kernel, int nu,
                             std::size_t n, double a, double b,
                             std::size_t points = 401,
                             bool random_pools = false);

//! Data-mode inputs: pilot local quadratic fit of mu at bandwidth
//! `pilot_h` on homogeneous pools, normal-reference density of the group
//! means, and q from the fraction of negative pools.
struct PilotEstimate
{
  std::vector<double> x;
  std::vector<CurvePoint> curve;
  std::vector<bool> ok;
  double q = 1.0;
  double pilot_h = 0.0;
};

PilotEstimate
pilot_from_pools(const PooledDataset& pooled, const Kernel& kernel,
                 double pilot_h, std::span<const double> grid);

} // namespace hompool
