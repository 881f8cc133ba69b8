#pragma once

#include "hompool/dataset.hpp"
#include "hompool/estimators.hpp"
#include "hompool/model.hpp"
#include "hompool/smoother_spec.hpp"

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace hompool {

//! Draws N individuals: X from the model's covariate law, then
//! Y ~ Bernoulli(p(X)) independently. Deterministic in `seed`.
RawDataset
sample_replicate(const Model& model, std::size_t n, std::uint64_t seed);

struct IseResult
{
  double value = 0.0;
  //! Failed estimate points inside [a, b] that were interpolated.
  std::size_t interpolated = 0;
  //! More than 10% of the points inside [a, b] failed.
  bool failed = false;
};

//! Number of trapezoidal nodes used by `ise`.
inline constexpr std::size_t ise_points = 401;

//! int_a^b (p_hat - p)^2 with a, b the given quantiles of the model's
//! covariate law. The estimate is linearly interpolated onto a uniform
//! 401-point grid (exact when it was computed on that grid).
IseResult
ise(const EstimateResult& estimate, const Model& model,
    std::pair<double, double> quantile_band = { 0.05, 0.95 });

//! Same on an explicit interval.
IseResult
ise_on_interval(const EstimateResult& estimate, const Model& model, double a,
                double b);

//! The 401-point ISE grid for a model.
std::vector<double>
ise_grid(const Model& model,
         std::pair<double, double> quantile_band = { 0.05, 0.95 });

//! One (model, N, nu, estimator) entry of a summary table.
struct SummaryCell
{
  std::string model;
  std::string law;
  std::size_t n = 0;
  //! Group size (1 for LL).
  int nu = 1;
  EstimatorKind estimator = EstimatorKind::DH;
  //! 10^4 x median ISE over successful replicates.
  double med_ise_e4 = 0.0;
  //! 10^4 x interquartile range.
  double iqr_ise_e4 = 0.0;
  std::size_t replicates = 0;
  std::size_t n_failed_reps = 0;
  //! More than 25% of replicates failed.
  bool flagged = false;
  double median_bandwidth = 0.0;
  //! Replicates in which every pool tested positive.
  std::size_t all_positive_reps = 0;
  //! Per-replicate ISE (NaN for failed replicates); kept on request.
  std::vector<double> traces;

  bool operator==(const SummaryCell&) const = default;
};

//! Settings for a single table cell.
struct SimulationSpec
{
  Model model = Model::builtin(ModelId::iii, CovariateLaw::Family::uniform);
  std::size_t n = 5000;
  int nu = 5;
  int replicates = 200;
  std::vector<EstimatorKind> estimators{ EstimatorKind::DH };
  SmootherSpec smoother{};
  std::uint64_t seed = 0;
};

struct TableSpec
{
  std::vector<Model> models;
  std::vector<std::size_t> sizes;
  std::vector<int> nus;
  std::vector<EstimatorKind> estimators;
  int replicates = 200;
  SmootherSpec smoother{};
  std::uint64_t seed = 0;
  //! Use the bandwidth minimizing the true asymptotic error instead of the
  //! smoother's rule.
  bool oracle_bandwidth = false;
  //! Worker threads; 0 means hardware concurrency.
  unsigned threads = 1;
  bool keep_traces = false;

  void validate() const;
};

//! Runs every (model, N, nu, estimator) cell. Replicates of a (model, N)
//! pair share one sample across estimators and group sizes; LL appears once
//! per (model, N). Output order: model, N, LL, then nu and estimator in the
//! order given. Identical specs give identical cells regardless of thread
//! count.
std::vector<SummaryCell>
run_table(const TableSpec& spec);

//! Single-cell convenience wrapper.
std::vector<SummaryCell>
run_cell(const SimulationSpec& spec, unsigned threads = 1,
         bool keep_traces = false);

struct RateSpec
{
  Model model = Model::builtin(ModelId::iii, CovariateLaw::Family::uniform);
  int nu = 5;
  std::vector<std::size_t> sizes{ 1000, 4000, 16000 };
  int replicates = 100;
  EstimatorKind estimator = EstimatorKind::DH;
  SmootherSpec smoother{};
  //! Theory-scaled bandwidth (proportional to N^(-1/5)); otherwise the
  //! smoother's own rule.
  bool oracle_bandwidth = true;
  std::uint64_t seed = 0;
  unsigned threads = 1;
  int bootstrap = 200;
};

struct RateResult
{
  //! Least-squares slope of log median ISE against log N.
  double slope = 0.0;
  //! 2.5% and 97.5% percentiles of the bootstrap slope distribution.
  double slope_low = 0.0;
  double slope_high = 0.0;
  std::vector<SummaryCell> cells;
};

//! Throws when a cell is flagged (too many failed replicates).
RateResult
rate_experiment(const RateSpec& spec);

//! Ordinary least-squares slope of y on x.
double
least_squares_slope(const std::vector<double>& x, const std::vector<double>& y);

struct OverpoolSpec
{
  Model model = Model::constant(0.1, CovariateLaw::uniform(0.0, 1.0));
  std::size_t n = 10000;
  std::vector<int> nus{ 5, 10, 20, 40 };
  int replicates = 100;
  SmootherSpec smoother{};
  std::uint64_t seed = 0;
  unsigned threads = 1;
  bool include_ll = true;
};

struct OverpoolRow
{
  int nu = 1;
  SummaryCell cell;
  double p_mid = 0.0;
  //! lambda_N at the midpoint of the ISE interval.
  double lambda_mid = 1.0;
};

struct OverpoolResult
{
  std::vector<OverpoolRow> rows;
  std::optional<SummaryCell> ll;
};

OverpoolResult
overpooling_experiment(const OverpoolSpec& spec);

} // namespace hompool
