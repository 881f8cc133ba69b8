#include "hompool/bandwidth.hpp"
#include "hompool/estimators.hpp"
#include "hompool/local_poly.hpp"
#include "hompool/pooling.hpp"
#include "hompool/simulation.hpp"

#include <benchmark/benchmark.h>

using namespace hompool;

namespace {

const Model&
model_iii()
{
  static const Model m =
    Model::builtin(ModelId::iii, CovariateLaw::Family::uniform);
  return m;
}

void
BM_LocalLinearFit(benchmark::State& state)
{
  const auto n = static_cast<std::size_t>(state.range(0));
  const RawDataset raw = sample_replicate(model_iii(), n, 1);
  std::vector<double> z(raw.responses->begin(), raw.responses->end());
  const LocalPolynomial lp(raw.covariates, z, Kernel{}, 1);
  double x = 0.0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(lp.value(0.1, x));
    x = x > 1.0 ? 0.0 : x + 0.0137;
  }
}
BENCHMARK(BM_LocalLinearFit)->Arg(1000)->Arg(5000)->Arg(50000);

void
BM_CrossValidation(benchmark::State& state)
{
  const auto n = static_cast<std::size_t>(state.range(0));
  const PooledDataset pooled =
    pool_homogeneous(sample_replicate(model_iii(), n * 5, 2), 5);
  std::vector<double> u, z;
  for (const Group& g : pooled.groups) {
    u.push_back(g.center[0]);
    z.push_back(*g.pooled_negative());
  }
  SmootherSpec s;
  for (auto _ : state)
    benchmark::DoNotOptimize(select_bandwidth(u, z, s));
}
BENCHMARK(BM_CrossValidation)->Arg(200)->Arg(1000)->Arg(10000)
  ->Unit(benchmark::kMillisecond);

void
BM_PluginBandwidth(benchmark::State& state)
{
  const auto n = static_cast<std::size_t>(state.range(0));
  const PooledDataset pooled =
    pool_homogeneous(sample_replicate(model_iii(), n * 5, 3), 5);
  std::vector<double> u, z;
  for (const Group& g : pooled.groups) {
    u.push_back(g.center[0]);
    z.push_back(*g.pooled_negative());
  }
  SmootherSpec s;
  s.bandwidth = BandwidthRule::plugin();
  for (auto _ : state)
    benchmark::DoNotOptimize(
      select_bandwidth(u, z, s, PluginTarget::homogeneous_pools(5, n * 5)));
}
BENCHMARK(BM_PluginBandwidth)->Arg(1000)->Unit(benchmark::kMillisecond);

void
BM_EstimateReplicate(benchmark::State& state)
{
  const auto kind = static_cast<EstimatorKind>(state.range(0));
  const RawDataset raw = sample_replicate(model_iii(), 5000, 4);
  const std::vector<double> grid = ise_grid(model_iii());
  SmootherSpec s;
  for (auto _ : state) {
    switch (kind) {
      case EstimatorKind::DH:
        benchmark::DoNotOptimize(estimate_dh(pool_homogeneous(raw, 5), s, grid));
        break;
      case EstimatorKind::DM:
        benchmark::DoNotOptimize(estimate_dm(pool_random(raw, 5, 1), s, grid));
        break;
      case EstimatorKind::LL:
        benchmark::DoNotOptimize(estimate_ll(raw, s, grid));
        break;
      case EstimatorKind::DH_binned:
        benchmark::DoNotOptimize(estimate_dh_binned(pool_binned(raw, 5.0), s, grid));
        break;
    }
  }
  state.SetLabel(to_string(kind));
}
BENCHMARK(BM_EstimateReplicate)
  ->DenseRange(0, 3)
  ->Unit(benchmark::kMillisecond);

void
BM_Pooling(benchmark::State& state)
{
  const RawDataset raw = sample_replicate(model_iii(), 10000, 5);
  for (auto _ : state) {
    if (state.range(0) == 0)
      benchmark::DoNotOptimize(pool_homogeneous(raw, 5));
    else
      benchmark::DoNotOptimize(pool_random(raw, 5, 7));
  }
}
BENCHMARK(BM_Pooling)->Arg(0)->Arg(1);

void
BM_SimulationCell(benchmark::State& state)
{
  TableSpec t;
  t.models = { model_iii() };
  t.sizes = { 5000 };
  t.nus = { 5 };
  t.estimators = { EstimatorKind::LL, EstimatorKind::DH, EstimatorKind::DM };
  t.replicates = 4;
  for (auto _ : state) {
    t.seed++;
    benchmark::DoNotOptimize(run_table(t));
  }
}
BENCHMARK(BM_SimulationCell)->Unit(benchmark::kMillisecond);

} // namespace

BENCHMARK_MAIN();
