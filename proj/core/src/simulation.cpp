#include "hompool/simulation.hpp"

#include "hompool/diagnostics.hpp"
#include "hompool/error.hpp"
#include "hompool/pooling.hpp"
#include "hompool/random.hpp"
#include "hompool/stats.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <sstream>
#include <thread>

namespace hompool {

RawDataset
sample_replicate(const Model& model, std::size_t n, std::uint64_t seed)
{
  Rng rng(seed);
  RawDataset raw;
  raw.dim = 1;
  raw.covariates.resize(n);
  std::vector<std::uint8_t> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double x = model.law().sample(rng);
    raw.covariates[i] = x;
    // p can exceed 1 only in the far tails of the normal laws; treat it as
    // a certain positive there.
    y[i] = uniform01(rng) < model.p(x) ? 1 : 0;
  }
  raw.responses = std::move(y);
  return raw;
}

std::vector<double>
ise_grid(const Model& model, std::pair<double, double> quantile_band)
{
  return linspace(model.law().quantile(quantile_band.first),
                  model.law().quantile(quantile_band.second), ise_points);
}

IseResult
ise(const EstimateResult& estimate, const Model& model,
    std::pair<double, double> quantile_band)
{
  return ise_on_interval(estimate, model,
                         model.law().quantile(quantile_band.first),
                         model.law().quantile(quantile_band.second));
}

IseResult
ise_on_interval(const EstimateResult& estimate, const Model& model, double a,
                double b)
{
  if (estimate.dim != 1)
    throw InvalidArgument("ISE is defined for univariate estimates");
  if (!(a < b))
    throw InvalidArgument("ISE interval needs a < b");

  // Successful points, plus the count of failures inside [a, b].
  std::vector<std::pair<double, double>> known;
  std::size_t inside = 0;
  std::size_t failed_inside = 0;
  const double slack = 1e-12 * (b - a);
  for (std::size_t i = 0; i < estimate.size(); ++i) {
    const double x = estimate.grid[i];
    const bool in = x >= a - slack && x <= b + slack;
    inside += in;
    if (estimate.p_hat[i])
      known.emplace_back(x, *estimate.p_hat[i]);
    else
      failed_inside += in;
  }
  IseResult out;
  out.interpolated = failed_inside;
  if (inside == 0)
    throw InvalidArgument("estimate grid has no point inside the ISE interval");
  if (known.empty() || static_cast<double>(failed_inside) >
                         0.1 * static_cast<double>(inside)) {
    out.failed = true;
    out.value = std::numeric_limits<double>::quiet_NaN();
    return out;
  }
  std::sort(known.begin(), known.end());
  if (known.front().first > a + slack + (b - a) * 0.1 ||
      known.back().first < b - slack - (b - a) * 0.1)
    throw InvalidArgument("estimate grid does not cover the ISE interval");

  // Linear interpolation through successful points, constant beyond them.
  const auto interpolate = [&](double x) {
    auto hi = std::lower_bound(
      known.begin(), known.end(), x,
      [](const auto& e, double v) { return e.first < v; });
    if (hi == known.begin())
      return hi->second;
    if (hi == known.end())
      return known.back().second;
    const auto lo = std::prev(hi);
    if (hi->first == x)
      return hi->second;
    const double t = (x - lo->first) / (hi->first - lo->first);
    return lo->second + t * (hi->second - lo->second);
  };

  const std::vector<double> nodes = linspace(a, b, ise_points);
  double total = 0.0;
  double prev = 0.0;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const double diff = interpolate(nodes[i]) - model.p(nodes[i]);
    const double sq = diff * diff;
    if (i > 0)
      total += 0.5 * (nodes[i] - nodes[i - 1]) * (sq + prev);
    prev = sq;
  }
  out.value = total;
  return out;
}

void
TableSpec::validate() const
{
  if (models.empty() || sizes.empty() || estimators.empty())
    throw InvalidArgument("simulation table needs models, sizes and "
                          "estimators");
  if (replicates < 2)
    throw InvalidArgument("simulation needs at least two replicates");
  smoother.validate();
  const bool pooled = std::any_of(estimators.begin(), estimators.end(),
                                  [](EstimatorKind k) {
                                    return k != EstimatorKind::LL;
                                  });
  if (pooled && nus.empty())
    throw InvalidArgument("pooled estimators need at least one nu");
  for (int nu : nus) {
    if (nu < 1)
      throw InvalidArgument("group size nu must be at least 1");
  }
  for (const Model& m : models) {
    m.validate();
    for (EstimatorKind k : estimators) {
      if (k == EstimatorKind::DH_binned &&
          !(m.law().family() == CovariateLaw::Family::uniform &&
            m.law().first() >= 0.0 && m.law().second() <= 1.0))
        throw InvalidArgument("DH_binned simulations need a covariate law on "
                              "[0,1]; model " + m.name() + " has " +
                              m.law().to_string());
    }
    for (std::size_t n : sizes) {
      for (int nu : nus) {
        const bool needs_divisor = std::any_of(
          estimators.begin(), estimators.end(), [](EstimatorKind k) {
            return k == EstimatorKind::DH || k == EstimatorKind::DM;
          });
        if (needs_divisor && n % static_cast<std::size_t>(nu) != 0) {
          std::ostringstream msg;
          msg << "nu=" << nu << " does not divide N=" << n;
          throw InvalidArgument(msg.str());
        }
      }
    }
  }
}

namespace {

std::uint64_t
fnv1a(const std::string& text)
{
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

struct Slot
{
  EstimatorKind estimator;
  int nu;
  std::optional<double> oracle_h;
};

struct Outcome
{
  double ise = std::numeric_limits<double>::quiet_NaN();
  double bandwidth = std::numeric_limits<double>::quiet_NaN();
  bool all_positive = false;
};

template<typename Fn>
void
parallel_for(std::size_t count, unsigned threads, Fn&& fn)
{
  if (threads == 0)
    threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(
    std::min<std::size_t>(threads, std::max<std::size_t>(count, 1)));
  if (threads <= 1) {
    for (std::size_t i = 0; i < count; ++i)
      fn(i);
    return;
  }
  std::atomic<std::size_t> next{ 0 };
  std::vector<std::thread> pool;
  std::exception_ptr error;
  std::atomic<bool> errored{ false };
  for (unsigned t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) {
        try {
          fn(i);
        } catch (...) {
          if (!errored.exchange(true))
            error = std::current_exception();
        }
      }
    });
  }
  for (auto& th : pool)
    th.join();
  if (error)
    std::rethrow_exception(error);
}

bool
every_pool_positive(const PooledDataset& pooled)
{
  return std::all_of(pooled.groups.begin(), pooled.groups.end(),
                     [](const Group& g) { return *g.pooled_positive == 1; });
}

Outcome
run_slot(const Slot& slot, const RawDataset& raw, const Model& model,
         const SmootherSpec& base, const std::vector<double>& grid,
         std::uint64_t pool_seed)
{
  SmootherSpec spec = base;
  if (slot.oracle_h)
    spec.bandwidth = BandwidthRule::fixed(*slot.oracle_h);
  Outcome out;
  try {
    EstimateResult est;
    switch (slot.estimator) {
      case EstimatorKind::LL:
        est = estimate_ll(raw, spec, grid);
        break;
      case EstimatorKind::DH: {
        const PooledDataset pooled = pool_homogeneous(raw, slot.nu);
        out.all_positive = every_pool_positive(pooled);
        est = estimate_dh(pooled, spec, grid);
        break;
      }
      case EstimatorKind::DM: {
        const PooledDataset pooled = pool_random(raw, slot.nu, pool_seed);
        out.all_positive = every_pool_positive(pooled);
        est = estimate_dm(pooled, spec, grid);
        break;
      }
      case EstimatorKind::DH_binned: {
        const PooledDataset pooled = pool_binned(raw, slot.nu);
        out.all_positive = every_pool_positive(pooled);
        est = estimate_dh_binned(pooled, spec, grid);
        break;
      }
    }
    out.bandwidth = est.bandwidth;
    const IseResult r = ise(est, model);
    if (!r.failed)
      out.ise = r.value;
  } catch (const Error&) {
    // A replicate whose estimator cannot be computed counts as failed.
  }
  return out;
}

SummaryCell
summarize(const Model& model, std::size_t n, const Slot& slot,
          const std::vector<Outcome>& outcomes, bool keep_traces)
{
  SummaryCell cell;
  cell.model = model.name();
  cell.law = model.law().to_string();
  cell.n = n;
  cell.nu = slot.nu;
  cell.estimator = slot.estimator;
  cell.replicates = outcomes.size();
  std::vector<double> good;
  std::vector<double> bandwidths;
  for (const Outcome& o : outcomes) {
    if (std::isnan(o.ise))
      ++cell.n_failed_reps;
    else
      good.push_back(o.ise);
    if (!std::isnan(o.bandwidth))
      bandwidths.push_back(o.bandwidth);
    cell.all_positive_reps += o.all_positive;
    if (keep_traces)
      cell.traces.push_back(o.ise);
  }
  cell.flagged = static_cast<double>(cell.n_failed_reps) >
                 0.25 * static_cast<double>(cell.replicates);
  if (!good.empty()) {
    std::sort(good.begin(), good.end());
    cell.med_ise_e4 = 1e4 * stats::sorted_quantile(good, 0.5);
    cell.iqr_ise_e4 = 1e4 * (stats::sorted_quantile(good, 0.75) -
                             stats::sorted_quantile(good, 0.25));
  } else {
    cell.med_ise_e4 = std::numeric_limits<double>::quiet_NaN();
    cell.iqr_ise_e4 = std::numeric_limits<double>::quiet_NaN();
  }
  if (!bandwidths.empty())
    cell.median_bandwidth = stats::quantile(bandwidths, 0.5);
  return cell;
}

} // namespace

std::vector<SummaryCell>
run_table(const TableSpec& spec)
{
  spec.validate();
  std::vector<SummaryCell> cells;
  for (const Model& model : spec.models) {
    const std::vector<double> grid = ise_grid(model);
    const double a = grid.front();
    const double b = grid.back();
    const std::uint64_t model_key =
      fnv1a(model.name() + '|' + model.law().to_string());
    for (std::size_t n : spec.sizes) {
      std::vector<Slot> slots;
      const auto oracle = [&](EstimatorKind kind, int nu) -> std::optional<double> {
        if (!spec.oracle_bandwidth)
          return std::nullopt;
        return asymptotic_optimal_bandwidth(model, spec.smoother.kernel, nu, n,
                                            a, b, 401,
                                            kind == EstimatorKind::DM);
      };
      if (std::find(spec.estimators.begin(), spec.estimators.end(),
                    EstimatorKind::LL) != spec.estimators.end())
        slots.push_back({ EstimatorKind::LL, 1, oracle(EstimatorKind::LL, 1) });
      for (int nu : spec.nus) {
        for (EstimatorKind k : spec.estimators) {
          if (k != EstimatorKind::LL)
            slots.push_back({ k, nu, oracle(k, nu) });
        }
      }

      const auto reps = static_cast<std::size_t>(spec.replicates);
      std::vector<std::vector<Outcome>> outcomes(
        slots.size(), std::vector<Outcome>(reps));
      parallel_for(reps, spec.threads, [&](std::size_t r) {
        const std::uint64_t data_seed = derive_seed(spec.seed, { model_key, n, r });
        const RawDataset raw = sample_replicate(model, n, data_seed);
        for (std::size_t s = 0; s < slots.size(); ++s) {
          const std::uint64_t pool_seed = derive_seed(
            spec.seed,
            { model_key, n, r, 1000 + static_cast<std::uint64_t>(slots[s].nu) });
          outcomes[s][r] =
            run_slot(slots[s], raw, model, spec.smoother, grid, pool_seed);
        }
      });
      for (std::size_t s = 0; s < slots.size(); ++s)
        cells.push_back(
          summarize(model, n, slots[s], outcomes[s], spec.keep_traces));
    }
  }
  return cells;
}

std::vector<SummaryCell>
run_cell(const SimulationSpec& spec, unsigned threads, bool keep_traces)
{
  TableSpec table;
  table.models = { spec.model };
  table.sizes = { spec.n };
  table.nus = { spec.nu };
  table.estimators = spec.estimators;
  table.replicates = spec.replicates;
  table.smoother = spec.smoother;
  table.seed = spec.seed;
  table.threads = threads;
  table.keep_traces = keep_traces;
  return run_table(table);
}

double
least_squares_slope(const std::vector<double>& x, const std::vector<double>& y)
{
  if (x.size() != y.size() || x.size() < 2)
    throw InvalidArgument("slope needs two or more paired values");
  const double mx = stats::mean(x);
  const double my = stats::mean(y);
  double sxy = 0.0;
  double sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  if (!(sxx > 0.0))
    throw InvalidArgument("slope needs distinct x values");
  return sxy / sxx;
}

RateResult
rate_experiment(const RateSpec& spec)
{
  if (spec.sizes.size() < 3)
    throw InvalidArgument("rate experiment needs at least three sample sizes");
  if (!spec.oracle_bandwidth &&
      spec.smoother.bandwidth.mode == BandwidthMode::cross_validation)
    throw InvalidArgument("rate experiment needs the plug-in, a fixed or the "
                          "theory-scaled bandwidth");
  TableSpec table;
  table.models = { spec.model };
  table.sizes = spec.sizes;
  table.nus = { spec.nu };
  table.estimators = { spec.estimator };
  table.replicates = spec.replicates;
  table.smoother = spec.smoother;
  table.seed = spec.seed;
  table.oracle_bandwidth = spec.oracle_bandwidth;
  table.threads = spec.threads;
  table.keep_traces = true;

  RateResult out;
  out.cells = run_table(table);
  std::vector<double> log_n;
  std::vector<double> log_med;
  for (const SummaryCell& c : out.cells) {
    if (c.flagged || !(c.med_ise_e4 > 0.0)) {
      std::ostringstream msg;
      msg << "rate experiment cell N=" << c.n << " failed (" << c.n_failed_reps
          << " of " << c.replicates << " replicates failed)";
      throw Error(msg.str());
    }
    log_n.push_back(std::log(static_cast<double>(c.n)));
    log_med.push_back(std::log(c.med_ise_e4));
  }
  out.slope = least_squares_slope(log_n, log_med);

  // Percentile bootstrap over replicates within each cell.
  Rng rng(derive_seed(spec.seed, { 0xb007 }));
  std::vector<double> slopes;
  for (int b = 0; b < spec.bootstrap; ++b) {
    std::vector<double> resampled;
    for (const SummaryCell& c : out.cells) {
      std::vector<double> good;
      for (double v : c.traces) {
        if (!std::isnan(v))
          good.push_back(v);
      }
      std::vector<double> draw(good.size());
      for (double& v : draw)
        v = good[uniform_index(rng, good.size())];
      resampled.push_back(std::log(stats::quantile(draw, 0.5)));
    }
    slopes.push_back(least_squares_slope(log_n, resampled));
  }
  if (!slopes.empty()) {
    std::sort(slopes.begin(), slopes.end());
    out.slope_low = stats::sorted_quantile(slopes, 0.025);
    out.slope_high = stats::sorted_quantile(slopes, 0.975);
  } else {
    out.slope_low = out.slope_high = out.slope;
  }
  return out;
}

OverpoolResult
overpooling_experiment(const OverpoolSpec& spec)
{
  TableSpec table;
  table.models = { spec.model };
  table.sizes = { spec.n };
  table.nus = spec.nus;
  table.estimators = { EstimatorKind::DH };
  if (spec.include_ll)
    table.estimators.insert(table.estimators.begin(), EstimatorKind::LL);
  table.replicates = spec.replicates;
  table.smoother = spec.smoother;
  table.seed = spec.seed;
  table.threads = spec.threads;

  const std::vector<SummaryCell> cells = run_table(table);
  OverpoolResult out;
  const std::vector<double> grid = ise_grid(spec.model);
  const double mid = 0.5 * (grid.front() + grid.back());
  const double p_mid = spec.model.p(mid);
  for (const SummaryCell& c : cells) {
    if (c.estimator == EstimatorKind::LL) {
      out.ll = c;
      continue;
    }
    OverpoolRow row;
    row.nu = c.nu;
    row.cell = c;
    row.p_mid = p_mid;
    row.lambda_mid = std::pow(1.0 - p_mid, -static_cast<double>(c.nu) / 5.0);
    out.rows.push_back(std::move(row));
  }
  return out;
}

} // namespace hompool
