#include "hompool/diagnostics.hpp"
#include "hompool/error.hpp"
#include "hompool/estimators.hpp"
#include "hompool/io.hpp"
#include "hompool/model.hpp"
#include "hompool/pooling.hpp"
#include "hompool/simulation.hpp"
#include "hompool/stats.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace hompool;
using nlohmann::json;

namespace {

// JSON-lines log on stderr and, optionally, a file. Never touches results.
class Log
{
public:
  void open(const std::string& path)
  {
    if (path.empty())
      return;
    file_.open(path, std::ios::app);
    if (!file_)
      throw IoError("cannot open log file " + path);
  }

  void write(const std::string& level, const std::string& event,
             json fields = json::object())
  {
    fields["level"] = level;
    fields["event"] = event;
    const std::string line = fields.dump();
    std::cerr << line << '\n';
    if (file_)
      file_ << line << '\n';
  }

  void warn(const std::string& event, json fields = json::object())
  {
    write("warning", event, std::move(fields));
  }
  void info(const std::string& event, json fields = json::object())
  {
    write("info", event, std::move(fields));
  }

private:
  std::ofstream file_;
};

struct Common
{
  std::string kernel = "gaussian";
  int degree = 1;
  std::string bandwidth = "cv";
  bool widen = false;
  std::string out = "out";
  std::string format = "csv,json";
  std::string log_path;
};

struct GridSpec
{
  std::optional<double> a;
  std::optional<double> b;
  std::size_t points = 201;
};

GridSpec
parse_grid(const std::string& text)
{
  GridSpec g;
  if (text.empty())
    return g;
  std::vector<std::string> parts;
  std::stringstream in(text);
  for (std::string p; std::getline(in, p, ':');)
    parts.push_back(p);
  try {
    if (parts.size() == 1) {
      g.points = std::stoul(parts[0]);
    } else if (parts.size() == 3) {
      g.a = std::stod(parts[0]);
      g.b = std::stod(parts[1]);
      g.points = std::stoul(parts[2]);
      if (!(*g.a < *g.b))
        throw InvalidArgument("grid needs a < b");
    } else {
      throw InvalidArgument("");
    }
  } catch (const std::logic_error&) {
    throw InvalidArgument("grid must be N or a:b:N, got '" + text + "'");
  }
  if (g.points < 1)
    throw InvalidArgument("grid needs at least one point");
  return g;
}

// Univariate grid on [a, b] unless the spec overrides the range.
std::vector<double>
make_grid(const GridSpec& g, double lo, double hi)
{
  return linspace(g.a.value_or(lo), g.b.value_or(hi), g.points);
}

// Tensor grid of g.points per axis over [a, b]^dim (default the unit cube).
std::vector<double>
make_cube_grid(const GridSpec& g, std::size_t dim)
{
  const std::vector<double> axis = make_grid(g, 0.0, 1.0);
  std::size_t total = 1;
  for (std::size_t d = 0; d < dim; ++d)
    total *= axis.size();
  std::vector<double> grid;
  grid.reserve(total * dim);
  for (std::size_t i = 0; i < total; ++i) {
    std::size_t rest = i;
    std::vector<double> point(dim);
    for (std::size_t d = dim; d-- > 0;) {
      point[d] = axis[rest % axis.size()];
      rest /= axis.size();
    }
    grid.insert(grid.end(), point.begin(), point.end());
  }
  return grid;
}

SmootherSpec
smoother_from(const Common& c)
{
  SmootherSpec s;
  s.kernel = Kernel::from_name(c.kernel);
  s.degree = c.degree;
  s.bandwidth = BandwidthRule::parse(c.bandwidth);
  s.widen_on_failure = c.widen;
  s.validate();
  return s;
}

bool
is_pooled_file(const fs::path& path)
{
  std::ifstream in(path);
  if (!in)
    throw IoError("cannot open " + path.string() + " for reading");
  std::string header;
  while (std::getline(in, header) &&
         header.find_first_not_of(" \t\r") == std::string::npos) {
  }
  return header.rfind("group_id", 0) == 0;
}

void
log_estimate(Log& log, const EstimateResult& r)
{
  const auto fields = [&](std::size_t n) {
    return json{ { "estimator", to_string(r.estimator) },
                 { "bandwidth", r.bandwidth },
                 { "count", n } };
  };
  if (const auto n = r.failed_count())
    log.warn("failed_grid_points", fields(n));
  if (const auto n = r.clamped_count())
    log.warn("clamped_grid_points", fields(n));
}

void
log_cells(Log& log, const std::vector<SummaryCell>& cells)
{
  for (const SummaryCell& c : cells) {
    if (c.n_failed_reps == 0 && !c.flagged)
      continue;
    log.warn(c.flagged ? "flagged_cell" : "excluded_replicates",
             { { "model", c.model },
               { "n", c.n },
               { "nu", c.nu },
               { "estimator", to_string(c.estimator) },
               { "failed", c.n_failed_reps },
               { "replicates", c.replicates } });
  }
}

void
log_written(Log& log, const std::vector<fs::path>& paths)
{
  for (const fs::path& p : paths)
    log.info("wrote", { { "path", p.string() } });
}

struct EstimateArgs
{
  std::string input;
  std::string estimator = "DH";
  double nu = 5;
  std::string grid;
  std::optional<std::uint64_t> seed;
};

int
run_estimate(const EstimateArgs& a, const Common& c, Log& log)
{
  const SmootherSpec spec = smoother_from(c);
  const EstimatorKind kind = parse_estimator(a.estimator);
  const GridSpec gs = parse_grid(a.grid);
  const auto formats = parse_formats(c.format);

  EstimateResult result;
  if (is_pooled_file(a.input)) {
    const PooledDataset pooled = ingest_pooled_csv(a.input);
    log.info("ingested_pools", { { "path", a.input },
                                 { "groups", pooled.groups.size() },
                                 { "individuals", pooled.individuals() },
                                 { "strategy", to_string(pooled.strategy) } });
    if (kind == EstimatorKind::LL)
      throw InvalidArgument("LL needs individual responses; the input holds "
                            "pooled results only");
    if (pooled.dim > 1) {
      result = estimate_dh_binned(pooled, spec, make_cube_grid(gs, pooled.dim));
    } else {
      std::vector<double> centers;
      for (const Group& g : pooled.groups)
        centers.push_back(g.center[0]);
      const auto [lo, hi] = std::minmax_element(centers.begin(), centers.end());
      const std::vector<double> grid = make_grid(gs, *lo, *hi);
      switch (kind) {
        case EstimatorKind::DH:
          result = estimate_dh(pooled, spec, grid);
          break;
        case EstimatorKind::DH_binned:
          result = estimate_dh_binned(pooled, spec, grid);
          break;
        case EstimatorKind::DM:
          result = estimate_dm(pooled, spec, grid);
          break;
        case EstimatorKind::LL:
          break;
      }
    }
  } else {
    const RawDataset raw = ingest_individual_csv(a.input);
    log.info("ingested_individuals",
             { { "path", a.input }, { "rows", raw.size() }, { "dim", raw.dim } });
    if (!raw.responses)
      throw InvalidArgument(
        "input has no y column: responses are required to pool individuals "
        "on the fly (supply a pooled file with group_id,x1,...,group_result "
        "instead)");
    if (raw.dim > 1) {
      if (kind != EstimatorKind::DH_binned)
        throw InvalidArgument("multivariate covariates need --estimator "
                              "DH_binned");
      result =
        estimate_dh_binned(pool_binned(raw, a.nu), spec, make_cube_grid(gs, raw.dim));
    } else {
      const auto [lo, hi] =
        std::minmax_element(raw.covariates.begin(), raw.covariates.end());
      const auto nu_int = static_cast<int>(a.nu);
      if (kind != EstimatorKind::LL && kind != EstimatorKind::DH_binned &&
          static_cast<double>(nu_int) != a.nu)
        throw InvalidArgument("--nu must be an integer for DH and DM");
      switch (kind) {
        case EstimatorKind::LL:
          result = estimate_ll(raw, spec, make_grid(gs, *lo, *hi));
          break;
        case EstimatorKind::DH: {
          const PooledDataset pooled = pool_homogeneous(raw, nu_int);
          const double first = pooled.groups.front().center[0];
          const double last = pooled.groups.back().center[0];
          result = estimate_dh(pooled, spec, make_grid(gs, first, last));
          break;
        }
        case EstimatorKind::DM: {
          if (!a.seed)
            throw InvalidArgument("DM pools individuals at random: --seed is "
                                  "required");
          result = estimate_dm(pool_random(raw, nu_int, *a.seed), spec,
                               make_grid(gs, *lo, *hi));
          break;
        }
        case EstimatorKind::DH_binned:
          result = estimate_dh_binned(pool_binned(raw, a.nu), spec,
                                      make_grid(gs, 0.0, 1.0));
          break;
      }
    }
  }
  log_estimate(log, result);
  log_written(log, emit_results(result, formats, c.out));
  return 0;
}

struct SimulateArgs
{
  std::vector<std::string> models{ "i", "ii", "iii", "iv" };
  std::string law = "uniform";
  std::vector<std::size_t> sizes{ 5000 };
  std::vector<int> nus{ 5, 10 };
  std::vector<std::string> estimators{ "LL", "DH", "DM" };
  int replicates = 200;
  unsigned threads = 1;
  bool oracle = false;
  bool traces = false;
  std::optional<std::uint64_t> seed;
};

CovariateLaw::Family
parse_law(const std::string& text)
{
  if (text == "uniform")
    return CovariateLaw::Family::uniform;
  if (text == "normal")
    return CovariateLaw::Family::normal;
  throw InvalidArgument("law must be uniform or normal, got '" + text + "'");
}

int
run_simulate(const SimulateArgs& a, const Common& c, Log& log)
{
  if (!a.seed)
    throw InvalidArgument("simulate requires --seed");
  TableSpec t;
  for (const std::string& m : a.models)
    t.models.push_back(Model::builtin(parse_model_id(m), parse_law(a.law)));
  t.sizes = a.sizes;
  t.nus = a.nus;
  for (const std::string& e : a.estimators)
    t.estimators.push_back(parse_estimator(e));
  t.replicates = a.replicates;
  t.smoother = smoother_from(c);
  t.seed = *a.seed;
  t.oracle_bandwidth = a.oracle;
  t.threads = a.threads;
  t.keep_traces = a.traces;
  const auto formats = parse_formats(c.format);

  const std::vector<SummaryCell> cells = run_table(t);
  log_cells(log, cells);
  log_written(log, emit_results(cells, formats, c.out));
  if (a.traces) {
    const fs::path p = fs::path(c.out) / "traces.csv";
    write_text(p, traces_to_csv(cells));
    log_written(log, { p });
  }
  return 0;
}

struct RateArgs
{
  std::string model = "iii";
  std::string law = "uniform";
  int nu = 5;
  std::vector<std::size_t> sizes{ 1000, 4000, 16000 };
  std::string estimator = "DH";
  int replicates = 100;
  int bootstrap = 200;
  unsigned threads = 1;
  std::optional<std::uint64_t> seed;
};

int
run_rate(const RateArgs& a, Common c, Log& log)
{
  if (!a.seed)
    throw InvalidArgument("rate requires --seed");
  RateSpec s;
  s.model = Model::builtin(parse_model_id(a.model), parse_law(a.law));
  s.nu = a.nu;
  s.sizes = a.sizes;
  s.estimator = parse_estimator(a.estimator);
  s.replicates = a.replicates;
  s.bootstrap = a.bootstrap;
  s.threads = a.threads;
  s.seed = *a.seed;
  s.oracle_bandwidth = c.bandwidth == "oracle";
  if (s.oracle_bandwidth)
    c.bandwidth = "cv";
  s.smoother = smoother_from(c);
  const auto formats = parse_formats(c.format);

  const RateResult r = rate_experiment(s);
  log_cells(log, r.cells);
  log_written(log, emit_results(r.cells, formats, c.out));
  json doc{ { "schema_version", schema_version },
            { "kind", "rate" },
            { "slope", r.slope },
            { "slope_low", r.slope_low },
            { "slope_high", r.slope_high } };
  const fs::path p = fs::path(c.out) / "rate.json";
  write_text(p, doc.dump(2) + "\n");
  log_written(log, { p });
  std::cout << "slope " << format_number(r.slope) << " ["
            << format_number(r.slope_low) << ", "
            << format_number(r.slope_high) << "]\n";
  return 0;
}

struct OverpoolArgs
{
  double p = 0.1;
  std::size_t n = 10000;
  std::vector<int> nus{ 5, 10, 20, 40 };
  int replicates = 100;
  unsigned threads = 1;
  bool no_ll = false;
  std::optional<std::uint64_t> seed;
};

int
run_overpool(const OverpoolArgs& a, const Common& c, Log& log)
{
  if (!a.seed)
    throw InvalidArgument("overpool requires --seed");
  OverpoolSpec s;
  s.model = Model::constant(a.p, CovariateLaw::uniform(0.0, 1.0));
  s.n = a.n;
  s.nus = a.nus;
  s.replicates = a.replicates;
  s.threads = a.threads;
  s.include_ll = !a.no_ll;
  s.seed = *a.seed;
  s.smoother = smoother_from(c);
  const auto formats = parse_formats(c.format);

  const OverpoolResult r = overpooling_experiment(s);
  std::vector<SummaryCell> cells;
  if (r.ll)
    cells.push_back(*r.ll);
  std::ostringstream csv;
  csv << "nu,p_mid,lambda_mid,med_ise_e4,iqr_ise_e4,n_failed_reps,flagged\n";
  for (const OverpoolRow& row : r.rows) {
    cells.push_back(row.cell);
    csv << row.nu << ',' << format_number(row.p_mid) << ','
        << format_number(row.lambda_mid) << ','
        << format_number(row.cell.med_ise_e4) << ','
        << format_number(row.cell.iqr_ise_e4) << ','
        << row.cell.n_failed_reps << ',' << (row.cell.flagged ? 1 : 0) << '\n';
  }
  log_cells(log, cells);
  log_written(log, emit_results(cells, formats, c.out));
  fs::create_directories(c.out);
  const fs::path p = fs::path(c.out) / "overpool.csv";
  write_text(p, csv.str());
  log_written(log, { p });
  return 0;
}

struct DiagnosticsArgs
{
  std::string model = "iii";
  std::string law = "uniform";
  int nu = 5;
  std::size_t n = 5000;
  std::string grid;
};

int
run_diagnostics(const DiagnosticsArgs& a, const Common& c, Log& log)
{
  const SmootherSpec spec = smoother_from(c);
  if (spec.bandwidth.mode != BandwidthMode::fixed)
    throw InvalidArgument("diagnostics needs --bandwidth fixed:H");
  const Model model = Model::builtin(parse_model_id(a.model), parse_law(a.law));
  const std::vector<double> band = ise_grid(model);
  const std::vector<double> grid =
    make_grid(parse_grid(a.grid), band.front(), band.back());
  const auto formats = parse_formats(c.format);

  std::ostringstream csv;
  csv << "x,p,dp,d2p,f,q,A,B,A1,B1,lambda_N\n";
  json rows = json::array();
  for (double x : grid) {
    const AsymptoticDiagnostics d = asymptotic_diagnostics(
      model, spec, a.nu, a.n, spec.bandwidth.fixed_h, x);
    csv << format_number(x) << ',' << format_number(d.p) << ','
        << format_number(d.dp) << ',' << format_number(d.d2p) << ','
        << format_number(d.f) << ',' << format_number(d.q) << ','
        << format_number(d.A) << ',' << format_number(d.B) << ','
        << format_number(d.A1) << ',' << format_number(d.B1) << ','
        << format_number(d.lambda_N) << '\n';
    rows.push_back({ { "x", x }, { "p", d.p }, { "dp", d.dp },
                     { "d2p", d.d2p }, { "f", d.f }, { "q", d.q },
                     { "A", d.A }, { "B", d.B }, { "A1", d.A1 },
                     { "B1", d.B1 }, { "lambda_N", d.lambda_N } });
  }
  fs::create_directories(c.out);
  std::vector<fs::path> written;
  for (OutputFormat f : formats) {
    const fs::path p = fs::path(c.out) / (std::string("diagnostics.") + to_string(f));
    if (f == OutputFormat::csv) {
      write_text(p, csv.str());
    } else {
      json doc{ { "schema_version", schema_version },
                { "kind", "diagnostics" },
                { "model", model.name() },
                { "law", model.law().to_string() },
                { "nu", a.nu },
                { "n", a.n },
                { "h", spec.bandwidth.fixed_h },
                { "kernel", spec.kernel.name() },
                { "points", std::move(rows) } };
      write_text(p, doc.dump(2) + "\n");
    }
    written.push_back(p);
  }
  log_written(log, written);
  return 0;
}

void
add_common(CLI::App* cmd, Common& c)
{
  cmd->add_option("--kernel", c.kernel, "gaussian, epanechnikov or uniform")
    ->capture_default_str();
  cmd->add_option("--degree", c.degree, "local polynomial degree")
    ->capture_default_str();
  cmd->add_option("--bandwidth", c.bandwidth, "fixed:H, cv or plugin")
    ->capture_default_str();
  cmd->add_flag("--widen", c.widen, "retry failed fits with a doubled h");
  cmd->add_option("--out", c.out, "output directory")->capture_default_str();
  cmd->add_option("--format", c.format, "csv, json or csv,json")
    ->capture_default_str();
  cmd->add_option("--log", c.log_path, "append the JSON-lines log to a file");
}

} // namespace

int
main(int argc, char** argv)
{
  CLI::App app{ "Prevalence estimation from pooled binary tests" };
  app.set_config("--config", "", "TOML/INI file with option defaults");
  app.require_subcommand(1, 1);

  Common common;
  EstimateArgs est;
  SimulateArgs sim;
  RateArgs rate;
  OverpoolArgs over;
  DiagnosticsArgs diag;

  auto* e = app.add_subcommand("estimate", "estimate p(x) from a data file");
  e->add_option("--input", est.input, "individual or pooled CSV")
    ->required()
    ->check(CLI::ExistingFile);
  e->add_option("--estimator", est.estimator, "DH, DM, LL or DH_binned")
    ->capture_default_str();
  e->add_option("--nu", est.nu, "group size")->capture_default_str();
  e->add_option("--grid", est.grid, "N or a:b:N (per axis when d > 1)");
  e->add_option("--seed", est.seed, "seed for random pooling (DM)");
  add_common(e, common);

  auto* s = app.add_subcommand("simulate", "Monte Carlo ISE table");
  s->add_option("--model", sim.models, "i, ii, iii, iv")->capture_default_str();
  s->add_option("--law", sim.law, "uniform or normal")->capture_default_str();
  s->add_option("--n", sim.sizes, "sample sizes")->capture_default_str();
  s->add_option("--nu", sim.nus, "group sizes")->capture_default_str();
  s->add_option("--estimator", sim.estimators, "DH, DM, LL, DH_binned")
    ->capture_default_str();
  s->add_option("--replicates", sim.replicates)->capture_default_str();
  s->add_option("--threads", sim.threads, "0 = all cores")->capture_default_str();
  s->add_flag("--oracle-bandwidth", sim.oracle,
              "use the bandwidth minimizing the true asymptotic error");
  s->add_flag("--traces", sim.traces, "also write per-replicate ISE");
  s->add_option("--seed", sim.seed, "master seed")->required();
  add_common(s, common);

  auto* r = app.add_subcommand("rate", "log-log slope of median ISE in N");
  r->add_option("--model", rate.model)->capture_default_str();
  r->add_option("--law", rate.law)->capture_default_str();
  r->add_option("--nu", rate.nu)->capture_default_str();
  r->add_option("--n", rate.sizes, "three or more sample sizes")
    ->capture_default_str();
  r->add_option("--estimator", rate.estimator)->capture_default_str();
  r->add_option("--replicates", rate.replicates)->capture_default_str();
  r->add_option("--bootstrap", rate.bootstrap)->capture_default_str();
  r->add_option("--threads", rate.threads)->capture_default_str();
  r->add_option("--seed", rate.seed, "master seed")->required();
  add_common(r, common);
  r->get_option("--bandwidth")->description("oracle, fixed:H or plugin");

  auto* o = app.add_subcommand("overpool", "ISE against growing group size");
  o->add_option("--p", over.p, "constant prevalence")->capture_default_str();
  o->add_option("--n", over.n)->capture_default_str();
  o->add_option("--nu", over.nus)->capture_default_str();
  o->add_option("--replicates", over.replicates)->capture_default_str();
  o->add_option("--threads", over.threads)->capture_default_str();
  o->add_flag("--no-ll", over.no_ll, "skip the ungrouped reference");
  o->add_option("--seed", over.seed, "master seed")->required();
  add_common(o, common);

  auto* d = app.add_subcommand("diagnostics", "asymptotic error terms");
  d->add_option("--model", diag.model)->capture_default_str();
  d->add_option("--law", diag.law)->capture_default_str();
  d->add_option("--nu", diag.nu)->capture_default_str();
  d->add_option("--n", diag.n)->capture_default_str();
  d->add_option("--grid", diag.grid, "N or a:b:N");
  add_common(d, common);

  CLI11_PARSE(app, argc, argv);
  if (r->parsed() && r->count("--bandwidth") == 0)
    common.bandwidth = "oracle";

  Log log;
  try {
    log.open(common.log_path);
    if (e->parsed())
      return run_estimate(est, common, log);
    if (s->parsed())
      return run_simulate(sim, common, log);
    if (r->parsed())
      return run_rate(rate, common, log);
    if (o->parsed())
      return run_overpool(over, common, log);
    return run_diagnostics(diag, common, log);
  } catch (const std::exception& ex) {
    log.write("error", "fatal", { { "message", ex.what() } });
    return 1;
  }
}
