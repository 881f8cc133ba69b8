#include "hompool/io.hpp"

#include "hompool/error.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

namespace hompool {

using nlohmann::json;

namespace {

std::string
trim(std::string_view s)
{
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos)
    return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  std::string out(s.substr(first, last - first + 1));
  if (out.size() >= 2 && out.front() == '"' && out.back() == '"')
    out = out.substr(1, out.size() - 2);
  return out;
}

std::vector<std::string>
split_row(const std::string& line)
{
  std::vector<std::string> cells;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    cells.push_back(trim(std::string_view(line).substr(
      start, comma == std::string::npos ? std::string::npos : comma - start)));
    if (comma == std::string::npos)
      break;
    start = comma + 1;
  }
  return cells;
}

bool
blank(const std::string& line)
{
  return line.find_first_not_of(" \t\r\n") == std::string::npos;
}

std::string
where(const std::string& source, std::size_t row, std::size_t column,
      const std::string& header)
{
  std::ostringstream out;
  out << source << ": row " << row << ", column " << column + 1 << " ("
      << header << ")";
  return out.str();
}

double
parse_double(const std::string& cell, const std::string& context)
{
  if (cell.empty())
    throw IoError(context + ": empty cell");
  errno = 0;
  char* end = nullptr;
  const double value = std::strtod(cell.c_str(), &end);
  if (end != cell.c_str() + cell.size() || errno == ERANGE ||
      !std::isfinite(value))
    throw IoError(context + ": '" + cell + "' is not a finite number");
  return value;
}

std::uint8_t
parse_binary(const std::string& cell, const std::string& context)
{
  if (cell == "0")
    return 0;
  if (cell == "1")
    return 1;
  throw IoError(context + ": '" + cell + "' is not 0 or 1");
}

std::ifstream
open_input(const std::filesystem::path& path)
{
  std::ifstream in(path);
  if (!in)
    throw IoError("cannot open " + path.string() + " for reading");
  return in;
}

std::ofstream
open_output(const std::filesystem::path& path)
{
  std::ofstream out(path, std::ios::binary);
  if (!out)
    throw IoError("cannot open " + path.string() + " for writing");
  return out;
}

bool
covariate_header(const std::string& name, std::size_t index)
{
  return name == "x" + std::to_string(index + 1) ||
         (index == 0 && name == "x");
}

template<typename E, std::size_t N>
E
parse_enum(const std::string& text, const E (&values)[N], const char* what)
{
  for (E v : values) {
    if (text == to_string(v))
      return v;
  }
  throw IoError(std::string("unknown ") + what + " '" + text + "'");
}

constexpr PointStatus all_status[] = { PointStatus::ok, PointStatus::fit_failed,
                                       PointStatus::near_singular,
                                       PointStatus::empty_bin };
constexpr ClampFlag all_clamp[] = { ClampFlag::none, ClampFlag::clamped_low,
                                    ClampFlag::clamped_high };

json
number_or_null(double v)
{
  return std::isfinite(v) ? json(v) : json(nullptr);
}

double
number_from(const json& j)
{
  return j.is_null() ? std::numeric_limits<double>::quiet_NaN()
                     : j.get<double>();
}

json
optional_number(const std::optional<double>& v)
{
  return v ? json(*v) : json(nullptr);
}

std::optional<double>
optional_from(const json& j)
{
  if (j.is_null())
    return std::nullopt;
  return j.get<double>();
}

void
check_schema(const json& doc, const char* kind)
{
  if (!doc.contains("schema_version") || doc["schema_version"] != schema_version)
    throw IoError(std::string(kind) + " JSON has an unsupported schema_version");
  if (!doc.contains("kind") || doc["kind"] != kind)
    throw IoError(std::string("JSON document is not of kind '") + kind + "'");
}

std::string
csv_field(const std::string& text)
{
  if (text.find_first_of(",\"\n") == std::string::npos)
    return text;
  std::string out = "\"";
  for (char c : text) {
    if (c == '"')
      out += '"';
    out += c;
  }
  return out + '"';
}

std::string
dump(const json& doc)
{
  return doc.dump(2) + "\n";
}

} // namespace

std::string
format_number(double value)
{
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  return buf;
}

const char*
to_string(OutputFormat format) noexcept
{
  return format == OutputFormat::csv ? "csv" : "json";
}

std::vector<OutputFormat>
parse_formats(const std::string& text)
{
  std::vector<OutputFormat> out;
  for (const std::string& part : split_row(text)) {
    OutputFormat f;
    if (part == "csv")
      f = OutputFormat::csv;
    else if (part == "json")
      f = OutputFormat::json;
    else
      throw InvalidArgument("unknown output format '" + part +
                            "' (expected csv or json)");
    if (std::find(out.begin(), out.end(), f) == out.end())
      out.push_back(f);
  }
  if (out.empty())
    throw InvalidArgument("no output format given");
  return out;
}

RawDataset
ingest_individual_csv(const std::filesystem::path& path)
{
  auto in = open_input(path);
  return read_individual_csv(in, path.string());
}

RawDataset
read_individual_csv(std::istream& in, const std::string& source)
{
  std::string line;
  std::size_t row = 1;
  while (std::getline(in, line) && blank(line))
    ++row;
  if (blank(line))
    throw IoError(source + ": missing header row");
  const std::vector<std::string> header = split_row(line);
  const bool with_y = header.back() == "y";
  const std::size_t dim = header.size() - (with_y ? 1 : 0);
  if (dim == 0)
    throw IoError(source + ": header has no covariate column");
  for (std::size_t c = 0; c < dim; ++c) {
    if (!covariate_header(header[c], c) &&
        !(dim == 1 && header[c] == "x1"))
      throw IoError(source + ": header column " + std::to_string(c + 1) +
                    " is '" + header[c] + "', expected x" +
                    std::to_string(c + 1) + (c == 0 ? " or x" : ""));
  }

  RawDataset raw;
  raw.dim = dim;
  std::vector<std::uint8_t> y;
  while (std::getline(in, line)) {
    ++row;
    if (blank(line))
      continue;
    const std::vector<std::string> cells = split_row(line);
    if (cells.size() != header.size())
      throw IoError(source + ": row " + std::to_string(row) + " has " +
                    std::to_string(cells.size()) + " cells, expected " +
                    std::to_string(header.size()));
    for (std::size_t c = 0; c < dim; ++c)
      raw.covariates.push_back(
        parse_double(cells[c], where(source, row, c, header[c])));
    if (with_y)
      y.push_back(parse_binary(cells[dim], where(source, row, dim, "y")));
  }
  if (with_y)
    raw.responses = std::move(y);
  return raw;
}

void
write_raw_csv(const RawDataset& raw, const std::filesystem::path& path)
{
  auto out = open_output(path);
  write_raw_csv(raw, out);
  if (!out)
    throw IoError("failed writing " + path.string());
}

void
write_raw_csv(const RawDataset& raw, std::ostream& out)
{
  raw.validate();
  for (std::size_t c = 0; c < raw.dim; ++c)
    out << (c ? "," : "") << (raw.dim == 1 ? "x" : "x" + std::to_string(c + 1));
  if (raw.responses)
    out << ",y";
  out << '\n';
  for (std::size_t i = 0; i < raw.size(); ++i) {
    for (std::size_t c = 0; c < raw.dim; ++c)
      out << (c ? "," : "") << format_number(raw.covariates[i * raw.dim + c]);
    if (raw.responses)
      out << ',' << static_cast<int>((*raw.responses)[i]);
    out << '\n';
  }
}

PooledDataset
ingest_pooled_csv(const std::filesystem::path& path)
{
  auto in = open_input(path);
  return read_pooled_csv(in, path.string());
}

PooledDataset
read_pooled_csv(std::istream& in, const std::string& source)
{
  std::string line;
  std::size_t row = 1;
  while (std::getline(in, line) && blank(line))
    ++row;
  if (blank(line))
    throw IoError(source + ": missing header row");
  const std::vector<std::string> header = split_row(line);
  if (header.size() < 3 || header.front() != "group_id" ||
      header.back() != "group_result")
    throw IoError(source + ": header must be group_id,x1[,x2,...],group_result");
  const std::size_t dim = header.size() - 2;
  for (std::size_t c = 0; c < dim; ++c) {
    if (!covariate_header(header[c + 1], c))
      throw IoError(source + ": header column " + std::to_string(c + 2) +
                    " is '" + header[c + 1] + "', expected x" +
                    std::to_string(c + 1));
  }

  PooledDataset pooled;
  pooled.dim = dim;
  std::map<std::string, std::size_t> index;
  while (std::getline(in, line)) {
    ++row;
    if (blank(line))
      continue;
    const std::vector<std::string> cells = split_row(line);
    if (cells.size() != header.size())
      throw IoError(source + ": row " + std::to_string(row) + " has " +
                    std::to_string(cells.size()) + " cells, expected " +
                    std::to_string(header.size()));
    const std::string& id = cells.front();
    if (id.empty())
      throw IoError(where(source, row, 0, "group_id") + ": empty group id");
    const std::uint8_t result = parse_binary(
      cells.back(), where(source, row, header.size() - 1, "group_result"));
    auto [it, inserted] = index.emplace(id, pooled.groups.size());
    if (inserted) {
      Group g;
      g.id = id;
      g.pooled_positive = result;
      pooled.groups.push_back(std::move(g));
    }
    Group& g = pooled.groups[it->second];
    if (*g.pooled_positive != result)
      throw IoError(source + ": group '" + id +
                    "' has inconsistent group_result values (row " +
                    std::to_string(row) + ")");
    for (std::size_t c = 0; c < dim; ++c)
      g.member_covariates.push_back(
        parse_double(cells[c + 1], where(source, row, c + 1, header[c + 1])));
    ++g.size;
  }
  if (pooled.groups.empty())
    throw IoError(source + ": no groups");

  for (Group& g : pooled.groups) {
    g.center.assign(dim, 0.0);
    for (std::size_t m = 0; m < g.size; ++m) {
      for (std::size_t c = 0; c < dim; ++c)
        g.center[c] += g.member_covariates[m * dim + c];
    }
    for (double& c : g.center)
      c /= static_cast<double>(g.size);
  }
  const auto common = pooled.common_size();
  pooled.nu = common ? static_cast<double>(*common)
                     : static_cast<double>(pooled.individuals()) /
                         static_cast<double>(pooled.groups.size());
  pooled.strategy = common && pooled.contiguous()
                      ? PoolingStrategy::homogeneous_sorted
                      : PoolingStrategy::generic;
  return pooled;
}

void
write_pooled_csv(const PooledDataset& pooled, const std::filesystem::path& path)
{
  auto out = open_output(path);
  write_pooled_csv(pooled, out);
  if (!out)
    throw IoError("failed writing " + path.string());
}

void
write_pooled_csv(const PooledDataset& pooled, std::ostream& out)
{
  if (!pooled.has_results())
    throw IoError("pooled dataset has groups without a result");
  out << "group_id";
  for (std::size_t c = 0; c < pooled.dim; ++c)
    out << ",x" << c + 1;
  out << ",group_result\n";
  for (const Group& g : pooled.groups) {
    if (g.id.find(',') != std::string::npos)
      throw IoError("group id '" + g.id + "' contains a comma");
    for (std::size_t m = 0; m < g.size; ++m) {
      out << g.id;
      for (std::size_t c = 0; c < pooled.dim; ++c)
        out << ',' << format_number(g.member_covariates[m * pooled.dim + c]);
      out << ',' << static_cast<int>(*g.pooled_positive) << '\n';
    }
  }
}

std::string
estimate_to_csv(const EstimateResult& r)
{
  std::ostringstream out;
  for (std::size_t c = 0; c < r.dim; ++c)
    out << (r.dim == 1 ? std::string("x") : "x" + std::to_string(c + 1))
        << ',';
  out << "p_hat,mu_hat,status,clamp,local_count,exponent,bandwidth\n";
  for (std::size_t i = 0; i < r.size(); ++i) {
    for (std::size_t c = 0; c < r.dim; ++c)
      out << format_number(r.grid[i * r.dim + c]) << ',';
    out << (r.p_hat[i] ? format_number(*r.p_hat[i]) : "") << ','
        << (r.mu_hat[i] ? format_number(*r.mu_hat[i]) : "") << ','
        << to_string(r.status[i]) << ',' << to_string(r.clamp[i]) << ','
        << r.local_count[i] << ',' << format_number(r.exponent[i]) << ','
        << format_number(r.bandwidth) << '\n';
  }
  return out.str();
}

std::string
estimate_to_json(const EstimateResult& r)
{
  json doc;
  doc["schema_version"] = schema_version;
  doc["kind"] = "estimate";
  doc["estimator"] = to_string(r.estimator);
  doc["dim"] = r.dim;
  doc["bandwidth"] = r.bandwidth;
  doc["nu"] = r.nu;
  doc["q_hat"] = optional_number(r.q_hat);
  doc["grid"] = r.grid;
  json p = json::array(), mu = json::array(), status = json::array(),
       clamp = json::array();
  for (std::size_t i = 0; i < r.size(); ++i) {
    p.push_back(optional_number(r.p_hat[i]));
    mu.push_back(optional_number(r.mu_hat[i]));
    status.push_back(to_string(r.status[i]));
    clamp.push_back(to_string(r.clamp[i]));
  }
  doc["p_hat"] = std::move(p);
  doc["mu_hat"] = std::move(mu);
  doc["status"] = std::move(status);
  doc["clamp"] = std::move(clamp);
  doc["local_count"] = r.local_count;
  doc["exponent"] = r.exponent;
  return dump(doc);
}

EstimateResult
estimate_from_json(const std::string& text)
{
  try {
    const json doc = json::parse(text);
    check_schema(doc, "estimate");
    EstimateResult r;
    r.estimator = parse_estimator(doc.at("estimator").get<std::string>());
    r.dim = doc.at("dim").get<std::size_t>();
    r.bandwidth = doc.at("bandwidth").get<double>();
    r.nu = doc.at("nu").get<double>();
    r.q_hat = optional_from(doc.at("q_hat"));
    r.grid = doc.at("grid").get<std::vector<double>>();
    for (const json& v : doc.at("p_hat"))
      r.p_hat.push_back(optional_from(v));
    for (const json& v : doc.at("mu_hat"))
      r.mu_hat.push_back(optional_from(v));
    for (const json& v : doc.at("status"))
      r.status.push_back(
        parse_enum(v.get<std::string>(), all_status, "point status"));
    for (const json& v : doc.at("clamp"))
      r.clamp.push_back(parse_enum(v.get<std::string>(), all_clamp, "clamp flag"));
    r.local_count = doc.at("local_count").get<std::vector<std::size_t>>();
    r.exponent = doc.at("exponent").get<std::vector<double>>();
    const std::size_t n = r.p_hat.size();
    if (r.mu_hat.size() != n || r.status.size() != n || r.clamp.size() != n ||
        r.local_count.size() != n || r.exponent.size() != n ||
        r.grid.size() != n * r.dim)
      throw IoError("estimate JSON arrays have inconsistent lengths");
    return r;
  } catch (const json::exception& e) {
    throw IoError(std::string("malformed estimate JSON: ") + e.what());
  }
}

std::string
cells_to_csv(const std::vector<SummaryCell>& cells)
{
  std::ostringstream out;
  out << "model,law,n,nu,estimator,med_ise_e4,iqr_ise_e4,replicates,"
         "n_failed_reps,flagged,median_bandwidth,all_positive_reps\n";
  for (const SummaryCell& c : cells) {
    out << csv_field(c.model) << ',' << csv_field(c.law) << ',' << c.n << ',' << c.nu << ','
        << to_string(c.estimator) << ',' << format_number(c.med_ise_e4) << ','
        << format_number(c.iqr_ise_e4) << ',' << c.replicates << ','
        << c.n_failed_reps << ',' << (c.flagged ? 1 : 0) << ','
        << format_number(c.median_bandwidth) << ',' << c.all_positive_reps
        << '\n';
  }
  return out.str();
}

std::string
cells_to_json(const std::vector<SummaryCell>& cells)
{
  json doc;
  doc["schema_version"] = schema_version;
  doc["kind"] = "summary";
  json rows = json::array();
  for (const SummaryCell& c : cells) {
    json traces = json::array();
    for (double t : c.traces)
      traces.push_back(number_or_null(t));
    rows.push_back({ { "model", c.model },
                     { "law", c.law },
                     { "n", c.n },
                     { "nu", c.nu },
                     { "estimator", to_string(c.estimator) },
                     { "med_ise_e4", number_or_null(c.med_ise_e4) },
                     { "iqr_ise_e4", number_or_null(c.iqr_ise_e4) },
                     { "replicates", c.replicates },
                     { "n_failed_reps", c.n_failed_reps },
                     { "flagged", c.flagged },
                     { "median_bandwidth", number_or_null(c.median_bandwidth) },
                     { "all_positive_reps", c.all_positive_reps },
                     { "traces", std::move(traces) } });
  }
  doc["cells"] = std::move(rows);
  return dump(doc);
}

std::vector<SummaryCell>
cells_from_json(const std::string& text)
{
  try {
    const json doc = json::parse(text);
    check_schema(doc, "summary");
    std::vector<SummaryCell> cells;
    for (const json& j : doc.at("cells")) {
      SummaryCell c;
      c.model = j.at("model").get<std::string>();
      c.law = j.at("law").get<std::string>();
      c.n = j.at("n").get<std::size_t>();
      c.nu = j.at("nu").get<int>();
      c.estimator = parse_estimator(j.at("estimator").get<std::string>());
      c.med_ise_e4 = number_from(j.at("med_ise_e4"));
      c.iqr_ise_e4 = number_from(j.at("iqr_ise_e4"));
      c.replicates = j.at("replicates").get<std::size_t>();
      c.n_failed_reps = j.at("n_failed_reps").get<std::size_t>();
      c.flagged = j.at("flagged").get<bool>();
      c.median_bandwidth = number_from(j.at("median_bandwidth"));
      c.all_positive_reps = j.at("all_positive_reps").get<std::size_t>();
      for (const json& t : j.at("traces"))
        c.traces.push_back(number_from(t));
      cells.push_back(std::move(c));
    }
    return cells;
  } catch (const json::exception& e) {
    throw IoError(std::string("malformed summary JSON: ") + e.what());
  }
}

std::string
traces_to_csv(const std::vector<SummaryCell>& cells)
{
  std::ostringstream out;
  out << "model,law,n,nu,estimator,replicate,ise\n";
  for (const SummaryCell& c : cells) {
    for (std::size_t r = 0; r < c.traces.size(); ++r) {
      out << csv_field(c.model) << ',' << csv_field(c.law) << ',' << c.n << ',' << c.nu << ','
          << to_string(c.estimator) << ',' << r << ','
          << (std::isnan(c.traces[r]) ? "" : format_number(c.traces[r]))
          << '\n';
    }
  }
  return out.str();
}

void
write_text(const std::filesystem::path& path, const std::string& text)
{
  auto out = open_output(path);
  out << text;
  out.flush();
  if (!out)
    throw IoError("failed writing " + path.string());
}

std::string
read_text(const std::filesystem::path& path)
{
  auto in = open_input(path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

namespace {

std::vector<std::filesystem::path>
emit(const std::vector<OutputFormat>& formats,
     const std::filesystem::path& outdir, const std::string& stem,
     const std::string& csv, const std::string& json_text)
{
  std::error_code ec;
  std::filesystem::create_directories(outdir, ec);
  if (ec)
    throw IoError("cannot create output directory " + outdir.string() + ": " +
                  ec.message());
  std::vector<std::filesystem::path> written;
  for (OutputFormat f : formats) {
    const auto path = outdir / (stem + "." + to_string(f));
    write_text(path, f == OutputFormat::csv ? csv : json_text);
    written.push_back(path);
  }
  return written;
}

} // namespace

std::vector<std::filesystem::path>
emit_results(const EstimateResult& result,
             const std::vector<OutputFormat>& formats,
             const std::filesystem::path& outdir, const std::string& stem)
{
  return emit(formats, outdir, stem, estimate_to_csv(result),
              estimate_to_json(result));
}

std::vector<std::filesystem::path>
emit_results(const std::vector<SummaryCell>& cells,
             const std::vector<OutputFormat>& formats,
             const std::filesystem::path& outdir, const std::string& stem)
{
  return emit(formats, outdir, stem, cells_to_csv(cells), cells_to_json(cells));
}

} // namespace hompool
