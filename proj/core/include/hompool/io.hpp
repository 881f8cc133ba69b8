#pragma once

#include "hompool/dataset.hpp"
#include "hompool/estimators.hpp"
#include "hompool/simulation.hpp"

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace hompool {

inline constexpr int schema_version = 1;

enum class OutputFormat
{
  csv,
  json
};

const char* to_string(OutputFormat format) noexcept;
//! Comma-separated subset of {csv, json}.
std::vector<OutputFormat> parse_formats(const std::string& text);

//! Header `x[,x2,...][,y]`. The dimension is the number of x columns; a
//! trailing `y` column carries 0/1 responses.
RawDataset ingest_individual_csv(const std::filesystem::path& path);
RawDataset read_individual_csv(std::istream& in,
                               const std::string& source = "<stream>");
void write_raw_csv(const RawDataset& raw, const std::filesystem::path& path);
void write_raw_csv(const RawDataset& raw, std::ostream& out);

//! One row per individual: `group_id,x1[,x2,...],group_result` (`x` is
//! accepted for a single covariate). Groups keep their order of first
//! appearance and their centers are member means. Equal-sized contiguous
//! univariate groups are tagged homogeneous_sorted, everything else
//! generic.
PooledDataset ingest_pooled_csv(const std::filesystem::path& path);
PooledDataset read_pooled_csv(std::istream& in,
                              const std::string& source = "<stream>");
void write_pooled_csv(const PooledDataset& pooled,
                      const std::filesystem::path& path);
void write_pooled_csv(const PooledDataset& pooled, std::ostream& out);

//! Columns: x or x1..xd, p_hat, mu_hat, status, clamp, local_count,
//! exponent, bandwidth. Failed points leave p_hat and mu_hat empty.
std::string estimate_to_csv(const EstimateResult& result);
std::string estimate_to_json(const EstimateResult& result);
EstimateResult estimate_from_json(const std::string& text);

//! One row per (model, law, N, nu, estimator).
std::string cells_to_csv(const std::vector<SummaryCell>& cells);
std::string cells_to_json(const std::vector<SummaryCell>& cells);
std::vector<SummaryCell> cells_from_json(const std::string& text);
//! Long format: model, law, n, nu, estimator, replicate, ise.
std::string traces_to_csv(const std::vector<SummaryCell>& cells);

//! Writes `<stem>.csv` and/or `<stem>.json` into `outdir` (created when
//! missing) and returns the written paths.
std::vector<std::filesystem::path>
emit_results(const EstimateResult& result,
             const std::vector<OutputFormat>& formats,
             const std::filesystem::path& outdir,
             const std::string& stem = "estimate");

std::vector<std::filesystem::path>
emit_results(const std::vector<SummaryCell>& cells,
             const std::vector<OutputFormat>& formats,
             const std::filesystem::path& outdir,
             const std::string& stem = "summary");

//! Writes text to a file, throwing IoError with the path on failure.
void write_text(const std::filesystem::path& path, const std::string& text);
std::string read_text(const std::filesystem::path& path);

//! %.17g.
std::string format_number(double value);

} // namespace hompool
