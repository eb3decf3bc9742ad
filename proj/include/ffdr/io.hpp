#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ffdr/climate.hpp"
#include "ffdr/experiments.hpp"
#include "ffdr/fdr.hpp"
#include "ffdr/grid.hpp"

namespace ffdr {

// Row-oriented artifacts are written as CSV by default; json mirrors the
// same records as an array of objects with the column names as keys.
enum class OutputFormat { csv, json };

// Parsed `adjust` input.  Columns named `p` (required) and `weight`
// (optional) are special; every other column is a coordinate, in file order.
// A file with no coordinate columns gets a synthesized `index` coordinate so
// points stay distinct.
struct PValueInput {
    std::vector<std::string> coord_names;
    std::vector<double> coords; // point-major
    std::vector<double> pvalues;
    std::optional<std::vector<double>> weights;

    int dim() const { return static_cast<int>(coord_names.size()); }
    std::size_t size() const { return pvalues.size(); }
};

// Throws ParseError naming the line for malformed rows, p outside [0, 1],
// or non-positive weights; a file with no data rows is an error.
PValueInput read_pvalue_csv(const std::string& path);

enum class MeasureKind { uniform, sphere, weight_column };

// Builds the weighted grid the adjustment runs on.  uniform: every point
// weighs 1/n.  sphere: requires exactly two coordinates (lon, lat) and
// weighs each point by cos(lat), normalized.  weight_column: takes the
// file's weight column, which must be present.
WeightedGrid grid_from_input(const PValueInput& input, MeasureKind measure);

// Grid serialization `x1,...,xd,weight`, and field snapshots with an extra
// `value` column.
void write_grid_csv(const WeightedGrid& grid, const std::string& path);
void write_field_csv(const WeightedGrid& grid, std::span<const double> values,
                     const std::string& path);

// Adjustment output: per-point rows `<coords>,p,p_adjusted,rejected`; pass
// coord_names to override the default x1..xd headers.  The sidecar holds
// {alpha, alpha_star, rejected_measure, total_measure} as JSON.
void write_adjustment(const WeightedGrid& grid, const PValueField& pvalues,
                      const AdjustmentResult& result, const std::string& path,
                      OutputFormat format, std::span<const std::string> coord_names = {});
void write_adjustment_sidecar(const AdjustmentResult& result, const WeightedGrid& grid,
                              const std::string& path);

// Study report rows `scenario,alpha,method,metric,estimate,stderr,replications`.
void write_report(const ScenarioReport& report, const std::string& path, OutputFormat format);

// Plot-shaped views of a report: the 1-d study keyed by the (h, d) scenario
// axes, the 2-d study keyed by the level axis.
void write_sim1d_plot(const ScenarioReport& report, const std::string& path, OutputFormat format);
void write_sim2d_plot(const ScenarioReport& report, const std::string& path, OutputFormat format);

// Coverage rows `level,unadjusted,fbh_adjusted`.
void write_coverage(const CoverageTable& table, const std::string& path, OutputFormat format);

// Convergence rows `resolution,alpha_star,rejected_measure`.
void write_convergence(const std::vector<ConvergenceRow>& rows, const std::string& path,
                       OutputFormat format);

// 64-bit FNV-1a over the file bytes, as 16 hex digits.
std::string file_digest(const std::string& path);

// Record of one CLI run: enough to reproduce the outputs byte for byte.
struct RunManifest {
    std::string command;
    std::string version;
    std::uint64_t seed = 0;
    std::string config_json;                                        // resolved configuration
    std::vector<std::pair<std::string, std::string>> input_digests; // (path, digest)
    std::vector<std::string> outputs;
    double duration_seconds = 0.0;
};

void write_manifest(const RunManifest& manifest, const std::string& path);

} // namespace ffdr
