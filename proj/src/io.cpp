#include "ffdr/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <stdexcept>
#include <string_view>
#include <utility>

#include <json.hpp>

#include "ffdr/errors.hpp"
#include "ffdr/format.hpp"

namespace ffdr {

namespace {

using ordered_json = nlohmann::ordered_json;

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
        s.remove_suffix(1);
    return s;
}

std::vector<std::string_view> split_fields(std::string_view text) {
    std::vector<std::string_view> fields;
    while (true) {
        const std::size_t comma = text.find(',');
        if (comma == std::string_view::npos) {
            fields.push_back(trim(text));
            return fields;
        }
        fields.push_back(trim(text.substr(0, comma)));
        text.remove_prefix(comma + 1);
    }
}

[[noreturn]] void fail(std::size_t line_no, const std::string& what) {
    throw ParseError("line " + std::to_string(line_no) + ": " + what);
}

double parse_real(std::string_view field, const std::string& what, std::size_t line_no) {
    double value = 0.0;
    const auto res = std::from_chars(field.data(), field.data() + field.size(), value);
    if (res.ec != std::errc{} || res.ptr != field.data() + field.size())
        fail(line_no, "cannot parse " + what + " '" + std::string(field) + "'");
    return value;
}

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
    return out;
}

void finish_out(std::ofstream& out, const std::string& path) {
    out.flush();
    if (!out) throw std::runtime_error("failed writing '" + path + "'");
}

// One row-oriented artifact: CSV columns or identically keyed JSON objects.
class RowWriter {
public:
    RowWriter(const std::string& path, OutputFormat format, std::vector<std::string> columns)
        : path_(path), format_(format), columns_(std::move(columns)), out_(open_out(path)) {
        if (format_ == OutputFormat::csv) {
            for (std::size_t c = 0; c < columns_.size(); ++c)
                out_ << (c ? "," : "") << columns_[c];
            out_ << '\n';
        } else {
            doc_ = ordered_json::array();
        }
    }

    void row(const std::vector<ordered_json>& values) {
        if (format_ == OutputFormat::csv) {
            for (std::size_t c = 0; c < values.size(); ++c) {
                out_ << (c ? "," : "");
                const ordered_json& v = values[c];
                if (v.is_string())
                    out_ << v.get<std::string>();
                else if (v.is_number_float())
                    out_ << format_real_exact(v.get<double>());
                else
                    out_ << v.dump();
            }
            out_ << '\n';
        } else {
            ordered_json obj;
            for (std::size_t c = 0; c < values.size(); ++c) obj[columns_[c]] = values[c];
            doc_.push_back(std::move(obj));
        }
    }

    void finish() {
        if (format_ == OutputFormat::json) out_ << doc_.dump(2) << '\n';
        finish_out(out_, path_);
    }

private:
    std::string path_;
    OutputFormat format_;
    std::vector<std::string> columns_;
    std::ofstream out_;
    ordered_json doc_;
};

std::vector<std::string> default_coord_names(int dim) {
    std::vector<std::string> names;
    names.reserve(static_cast<std::size_t>(dim));
    for (int a = 0; a < dim; ++a) names.push_back("x" + std::to_string(a + 1));
    return names;
}

} // namespace

PValueInput read_pvalue_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open '" + path + "'");

    std::string line;
    std::size_t line_no = 0;

    // header
    std::vector<std::string> header;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string_view text = trim(line);
        if (text.empty()) continue;
        for (std::string_view f : split_fields(text)) header.emplace_back(f);
        break;
    }
    if (header.empty()) throw ParseError("'" + path + "' contains no rows");

    std::ptrdiff_t p_col = -1, weight_col = -1;
    std::vector<std::pair<std::string, std::size_t>> coord_cols;
    for (std::size_t c = 0; c < header.size(); ++c) {
        if (header[c] == "p") {
            if (p_col >= 0) fail(line_no, "duplicate 'p' column");
            p_col = static_cast<std::ptrdiff_t>(c);
        } else if (header[c] == "weight") {
            if (weight_col >= 0) fail(line_no, "duplicate 'weight' column");
            weight_col = static_cast<std::ptrdiff_t>(c);
        } else {
            if (header[c].empty()) fail(line_no, "empty column name in header");
            coord_cols.emplace_back(header[c], c);
        }
    }
    if (p_col < 0) fail(line_no, "no 'p' column in header");

    PValueInput input;
    for (const auto& [name, col] : coord_cols) input.coord_names.push_back(name);
    if (weight_col >= 0) input.weights.emplace();

    while (std::getline(in, line)) {
        ++line_no;
        const std::string_view text = trim(line);
        if (text.empty()) continue;
        const auto fields = split_fields(text);
        if (fields.size() != header.size())
            fail(line_no, "expected " + std::to_string(header.size()) + " fields, got " +
                              std::to_string(fields.size()));
        const double p = parse_real(fields[static_cast<std::size_t>(p_col)], "p", line_no);
        if (!(p >= 0.0 && p <= 1.0)) fail(line_no, "p-value " + format_real(p) + " outside [0, 1]");
        input.pvalues.push_back(p);
        if (weight_col >= 0) {
            const double w =
                parse_real(fields[static_cast<std::size_t>(weight_col)], "weight", line_no);
            if (!(w > 0.0) || !std::isfinite(w))
                fail(line_no, "weight " + format_real(w) + " is not strictly positive");
            input.weights->push_back(w);
        }
        for (const auto& [name, col] : coord_cols)
            input.coords.push_back(parse_real(fields[col], "coordinate " + name, line_no));
    }
    if (input.pvalues.empty()) throw ParseError("'" + path + "' contains no rows");

    if (input.coord_names.empty()) {
        input.coord_names.push_back("index");
        input.coords.resize(input.pvalues.size());
        for (std::size_t i = 0; i < input.coords.size(); ++i)
            input.coords[i] = static_cast<double>(i);
    }
    return input;
}

WeightedGrid grid_from_input(const PValueInput& input, MeasureKind measure) {
    const std::size_t n = input.size();
    std::vector<double> coords = input.coords;
    std::vector<double> weights;
    switch (measure) {
        case MeasureKind::uniform:
            weights.assign(n, 1.0 / static_cast<double>(n));
            break;
        case MeasureKind::sphere: {
            if (input.dim() != 2)
                throw ValidationError(
                    "sphere measure needs exactly two coordinate columns (lon, lat)");
            double total = 0.0;
            weights.resize(n);
            for (std::size_t i = 0; i < n; ++i) {
                const double lat = coords[2 * i + 1];
                if (!(lat > -90.0 && lat < 90.0))
                    throw ValidationError("latitude " + format_real(lat) +
                                          " outside (-90, 90) for the sphere measure");
                weights[i] = std::cos(lat * std::numbers::pi / 180.0);
                total += weights[i];
            }
            for (double& w : weights) w /= total;
            break;
        }
        case MeasureKind::weight_column:
            if (!input.weights.has_value())
                throw ValidationError("input has no 'weight' column");
            weights = *input.weights;
            break;
    }
    return WeightedGrid::create(std::move(coords), std::move(weights), input.dim());
}

void write_grid_csv(const WeightedGrid& grid, const std::string& path) {
    std::ofstream out = open_out(path);
    for (int a = 0; a < grid.dim(); ++a) out << "x" << a + 1 << ",";
    out << "weight\n";
    for (std::size_t i = 0; i < grid.size(); ++i) {
        for (int a = 0; a < grid.dim(); ++a) out << format_real_exact(grid.coord(i, a)) << ',';
        out << format_real_exact(grid.weight(i)) << '\n';
    }
    finish_out(out, path);
}

void write_field_csv(const WeightedGrid& grid, std::span<const double> values,
                     const std::string& path) {
    if (values.size() != grid.size())
        throw ValidationError("field length does not match the grid");
    std::ofstream out = open_out(path);
    for (int a = 0; a < grid.dim(); ++a) out << "x" << a + 1 << ",";
    out << "weight,value\n";
    for (std::size_t i = 0; i < grid.size(); ++i) {
        for (int a = 0; a < grid.dim(); ++a) out << format_real_exact(grid.coord(i, a)) << ',';
        out << format_real_exact(grid.weight(i)) << ',' << format_real_exact(values[i]) << '\n';
    }
    finish_out(out, path);
}

void write_adjustment(const WeightedGrid& grid, const PValueField& pvalues,
                      const AdjustmentResult& result, const std::string& path,
                      OutputFormat format, std::span<const std::string> coord_names) {
    if (pvalues.size() != grid.size() || result.reject.size() != grid.size())
        throw ValidationError("adjustment output does not match the grid");
    std::vector<std::string> names;
    if (coord_names.empty()) {
        names = default_coord_names(grid.dim());
    } else {
        if (coord_names.size() != static_cast<std::size_t>(grid.dim()))
            throw ValidationError("coordinate name count does not match the grid dimension");
        names.assign(coord_names.begin(), coord_names.end());
    }
    std::vector<std::string> columns = names;
    columns.insert(columns.end(), {"p", "p_adjusted", "rejected"});

    RowWriter writer(path, format, std::move(columns));
    std::vector<ordered_json> row(static_cast<std::size_t>(grid.dim()) + 3);
    for (std::size_t i = 0; i < grid.size(); ++i) {
        for (int a = 0; a < grid.dim(); ++a)
            row[static_cast<std::size_t>(a)] = grid.coord(i, a);
        row[names.size()] = pvalues[i];
        row[names.size() + 1] = result.adjusted[i];
        row[names.size() + 2] = static_cast<int>(result.reject[i]);
        writer.row(row);
    }
    writer.finish();
}

void write_adjustment_sidecar(const AdjustmentResult& result, const WeightedGrid& grid,
                              const std::string& path) {
    ordered_json doc;
    doc["alpha"] = result.alpha;
    doc["alpha_star"] = result.alpha_star;
    doc["rejected_measure"] = result.rejected_measure;
    doc["total_measure"] = grid.total_weight();
    std::ofstream out = open_out(path);
    out << doc.dump(2) << '\n';
    finish_out(out, path);
}

void write_report(const ScenarioReport& report, const std::string& path, OutputFormat format) {
    RowWriter writer(path, format,
                     {"scenario", "alpha", "method", "metric", "estimate", "stderr",
                      "replications"});
    for (const ScenarioRow& r : report.rows)
        writer.row({r.scenario, r.alpha, r.method, r.metric, r.estimate, r.std_error,
                    r.replications});
    writer.finish();
}

namespace {

// Scenario labels of the 1-d study look like "d=2,h=10".
std::pair<double, int> parse_1d_scenario(const std::string& scenario) {
    const auto comma = scenario.find(",h=");
    if (scenario.rfind("d=", 0) != 0 || comma == std::string::npos)
        throw ValidationError("scenario '" + scenario + "' is not from the 1-d study");
    double d = 0.0;
    int h = 0;
    const char* db = scenario.data() + 2;
    const char* de = scenario.data() + comma;
    const char* hb = scenario.data() + comma + 3;
    const char* he = scenario.data() + scenario.size();
    if (std::from_chars(db, de, d).ptr != de || std::from_chars(hb, he, h).ptr != he)
        throw ValidationError("scenario '" + scenario + "' is not from the 1-d study");
    return {d, h};
}

} // namespace

void write_sim1d_plot(const ScenarioReport& report, const std::string& path,
                      OutputFormat format) {
    RowWriter writer(path, format, {"h", "d", "method", "metric", "value"});
    for (const ScenarioRow& r : report.rows) {
        const auto [d, h] = parse_1d_scenario(r.scenario);
        writer.row({h, d, r.method, r.metric, r.estimate});
    }
    writer.finish();
}

void write_sim2d_plot(const ScenarioReport& report, const std::string& path,
                      OutputFormat format) {
    RowWriter writer(path, format, {"alpha", "method", "metric", "value"});
    for (const ScenarioRow& r : report.rows)
        writer.row({r.alpha, r.method, r.metric, r.estimate});
    writer.finish();
}

void write_coverage(const CoverageTable& table, const std::string& path, OutputFormat format) {
    RowWriter writer(path, format, {"level", "unadjusted", "fbh_adjusted"});
    for (const CoverageRow& r : table.rows) writer.row({r.level, r.unadjusted, r.fbh_adjusted});
    writer.finish();
}

void write_convergence(const std::vector<ConvergenceRow>& rows, const std::string& path,
                       OutputFormat format) {
    RowWriter writer(path, format, {"resolution", "alpha_star", "rejected_measure"});
    for (const ConvergenceRow& r : rows)
        writer.row({static_cast<std::uint64_t>(r.resolution), r.alpha_star, r.rejected_measure});
    writer.finish();
}

std::string file_digest(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open '" + path + "'");
    std::uint64_t hash = 14695981039346656037ull;
    char buf[1 << 16];
    while (in.read(buf, sizeof buf), in.gcount() > 0)
        for (std::streamsize i = 0; i < in.gcount(); ++i) {
            hash ^= static_cast<unsigned char>(buf[i]);
            hash *= 1099511628211ull;
        }
    char hex[17];
    std::snprintf(hex, sizeof hex, "%016llx", static_cast<unsigned long long>(hash));
    return hex;
}

void write_manifest(const RunManifest& manifest, const std::string& path) {
    ordered_json doc;
    doc["command"] = manifest.command;
    doc["version"] = manifest.version;
    doc["seed"] = manifest.seed;
    doc["config"] = manifest.config_json.empty()
                        ? ordered_json::object()
                        : ordered_json::parse(manifest.config_json);
    ordered_json inputs = ordered_json::array();
    for (const auto& [file, digest] : manifest.input_digests)
        inputs.push_back({{"path", file}, {"digest", digest}});
    doc["inputs"] = std::move(inputs);
    doc["outputs"] = manifest.outputs;
    doc["duration_seconds"] = manifest.duration_seconds;
    std::ofstream out = open_out(path);
    out << doc.dump(2) << '\n';
    finish_out(out, path);
}

} // namespace ffdr
