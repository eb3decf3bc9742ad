#include "ffdr/climate.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <stdexcept>
#include <string>
#include <string_view>
#include <tuple>
#include <utility>
#include <vector>

#include "ffdr/errors.hpp"
#include "ffdr/format.hpp"
#include "ffdr/rng.hpp"
#include "ffdr/test_engines.hpp"

namespace ffdr {

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
        s.remove_suffix(1);
    return s;
}

[[noreturn]] void fail(std::size_t line_no, const std::string& what) {
    throw ParseError("line " + std::to_string(line_no) + ": " + what);
}

double parse_real(std::string_view field, const char* what, std::size_t line_no) {
    double value = 0.0;
    const auto res = std::from_chars(field.data(), field.data() + field.size(), value);
    if (res.ec != std::errc{} || res.ptr != field.data() + field.size())
        fail(line_no, std::string("cannot parse ") + what + " '" + std::string(field) + "'");
    return value;
}

int parse_year(std::string_view field, std::size_t line_no) {
    int value = 0;
    const auto res = std::from_chars(field.data(), field.data() + field.size(), value);
    if (res.ec != std::errc{} || res.ptr != field.data() + field.size())
        fail(line_no, "cannot parse year '" + std::string(field) + "'");
    return value;
}

struct RawRow {
    double lon = 0.0;
    double lat = 0.0;
    int year = 0;
    double temp = kMissingTemp;
    std::size_t line_no = 0;
};

std::string tile_label(double lon, double lat) {
    return "(" + format_real(lon) + ", " + format_real(lat) + ")";
}

} // namespace

void ClimateCube::validate() const {
    if (grid.dim() != 2) throw ValidationError("climate grid must be 2-dimensional");
    if (years.empty()) throw ValidationError("years must not be empty");
    for (std::size_t j = 1; j < years.size(); ++j)
        if (years[j] <= years[j - 1]) throw ValidationError("years must be strictly increasing");
    if (temps.rows() != static_cast<Eigen::Index>(grid.size()) ||
        temps.cols() != static_cast<Eigen::Index>(years.size()))
        throw ValidationError("temperature matrix does not match grid and years");
    for (Eigen::Index i = 0; i < temps.rows(); ++i)
        for (Eigen::Index j = 0; j < temps.cols(); ++j) {
            const double v = temps(i, j);
            if (!std::isfinite(v))
                throw ValidationError("temperatures must be finite or the missing sentinel");
        }
}

bool ClimateCube::complete(std::size_t i) const {
    for (Eigen::Index j = 0; j < temps.cols(); ++j)
        if (temps(static_cast<Eigen::Index>(i), j) == kMissingTemp) return false;
    return true;
}

ClimateCube ingest_temperature_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open '" + path + "'");

    std::vector<RawRow> rows;
    std::string line;
    std::size_t line_no = 0;
    bool first_content = true;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string_view text = trim(line);
        if (text.empty()) continue;
        if (first_content) {
            first_content = false;
            // optional header line
            if (text.size() >= 3 && (text.substr(0, 3) == "lon" || text.substr(0, 3) == "Lon"))
                continue;
        }

        std::array<std::string_view, 4> fields;
        std::string_view rest = text;
        for (int f = 0; f < 4; ++f) {
            const std::size_t comma = rest.find(',');
            if (f < 3) {
                if (comma == std::string_view::npos)
                    fail(line_no, "expected 4 comma-separated fields");
                fields[f] = trim(rest.substr(0, comma));
                rest.remove_prefix(comma + 1);
            } else {
                if (comma != std::string_view::npos)
                    fail(line_no, "expected 4 comma-separated fields");
                fields[f] = trim(rest);
            }
        }

        RawRow row;
        row.line_no = line_no;
        row.lon = parse_real(fields[0], "longitude", line_no);
        row.lat = parse_real(fields[1], "latitude", line_no);
        row.year = parse_year(fields[2], line_no);
        if (!(row.lon > -180.0 && row.lon < 180.0))
            fail(line_no, "longitude " + format_real(row.lon) +
                              " outside (-180, 180); coordinates are tile midpoints");
        if (!(row.lat > -90.0 && row.lat < 90.0))
            fail(line_no, "latitude " + format_real(row.lat) +
                              " outside (-90, 90); coordinates are tile midpoints");
        if (!fields[3].empty() && fields[3] != "NA") {
            row.temp = parse_real(fields[3], "temperature", line_no);
            if (!std::isfinite(row.temp)) fail(line_no, "temperature must be finite");
        }
        rows.push_back(row);
    }
    if (rows.empty()) throw ParseError("'" + path + "' contains no data rows");

    // Distinct tiles sorted by (lon, lat); distinct years ascending.
    std::vector<std::pair<double, double>> tiles;
    std::vector<int> years;
    tiles.reserve(rows.size());
    years.reserve(rows.size());
    for (const RawRow& row : rows) {
        tiles.emplace_back(row.lon, row.lat);
        years.push_back(row.year);
    }
    std::sort(tiles.begin(), tiles.end());
    tiles.erase(std::unique(tiles.begin(), tiles.end()), tiles.end());
    std::sort(years.begin(), years.end());
    years.erase(std::unique(years.begin(), years.end()), years.end());

    const auto tile_of = [&](const RawRow& row) {
        return static_cast<std::size_t>(
            std::lower_bound(tiles.begin(), tiles.end(), std::make_pair(row.lon, row.lat)) -
            tiles.begin());
    };
    const auto year_of = [&](const RawRow& row) {
        return static_cast<std::size_t>(
            std::lower_bound(years.begin(), years.end(), row.year) - years.begin());
    };

    // Duplicate (tile, year) detection; the later line is the offender.
    std::vector<std::size_t> order(rows.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        const auto ka = std::make_tuple(rows[a].lon, rows[a].lat, rows[a].year, rows[a].line_no);
        const auto kb = std::make_tuple(rows[b].lon, rows[b].lat, rows[b].year, rows[b].line_no);
        return ka < kb;
    });
    for (std::size_t k = 1; k < order.size(); ++k) {
        const RawRow& prev = rows[order[k - 1]];
        const RawRow& cur = rows[order[k]];
        if (prev.lon == cur.lon && prev.lat == cur.lat && prev.year == cur.year)
            fail(cur.line_no, "duplicate record for tile " + tile_label(cur.lon, cur.lat) +
                                  ", year " + std::to_string(cur.year) + " (first seen on line " +
                                  std::to_string(prev.line_no) + ")");
    }

    Eigen::MatrixXd temps = Eigen::MatrixXd::Constant(
        static_cast<Eigen::Index>(tiles.size()), static_cast<Eigen::Index>(years.size()),
        kMissingTemp);
    for (const RawRow& row : rows)
        temps(static_cast<Eigen::Index>(tile_of(row)), static_cast<Eigen::Index>(year_of(row))) =
            row.temp;

    std::vector<double> coords;
    std::vector<double> weights;
    coords.reserve(2 * tiles.size());
    weights.reserve(tiles.size());
    double total = 0.0;
    for (const auto& [lon, lat] : tiles) {
        coords.push_back(lon);
        coords.push_back(lat);
        const double w = std::cos(lat * std::numbers::pi / 180.0);
        weights.push_back(w);
        total += w;
    }
    for (double& w : weights) w /= total;

    ClimateCube cube{WeightedGrid::create(std::move(coords), std::move(weights), 2),
                     std::move(years), std::move(temps)};
    cube.validate();
    return cube;
}

WeightedGrid tested_grid(const ClimateCube& cube) {
    cube.validate();
    std::vector<double> coords;
    std::vector<double> weights;
    double total = 0.0;
    for (std::size_t i = 0; i < cube.grid.size(); ++i) {
        if (!cube.complete(i)) continue;
        coords.push_back(cube.grid.coord(i, 0));
        coords.push_back(cube.grid.coord(i, 1));
        weights.push_back(cube.grid.weight(i));
        total += cube.grid.weight(i);
    }
    if (weights.empty()) throw ValidationError("no tile has a complete record");
    for (double& w : weights) w /= total;
    return WeightedGrid::create(std::move(coords), std::move(weights), 2);
}

PValueField climate_trend_pvalues(const ClimateCube& cube) {
    cube.validate();
    if (cube.years.size() < 3)
        throw ValidationError("trend testing needs at least 3 years");
    std::vector<Eigen::Index> tested;
    for (std::size_t i = 0; i < cube.grid.size(); ++i)
        if (cube.complete(i)) tested.push_back(static_cast<Eigen::Index>(i));
    if (tested.empty()) throw ValidationError("no tile has a complete record");

    Eigen::MatrixXd series(static_cast<Eigen::Index>(tested.size()), cube.temps.cols());
    for (std::size_t k = 0; k < tested.size(); ++k) series.row(static_cast<Eigen::Index>(k)) = cube.temps.row(tested[k]);
    std::vector<double> years(cube.years.begin(), cube.years.end());
    return ols_trend_test(series, years, TestSide::greater);
}

ClimateRun run_climate(const ClimateCube& cube, const std::vector<double>& alphas) {
    if (alphas.empty()) throw ValidationError("alphas must not be empty");
    for (double a : alphas)
        if (!(a > 0.0 && a < 1.0)) throw ValidationError("alphas must lie in (0, 1)");

    WeightedGrid tested = tested_grid(cube);
    PValueField pvalues = climate_trend_pvalues(cube);

    std::vector<AdjustmentResult> per_alpha;
    per_alpha.reserve(alphas.size());
    CoverageTable table;
    table.rows.reserve(alphas.size());
    const double total = tested.total_weight();
    for (double alpha : alphas) {
        double below = 0.0;
        for (std::size_t i = 0; i < pvalues.size(); ++i)
            if (pvalues[i] <= alpha) below += tested.weight(i);
        AdjustmentResult res = fbh_adjust(pvalues, tested, alpha);
        table.rows.push_back({alpha, below / total, res.rejected_measure / total});
        per_alpha.push_back(std::move(res));
    }
    return ClimateRun{std::move(tested), std::move(pvalues), std::move(per_alpha),
                      std::move(table)};
}

void FixtureSpec::validate() const {
    if (lon_tiles < 1 || lat_tiles < 1) throw ValidationError("tile counts must be positive");
    if (year_end < year_begin + 2) throw ValidationError("need at least 3 years");
    if (!(noise_sd >= 0.0) || !std::isfinite(noise_sd))
        throw ValidationError("noise_sd must be finite and non-negative");
    if (!std::isfinite(trend_per_year)) throw ValidationError("trend_per_year must be finite");
}

void write_synthetic_climate_fixture(const std::string& path, const FixtureSpec& spec) {
    spec.validate();
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");

    const int n_years = spec.year_end - spec.year_begin + 1;
    out << "lon,lat,year,temp\n";
    for (int a = 0; a < spec.lon_tiles; ++a) {
        const double lon = -180.0 + (a + 0.5) * 360.0 / spec.lon_tiles;
        for (int b = 0; b < spec.lat_tiles; ++b) {
            const double lat = -90.0 + (b + 0.5) * 180.0 / spec.lat_tiles;
            const int tile = a * spec.lat_tiles + b;
            Rng rng(derive_seed(spec.seed, static_cast<std::uint64_t>(tile)));
            const double base = 15.0 * std::cos(lat * std::numbers::pi / 180.0);
            const double trend = lat > 30.0 ? spec.trend_per_year : 0.0;
            for (int j = 0; j < n_years; ++j) {
                const double temp = base + trend * j + spec.noise_sd * rng.normal();
                if (spec.with_gap && tile == 0 && j == n_years - 1) continue;
                out << format_real(lon) << ',' << format_real(lat) << ','
                    << spec.year_begin + j << ',' << format_real(temp) << '\n';
            }
        }
    }
    if (!out) throw std::runtime_error("failed writing '" + path + "'");
}

} // namespace ffdr
