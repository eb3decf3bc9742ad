#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ffdr/fdr.hpp"
#include "ffdr/grid.hpp"

namespace ffdr {

// Sentinel marking an absent temperature cell.
inline constexpr double kMissingTemp = -9999.0;

// Gridded yearly temperature records on longitude/latitude tile midpoints.
// temps(i, j) is tile i in year years[j], in centigrade, or kMissingTemp.
// Tiles with any missing year are excluded from testing and from the tested
// measure.
struct ClimateCube {
    WeightedGrid grid;      // one point per tile, cosine-latitude weights
    std::vector<int> years; // strictly increasing
    Eigen::MatrixXd temps;  // grid.size() x years.size()

    void validate() const; // throws ValidationError

    // True when tile i has a record for every year.
    bool complete(std::size_t i) const;
};

// Reads long-format CSV `lon,lat,year,temp` (decimal-dot reals, optional
// header line).  Coordinates are tile midpoints with lon in (-180, 180) and
// lat in (-90, 90).  A row may mark its cell missing with an empty or NA
// temperature field; cells with no row at all are missing too.  Throws
// ParseError naming the line on malformed rows, out-of-range coordinates, or
// duplicate (lon, lat, year) triples.
ClimateCube ingest_temperature_csv(const std::string& path);

// Sub-grid of the tiles with complete records, in cube order, weights
// renormalized to total 1.  Throws ValidationError when no tile is complete.
WeightedGrid tested_grid(const ClimateCube& cube);

// Pointwise positive-trend p-values (straight-line fit over years, upper
// tail), one per tested tile, in tested_grid(cube) point order.  Requires at
// least 3 years.
PValueField climate_trend_pvalues(const ClimateCube& cube);

struct CoverageRow {
    double level = 0.0;
    double unadjusted = 0.0;   // fraction of tested measure with p <= level
    double fbh_adjusted = 0.0; // fraction rejected by the adjustment at level
};

struct CoverageTable {
    std::vector<CoverageRow> rows;
};

// Full pipeline output: the tested sub-grid, its p-value field, one
// adjustment per requested level, and the coverage table.  Adjusted coverage
// never exceeds unadjusted coverage at the same level.
struct ClimateRun {
    WeightedGrid tested;
    PValueField pvalues;
    std::vector<AdjustmentResult> per_alpha;
    CoverageTable coverage;
};

ClimateRun run_climate(const ClimateCube& cube, const std::vector<double>& alphas);

// Deterministic synthetic dataset standing in for real gridded temperatures:
// a warming band north of 30 degrees latitude over a latitude-shaped climate
// with Gaussian year-to-year noise.  Optionally drops one tile-year to
// exercise the missing-data path.
struct FixtureSpec {
    int lon_tiles = 24;
    int lat_tiles = 12;
    int year_begin = 1983;
    int year_end = 2007;
    double trend_per_year = 0.04; // applied where lat > 30
    double noise_sd = 0.3;
    std::uint64_t seed = 42;
    bool with_gap = true; // first tile misses its final year

    void validate() const;
};

void write_synthetic_climate_fixture(const std::string& path, const FixtureSpec& spec);

} // namespace ffdr
