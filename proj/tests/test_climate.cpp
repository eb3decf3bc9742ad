#include <doctest.h>

#include <cfloat>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <string>
#include <vector>

#include "ffdr/climate.hpp"
#include "ffdr/errors.hpp"
#include "ffdr/rng.hpp"

using namespace ffdr;
namespace fs = std::filesystem;

namespace {

struct TempFile {
    fs::path path;
    explicit TempFile(const std::string& name) : path(fs::temp_directory_path() / name) {}
    ~TempFile() {
        std::error_code ec;
        fs::remove(path, ec);
    }
};

void write_file(const fs::path& path, const std::string& content) {
    std::ofstream out(path);
    out << content;
}

template <class Fn>
std::string parse_error_message(Fn&& fn) {
    try {
        fn();
    } catch (const ParseError& e) {
        return e.what();
    }
    return {};
}

// Keeps the tiles selected by `keep`.  Weights are carried over unscaled;
// the pipeline renormalizes over tested tiles itself, so keeping everything
// reproduces the original run bit for bit.
ClimateCube drop_tiles(const ClimateCube& cube, bool (*keep)(double lon, double lat)) {
    std::vector<double> coords, weights;
    std::vector<Eigen::Index> kept;
    for (std::size_t i = 0; i < cube.grid.size(); ++i) {
        const double lon = cube.grid.coord(i, 0);
        const double lat = cube.grid.coord(i, 1);
        if (!keep(lon, lat)) continue;
        coords.push_back(lon);
        coords.push_back(lat);
        weights.push_back(cube.grid.weight(i));
        kept.push_back(static_cast<Eigen::Index>(i));
    }
    Eigen::MatrixXd temps(static_cast<Eigen::Index>(kept.size()), cube.temps.cols());
    for (std::size_t k = 0; k < kept.size(); ++k)
        temps.row(static_cast<Eigen::Index>(k)) = cube.temps.row(kept[k]);
    return ClimateCube{WeightedGrid::create(std::move(coords), std::move(weights), 2), cube.years,
                       std::move(temps)};
}

} // namespace

TEST_SUITE("climate") {

TEST_CASE("two-tile three-year cube round trip") {
    TempFile file("ffdr_two_tile.csv");
    write_file(file.path, "lon,lat,year,temp\n"
                          "10.5,20.5,2000,1\n"
                          "10.5,20.5,2001,2\n"
                          "10.5,20.5,2002,3\n"
                          "-10.5,-20.5,2000,5\n"
                          "-10.5,-20.5,2001,5\n"
                          "-10.5,-20.5,2002,5\n");
    const ClimateCube cube = ingest_temperature_csv(file.path.string());
    REQUIRE(cube.grid.size() == 2);
    REQUIRE(cube.years == std::vector<int>{2000, 2001, 2002});
    // tiles sorted by (lon, lat)
    CHECK(cube.grid.coord(0, 0) == -10.5);
    CHECK(cube.grid.coord(1, 0) == 10.5);
    CHECK(cube.temps(0, 0) == 5.0);
    CHECK(cube.temps(1, 2) == 3.0);
    CHECK(cube.complete(0));
    CHECK(cube.complete(1));

    // constant tile hits the zero-variance convention, the perfectly rising
    // tile the perfect-fit convention
    const PValueField p = climate_trend_pvalues(cube);
    REQUIRE(p.size() == 2);
    CHECK(p[0] == 1.0);
    CHECK(p[1] == DBL_MIN);

    const ClimateRun run = run_climate(cube, {0.05});
    REQUIRE(run.coverage.rows.size() == 1);
    CHECK(run.coverage.rows[0].level == 0.05);
    CHECK(run.coverage.rows[0].unadjusted == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(run.coverage.rows[0].fbh_adjusted == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(run.per_alpha[0].alpha_star == DBL_MIN);
}

TEST_CASE("missing cells exclude a tile from testing") {
    TempFile file("ffdr_gap_tile.csv");
    write_file(file.path, "lon,lat,year,temp\n"
                          "10.5,20.5,2000,1\n"
                          "10.5,20.5,2001,2\n"
                          "10.5,20.5,2002,3\n"
                          "-10.5,-20.5,2000,5\n"
                          "-10.5,-20.5,2001,NA\n"
                          "-10.5,-20.5,2002,5\n");
    const ClimateCube cube = ingest_temperature_csv(file.path.string());
    REQUIRE(cube.grid.size() == 2);
    CHECK(!cube.complete(0));
    CHECK(cube.complete(1));
    CHECK(cube.temps(0, 1) == kMissingTemp);

    const WeightedGrid tested = tested_grid(cube);
    REQUIRE(tested.size() == 1);
    CHECK(tested.coord(0, 0) == 10.5);
    CHECK(tested.total_weight() == doctest::Approx(1.0).epsilon(1e-12));

    const PValueField p = climate_trend_pvalues(cube);
    REQUIRE(p.size() == 1);
    CHECK(p[0] == DBL_MIN);
}

TEST_CASE("parse errors name the offending line") {
    TempFile file("ffdr_bad.csv");

    write_file(file.path, "lon,lat,year,temp\n10.5,20.5,2000\n");
    std::string msg = parse_error_message([&] { ingest_temperature_csv(file.path.string()); });
    CHECK(msg.find("line 2") != std::string::npos);
    CHECK(msg.find("4 comma-separated fields") != std::string::npos);

    write_file(file.path, "lon,lat,year,temp\nabc,20.5,2000,1\n");
    msg = parse_error_message([&] { ingest_temperature_csv(file.path.string()); });
    CHECK(msg.find("line 2") != std::string::npos);
    CHECK(msg.find("longitude") != std::string::npos);

    write_file(file.path, "lon,lat,year,temp\n10.5,95.0,2000,1\n");
    msg = parse_error_message([&] { ingest_temperature_csv(file.path.string()); });
    CHECK(msg.find("line 2") != std::string::npos);
    CHECK(msg.find("latitude") != std::string::npos);

    write_file(file.path, "lon,lat,year,temp\n10.5,20.5,20x0,1\n");
    msg = parse_error_message([&] { ingest_temperature_csv(file.path.string()); });
    CHECK(msg.find("year") != std::string::npos);

    write_file(file.path, "lon,lat,year,temp\n\n");
    msg = parse_error_message([&] { ingest_temperature_csv(file.path.string()); });
    CHECK(msg.find("no data rows") != std::string::npos);

    CHECK_THROWS_AS(ingest_temperature_csv("/nonexistent/nowhere.csv"), ParseError);
}

TEST_CASE("duplicate tile-year rows are rejected with both lines named") {
    TempFile file("ffdr_dup.csv");
    write_file(file.path, "lon,lat,year,temp\n"
                          "10.5,20.5,2000,1\n"
                          "10.5,20.5,2001,2\n"
                          "10.5,20.5,2000,3\n");
    const std::string msg =
        parse_error_message([&] { ingest_temperature_csv(file.path.string()); });
    CHECK(msg.find("line 4") != std::string::npos);
    CHECK(msg.find("duplicate") != std::string::npos);
    CHECK(msg.find("2000") != std::string::npos);
    CHECK(msg.find("line 2") != std::string::npos);
}

TEST_CASE("synthetic fixture round trip") {
    TempFile file("ffdr_fixture.csv");
    FixtureSpec spec;
    spec.lon_tiles = 6;
    spec.lat_tiles = 4;
    spec.year_begin = 1983;
    spec.year_end = 1992;
    write_synthetic_climate_fixture(file.path.string(), spec);

    const ClimateCube cube = ingest_temperature_csv(file.path.string());
    CHECK(cube.grid.size() == 24);
    REQUIRE(cube.years.size() == 10);
    CHECK(cube.years.front() == 1983);
    CHECK(cube.years.back() == 1992);

    // the gap tile is the first in sorted order and misses its last year
    CHECK(!cube.complete(0));
    CHECK(cube.temps(0, 9) == kMissingTemp);
    CHECK(tested_grid(cube).size() == 23);

    // weights follow the cosine of the tile-midpoint latitude
    std::size_t low = cube.grid.size(), high = cube.grid.size();
    for (std::size_t i = 0; i < cube.grid.size(); ++i) {
        if (cube.grid.coord(i, 0) != 30.0) continue; // one longitude column
        if (cube.grid.coord(i, 1) == -67.5) low = i;
        if (cube.grid.coord(i, 1) == 22.5) high = i;
    }
    REQUIRE(low < cube.grid.size());
    REQUIRE(high < cube.grid.size());
    const double expected = std::cos(22.5 * std::numbers::pi / 180.0) /
                            std::cos(67.5 * std::numbers::pi / 180.0);
    CHECK(cube.grid.weight(high) / cube.grid.weight(low) ==
          doctest::Approx(expected).epsilon(1e-12));

    // deterministic: a second write produces the identical file
    TempFile again("ffdr_fixture2.csv");
    write_synthetic_climate_fixture(again.path.string(), spec);
    std::ifstream a(file.path), b(again.path);
    const std::string ca((std::istreambuf_iterator<char>(a)), std::istreambuf_iterator<char>());
    const std::string cb((std::istreambuf_iterator<char>(b)), std::istreambuf_iterator<char>());
    CHECK(ca == cb);
    CHECK(!ca.empty());
}

TEST_CASE("null cube rejection rate matches the nominal level") {
    const WeightedGrid grid = sphere_grid(100, 100);
    std::vector<int> years;
    for (int y = 1998; y <= 2007; ++y) years.push_back(y);
    Eigen::MatrixXd temps(static_cast<Eigen::Index>(grid.size()),
                          static_cast<Eigen::Index>(years.size()));
    for (std::size_t i = 0; i < grid.size(); ++i) {
        Rng rng(derive_seed(7, i));
        for (std::size_t j = 0; j < years.size(); ++j)
            temps(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rng.normal();
    }
    const ClimateCube cube{grid, years, std::move(temps)};
    const PValueField p = climate_trend_pvalues(cube);
    REQUIRE(p.size() == 10000);
    std::size_t hits = 0;
    for (std::size_t i = 0; i < p.size(); ++i)
        if (p[i] <= 0.05) ++hits;
    const double rate = static_cast<double>(hits) / static_cast<double>(p.size());
    CHECK(rate > 0.04);
    CHECK(rate < 0.06);
}

TEST_CASE("coverage is monotone in the level and adjustment shrinks it") {
    TempFile file("ffdr_band.csv");
    FixtureSpec spec;
    spec.lon_tiles = 36;
    spec.lat_tiles = 18;
    write_synthetic_climate_fixture(file.path.string(), spec);
    const ClimateCube cube = ingest_temperature_csv(file.path.string());
    CHECK(cube.grid.size() == 648);

    const std::vector<double> levels = {0.001, 0.01, 0.05, 0.1};
    const ClimateRun run = run_climate(cube, levels);
    REQUIRE(run.coverage.rows.size() == levels.size());
    for (std::size_t k = 0; k < levels.size(); ++k) {
        const CoverageRow& row = run.coverage.rows[k];
        CHECK(row.level == levels[k]);
        CHECK(row.fbh_adjusted <= row.unadjusted);
        CHECK(row.unadjusted >= 0.0);
        CHECK(row.unadjusted <= 1.0);
        if (k > 0) {
            CHECK(row.unadjusted >= run.coverage.rows[k - 1].unadjusted);
            CHECK(row.fbh_adjusted >= run.coverage.rows[k - 1].fbh_adjusted);
        }
    }
    // the warming band north of 30 degrees holds a quarter of the sphere and
    // the trend is strong, so adjusted coverage at 0.05 sits near it
    const CoverageRow& at05 = run.coverage.rows[2];
    CHECK(at05.fbh_adjusted > 0.2);
    CHECK(at05.fbh_adjusted < 0.35);
    CHECK(at05.unadjusted > at05.fbh_adjusted);
    CHECK(at05.unadjusted < 0.45);
}

TEST_CASE("excluding a small-measure tile set moves coverage by at most its share") {
    TempFile file("ffdr_stable.csv");
    FixtureSpec spec;
    spec.lon_tiles = 36;
    spec.lat_tiles = 18;
    spec.with_gap = false;
    write_synthetic_climate_fixture(file.path.string(), spec);
    const ClimateCube cube = ingest_temperature_csv(file.path.string());

    // keeping everything changes nothing at all
    const ClimateCube same = drop_tiles(cube, [](double, double) { return true; });
    const std::vector<double> levels = {0.01, 0.05};
    const ClimateRun base = run_climate(cube, levels);
    const ClimateRun copy = run_climate(same, levels);
    for (std::size_t k = 0; k < levels.size(); ++k) {
        CHECK(copy.coverage.rows[k].unadjusted == base.coverage.rows[k].unadjusted);
        CHECK(copy.coverage.rows[k].fbh_adjusted == base.coverage.rows[k].fbh_adjusted);
    }

    // dropping the southernmost ring (fraction ~0.8% of the sphere) moves
    // both columns by no more than twice that fraction
    const ClimateCube trimmed = drop_tiles(cube, [](double, double lat) { return lat > -80.0; });
    double eps = 0.0;
    const WeightedGrid tested = tested_grid(cube);
    for (std::size_t i = 0; i < tested.size(); ++i)
        if (tested.coord(i, 1) <= -80.0) eps += tested.weight(i) / tested.total_weight();
    CHECK(eps > 0.0);
    CHECK(eps < 0.02);
    const ClimateRun less = run_climate(trimmed, levels);
    for (std::size_t k = 0; k < levels.size(); ++k) {
        CHECK(std::abs(less.coverage.rows[k].unadjusted - base.coverage.rows[k].unadjusted) <=
              2.0 * eps);
        CHECK(std::abs(less.coverage.rows[k].fbh_adjusted - base.coverage.rows[k].fbh_adjusted) <=
              2.0 * eps);
    }
}

TEST_CASE("cube validation") {
    const WeightedGrid grid = sphere_grid(2, 2);
    Eigen::MatrixXd temps = Eigen::MatrixXd::Zero(4, 3);

    ClimateCube bad{grid, {2000, 2000, 2001}, temps};
    CHECK_THROWS_AS(bad.validate(), ValidationError);

    ClimateCube wrong_shape{grid, {2000, 2001}, temps};
    CHECK_THROWS_AS(wrong_shape.validate(), ValidationError);

    temps(1, 1) = std::nan("");
    ClimateCube nan_cube{grid, {2000, 2001, 2002}, temps};
    CHECK_THROWS_AS(nan_cube.validate(), ValidationError);

    Eigen::MatrixXd missing = Eigen::MatrixXd::Constant(4, 3, kMissingTemp);
    ClimateCube empty{grid, {2000, 2001, 2002}, missing};
    CHECK_THROWS_AS(tested_grid(empty), ValidationError);
    CHECK_THROWS_AS(climate_trend_pvalues(empty), ValidationError);

    ClimateCube ok{grid, {2000, 2001, 2002}, Eigen::MatrixXd::Zero(4, 3)};
    CHECK_THROWS_AS(run_climate(ok, {}), ValidationError);
    CHECK_THROWS_AS(run_climate(ok, {1.5}), ValidationError);
    // two years are not enough for a trend test
    ClimateCube short_years{grid, {2000, 2001}, Eigen::MatrixXd::Zero(4, 2)};
    CHECK_THROWS_AS(climate_trend_pvalues(short_years), ValidationError);
}

TEST_CASE("fixture spec validation") {
    TempFile file("ffdr_fixture_bad.csv");
    FixtureSpec spec;
    spec.lon_tiles = 0;
    CHECK_THROWS_AS(write_synthetic_climate_fixture(file.path.string(), spec), ValidationError);
    spec = FixtureSpec{};
    spec.year_end = spec.year_begin + 1;
    CHECK_THROWS_AS(write_synthetic_climate_fixture(file.path.string(), spec), ValidationError);
    spec = FixtureSpec{};
    spec.noise_sd = -1.0;
    CHECK_THROWS_AS(write_synthetic_climate_fixture(file.path.string(), spec), ValidationError);
}

} // TEST_SUITE
