#include <chrono>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <iostream>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "ffdr/climate.hpp"
#include "ffdr/experiments.hpp"
#include "ffdr/fdr.hpp"
#include "ffdr/format.hpp"
#include "ffdr/io.hpp"
#include "ffdr/version.hpp"

namespace {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;
using ffdr::format_real;
using ffdr::OutputFormat;

struct Global {
    std::string out_dir = ".";
    std::uint64_t seed = 1;
    int workers = 0; // 0 = all cores
    std::string format = "csv";

    OutputFormat fmt() const {
        return format == "json" ? OutputFormat::json : OutputFormat::csv;
    }
    const char* ext() const { return format == "json" ? ".json" : ".csv"; }
    std::string path(const std::string& name) const {
        return (fs::path(out_dir) / name).string();
    }
};

class Stopwatch {
public:
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }

private:
    std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

ordered_json base_config(const Global& g) {
    ordered_json config;
    config["out_dir"] = g.out_dir;
    config["seed"] = g.seed;
    config["workers"] = g.workers;
    config["format"] = g.format;
    return config;
}

void emit_manifest(const Global& g, const std::string& command, ordered_json config,
                   std::vector<std::pair<std::string, std::string>> input_digests,
                   std::vector<std::string> outputs, const Stopwatch& watch) {
    ffdr::RunManifest manifest;
    manifest.command = command;
    manifest.version = ffdr::kVersion;
    manifest.seed = g.seed;
    manifest.config_json = config.dump();
    manifest.input_digests = std::move(input_digests);
    manifest.outputs = std::move(outputs);
    manifest.duration_seconds = watch.seconds();
    write_manifest(manifest, g.path(command + "_manifest.json"));
}

void cmd_adjust(const Global& g, const std::string& input_path, double alpha,
                const std::string& measure) {
    const Stopwatch watch;
    fs::create_directories(g.out_dir);

    const ffdr::PValueInput input = ffdr::read_pvalue_csv(input_path);
    ffdr::MeasureKind kind = ffdr::MeasureKind::uniform;
    if (measure == "sphere") kind = ffdr::MeasureKind::sphere;
    if (measure == "weight-column") kind = ffdr::MeasureKind::weight_column;
    const ffdr::WeightedGrid grid = grid_from_input(input, kind);
    const ffdr::PValueField field(input.pvalues);
    const ffdr::AdjustmentResult result = fbh_adjust(field, grid, alpha);

    const std::string result_path = g.path(std::string("adjust_result") + g.ext());
    const std::string sidecar_path = g.path("adjust_summary.json");
    write_adjustment(grid, field, result, result_path, g.fmt(), input.coord_names);
    write_adjustment_sidecar(result, grid, sidecar_path);

    ordered_json config = base_config(g);
    config["input"] = input_path;
    config["alpha"] = alpha;
    config["measure"] = measure;
    emit_manifest(g, "adjust", std::move(config), {{input_path, ffdr::file_digest(input_path)}},
                  {result_path, sidecar_path}, watch);

    std::cout << "alpha_star = " << format_real(result.alpha_star) << '\n'
              << "rejected_measure = " << format_real(result.rejected_measure) << " of "
              << format_real(grid.total_weight()) << '\n';
}

void cmd_sim1d(const Global& g, const ffdr::Sim1DConfig& config) {
    const Stopwatch watch;
    fs::create_directories(g.out_dir);
    const ffdr::ScenarioReport report = run_sim_1d(config);

    const std::string report_path = g.path(std::string("sim1d_report") + g.ext());
    const std::string plot_path = g.path(std::string("sim1d_plot") + g.ext());
    write_report(report, report_path, g.fmt());
    write_sim1d_plot(report, plot_path, g.fmt());

    ordered_json cfg = base_config(g);
    cfg["n_curves"] = config.n_curves;
    cfg["grid_points"] = config.grid_points;
    cfg["h_values"] = config.h_values;
    cfg["d_values"] = config.d_values;
    cfg["replications"] = config.replications;
    cfg["permutations"] = config.permutations;
    cfg["alpha"] = config.alpha;
    emit_manifest(g, "sim1d", std::move(cfg), {}, {report_path, plot_path}, watch);

    std::cout << "sim1d wrote " << report.rows.size() << " report rows to " << report_path
              << '\n';
}

void cmd_sim2d(const Global& g, const ffdr::Sim2DConfig& config) {
    const Stopwatch watch;
    fs::create_directories(g.out_dir);
    const ffdr::ScenarioReport report = run_sim_2d(config);

    const std::string report_path = g.path(std::string("sim2d_report") + g.ext());
    const std::string plot_path = g.path(std::string("sim2d_plot") + g.ext());
    write_report(report, report_path, g.fmt());
    write_sim2d_plot(report, plot_path, g.fmt());

    ordered_json cfg = base_config(g);
    cfg["grid_side"] = config.grid_side;
    cfg["signal_size"] = config.signal_size;
    cfg["samples_per_test"] = config.samples_per_test;
    cfg["replications"] = config.replications;
    cfg["alphas"] = config.alphas;
    cfg["matern"] = {{"variance", config.matern.variance},
                     {"range", config.matern.range},
                     {"smoothness", config.matern.smoothness}};
    emit_manifest(g, "sim2d", std::move(cfg), {}, {report_path, plot_path}, watch);

    std::cout << "sim2d wrote " << report.rows.size() << " report rows to " << report_path
              << '\n';
}

void cmd_climate(const Global& g, std::string input_path, bool make_fixture,
                 const std::vector<double>& alphas) {
    const Stopwatch watch;
    fs::create_directories(g.out_dir);

    if (make_fixture) {
        input_path = g.path("climate_fixture.csv");
        ffdr::FixtureSpec spec;
        spec.seed = g.seed;
        write_synthetic_climate_fixture(input_path, spec);
    }
    const ffdr::ClimateCube cube = ffdr::ingest_temperature_csv(input_path);
    const ffdr::ClimateRun run = run_climate(cube, alphas);

    std::vector<std::string> outputs;
    const std::string coverage_path = g.path(std::string("coverage_table") + g.ext());
    write_coverage(run.coverage, coverage_path, g.fmt());
    outputs.push_back(coverage_path);

    const std::vector<std::string> coord_names = {"lon", "lat"};
    for (std::size_t k = 0; k < alphas.size(); ++k) {
        const std::string path =
            g.path("climate_result_" + format_real(alphas[k]) + g.ext());
        write_adjustment(run.tested, run.pvalues, run.per_alpha[k], path, g.fmt(), coord_names);
        outputs.push_back(path);
    }

    ordered_json cfg = base_config(g);
    cfg["input"] = input_path;
    cfg["fixture"] = make_fixture;
    cfg["alphas"] = alphas;
    cfg["tiles"] = cube.grid.size();
    cfg["tested_tiles"] = run.tested.size();
    if (make_fixture) outputs.push_back(input_path);
    emit_manifest(g, "climate", std::move(cfg),
                  {{input_path, ffdr::file_digest(input_path)}}, outputs, watch);

    for (const ffdr::CoverageRow& row : run.coverage.rows)
        std::cout << "level " << format_real(row.level) << ": unadjusted "
                  << format_real(row.unadjusted) << ", fbh " << format_real(row.fbh_adjusted)
                  << '\n';
}

void cmd_converge(const Global& g, const std::string& function, int base_resolution, int levels,
                  double alpha) {
    const Stopwatch watch;
    fs::create_directories(g.out_dir);
    const std::vector<ffdr::ConvergenceRow> rows =
        ffdr::convergence_study(function, base_resolution, levels, alpha);

    const std::string path = g.path("converge_" + function + g.ext());
    write_convergence(rows, path, g.fmt());

    ordered_json cfg = base_config(g);
    cfg["function"] = function;
    cfg["base_resolution"] = base_resolution;
    cfg["levels"] = levels;
    cfg["alpha"] = alpha;
    emit_manifest(g, "converge", std::move(cfg), {}, {path}, watch);

    for (const ffdr::ConvergenceRow& row : rows)
        std::cout << "resolution " << row.resolution << ": alpha_star "
                  << format_real(row.alpha_star) << ", rejected "
                  << format_real(row.rejected_measure) << '\n';
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"functional false discovery rate toolkit"};
    app.require_subcommand(1);
    app.fallthrough(); // global flags may follow the subcommand name

    Global global;
    app.add_option("--out-dir", global.out_dir, "directory for output artifacts")
        ->capture_default_str();
    app.add_option("--seed", global.seed, "base seed for all random streams")
        ->capture_default_str();
    app.add_option("--workers", global.workers, "worker threads (0 = all cores)")
        ->capture_default_str();
    app.add_option("--format", global.format, "row artifact format")
        ->check(CLI::IsMember({"csv", "json"}))
        ->capture_default_str();

    // adjust
    auto* adjust = app.add_subcommand(
        "adjust", "threshold a p-value field over a weighted grid");
    std::string adjust_input;
    double adjust_alpha = 0.05;
    std::string adjust_measure = "uniform";
    adjust->add_option("--input", adjust_input, "CSV with a p column (see docs)")->required();
    adjust->add_option("--alpha", adjust_alpha, "significance level")->capture_default_str();
    adjust->add_option("--measure", adjust_measure, "weighting of the grid points")
        ->check(CLI::IsMember({"uniform", "sphere", "weight-column"}))
        ->capture_default_str();
    adjust->callback([&] { cmd_adjust(global, adjust_input, adjust_alpha, adjust_measure); });

    // sim1d
    auto* sim1d = app.add_subcommand("sim1d", "curve-signal detection study");
    ffdr::Sim1DConfig cfg1d;
    sim1d->add_option("--curves", cfg1d.n_curves, "observations per replication")
        ->capture_default_str();
    sim1d->add_option("--grid-points", cfg1d.grid_points, "evaluation grid size")
        ->capture_default_str();
    sim1d->add_option("--h-values", cfg1d.h_values, "signal widths (basis coefficients)")
        ->delimiter(',')
        ->capture_default_str();
    sim1d->add_option("--d-values", cfg1d.d_values, "signal strengths")
        ->delimiter(',')
        ->capture_default_str();
    sim1d->add_option("--replications", cfg1d.replications, "Monte-Carlo replications")
        ->capture_default_str();
    sim1d->add_option("--permutations", cfg1d.permutations, "permutations per test")
        ->capture_default_str();
    sim1d->add_option("--alpha", cfg1d.alpha, "significance level")->capture_default_str();
    sim1d->callback([&] {
        cfg1d.seed = global.seed;
        cfg1d.workers = global.workers;
        cmd_sim1d(global, cfg1d);
    });

    // sim2d
    auto* sim2d = app.add_subcommand("sim2d", "spike-detection study on the unit square");
    ffdr::Sim2DConfig cfg2d;
    sim2d->add_option("--grid-side", cfg2d.grid_side, "lattice side length")
        ->capture_default_str();
    sim2d->add_option("--signal", cfg2d.signal_size, "spike height")->capture_default_str();
    sim2d->add_option("--samples", cfg2d.samples_per_test, "fields per replication")
        ->capture_default_str();
    sim2d->add_option("--replications", cfg2d.replications, "Monte-Carlo replications")
        ->capture_default_str();
    sim2d->add_option("--alphas", cfg2d.alphas, "significance levels")
        ->delimiter(',')
        ->capture_default_str();
    sim2d->add_option("--variance", cfg2d.matern.variance, "noise field variance")
        ->capture_default_str();
    sim2d->add_option("--range", cfg2d.matern.range, "noise field range")
        ->capture_default_str();
    sim2d->add_option("--smoothness", cfg2d.matern.smoothness, "noise field smoothness")
        ->capture_default_str();
    sim2d->callback([&] {
        cfg2d.seed = global.seed;
        cfg2d.workers = global.workers;
        cmd_sim2d(global, cfg2d);
    });

    // climate
    auto* climate = app.add_subcommand(
        "climate", "per-tile temperature trend testing with sphere weights");
    std::string climate_input;
    bool climate_fixture = false;
    std::vector<double> climate_alphas = {0.001, 0.01, 0.05, 0.1};
    climate->add_option("--input", climate_input, "long CSV lon,lat,year,temp");
    climate->add_flag("--fixture", climate_fixture,
                      "generate and analyze the synthetic fixture instead of --input");
    climate->add_option("--alphas", climate_alphas, "significance levels")
        ->delimiter(',')
        ->capture_default_str();
    climate->callback([&] {
        if (climate_fixture != climate_input.empty())
            throw CLI::ValidationError("climate", "pass exactly one of --input and --fixture");
        cmd_climate(global, climate_input, climate_fixture, climate_alphas);
    });

    // converge
    auto* converge = app.add_subcommand(
        "converge", "threshold convergence under lattice refinement");
    std::string conv_function = "tsq";
    int conv_base = 1000;
    int conv_levels = 4;
    double conv_alpha = 0.05;
    converge->add_option("--function", conv_function, "catalog p-value function")
        ->check(CLI::IsMember(ffdr::convergence_catalog()))
        ->capture_default_str();
    converge->add_option("--base-resolution", conv_base, "points at the first level")
        ->capture_default_str();
    converge->add_option("--levels", conv_levels, "refinement levels")->capture_default_str();
    converge->add_option("--alpha", conv_alpha, "significance level")->capture_default_str();
    converge->callback(
        [&] { cmd_converge(global, conv_function, conv_base, conv_levels, conv_alpha); });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
