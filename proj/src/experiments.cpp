#include "ffdr/experiments.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <utility>

#include <Eigen/Dense>

#include "ffdr/bspline.hpp"
#include "ffdr/errors.hpp"
#include "ffdr/fdr.hpp"
#include "ffdr/format.hpp"
#include "ffdr/parallel.hpp"
#include "ffdr/rng.hpp"
#include "ffdr/test_engines.hpp"

namespace ffdr {

namespace {

struct Aggregate {
    double mean = 0.0;
    double std_error = 0.0;
};

// Sample mean and its Monte-Carlo standard error sd/sqrt(n).  Values are
// accumulated in index order so results do not depend on worker count.
Aggregate aggregate(const std::vector<double>& values) {
    const std::size_t n = values.size();
    double sum = 0.0;
    for (double v : values) sum += v;
    Aggregate out;
    out.mean = sum / static_cast<double>(n);
    if (n < 2) return out;
    double ss = 0.0;
    for (double v : values) {
        const double d = v - out.mean;
        ss += d * d;
    }
    out.std_error = std::sqrt(ss / static_cast<double>(n - 1) / static_cast<double>(n));
    return out;
}

constexpr std::array<const char*, 4> kMetricNames = {"fdr", "fwer", "fpr", "sensitivity"};

double metric_value(const ErrorMetrics& m, std::size_t which) {
    switch (which) {
        case 0: return m.fdp;
        case 1: return m.fwer_indicator ? 1.0 : 0.0;
        case 2: return m.fpr;
        default: return m.sensitivity;
    }
}

void append_method_rows(ScenarioReport& report, const std::string& scenario, double alpha,
                        const std::string& method, const std::vector<ErrorMetrics>& per_rep,
                        const char* metric_suffix = "") {
    std::vector<double> values(per_rep.size());
    for (std::size_t k = 0; k < kMetricNames.size(); ++k) {
        for (std::size_t r = 0; r < per_rep.size(); ++r) values[r] = metric_value(per_rep[r], k);
        const Aggregate agg = aggregate(values);
        report.rows.push_back({scenario, alpha, method, kMetricNames[k] + std::string(metric_suffix),
                               agg.mean, agg.std_error, static_cast<int>(per_rep.size())});
    }
}

std::vector<std::uint8_t> threshold_mask(const PValueField& field, double alpha) {
    std::vector<std::uint8_t> mask(field.size());
    for (std::size_t i = 0; i < field.size(); ++i) mask[i] = field[i] <= alpha ? 1 : 0;
    return mask;
}

} // namespace

void Sim1DConfig::validate() const {
    if (n_curves < 3) throw ValidationError("n_curves must be at least 3");
    if (grid_points < 2) throw ValidationError("grid_points must be at least 2");
    if (h_values.empty()) throw ValidationError("h_values must not be empty");
    if (d_values.empty()) throw ValidationError("d_values must not be empty");
    for (int h : h_values)
        if (h < 0 || h > 40) throw ValidationError("h values must lie in [0, 40]");
    for (double d : d_values)
        if (!(d >= 0.0) || !std::isfinite(d))
            throw ValidationError("d values must be finite and non-negative");
    if (replications < 1) throw ValidationError("replications must be positive");
    if (permutations < 99) throw ValidationError("permutations must be at least 99");
    if (!(alpha > 0.0 && alpha < 1.0)) throw ValidationError("alpha must lie in (0, 1)");
}

ScenarioReport run_sim_1d(const Sim1DConfig& config) {
    config.validate();
    const int n = config.n_curves;
    const int points = config.grid_points;
    const std::size_t reps = static_cast<std::size_t>(config.replications);

    const SplineBasis basis = SplineBasis::cubic(40);
    GridSpec spec;
    spec.bounds = {{0.0, 1.0}};
    spec.resolution = {points};
    const WeightedGrid grid = build_lattice(spec);
    std::vector<double> ts(grid.size());
    for (std::size_t g = 0; g < grid.size(); ++g) ts[g] = grid.coord(g, 0);

    // Unit-height signal shape and its exact support per h; the truth mask
    // comes from the spline expansion, not from thresholding values.
    const std::size_t n_h = config.h_values.size();
    const std::size_t n_d = config.d_values.size();
    std::vector<std::vector<double>> shapes(n_h);
    std::vector<TruthMask> support_truth(n_h);
    for (std::size_t hi = 0; hi < n_h; ++hi) {
        shapes[hi] = step_signal(basis, config.h_values[hi], 1.0, ts);
        support_truth[hi].is_null.resize(grid.size());
        for (std::size_t g = 0; g < grid.size(); ++g)
            support_truth[hi].is_null[g] = shapes[hi][g] == 0.0 ? 1 : 0;
    }
    TruthMask all_null;
    all_null.is_null.assign(grid.size(), 1);

    Eigen::MatrixXd design(n, 2);
    for (int i = 0; i < n; ++i) {
        design(i, 0) = 1.0;
        design(i, 1) = static_cast<double>(i) / static_cast<double>(n - 1);
    }

    const std::size_t n_scenarios = n_d * n_h;
    constexpr std::size_t kMethods = 3; // unadjusted, fbh, fmax
    std::vector<std::vector<std::array<ErrorMetrics, kMethods>>> per_rep(
        reps, std::vector<std::array<ErrorMetrics, kMethods>>(n_scenarios));

    parallel_for(reps, config.workers, [&](std::size_t r) {
        const std::uint64_t rep_seed = config.seed + r;
        // One noise panel and one permutation stream per replication, shared
        // across scenarios, so methods see common random numbers and the
        // d = 0 scenarios coincide for every h.
        Eigen::MatrixXd noise(n, points);
        for (int i = 0; i < n; ++i) {
            const std::vector<double> curve = spline_noise(basis, ts, derive_seed(rep_seed, 1, i));
            for (int g = 0; g < points; ++g) noise(i, g) = curve[g];
        }
        const std::uint64_t perm_seed = derive_seed(rep_seed, 2);

        Eigen::MatrixXd curves(n, points);
        for (std::size_t di = 0; di < n_d; ++di) {
            for (std::size_t hi = 0; hi < n_h; ++hi) {
                const double d = config.d_values[di];
                curves = noise;
                if (d != 0.0)
                    for (int i = 0; i < n; ++i)
                        for (int g = 0; g < points; ++g)
                            curves(i, g) += d * design(i, 1) * shapes[hi][g];

                FunctionalSampleSet data;
                data.curves = curves;
                data.design = design;
                data.tested_column = 1;
                const PermutationPValues pv =
                    freedman_lane_joint(data, config.permutations, perm_seed);

                const TruthMask& truth = d == 0.0 ? all_null : support_truth[hi];
                auto& out = per_rep[r][di * n_h + hi];
                out[0] = error_metrics(threshold_mask(pv.pointwise, config.alpha), truth, grid);
                out[1] = error_metrics(fbh_adjust(pv.pointwise, grid, config.alpha), truth, grid);
                out[2] = error_metrics(threshold_mask(pv.fmax, config.alpha), truth, grid);
            }
        }
    });

    constexpr std::array<const char*, kMethods> method_names = {"unadjusted", "fbh", "fmax"};
    ScenarioReport report;
    std::vector<ErrorMetrics> column(reps);
    for (std::size_t di = 0; di < n_d; ++di) {
        for (std::size_t hi = 0; hi < n_h; ++hi) {
            const std::string scenario = "d=" + format_real(config.d_values[di]) +
                                         ",h=" + std::to_string(config.h_values[hi]);
            for (std::size_t m = 0; m < kMethods; ++m) {
                for (std::size_t r = 0; r < reps; ++r) column[r] = per_rep[r][di * n_h + hi][m];
                append_method_rows(report, scenario, config.alpha, method_names[m], column);
            }
        }
    }
    return report;
}

void Sim2DConfig::validate() const {
    if (grid_side < 8) throw ValidationError("grid_side must be at least 8");
    if (!(signal_size > 0.0) || !std::isfinite(signal_size))
        throw ValidationError("signal_size must be positive and finite");
    if (samples_per_test < 2) throw ValidationError("samples_per_test must be at least 2");
    if (replications < 1) throw ValidationError("replications must be positive");
    if (alphas.empty()) throw ValidationError("alphas must not be empty");
    for (double a : alphas)
        if (!(a > 0.0 && a < 1.0)) throw ValidationError("alphas must lie in (0, 1)");
    matern.validate();
}

ScenarioReport run_sim_2d(const Sim2DConfig& config) {
    config.validate();
    const int n = config.samples_per_test;
    const std::size_t reps = static_cast<std::size_t>(config.replications);

    GridSpec spec;
    spec.bounds = {{0.0, 1.0}, {0.0, 1.0}};
    spec.resolution = {config.grid_side, config.grid_side};
    const WeightedGrid grid = build_lattice(spec);
    const std::size_t points = grid.size();

    const std::vector<double> spikes = spike_signal(grid);
    std::vector<double> theta(points);
    for (std::size_t g = 0; g < points; ++g) theta[g] = config.signal_size * spikes[g];

    // Two truth conventions for the one-sided test: the zero set (negative
    // spikes count as signal) and the one-sided null set {theta <= 0}.
    TruthMask zero_truth, onesided_truth;
    zero_truth.is_null.resize(points);
    onesided_truth.is_null.resize(points);
    for (std::size_t g = 0; g < points; ++g) {
        zero_truth.is_null[g] = theta[g] == 0.0 ? 1 : 0;
        onesided_truth.is_null[g] = theta[g] <= 0.0 ? 1 : 0;
    }

    const MaternSampler sampler(spec, config.matern);

    const std::size_t n_alpha = config.alphas.size();
    // Per alpha: method x truth convention, flattened as
    // {unadjusted/zero, unadjusted/onesided, fbh/zero, fbh/onesided}.
    std::vector<std::vector<std::array<ErrorMetrics, 4>>> per_rep(
        reps, std::vector<std::array<ErrorMetrics, 4>>(n_alpha));

    parallel_for(reps, config.workers, [&](std::size_t r) {
        const std::uint64_t rep_seed = config.seed + r;
        Eigen::MatrixXd samples(n, points);
        for (int i = 0; i < n; ++i) {
            const std::vector<double> field = sampler.sample(derive_seed(rep_seed, 1, i));
            for (std::size_t g = 0; g < points; ++g)
                samples(i, static_cast<Eigen::Index>(g)) = theta[g] + field[g];
        }
        const PValueField pvalues = one_sample_t_test(samples, TestSide::greater);

        for (std::size_t a = 0; a < n_alpha; ++a) {
            const double alpha = config.alphas[a];
            const std::vector<std::uint8_t> unadj = threshold_mask(pvalues, alpha);
            const AdjustmentResult fbh = fbh_adjust(pvalues, grid, alpha);
            auto& out = per_rep[r][a];
            out[0] = error_metrics(unadj, zero_truth, grid);
            out[1] = error_metrics(unadj, onesided_truth, grid);
            out[2] = error_metrics(fbh, zero_truth, grid);
            out[3] = error_metrics(fbh, onesided_truth, grid);
        }
    });

    const std::string scenario = "signal=" + format_real(config.signal_size) +
                                 ",samples=" + std::to_string(n);
    ScenarioReport report;
    std::vector<ErrorMetrics> column(reps);
    constexpr std::array<const char*, 4> method_names = {"unadjusted", "unadjusted", "fbh", "fbh"};
    constexpr std::array<const char*, 4> suffixes = {"", "_onesided", "", "_onesided"};
    for (std::size_t a = 0; a < n_alpha; ++a) {
        for (std::size_t slot : {0u, 2u, 1u, 3u}) { // plain metrics first, then _onesided
            for (std::size_t r = 0; r < reps; ++r) column[r] = per_rep[r][a][slot];
            append_method_rows(report, scenario, config.alphas[a], method_names[slot], column,
                               suffixes[slot]);
        }
    }
    return report;
}

std::vector<std::string> convergence_catalog() { return {"tsq", "shift09", "linear"}; }

namespace {

double catalog_eval(const std::string& name, double t) {
    if (name == "tsq") return t * t;
    if (name == "shift09") return std::min(1.0, t + 0.9);
    return t; // "linear"
}

} // namespace

std::vector<ConvergenceRow> convergence_study(const std::string& function_name,
                                              int base_resolution, int levels, double alpha) {
    const auto catalog = convergence_catalog();
    if (std::find(catalog.begin(), catalog.end(), function_name) == catalog.end())
        throw ValidationError("unknown convergence function: " + function_name);
    if (base_resolution < 2) throw ValidationError("base_resolution must be at least 2");
    if (levels < 2) throw ValidationError("levels must be at least 2");
    if (!(alpha > 0.0 && alpha < 1.0)) throw ValidationError("alpha must lie in (0, 1)");

    GridSpec spec;
    spec.bounds = {{0.0, 1.0}};
    spec.resolution = {base_resolution};
    WeightedGrid grid = build_lattice(spec);

    std::vector<ConvergenceRow> rows;
    rows.reserve(static_cast<std::size_t>(levels));
    for (int level = 0;;) {
        std::vector<double> p(grid.size());
        for (std::size_t g = 0; g < grid.size(); ++g)
            p[g] = catalog_eval(function_name, grid.coord(g, 0));
        const AdjustmentResult res = fbh_adjust(PValueField(std::move(p)), grid, alpha);
        rows.push_back({grid.size(), res.alpha_star, res.rejected_measure});
        if (++level == levels) break;
        grid = refine(grid, spec, 3);
        spec = *grid.lattice();
    }
    return rows;
}

} // namespace ffdr
