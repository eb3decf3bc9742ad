#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ffdr/random_fields.hpp"

namespace ffdr {

// One aggregate: a (scenario, alpha, method, metric) cell of a study report
// with its Monte-Carlo standard error.
struct ScenarioRow {
    std::string scenario;
    double alpha = 0.0;
    std::string method;
    std::string metric;
    double estimate = 0.0;
    double std_error = 0.0;
    int replications = 0;
};

struct ScenarioReport {
    std::vector<ScenarioRow> rows;
};

// Study of smooth-signal detection on curves over (0,1): signal strength d
// scales a spline step with h leading coefficients, observations are
// yi(t) = d*step(t)*xi + noise(t) with xi = i/(n-1), and the residual
// permutation engine produces the pointwise p-value field.  Methods compared
// at level alpha: raw thresholding, the measure-weighted threshold
// adjustment, and the max-statistic adjustment.
struct Sim1DConfig {
    int n_curves = 10;
    int grid_points = 100;
    std::vector<int> h_values = {10, 20, 30};
    std::vector<double> d_values = {0.0, 1.0, 2.0, 3.0, 4.0, 5.0};
    int replications = 200;
    int permutations = 200;
    double alpha = 0.05;
    std::uint64_t seed = 1;
    int workers = 0; // 0 = all cores

    void validate() const;
};

ScenarioReport run_sim_1d(const Sim1DConfig& config);

// Study of spike detection on the unit square: the mean surface is
// signal_size * spike_signal, noise fields follow the covariance spec, and a
// pointwise one-sided (greater) t test produces the p-value field.  Truth is
// reported under two conventions: metrics without suffix count a rejection
// false when the mean is exactly zero there; metrics with the "_onesided"
// suffix also count rejections inside negative spikes as false, matching the
// one-sided null mean <= 0.
struct Sim2DConfig {
    int grid_side = 64;
    double signal_size = 2.0;
    int samples_per_test = 20;
    int replications = 200;
    std::vector<double> alphas = {0.001, 0.01, 0.02, 0.03, 0.04, 0.05, 0.10};
    MaternSpec matern{1.0, 0.1, 2.5};
    std::uint64_t seed = 1;
    int workers = 0;

    void validate() const;
};

ScenarioReport run_sim_2d(const Sim2DConfig& config);

struct ConvergenceRow {
    std::size_t resolution = 0; // lattice point count
    double alpha_star = 0.0;
    double rejected_measure = 0.0;
};

// Evaluates a cataloged p-value function on successively refined unit-
// interval lattices (factor 3 per level) and records the selected threshold
// and rejected measure per level.  Deterministic; no seed involved.
std::vector<ConvergenceRow> convergence_study(const std::string& function_name,
                                              int base_resolution, int levels, double alpha);

// Names accepted by convergence_study.
std::vector<std::string> convergence_catalog();

} // namespace ffdr
