#pragma once

#include <cstdint>
#include <span>

#include <Eigen/Dense>

#include "ffdr/fdr.hpp"

namespace ffdr {

enum class TestSide { greater, less, two_sided };

// CDF of the t distribution with df > 0 degrees of freedom, computed through
// the regularized incomplete beta function.
double student_t_cdf(double t, double df);

// Tail probability for an observed t statistic.  Degenerate statistics are
// the caller's business; t must be finite.
double pvalue_from_t(double t, double df, TestSide side);

// Functional observations on a common grid, with a linear model for the
// scalar covariates.  curves(i, g) is observation i at grid point g;
// design(i, j) is covariate j of observation i.  tested_column indexes the
// covariate whose pointwise effect is under test; the remaining columns are
// the nuisance model and must include an intercept or equivalent.
struct FunctionalSampleSet {
    Eigen::MatrixXd curves;
    Eigen::MatrixXd design;
    Eigen::Index tested_column = 0;

    void validate() const; // throws ValidationError
};

// Pointwise one-sample t test of zero mean, one p-value per grid point
// (column of samples).  Zero-variance columns fall back to the deterministic
// convention: p = 1 when the observed mean is consistent with the null for
// the requested side, the smallest positive normal double otherwise.
PValueField one_sample_t_test(const Eigen::MatrixXd& samples, TestSide side);

// Pointwise slope test of a straight-line fit through time: series(g, j) is
// the value at grid point g in year j.  Residual degrees of freedom are
// (number of years - 2).  Perfect fits and constant series follow the same
// deterministic conventions as above.
PValueField ols_trend_test(const Eigen::MatrixXd& series, std::span<const double> years,
                           TestSide side);

// Joint output of one permutation pass: pointwise p-values and max-statistic
// adjusted p-values computed from the same permutation draws, so the
// adjusted value dominates the pointwise value at every grid point.
struct PermutationPValues {
    PValueField pointwise;
    PValueField fmax;
};

// Residual-permutation test of the tested covariate at every grid point.
// For each point the nuisance-only model is fitted, its residuals permuted
// (one shared permutation set for all points), refitted under the full
// model, and the squared t statistic of the tested covariate compared with
// the observed one.  P-values are (1 + #{perm >= observed}) / (B + 1).
PermutationPValues freedman_lane_joint(const FunctionalSampleSet& data, int permutations,
                                       std::uint64_t seed);

PValueField freedman_lane_pvalues(const FunctionalSampleSet& data, int permutations,
                                  std::uint64_t seed);

// Family-wise adjustment: each point's statistic is compared against the
// permutation distribution of the grid-wide maximum statistic.
PValueField fmax_adjust(const FunctionalSampleSet& data, int permutations, std::uint64_t seed);

} // namespace ffdr
