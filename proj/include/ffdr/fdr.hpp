#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "ffdr/grid.hpp"

namespace ffdr {

// P-values over the points of a companion WeightedGrid.  Positional: value i
// belongs to grid point i; operations taking a field and a grid check that
// the sizes agree.
class PValueField {
public:
    // Throws ValidationError if empty or any value is outside [0, 1].
    explicit PValueField(std::vector<double> values);

    const std::vector<double>& values() const { return values_; }
    std::size_t size() const { return values_.size(); }
    double operator[](std::size_t i) const { return values_[i]; }

private:
    std::vector<double> values_;
};

// Output of a threshold-selection procedure over a weighted grid.
struct AdjustmentResult {
    double alpha = 0.0;               // requested level
    double alpha_star = 0.0;          // data-driven p-value threshold, in [0, alpha]
    std::vector<std::uint8_t> reject; // reject[i] == (p[i] <= alpha_star), exactly
    PValueField adjusted;             // reject[i] == (adjusted[i] <= alpha), exactly
    double rejected_measure = 0.0;    // sum of grid weights over rejected points
};

// Measure-weighted error summary of one decision mask against the truth.
// Every ratio uses the convention 0/0 = 0.
struct ErrorMetrics {
    double fdp = 0.0;           // false weight / rejected weight
    bool fwer_indicator = false; // any true null rejected
    double fpr = 0.0;           // false weight / null weight
    double sensitivity = 0.0;   // true-alternative rejected weight / alternative weight
};

// Step-up threshold over m equally weighted hypotheses: the largest k with
// p_(k) <= (k/m)*alpha determines the cut, and everything at or below p_(k)
// is rejected (so ties are rejected together).  Returns the rejection mask
// in input order.
std::vector<std::uint8_t> bh_discrete(std::span<const double> pvalues, double alpha);

// Weighted variant: hypothesis i carries weight w[i] > 0, sum(w) == 1 within
// 1e-9.  The cut condition compares p_(k) against alpha times the cumulated
// weight of all hypotheses with p <= p_(k).  Uniform weights reduce exactly
// to bh_discrete.
std::vector<std::uint8_t> bh_weighted(std::span<const double> pvalues,
                                      std::span<const double> weights, double alpha);

// Adjusted p-values: the smallest level at which each hypothesis would be
// rejected.  Computed as a right-to-left running minimum of (m/k)*p_(k),
// capped at 1.  Thresholding the result at alpha reproduces bh_discrete.
std::vector<double> adjusted_pvalues(std::span<const double> pvalues);

// Weighted counterpart; thresholding reproduces bh_weighted.
std::vector<double> adjusted_pvalues_weighted(std::span<const double> pvalues,
                                              std::span<const double> weights);

// Measure of {points with p <= r}; nondecreasing right-continuous step
// function of r in [0, 1].
double cumulated_pvalue_eval(const PValueField& field, const WeightedGrid& grid, double r);

// Selects the threshold alpha_star as the largest observed p-value r with
//   r / (measure{p <= r} / total) <= alpha,
// then rejects {p <= alpha_star}.  The adjusted field is the weighted
// adjusted p-value function, so {p <= alpha_star} == {adjusted <= alpha}
// holds exactly, element by element.
AdjustmentResult fbh_adjust(const PValueField& field, const WeightedGrid& grid, double alpha);

ErrorMetrics error_metrics(const std::vector<std::uint8_t>& reject, const TruthMask& truth,
                           const WeightedGrid& grid);
ErrorMetrics error_metrics(const AdjustmentResult& result, const TruthMask& truth,
                           const WeightedGrid& grid);

} // namespace ffdr
