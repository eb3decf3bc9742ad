#include "ffdr/fdr.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "ffdr/errors.hpp"

namespace ffdr {

PValueField::PValueField(std::vector<double> values) : values_(std::move(values)) {
    if (values_.empty()) throw ValidationError("p-value field: empty");
    for (std::size_t i = 0; i < values_.size(); ++i) {
        const double p = values_[i];
        if (!(p >= 0.0) || !(p <= 1.0)) {
            throw ValidationError("p-value field: value at index " + std::to_string(i) +
                                  " outside [0, 1]");
        }
    }
}

namespace {

void check_alpha(double alpha) {
    if (!(alpha > 0.0) || !(alpha < 1.0)) {
        throw ValidationError("alpha must lie in (0, 1)");
    }
}

void check_pvalues(std::span<const double> p) {
    if (p.empty()) throw ValidationError("p-values: empty input");
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (!(p[i] >= 0.0) || !(p[i] <= 1.0)) {
            throw ValidationError("p-values: value at index " + std::to_string(i) +
                                  " outside [0, 1]");
        }
    }
}

// Sorted view with tie-aware cumulated weights.  cum_weight[j] is the total
// normalized weight of every hypothesis whose p-value is <= sorted_p[j]; it
// is constant across a tie group and reaches exactly 1 at the top because
// the cumulative sums are divided by their final value.
struct SortedCumulated {
    std::vector<std::size_t> order; // ascending by p
    std::vector<double> sorted_p;
    std::vector<double> cum_weight;
};

SortedCumulated sort_with_cumulated_weights(std::span<const double> p, std::span<const double> w) {
    const std::size_t m = p.size();
    SortedCumulated s;
    s.order.resize(m);
    std::iota(s.order.begin(), s.order.end(), std::size_t{0});
    std::stable_sort(s.order.begin(), s.order.end(),
                     [&](std::size_t a, std::size_t b) { return p[a] < p[b]; });

    s.sorted_p.resize(m);
    s.cum_weight.resize(m);
    double run = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
        s.sorted_p[j] = p[s.order[j]];
        run += w[s.order[j]];
        s.cum_weight[j] = run;
    }
    const double total = s.cum_weight[m - 1];
    // Propagate each tie group's final cumulated weight backwards so that
    // equal p-values see equal cumulated weight.
    for (std::size_t j = m - 1; j > 0; --j) {
        if (s.sorted_p[j - 1] == s.sorted_p[j]) s.cum_weight[j - 1] = s.cum_weight[j];
    }
    for (double& c : s.cum_weight) c /= total;
    return s;
}

std::vector<std::uint8_t> mask_at_threshold(std::span<const double> p, double threshold,
                                            bool any) {
    std::vector<std::uint8_t> mask(p.size(), 0);
    if (any) {
        for (std::size_t i = 0; i < p.size(); ++i) mask[i] = p[i] <= threshold ? 1 : 0;
    }
    return mask;
}

} // namespace

std::vector<std::uint8_t> bh_discrete(std::span<const double> p, double alpha) {
    check_pvalues(p);
    check_alpha(alpha);
    const std::size_t m = p.size();

    std::vector<double> sorted(p.begin(), p.end());
    std::sort(sorted.begin(), sorted.end());

    // Largest k (1-based) with p_(k) <= (k/m) * alpha.
    std::size_t k = 0;
    for (std::size_t j = m; j >= 1; --j) {
        if (sorted[j - 1] <= alpha * (static_cast<double>(j) / static_cast<double>(m))) {
            k = j;
            break;
        }
    }
    return mask_at_threshold(p, k > 0 ? sorted[k - 1] : 0.0, k > 0);
}

std::vector<std::uint8_t> bh_weighted(std::span<const double> p, std::span<const double> w,
                                      double alpha) {
    check_pvalues(p);
    check_alpha(alpha);
    if (w.size() != p.size()) throw ValidationError("weighted cut: weight count differs from p count");
    double total = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) {
        if (!std::isfinite(w[i]) || w[i] <= 0.0) {
            throw ValidationError("weighted cut: weight at index " + std::to_string(i) +
                                  " must be positive");
        }
        total += w[i];
    }
    if (std::abs(total - 1.0) > 1e-9) {
        throw ValidationError("weighted cut: weights must sum to 1 within 1e-9");
    }

    const SortedCumulated s = sort_with_cumulated_weights(p, w);
    const std::size_t m = p.size();
    std::size_t k = 0;
    for (std::size_t j = m; j >= 1; --j) {
        if (s.sorted_p[j - 1] <= alpha * s.cum_weight[j - 1]) {
            k = j;
            break;
        }
    }
    return mask_at_threshold(p, k > 0 ? s.sorted_p[k - 1] : 0.0, k > 0);
}

std::vector<double> adjusted_pvalues(std::span<const double> p) {
    check_pvalues(p);
    const std::size_t m = p.size();
    std::vector<std::size_t> order(m);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return p[a] < p[b]; });

    std::vector<double> adjusted(m);
    double running = 1.0;
    for (std::size_t j = m; j >= 1; --j) {
        const double candidate =
            p[order[j - 1]] * (static_cast<double>(m) / static_cast<double>(j));
        running = std::min(running, candidate);
        adjusted[order[j - 1]] = std::min(1.0, running);
    }
    return adjusted;
}

std::vector<double> adjusted_pvalues_weighted(std::span<const double> p,
                                              std::span<const double> w) {
    check_pvalues(p);
    if (w.size() != p.size()) {
        throw ValidationError("weighted adjustment: weight count differs from p count");
    }
    double total = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) {
        if (!std::isfinite(w[i]) || w[i] <= 0.0) {
            throw ValidationError("weighted adjustment: weight at index " + std::to_string(i) +
                                  " must be positive");
        }
        total += w[i];
    }
    if (std::abs(total - 1.0) > 1e-9) {
        throw ValidationError("weighted adjustment: weights must sum to 1 within 1e-9");
    }

    const SortedCumulated s = sort_with_cumulated_weights(p, w);
    const std::size_t m = p.size();
    std::vector<double> adjusted(m);
    double running = 1.0;
    for (std::size_t j = m; j >= 1; --j) {
        running = std::min(running, s.sorted_p[j - 1] / s.cum_weight[j - 1]);
        adjusted[s.order[j - 1]] = std::min(1.0, running);
    }
    return adjusted;
}

double cumulated_pvalue_eval(const PValueField& field, const WeightedGrid& grid, double r) {
    if (field.size() != grid.size()) {
        throw ValidationError("cumulated p-value: field and grid sizes differ");
    }
    if (!(r >= 0.0) || !(r <= 1.0)) throw ValidationError("cumulated p-value: r outside [0, 1]");
    double acc = 0.0;
    for (std::size_t i = 0; i < field.size(); ++i) {
        if (field[i] <= r) acc += grid.weight(i);
    }
    return acc;
}

AdjustmentResult fbh_adjust(const PValueField& field, const WeightedGrid& grid, double alpha) {
    check_alpha(alpha);
    if (field.size() != grid.size()) {
        throw ValidationError("threshold adjustment: field and grid sizes differ");
    }

    const std::span<const double> p(field.values());
    const SortedCumulated s = sort_with_cumulated_weights(p, grid.weights());
    const std::size_t m = p.size();

    // running[j] = min over j' >= j of sorted_p[j'] / cum_weight[j'], which is
    // nondecreasing in j; the qualifying set {running <= alpha} is a prefix.
    std::vector<double> running(m);
    double run = std::numeric_limits<double>::infinity();
    for (std::size_t j = m; j >= 1; --j) {
        run = std::min(run, s.sorted_p[j - 1] / s.cum_weight[j - 1]);
        running[j - 1] = run;
    }

    std::size_t k = 0; // size of the qualifying prefix
    for (std::size_t j = m; j >= 1; --j) {
        if (running[j - 1] <= alpha) {
            k = j;
            break;
        }
    }

    std::vector<double> adjusted(m);
    for (std::size_t j = 0; j < m; ++j) {
        adjusted[s.order[j]] = std::min(1.0, running[j]);
    }

    AdjustmentResult result{alpha, 0.0, {}, PValueField(std::move(adjusted)), 0.0};
    result.alpha_star = k > 0 ? s.sorted_p[k - 1] : 0.0;
    result.reject.assign(m, 0);
    for (std::size_t i = 0; i < m; ++i) {
        if (k > 0 && p[i] <= result.alpha_star) {
            result.reject[i] = 1;
            result.rejected_measure += grid.weight(i);
        }
    }
    return result;
}

ErrorMetrics error_metrics(const std::vector<std::uint8_t>& reject, const TruthMask& truth,
                           const WeightedGrid& grid) {
    if (reject.size() != grid.size() || truth.is_null.size() != grid.size()) {
        throw ValidationError("error metrics: mask sizes differ from grid size");
    }
    double false_w = 0.0, true_w = 0.0, null_w = 0.0, alt_w = 0.0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const double w = grid.weight(i);
        if (truth.is_null[i]) {
            null_w += w;
            if (reject[i]) false_w += w;
        } else {
            alt_w += w;
            if (reject[i]) true_w += w;
        }
    }
    auto ratio = [](double num, double den) { return den > 0.0 ? num / den : 0.0; };
    ErrorMetrics m;
    m.fdp = ratio(false_w, false_w + true_w);
    m.fwer_indicator = false_w > 0.0;
    m.fpr = ratio(false_w, null_w);
    m.sensitivity = ratio(true_w, alt_w);
    return m;
}

ErrorMetrics error_metrics(const AdjustmentResult& result, const TruthMask& truth,
                           const WeightedGrid& grid) {
    return error_metrics(result.reject, truth, grid);
}

} // namespace ffdr
