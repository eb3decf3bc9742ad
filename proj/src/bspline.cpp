#include "ffdr/bspline.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "ffdr/errors.hpp"
#include "ffdr/rng.hpp"

namespace ffdr {

SplineBasis SplineBasis::cubic(int n_basis) {
    if (n_basis < 4) throw ValidationError("spline basis: cubic basis needs at least 4 functions");
    SplineBasis basis;
    basis.degree = 3;
    const int interior = n_basis - 4;
    basis.knots.reserve(static_cast<std::size_t>(n_basis) + 4);
    for (int i = 0; i < 4; ++i) basis.knots.push_back(0.0);
    for (int i = 1; i <= interior; ++i) {
        basis.knots.push_back(static_cast<double>(i) / (interior + 1));
    }
    for (int i = 0; i < 4; ++i) basis.knots.push_back(1.0);
    basis.validate();
    return basis;
}

void SplineBasis::validate() const {
    if (degree < 1) throw ValidationError("spline basis: degree must be >= 1");
    if (n_basis() < degree + 1) throw ValidationError("spline basis: too few knots");
    if (!std::is_sorted(knots.begin(), knots.end())) {
        throw ValidationError("spline basis: knots must be nondecreasing");
    }
    for (int i = 0; i <= degree; ++i) {
        const std::size_t last = knots.size() - 1;
        if (knots[static_cast<std::size_t>(i)] != knots[0] || knots[last - i] != knots[last]) {
            throw ValidationError("spline basis: boundary knots must repeat degree+1 times");
        }
    }
}

namespace {

// Cox-de Boor basis evaluation at t: fills degree+1 values for the functions
// with support at t; `span` is the knot interval index with
// knots[span] <= t < knots[span+1].
void basis_at(const SplineBasis& basis, double t, int span, double* coeffs) {
    const int p = basis.degree;
    const auto& knots = basis.knots;
    std::vector<double> left(p + 1), right(p + 1);
    coeffs[0] = 1.0;
    for (int j = 1; j <= p; ++j) {
        left[j] = t - knots[span + 1 - j];
        right[j] = knots[span + j] - t;
        double saved = 0.0;
        for (int r = 0; r < j; ++r) {
            const double tmp = coeffs[r] / (right[r + 1] + left[j - r]);
            coeffs[r] = saved + right[r + 1] * tmp;
            saved = left[j - r] * tmp;
        }
        coeffs[j] = saved;
    }
}

int find_span(const SplineBasis& basis, double t) {
    // Strictly inside (0,1); the valid spans run from degree to n_basis-1.
    const auto& knots = basis.knots;
    const int hi = basis.n_basis();
    auto it = std::upper_bound(knots.begin() + basis.degree, knots.begin() + hi, t);
    return static_cast<int>(it - knots.begin()) - 1;
}

void check_interior(std::span<const double> grid) {
    if (grid.empty()) throw ValidationError("spline evaluation: empty grid");
    for (std::size_t i = 0; i < grid.size(); ++i) {
        if (!(grid[i] > 0.0) || !(grid[i] < 1.0)) {
            throw ValidationError("spline evaluation: grid point at index " + std::to_string(i) +
                                  " outside (0, 1)");
        }
    }
}

} // namespace

Eigen::MatrixXd bspline_design(const SplineBasis& basis, std::span<const double> grid) {
    basis.validate();
    check_interior(grid);
    const int p = basis.degree;
    Eigen::MatrixXd design = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(grid.size()),
                                                   basis.n_basis());
    std::vector<double> coeffs(static_cast<std::size_t>(p) + 1);
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const int span = find_span(basis, grid[i]);
        basis_at(basis, grid[i], span, coeffs.data());
        for (int r = 0; r <= p; ++r) {
            design(static_cast<Eigen::Index>(i), span - p + r) = coeffs[static_cast<std::size_t>(r)];
        }
    }
    return design;
}

std::vector<double> step_signal(const SplineBasis& basis, int h, double d,
                                std::span<const double> grid) {
    if (h < 0 || h > basis.n_basis()) {
        throw ValidationError("step signal: coefficient count outside [0, n_basis]");
    }
    const Eigen::MatrixXd design = bspline_design(basis, grid);
    Eigen::VectorXd coeffs = Eigen::VectorXd::Zero(basis.n_basis());
    coeffs.head(h).setConstant(d);
    const Eigen::VectorXd values = design * coeffs;
    return {values.data(), values.data() + values.size()};
}

std::vector<double> spline_noise(const SplineBasis& basis, std::span<const double> grid,
                                 std::uint64_t seed) {
    const Eigen::MatrixXd design = bspline_design(basis, grid);
    Rng rng(seed);
    Eigen::VectorXd coeffs(basis.n_basis());
    for (Eigen::Index j = 0; j < coeffs.size(); ++j) coeffs[j] = rng.normal();
    const Eigen::VectorXd values = design * coeffs;
    return {values.data(), values.data() + values.size()};
}

} // namespace ffdr
