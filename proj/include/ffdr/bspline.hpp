#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace ffdr {

// Clamped B-spline basis on [0, 1]: boundary knots repeated degree+1 times,
// interior knots equally spaced.  n_basis = interior knot count + degree + 1.
struct SplineBasis {
    int degree = 3;
    std::vector<double> knots; // full knot vector, size n_basis() + degree + 1

    int n_basis() const { return static_cast<int>(knots.size()) - degree - 1; }

    // Cubic basis with n_basis functions (so n_basis - 4 interior knots).
    static SplineBasis cubic(int n_basis = 40);

    void validate() const; // throws ValidationError
};

// Evaluation matrix: rows are grid points (strictly inside (0, 1)), columns
// the basis functions.  Each row sums to 1 and has at most degree+1 nonzero
// entries.
Eigen::MatrixXd bspline_design(const SplineBasis& basis, std::span<const double> grid);

// Spline with the first h coefficients equal to d and the rest 0.  Vanishes
// identically beyond the support of the h-th basis function, which makes the
// null region of the scaled signal exactly computable.
std::vector<double> step_signal(const SplineBasis& basis, int h, double d,
                                std::span<const double> grid);

// Smooth noise: basis combination with independent standard normal
// coefficients drawn from the seed.
std::vector<double> spline_noise(const SplineBasis& basis, std::span<const double> grid,
                                 std::uint64_t seed);

} // namespace ffdr
