#include "ffdr/grid.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <string>

#include "ffdr/errors.hpp"

namespace ffdr {

std::size_t GridSpec::point_count() const {
    std::size_t n = 1;
    for (int r : resolution) n *= static_cast<std::size_t>(r);
    return n;
}

double GridSpec::box_volume() const {
    double v = 1.0;
    for (std::size_t a = 0; a < bounds.size(); ++a) {
        v *= bounds[a].second - bounds[a].first;
    }
    return v;
}

void GridSpec::validate() const {
    if (bounds.empty()) throw ValidationError("grid spec: no axes");
    if (bounds.size() != resolution.size()) {
        throw ValidationError("grid spec: bounds and resolution differ in length");
    }
    for (std::size_t a = 0; a < bounds.size(); ++a) {
        const auto [lo, hi] = bounds[a];
        if (!std::isfinite(lo) || !std::isfinite(hi) || !(lo < hi)) {
            throw ValidationError("grid spec: axis " + std::to_string(a) + " bounds not an interval");
        }
        if (resolution[a] < 1) {
            throw ValidationError("grid spec: axis " + std::to_string(a) + " resolution must be >= 1");
        }
    }
}

namespace {

// Lexicographic duplicate check over point indices; exact comparison is
// intended, distinctness is a structural invariant.
void check_distinct(const std::vector<double>& coords, std::size_t n, int dim) {
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    auto less = [&](std::size_t i, std::size_t j) {
        for (int a = 0; a < dim; ++a) {
            const double x = coords[i * dim + a], y = coords[j * dim + a];
            if (x < y) return true;
            if (y < x) return false;
        }
        return false;
    };
    std::sort(idx.begin(), idx.end(), less);
    for (std::size_t k = 1; k < n; ++k) {
        if (!less(idx[k - 1], idx[k]) && !less(idx[k], idx[k - 1])) {
            throw ValidationError("weighted grid: duplicate point at index " + std::to_string(idx[k]));
        }
    }
}

} // namespace

WeightedGrid WeightedGrid::create(std::vector<double> coords, std::vector<double> weights, int dim) {
    if (dim < 1) throw ValidationError("weighted grid: dimension must be >= 1");
    if (weights.empty()) throw ValidationError("weighted grid: no points");
    if (coords.size() != weights.size() * static_cast<std::size_t>(dim)) {
        throw ValidationError("weighted grid: coordinate array length does not match point count");
    }
    double total = 0.0;
    for (std::size_t i = 0; i < weights.size(); ++i) {
        if (!std::isfinite(weights[i]) || weights[i] <= 0.0) {
            throw ValidationError("weighted grid: weight at index " + std::to_string(i) +
                                  " must be finite and positive");
        }
        total += weights[i];
    }
    for (double c : coords) {
        if (!std::isfinite(c)) throw ValidationError("weighted grid: non-finite coordinate");
    }
    check_distinct(coords, weights.size(), dim);

    WeightedGrid g;
    g.coords_ = std::move(coords);
    g.weights_ = std::move(weights);
    g.total_weight_ = total;
    g.dim_ = dim;
    return g;
}

WeightedGrid build_lattice(const GridSpec& spec) {
    spec.validate();
    const int d = spec.dim();
    const std::size_t n = spec.point_count();

    std::vector<double> lower(d), extent(d);
    double cell = 1.0;
    for (int a = 0; a < d; ++a) {
        lower[a] = spec.bounds[a].first;
        extent[a] = spec.bounds[a].second - spec.bounds[a].first;
        cell *= extent[a] / spec.resolution[a];
    }

    // Midpoint fractions (2i+1)/(2n) make refinement nest exactly: scaling
    // numerator and denominator by the same odd factor leaves the correctly
    // rounded quotient, and hence the coordinate, bit-identical.
    std::vector<double> coords(n * d);
    std::vector<int> at(d, 0);
    for (std::size_t i = 0; i < n; ++i) {
        for (int a = 0; a < d; ++a) {
            const double t = static_cast<double>(2 * at[a] + 1) /
                             static_cast<double>(2 * spec.resolution[a]);
            coords[i * d + a] = lower[a] + t * extent[a];
        }
        for (int a = d - 1; a >= 0; --a) { // last axis fastest
            if (++at[a] < spec.resolution[a]) break;
            at[a] = 0;
        }
    }

    WeightedGrid g = WeightedGrid::create(std::move(coords), std::vector<double>(n, cell), d);
    g.lattice_ = spec;
    g.lebesgue_lattice_ = true;
    return g;
}

WeightedGrid sphere_grid(int lon_res, int lat_res) {
    GridSpec spec{{{-180.0, 180.0}, {-90.0, 90.0}}, {lon_res, lat_res}};
    spec.validate();

    WeightedGrid base = build_lattice(spec);
    const std::size_t n = base.size();

    // Tile area on the sphere is proportional to cos(latitude of midpoint);
    // congruent lon/lat extents cancel after normalization.
    std::vector<double> w(n);
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double lat = base.coord(i, 1);
        w[i] = std::cos(lat * std::numbers::pi / 180.0);
        total += w[i];
    }
    for (double& x : w) x /= total;

    WeightedGrid g = WeightedGrid::create(std::move(base.coords_), std::move(w), 2);
    g.lattice_ = spec;
    g.lebesgue_lattice_ = false;
    return g;
}

WeightedGrid refine(const WeightedGrid& grid, const GridSpec& spec, int factor) {
    if (factor < 2) throw ValidationError("refine: factor must be >= 2");
    if (factor % 2 == 0) {
        throw ValidationError("refine: factor must be odd so coarse midpoints stay on the fine grid");
    }
    if (!grid.lattice() || !grid.lebesgue_lattice() || *grid.lattice() != spec) {
        throw ValidationError("refine: grid was not built from the given lattice spec");
    }
    GridSpec fine = spec;
    for (int& r : fine.resolution) r *= factor;
    return build_lattice(fine);
}

} // namespace ffdr
