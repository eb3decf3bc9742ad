#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace ffdr {

// Axis-aligned box with a per-axis cell count.  Cells are congruent; grid
// points sit at cell midpoints.
struct GridSpec {
    std::vector<std::pair<double, double>> bounds; // per-axis (lower, upper)
    std::vector<int> resolution;                   // per-axis cell count, >= 1

    int dim() const { return static_cast<int>(bounds.size()); }
    std::size_t point_count() const;
    double box_volume() const;
    void validate() const; // throws ValidationError

    bool operator==(const GridSpec&) const = default;
};

// Finite set of distinct points with strictly positive weights.  The weights
// realize a finite measure: the measure of a point set is the sum of the
// weights of its members.
class WeightedGrid {
public:
    // Coordinates are flattened point-major: point i occupies
    // coords[i*dim .. i*dim+dim).  Throws ValidationError on non-positive or
    // non-finite weights, size mismatch, or duplicate points.
    static WeightedGrid create(std::vector<double> coords, std::vector<double> weights, int dim);

    int dim() const { return dim_; }
    std::size_t size() const { return weights_.size(); }
    std::span<const double> point(std::size_t i) const {
        return {coords_.data() + i * static_cast<std::size_t>(dim_), static_cast<std::size_t>(dim_)};
    }
    double coord(std::size_t i, int axis) const { return coords_[i * static_cast<std::size_t>(dim_) + axis]; }
    std::span<const double> weights() const { return weights_; }
    double weight(std::size_t i) const { return weights_[i]; }
    double total_weight() const { return total_weight_; }

    // Set when the grid was built over a regular lattice; gives samplers the
    // generating geometry.
    const std::optional<GridSpec>& lattice() const { return lattice_; }
    // True only for lattices whose weights are the Lebesgue cell volumes.
    bool lebesgue_lattice() const { return lebesgue_lattice_; }

private:
    WeightedGrid() = default;

    std::vector<double> coords_;
    std::vector<double> weights_;
    double total_weight_ = 0.0;
    int dim_ = 0;
    std::optional<GridSpec> lattice_;
    bool lebesgue_lattice_ = false;

    friend WeightedGrid build_lattice(const GridSpec&);
    friend WeightedGrid sphere_grid(int, int);
};

// Marks which grid points carry a true null.  Positional: entry i refers to
// point i of the companion grid.
struct TruthMask {
    std::vector<std::uint8_t> is_null;
};

// Uniform lattice over the spec's box: cell midpoints, each weighted by the
// cell volume.  Point order is row-major with the last axis fastest.
WeightedGrid build_lattice(const GridSpec& spec);

// Longitude/latitude lattice over (-180,180) x (-90,90) with weights
// proportional to cos(latitude), normalized to total weight 1.  Realizes the
// surface measure of the unit sphere up to scale.
WeightedGrid sphere_grid(int lon_res, int lat_res);

// Refines a Lebesgue lattice by an odd factor >= 3, multiplying each axis
// resolution by the factor.  Odd factors keep the coarse midpoints in the
// fine grid, so successive refinements nest.  `spec` must be the spec the
// grid was built from.
WeightedGrid refine(const WeightedGrid& grid, const GridSpec& spec, int factor);

} // namespace ffdr
