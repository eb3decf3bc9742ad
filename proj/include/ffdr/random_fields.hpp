#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include "ffdr/grid.hpp"

namespace ffdr {

// Stationary isotropic covariance family
//   C(h) = variance * 2^(1-s) / Gamma(s) * u^s * K_s(u),  u = sqrt(2s) h / range,
// with smoothness s and C(0) = variance.
struct MaternSpec {
    double variance = 1.0;
    double range = 0.1;
    double smoothness = 2.5;

    void validate() const; // throws ValidationError
};

double matern_covariance(const MaternSpec& spec, double distance);

// Sum of nine radius-0.1 cones of unit height centered on the 3x3 lattice
// {0.25, 0.5, 0.75}^2, signs alternating in a checkerboard with the corner
// cone at (0.25, 0.25) positive.  Evaluated at the points of a 2-d grid in
// the unit square.
std::vector<double> spike_signal(const WeightedGrid& grid);

// Draws stationary Gaussian fields on a regular 2-d lattice by circulant
// embedding: the covariance is wrapped onto an enlarged torus whose FFT
// eigenvalues must be (numerically) nonnegative.  Construction does the
// embedding once; sample() is cheap and safe to call concurrently.
class MaternSampler {
public:
    // Throws ValidationError if the embedding stays indefinite up to factor 8.
    MaternSampler(const GridSpec& lattice, const MaternSpec& spec, int embed_factor = 2);
    ~MaternSampler();

    MaternSampler(const MaternSampler&) = delete;
    MaternSampler& operator=(const MaternSampler&) = delete;

    // Field values in lattice point order (last axis fastest), one value per
    // lattice point.  Deterministic in the seed.
    std::vector<double> sample(std::uint64_t seed) const;

    int embedding_factor() const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

// One field draw on the lattice underlying `grid` (which must have been
// built over a 2-d lattice spec).  Builds a sampler per call; loops should
// construct a MaternSampler once instead.
std::vector<double> matern_field(const WeightedGrid& grid, const MaternSpec& spec,
                                 std::uint64_t seed);

} // namespace ffdr
