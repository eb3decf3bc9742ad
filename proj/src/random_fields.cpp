#include "ffdr/random_fields.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <mutex>
#include <string>

#include <boost/math/special_functions/bessel.hpp>
#include <boost/math/special_functions/gamma.hpp>
#include <fftw3.h>

#include "ffdr/errors.hpp"
#include "ffdr/rng.hpp"

namespace ffdr {

void MaternSpec::validate() const {
    if (!(variance > 0.0)) throw ValidationError("covariance spec: variance must be positive");
    if (!(range > 0.0)) throw ValidationError("covariance spec: range must be positive");
    if (!(smoothness > 0.0)) throw ValidationError("covariance spec: smoothness must be positive");
}

double matern_covariance(const MaternSpec& spec, double distance) {
    spec.validate();
    if (!(distance >= 0.0)) throw ValidationError("covariance: distance must be nonnegative");
    const double u = std::sqrt(2.0 * spec.smoothness) * distance / spec.range;
    if (u < 1e-12) return spec.variance;
    const double s = spec.smoothness;
    const double scale = std::pow(2.0, 1.0 - s) / boost::math::tgamma(s);
    return spec.variance * scale * std::pow(u, s) * boost::math::cyl_bessel_k(s, u);
}

std::vector<double> spike_signal(const WeightedGrid& grid) {
    if (grid.dim() != 2) throw ValidationError("spike signal: grid must be 2-d");
    for (std::size_t i = 0; i < grid.size(); ++i) {
        for (int a = 0; a < 2; ++a) {
            const double c = grid.coord(i, a);
            if (!(c >= 0.0) || !(c <= 1.0)) {
                throw ValidationError("spike signal: grid must lie in the unit square");
            }
        }
    }
    constexpr double kRadius = 0.1;
    std::vector<double> values(grid.size(), 0.0);
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const double x = grid.coord(i, 0), y = grid.coord(i, 1);
        double v = 0.0;
        for (int a = 0; a < 3; ++a) {
            for (int b = 0; b < 3; ++b) {
                const double cx = 0.25 + 0.25 * a, cy = 0.25 + 0.25 * b;
                const double dist = std::hypot(x - cx, y - cy);
                if (dist < kRadius) {
                    const double sign = (a + b) % 2 == 0 ? 1.0 : -1.0;
                    v += sign * (1.0 - dist / kRadius);
                }
            }
        }
        values[i] = v;
    }
    return values;
}

namespace {

// FFTW planning is not thread-safe; executions on distinct buffers are.
std::mutex& fftw_plan_mutex() {
    static std::mutex m;
    return m;
}

} // namespace

struct MaternSampler::Impl {
    int nx = 0, ny = 0; // lattice resolution
    int mx = 0, my = 0; // embedding torus resolution
    int factor = 0;
    std::vector<double> spectral; // sqrt(eigenvalue / (mx*my)), row-major
    fftw_plan plan = nullptr;

    ~Impl() {
        if (plan != nullptr) {
            std::lock_guard<std::mutex> lock(fftw_plan_mutex());
            fftw_destroy_plan(plan);
        }
    }
};

MaternSampler::MaternSampler(const GridSpec& lattice, const MaternSpec& spec, int embed_factor)
    : impl_(std::make_unique<Impl>()) {
    lattice.validate();
    spec.validate();
    if (lattice.dim() != 2) throw ValidationError("field sampler: lattice must be 2-d");
    if (embed_factor < 2) throw ValidationError("field sampler: embedding factor must be >= 2");

    impl_->nx = lattice.resolution[0];
    impl_->ny = lattice.resolution[1];
    const double hx = (lattice.bounds[0].second - lattice.bounds[0].first) / impl_->nx;
    const double hy = (lattice.bounds[1].second - lattice.bounds[1].first) / impl_->ny;

    // Build the wrapped covariance on progressively larger tori until the
    // spectrum is nonnegative within tolerance.
    for (int factor = embed_factor; factor <= 8; factor *= 2) {
        const int mx = factor * impl_->nx, my = factor * impl_->ny;
        std::vector<std::complex<double>> base(static_cast<std::size_t>(mx) * my);
        for (int i = 0; i < mx; ++i) {
            const int wi = std::min(i, mx - i);
            for (int j = 0; j < my; ++j) {
                const int wj = std::min(j, my - j);
                const double dist = std::hypot(wi * hx, wj * hy);
                base[static_cast<std::size_t>(i) * my + j] = matern_covariance(spec, dist);
            }
        }

        std::vector<std::complex<double>> eig(base.size());
        {
            std::lock_guard<std::mutex> lock(fftw_plan_mutex());
            fftw_plan p = fftw_plan_dft_2d(mx, my, reinterpret_cast<fftw_complex*>(base.data()),
                                           reinterpret_cast<fftw_complex*>(eig.data()),
                                           FFTW_FORWARD, FFTW_ESTIMATE);
            fftw_execute(p);
            fftw_destroy_plan(p);
        }

        double min_eig = 0.0, max_eig = 0.0;
        for (const auto& e : eig) {
            min_eig = std::min(min_eig, e.real());
            max_eig = std::max(max_eig, e.real());
        }
        if (min_eig < -1e-6 * max_eig) continue; // indefinite; enlarge the torus

        impl_->factor = factor;
        impl_->mx = mx;
        impl_->my = my;
        impl_->spectral.resize(eig.size());
        const double cells = static_cast<double>(mx) * my;
        for (std::size_t k = 0; k < eig.size(); ++k) {
            impl_->spectral[k] = std::sqrt(std::max(0.0, eig[k].real()) / cells);
        }

        std::lock_guard<std::mutex> lock(fftw_plan_mutex());
        impl_->plan = fftw_plan_dft_2d(mx, my, reinterpret_cast<fftw_complex*>(eig.data()),
                                       reinterpret_cast<fftw_complex*>(eig.data()), FFTW_FORWARD,
                                       FFTW_ESTIMATE | FFTW_UNALIGNED);
        return;
    }
    throw ValidationError("field sampler: covariance embedding is indefinite even at factor 8; "
                          "increase the embedding factor or shrink the range");
}

MaternSampler::~MaternSampler() = default;

int MaternSampler::embedding_factor() const { return impl_->factor; }

std::vector<double> MaternSampler::sample(std::uint64_t seed) const {
    const int mx = impl_->mx, my = impl_->my;
    const std::size_t cells = static_cast<std::size_t>(mx) * my;

    // Complex white noise shaped by the spectrum; the real part of its FFT
    // carries exactly the wrapped covariance.
    Rng rng(seed);
    std::vector<std::complex<double>> buf(cells);
    for (std::size_t k = 0; k < cells; ++k) {
        buf[k] = impl_->spectral[k] * std::complex<double>(rng.normal(), rng.normal());
    }
    fftw_execute_dft(impl_->plan, reinterpret_cast<fftw_complex*>(buf.data()),
                     reinterpret_cast<fftw_complex*>(buf.data()));

    std::vector<double> field(static_cast<std::size_t>(impl_->nx) * impl_->ny);
    for (int i = 0; i < impl_->nx; ++i) {
        for (int j = 0; j < impl_->ny; ++j) {
            field[static_cast<std::size_t>(i) * impl_->ny + j] =
                buf[static_cast<std::size_t>(i) * my + j].real();
        }
    }
    return field;
}

std::vector<double> matern_field(const WeightedGrid& grid, const MaternSpec& spec,
                                 std::uint64_t seed) {
    if (!grid.lattice() || grid.lattice()->dim() != 2) {
        throw ValidationError("field draw: grid must be built over a 2-d lattice");
    }
    MaternSampler sampler(*grid.lattice(), spec);
    return sampler.sample(seed);
}

} // namespace ffdr
