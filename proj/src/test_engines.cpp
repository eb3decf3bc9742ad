#include "ffdr/test_engines.hpp"

#include <algorithm>
#include <cfloat>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include <boost/math/special_functions/beta.hpp>

#include "ffdr/errors.hpp"
#include "ffdr/rng.hpp"

namespace ffdr {

double student_t_cdf(double t, double df) {
    if (!(df > 0.0)) throw ValidationError("t distribution: df must be positive");
    if (!std::isfinite(t)) throw ValidationError("t distribution: t must be finite");
    if (t == 0.0) return 0.5;
    // F(t) = 1 - I_{df/(df+t^2)}(df/2, 1/2) / 2 for t > 0, symmetric below.
    const double x = df / (df + t * t);
    const double half_tail = 0.5 * boost::math::ibeta(df / 2.0, 0.5, x);
    return t > 0.0 ? 1.0 - half_tail : half_tail;
}

double pvalue_from_t(double t, double df, TestSide side) {
    double p = 0.0;
    switch (side) {
    case TestSide::greater:
        p = student_t_cdf(-t, df);
        break;
    case TestSide::less:
        p = student_t_cdf(t, df);
        break;
    case TestSide::two_sided:
        p = 2.0 * student_t_cdf(-std::abs(t), df);
        break;
    }
    // Clamp into (0, 1]: extreme statistics may underflow, and the two-sided
    // doubling may round a hair above 1.
    return std::min(1.0, std::max(p, DBL_MIN));
}

namespace {

// Deterministic p-value when the sample carries no noise: 1 when the effect
// estimate is consistent with the null for the requested side, otherwise the
// smallest positive normal double.
double degenerate_pvalue(double effect, TestSide side) {
    switch (side) {
    case TestSide::greater:
        return effect > 0.0 ? DBL_MIN : 1.0;
    case TestSide::less:
        return effect < 0.0 ? DBL_MIN : 1.0;
    case TestSide::two_sided:
        return effect != 0.0 ? DBL_MIN : 1.0;
    }
    return 1.0;
}

} // namespace

PValueField one_sample_t_test(const Eigen::MatrixXd& samples, TestSide side) {
    const Eigen::Index n = samples.rows(), g = samples.cols();
    if (n < 2) throw ValidationError("one-sample t test: need at least 2 observations");
    if (g < 1) throw ValidationError("one-sample t test: no grid points");

    const double df = static_cast<double>(n - 1);
    std::vector<double> p(static_cast<std::size_t>(g));
    for (Eigen::Index j = 0; j < g; ++j) {
        const auto col = samples.col(j);
        const double mean = col.mean();
        const double ss = (col.array() - mean).matrix().squaredNorm();
        if (ss <= 0.0) {
            p[static_cast<std::size_t>(j)] = degenerate_pvalue(mean, side);
            continue;
        }
        const double se = std::sqrt(ss / (df * static_cast<double>(n)));
        p[static_cast<std::size_t>(j)] = pvalue_from_t(mean / se, df, side);
    }
    return PValueField(std::move(p));
}

PValueField ols_trend_test(const Eigen::MatrixXd& series, std::span<const double> years,
                           TestSide side) {
    const Eigen::Index g = series.rows(), t = series.cols();
    if (t < 3) throw ValidationError("trend test: need at least 3 time points");
    if (static_cast<std::size_t>(t) != years.size()) {
        throw ValidationError("trend test: series columns and years differ in length");
    }
    if (g < 1) throw ValidationError("trend test: no grid points");

    Eigen::VectorXd x(t);
    for (Eigen::Index j = 0; j < t; ++j) x[j] = years[static_cast<std::size_t>(j)];
    const double xbar = x.mean();
    const Eigen::VectorXd xc = x.array() - xbar;
    const double sxx = xc.squaredNorm();
    if (sxx <= 0.0) throw ValidationError("trend test: years are all equal");

    const double df = static_cast<double>(t - 2);
    std::vector<double> p(static_cast<std::size_t>(g));
    for (Eigen::Index i = 0; i < g; ++i) {
        const auto row = series.row(i);
        const double ybar = row.mean();
        const double slope = (row.transpose().array() - ybar).matrix().dot(xc) / sxx;
        const double rss =
            std::max(0.0, (row.transpose().array() - ybar - slope * xc.array()).matrix().squaredNorm());
        if (rss <= 0.0) {
            p[static_cast<std::size_t>(i)] = degenerate_pvalue(slope, side);
            continue;
        }
        const double se = std::sqrt(rss / (df * sxx));
        p[static_cast<std::size_t>(i)] = pvalue_from_t(slope / se, df, side);
    }
    return PValueField(std::move(p));
}

void FunctionalSampleSet::validate() const {
    const Eigen::Index n = curves.rows(), q = design.cols();
    if (n < 3) throw ValidationError("functional sample: need at least 3 observations");
    if (curves.cols() < 1) throw ValidationError("functional sample: no grid points");
    if (design.rows() != n) {
        throw ValidationError("functional sample: design rows differ from observation count");
    }
    if (q < 2) {
        throw ValidationError("functional sample: design needs the tested covariate plus a "
                              "nuisance model (intercept at minimum)");
    }
    if (tested_column < 0 || tested_column >= q) {
        throw ValidationError("functional sample: tested column out of range");
    }
    if (n <= q) {
        throw ValidationError("functional sample: need more observations than covariates");
    }
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
    if (qr.rank() < q) throw ValidationError("functional sample: design is rank deficient");
}

namespace {

// Squared t statistic of the tested coefficient; inf when the fit is exact
// around a nonzero coefficient, 0 when both vanish.
double squared_tstat(double beta, double rss, double dfree, double inv_cc) {
    if (rss <= 0.0) {
        return beta == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
    }
    return beta * beta / (rss / dfree * inv_cc);
}

} // namespace

PermutationPValues freedman_lane_joint(const FunctionalSampleSet& data, int permutations,
                                       std::uint64_t seed) {
    data.validate();
    if (permutations < 99) {
        throw ValidationError("residual permutation: need at least 99 permutations");
    }

    const Eigen::Index n = data.curves.rows();
    const Eigen::Index g = data.curves.cols();
    const Eigen::Index q = data.design.cols();
    const Eigen::Index c = data.tested_column;
    const int b = permutations;
    const double dfree = static_cast<double>(n - q);

    const Eigen::MatrixXd& x = data.design;
    const Eigen::MatrixXd xtx_inv = (x.transpose() * x).inverse();
    const Eigen::MatrixXd hat = xtx_inv * x.transpose(); // q x n
    const double inv_cc = xtx_inv(c, c);

    // Nuisance-only model (tested column removed).
    Eigen::MatrixXd z(n, q - 1);
    for (Eigen::Index j = 0, k = 0; j < q; ++j) {
        if (j != c) z.col(k++) = x.col(j);
    }
    const Eigen::MatrixXd zhat = (z.transpose() * z).inverse() * z.transpose();

    // One shared permutation table for every grid point.
    Rng rng(seed);
    std::vector<std::vector<Eigen::Index>> perm(static_cast<std::size_t>(b));
    std::vector<Eigen::Index> identity(static_cast<std::size_t>(n));
    std::iota(identity.begin(), identity.end(), Eigen::Index{0});
    for (auto& row : perm) {
        row = identity;
        rng.shuffle(row);
    }

    std::vector<double> observed(static_cast<std::size_t>(g));
    std::vector<int> count_ge(static_cast<std::size_t>(g), 0);
    std::vector<double> perm_max(static_cast<std::size_t>(b), 0.0);

    Eigen::MatrixXd ystar(n, b);
    for (Eigen::Index point = 0; point < g; ++point) {
        const Eigen::VectorXd y = data.curves.col(point);

        const Eigen::VectorXd full_beta = hat * y;
        const double full_rss = std::max(0.0, (y - x * full_beta).squaredNorm());
        const double obs = squared_tstat(full_beta[c], full_rss, dfree, inv_cc);
        observed[static_cast<std::size_t>(point)] = obs;

        const Eigen::VectorXd fitted = z * (zhat * y);
        const Eigen::VectorXd resid = y - fitted;
        for (int k = 0; k < b; ++k) {
            const auto& rows = perm[static_cast<std::size_t>(k)];
            for (Eigen::Index i = 0; i < n; ++i) {
                ystar(i, k) = fitted[i] + resid[rows[static_cast<std::size_t>(i)]];
            }
        }

        const Eigen::MatrixXd beta = hat * ystar;          // q x b
        const Eigen::MatrixXd fit_resid = ystar - x * beta; // n x b
        for (int k = 0; k < b; ++k) {
            const double rss = std::max(0.0, fit_resid.col(k).squaredNorm());
            const double stat = squared_tstat(beta(c, k), rss, dfree, inv_cc);
            if (stat >= obs) ++count_ge[static_cast<std::size_t>(point)];
            auto& m = perm_max[static_cast<std::size_t>(k)];
            m = std::max(m, stat);
        }
    }

    std::vector<double> pointwise(static_cast<std::size_t>(g)), fmax(static_cast<std::size_t>(g));
    for (Eigen::Index point = 0; point < g; ++point) {
        const std::size_t s = static_cast<std::size_t>(point);
        pointwise[s] = (1.0 + count_ge[s]) / (b + 1.0);
        int ge = 0;
        for (double m : perm_max) {
            if (m >= observed[s]) ++ge;
        }
        fmax[s] = (1.0 + ge) / (b + 1.0);
    }
    return PermutationPValues{PValueField(std::move(pointwise)), PValueField(std::move(fmax))};
}

PValueField freedman_lane_pvalues(const FunctionalSampleSet& data, int permutations,
                                  std::uint64_t seed) {
    return freedman_lane_joint(data, permutations, seed).pointwise;
}

PValueField fmax_adjust(const FunctionalSampleSet& data, int permutations, std::uint64_t seed) {
    return freedman_lane_joint(data, permutations, seed).fmax;
}

} // namespace ffdr
