/** Initial data for the bundled scenarios. */
#ifndef RLANDAU_SCENARIOS_HPP
#define RLANDAU_SCENARIOS_HPP

#include <cmath>

#include "rlandau/grid.hpp"

namespace rlandau {

namespace detail {

/** Rate c with <p0> of exp(-c p0) on the grid equal to the target. */
inline double fit_exponential_rate(const GridGeometry& geom, double target_mean_energy) {
    const std::size_t N = geom.size();
    std::vector<double> p0(N);
    for (std::size_t i = 0; i < N; ++i) p0[i] = std::sqrt(1.0 + geom.node(i).norm2());
    const auto mean_energy = [&](double c) {
        double m = 0.0, e = 0.0;
        for (std::size_t i = 0; i < N; ++i) {
            const double w = std::exp(-c * p0[i]);
            m += w;
            e += w * p0[i];
        }
        return e / m;
    };
    double lo = 1e-3, hi = 64.0;
    while (mean_energy(lo) < target_mean_energy && lo > 1e-12) lo *= 0.5;
    while (mean_energy(hi) > target_mean_energy && hi < 1e6) hi *= 2.0;
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (mean_energy(mid) > target_mean_energy) lo = mid;
        else hi = mid;
    }
    return 0.5 * (lo + hi);
}

}  // namespace detail

/**
 * Sum of two Gaussian bumps at +-center, normalized to the given mass.
 * A small background (relative scale `background`) exponential in p0 at the
 * temperature matched to the bumps keeps the far field near its local
 * drift-diffusion balance; without it the far cells hold nothing, the drift
 * drains them negative and the time step collapses against the negativity
 * guard.
 */
inline DistributionGrid two_bump(const GridGeometry& geom, Vec3 center = {1.2, 0.0, 0.0},
                                 double sigma = 0.8, double mass = 1.0,
                                 double background = 1e-5) {
    DistributionGrid f(geom);
    const double inv2s2 = 1.0 / (2.0 * sigma * sigma);
    for (std::size_t i = 0; i < f.size(); ++i) {
        const Vec3 p = geom.node(i);
        f.values[i] = std::exp(-(p - center).norm2() * inv2s2) +
                      std::exp(-(p + center).norm2() * inv2s2);
    }
    double msum = 0.0, esum = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i) {
        msum += f.values[i];
        esum += f.values[i] * std::sqrt(1.0 + geom.node(i).norm2());
    }
    const double c_bg = detail::fit_exponential_rate(geom, esum / msum);
    const double peak = f.max_value();
    for (std::size_t i = 0; i < f.size(); ++i) {
        const Momentum m(geom.node(i));
        f.values[i] += background * peak * std::exp(c_bg * (1.0 - m.p0));
    }
    const double m = f.mass();
    for (double& v : f.values) v *= mass / m;
    return f;
}

/** Juttner modulated by 1 + amp * cos(p_x); even, so momentum stays zero. */
inline DistributionGrid perturbed_juttner(const GridGeometry& geom, double amp = 0.1) {
    DistributionGrid f = juttner(geom);
    for (std::size_t i = 0; i < f.size(); ++i) {
        f.values[i] *= 1.0 + amp * std::cos(geom.node(i).x);
    }
    return f;
}

/**
 * Equilibrium profile exp(a - c p0) matching the given discrete mass and
 * energy on the grid. The mean energy <p0> is monotone decreasing in c, so
 * c is found by bisection and a by rescaling.
 */
inline DistributionGrid matched_juttner(const GridGeometry& geom, double mass, double energy) {
    if (!(mass > 0.0) || !(energy >= mass))
        throw Error("matched_juttner: need mass > 0 and energy >= mass");
    const std::size_t N = geom.size();
    std::vector<double> p0(N);
    for (std::size_t i = 0; i < N; ++i) p0[i] = std::sqrt(1.0 + geom.node(i).norm2());
    const auto mean_energy = [&](double c) {
        double m = 0.0, e = 0.0;
        for (std::size_t i = 0; i < N; ++i) {
            const double w = std::exp(-c * p0[i]);
            m += w;
            e += w * p0[i];
        }
        return e / m;
    };
    const double target = energy / mass;
    double lo = 1e-3, hi = 64.0;
    while (mean_energy(lo) < target && lo > 1e-12) lo *= 0.5;
    while (mean_energy(hi) > target && hi < 1e6) hi *= 2.0;
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (mean_energy(mid) > target) lo = mid;
        else hi = mid;
    }
    const double c = 0.5 * (lo + hi);
    DistributionGrid g(geom);
    double m = 0.0;
    for (std::size_t i = 0; i < N; ++i) {
        g.values[i] = std::exp(-c * p0[i]);
        m += g.values[i];
    }
    const double scale = mass / (m * geom.cell_volume());
    for (double& v : g.values) v *= scale;
    return g;
}

/** Relative l1 distance h^3 sum |f - g| / mass(f). */
inline double relative_l1_distance(const DistributionGrid& f, const DistributionGrid& g) {
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i) {
        num += std::fabs(f.values[i] - g.values[i]);
        den += f.values[i];
    }
    return num / den;
}

}  // namespace rlandau

#endif  // RLANDAU_SCENARIOS_HPP
