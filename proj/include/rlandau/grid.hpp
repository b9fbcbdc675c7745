/**
 * Uniform cubic momentum grid on [-R, R]^3 and the densities sampled on it.
 * Node counts are odd so the origin is always a node; values are stored
 * row-major with the x index slowest.
 */
#ifndef RLANDAU_GRID_HPP
#define RLANDAU_GRID_HPP

#include <cmath>
#include <cstdint>
#include <vector>

#include "rlandau/common.hpp"
#include "rlandau/kernel.hpp"

namespace rlandau {

struct GridGeometry {
    double radius = 8.0;  // half-width R_grid
    int n = 41;           // nodes per axis, odd

    GridGeometry() = default;
    GridGeometry(double r, int nodes) : radius(r), n(nodes) {
        if (n < 3 || n % 2 == 0) throw ConfigError("grid: n_per_axis must be odd and >= 3");
        if (!(radius > 0.0)) throw ConfigError("grid: radius must be positive");
    }

    double h() const { return 2.0 * radius / (n - 1); }
    double cell_volume() const { return h() * h() * h(); }
    std::size_t size() const {
        return static_cast<std::size_t>(n) * static_cast<std::size_t>(n) *
               static_cast<std::size_t>(n);
    }

    double coord(int i) const { return -radius + i * h(); }
    std::size_t index(int i, int j, int k) const {
        return (static_cast<std::size_t>(i) * n + j) * n + k;
    }
    void unpack(std::size_t idx, int& i, int& j, int& k) const {
        k = static_cast<int>(idx % n);
        j = static_cast<int>((idx / n) % n);
        i = static_cast<int>(idx / (static_cast<std::size_t>(n) * n));
    }
    Vec3 node(std::size_t idx) const {
        int i, j, k;
        unpack(idx, i, j, k);
        return {coord(i), coord(j), coord(k)};
    }
    Momentum momentum_at(std::size_t idx) const { return Momentum(node(idx)); }

    bool operator==(const GridGeometry& o) const {
        return radius == o.radius && n == o.n;
    }
};

struct DistributionGrid {
    GridGeometry geom;
    std::vector<double> values;

    DistributionGrid() = default;
    explicit DistributionGrid(const GridGeometry& g) : geom(g), values(g.size(), 0.0) {}

    double& operator[](std::size_t i) { return values[i]; }
    double operator[](std::size_t i) const { return values[i]; }
    std::size_t size() const { return values.size(); }

    double min_value() const {
        double m = values.empty() ? 0.0 : values[0];
        for (double v : values) m = std::min(m, v);
        return m;
    }
    double max_value() const {
        double m = values.empty() ? 0.0 : values[0];
        for (double v : values) m = std::max(m, v);
        return m;
    }
    /** Discrete mass h^3 sum f. */
    double mass() const {
        const double h3 = geom.cell_volume();
        return h3 * parallel_block_sum(values.size(), [&](std::size_t i) { return values[i]; });
    }
};

/** Juttner weight e^{-p0} / 4 pi at a single momentum. */
inline double juttner_value(const Momentum& m) {
    return std::exp(-m.p0) / (4.0 * M_PI);
}

/** Equilibrium sampled on the grid; positive everywhere. */
inline DistributionGrid juttner(const GridGeometry& geom) {
    DistributionGrid f(geom);
    const std::size_t n = f.size();
#ifdef _OPENMP
#pragma omp parallel for schedule(static) num_threads(max_threads())
#endif
    for (std::int64_t i = 0; i < static_cast<std::int64_t>(n); ++i) {
        f.values[static_cast<std::size_t>(i)] =
            juttner_value(geom.momentum_at(static_cast<std::size_t>(i)));
    }
    return f;
}

/**
 * Floor the density at 1e-12 * max(f) * J(p)/J(0). Keeps log f finite for
 * the entropy functionals while following the equilibrium profile, so the
 * floor itself carries no gradient information.
 */
inline void mollify_floor(DistributionGrid& f) {
    const double fmax = f.max_value();
    if (fmax <= 0.0) return;
    const double scale = 1e-12 * fmax;
    const std::size_t n = f.size();
#ifdef _OPENMP
#pragma omp parallel for schedule(static) num_threads(max_threads())
#endif
    for (std::int64_t ii = 0; ii < static_cast<std::int64_t>(n); ++ii) {
        const std::size_t i = static_cast<std::size_t>(ii);
        const Momentum m = f.geom.momentum_at(i);
        const double floor = scale * std::exp(1.0 - m.p0);  // J(p)/J(0) = e^{1-p0}
        if (f.values[i] < floor) f.values[i] = floor;
    }
}

}  // namespace rlandau

#endif  // RLANDAU_GRID_HPP
