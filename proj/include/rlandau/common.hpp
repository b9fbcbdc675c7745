/**
 * Shared building blocks: 3-vectors, symmetric 3x3 matrices, the error
 * hierarchy, worker-count control and deterministic reductions.
 *
 * Reductions over node or pair data are performed blockwise and the block
 * partials are combined by pairwise summation in a fixed order, so results
 * do not depend on how blocks were distributed over threads.
 */
#ifndef RLANDAU_COMMON_HPP
#define RLANDAU_COMMON_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <stdexcept>
#include <string>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace rlandau {

struct Vec3 {
    double x = 0.0, y = 0.0, z = 0.0;

    double& operator[](int i) { return (&x)[i]; }
    double operator[](int i) const { return (&x)[i]; }

    Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
    Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
    Vec3 operator-() const { return {-x, -y, -z}; }
    Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
    Vec3 operator/(double s) const { return {x / s, y / s, z / s}; }
    Vec3& operator+=(const Vec3& o) { x += o.x; y += o.y; z += o.z; return *this; }

    double dot(const Vec3& o) const { return x * o.x + y * o.y + z * o.z; }
    Vec3 cross(const Vec3& o) const {
        return {y * o.z - z * o.y, z * o.x - x * o.z, x * o.y - y * o.x};
    }
    double norm2() const { return dot(*this); }
    double norm() const { return std::sqrt(norm2()); }
    Vec3 normalized() const { return *this / norm(); }
    double max_abs() const { return std::max({std::fabs(x), std::fabs(y), std::fabs(z)}); }
};

inline Vec3 operator*(double s, const Vec3& v) { return v * s; }

/** Symmetric 3x3 matrix stored as the six independent entries. */
struct SymMat3 {
    double xx = 0.0, yy = 0.0, zz = 0.0, xy = 0.0, xz = 0.0, yz = 0.0;

    static SymMat3 identity(double s = 1.0) { return {s, s, s, 0.0, 0.0, 0.0}; }

    /** Rank-one v v^T. */
    static SymMat3 outer(const Vec3& v) {
        return {v.x * v.x, v.y * v.y, v.z * v.z, v.x * v.y, v.x * v.z, v.y * v.z};
    }
    /** Symmetrized outer product u v^T + v u^T. */
    static SymMat3 sym_outer(const Vec3& u, const Vec3& v) {
        return {2 * u.x * v.x, 2 * u.y * v.y, 2 * u.z * v.z,
                u.x * v.y + u.y * v.x, u.x * v.z + u.z * v.x, u.y * v.z + u.z * v.y};
    }

    double operator()(int i, int j) const {
        if (i == j) return i == 0 ? xx : (i == 1 ? yy : zz);
        int s = i + j;  // 1 -> xy, 2 -> xz, 3 -> yz
        return s == 1 ? xy : (s == 2 ? xz : yz);
    }

    SymMat3 operator+(const SymMat3& o) const {
        return {xx + o.xx, yy + o.yy, zz + o.zz, xy + o.xy, xz + o.xz, yz + o.yz};
    }
    SymMat3 operator-(const SymMat3& o) const {
        return {xx - o.xx, yy - o.yy, zz - o.zz, xy - o.xy, xz - o.xz, yz - o.yz};
    }
    SymMat3 operator*(double s) const { return {xx * s, yy * s, zz * s, xy * s, xz * s, yz * s}; }
    SymMat3& operator+=(const SymMat3& o) {
        xx += o.xx; yy += o.yy; zz += o.zz; xy += o.xy; xz += o.xz; yz += o.yz;
        return *this;
    }

    Vec3 apply(const Vec3& v) const {
        return {xx * v.x + xy * v.y + xz * v.z,
                xy * v.x + yy * v.y + yz * v.z,
                xz * v.x + yz * v.y + zz * v.z};
    }
    double quad(const Vec3& v) const { return v.dot(apply(v)); }

    double max_abs() const {
        return std::max({std::fabs(xx), std::fabs(yy), std::fabs(zz),
                         std::fabs(xy), std::fabs(xz), std::fabs(yz)});
    }
    double frobenius() const {
        return std::sqrt(xx * xx + yy * yy + zz * zz + 2 * (xy * xy + xz * xz + yz * yz));
    }

    /** Smallest and largest eigenvalue by the trigonometric closed form. */
    std::pair<double, double> eigen_range() const {
        const double q = (xx + yy + zz) / 3.0;
        const double dxx = xx - q, dyy = yy - q, dzz = zz - q;
        const double p2 = dxx * dxx + dyy * dyy + dzz * dzz +
                          2.0 * (xy * xy + xz * xz + yz * yz);
        if (p2 <= 0.0) return {q, q};
        const double pp = std::sqrt(p2 / 6.0);
        // det((A - q I) / pp) / 2, clamped against roundoff
        const double inv = 1.0 / pp;
        const double bxx = dxx * inv, byy = dyy * inv, bzz = dzz * inv;
        const double bxy = xy * inv, bxz = xz * inv, byz = yz * inv;
        double r = 0.5 * (bxx * (byy * bzz - byz * byz) - bxy * (bxy * bzz - byz * bxz) +
                          bxz * (bxy * byz - byy * bxz));
        r = std::clamp(r, -1.0, 1.0);
        const double phi = std::acos(r) / 3.0;
        const double hi = q + 2.0 * pp * std::cos(phi);
        const double lo = q + 2.0 * pp * std::cos(phi + 2.0 * M_PI / 3.0);
        return {lo, hi};
    }
};

inline SymMat3 operator*(double s, const SymMat3& m) { return m * s; }

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/** Kernel evaluation at p = q (or numerically indistinguishable momenta). */
class DegeneratePair : public Error { public: using Error::Error; };
/** Closed-form eigenbasis undefined for (anti)parallel momenta. */
class ColinearPair : public Error { public: using Error::Error; };
class EmptyDistribution : public Error { public: using Error::Error; };
class NonpositiveDensity : public Error { public: using Error::Error; };
class ZeroMass : public Error { public: using Error::Error; };
/** Time step underflowed during negativity retries. */
class BlowUp : public Error { public: using Error::Error; };
class DiagnosticsFailure : public Error { public: using Error::Error; };
class CheckpointError : public Error { public: using Error::Error; };
class ConfigError : public Error { public: using Error::Error; };

// ---------------------------------------------------------------------------
// Worker-count control
// ---------------------------------------------------------------------------

/** Worker cap: hardware threads, optionally limited by RLANDAU_THREADS. */
inline int max_threads() {
    static const int cached = [] {
        int n = 1;
#ifdef _OPENMP
        n = omp_get_max_threads();
#endif
        if (const char* env = std::getenv("RLANDAU_THREADS")) {
            char* end = nullptr;
            long v = std::strtol(env, &end, 10);
            if (end != env && v >= 1) n = std::min<long>(v, 512);
        }
        return n;
    }();
    return cached;
}

// ---------------------------------------------------------------------------
// Deterministic reductions
// ---------------------------------------------------------------------------

/** Pairwise (tree) summation of a contiguous range, in index order. */
inline double pairwise_sum(const double* v, std::size_t n) {
    if (n <= 16) {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) s += v[i];
        return s;
    }
    std::size_t half = n / 2;
    return pairwise_sum(v, half) + pairwise_sum(v + half, n - half);
}

inline double pairwise_sum(const std::vector<double>& v) {
    return pairwise_sum(v.data(), v.size());
}

inline constexpr std::size_t kReduceBlock = 4096;

/**
 * Deterministic parallel sum of term(i) for i in [0, n). Block partials are
 * accumulated in index order and combined pairwise, so the result is
 * independent of the number of worker threads.
 */
template <class Term>
double parallel_block_sum(std::size_t n, Term&& term) {
    const std::size_t nb = (n + kReduceBlock - 1) / kReduceBlock;
    if (nb == 0) return 0.0;
    std::vector<double> partial(nb, 0.0);
#ifdef _OPENMP
#pragma omp parallel for schedule(static) num_threads(max_threads())
#endif
    for (std::int64_t b = 0; b < static_cast<std::int64_t>(nb); ++b) {
        const std::size_t lo = static_cast<std::size_t>(b) * kReduceBlock;
        const std::size_t hi = std::min(n, lo + kReduceBlock);
        double s = 0.0;
        for (std::size_t i = lo; i < hi; ++i) s += term(i);
        partial[static_cast<std::size_t>(b)] = s;
    }
    return pairwise_sum(partial);
}

}  // namespace rlandau

#endif  // RLANDAU_COMMON_HPP
