/**
 * Quadrature assembly of the coefficient fields driven by the kernel:
 *
 *   a^{ij}(f)(p) = h^3 sum_q Phi_eps^{ij}(p,q) f(q)              (diffusion)
 *   b^{i}(f)(p)  = -h^3 sum_q Phi_eps^{ij}(p,q) [D_j f](q)       (solver drift)
 *   b^{i}(f)(p)  = h^3 sum_q dq_j Phi_eps^{ij}(p,q) f(q)         (drift moment)
 *   b^{j}(f)(p)  = 2 h^3 sum_{q != p} Lambda rho (p_j+q_j) f(q)  (non-conservative)
 *   c(f)(p)      = 4 h^3 sum_{q != p} (rho+1)/(p0 q0 sqrt(rho tau)) f(q) + kappa(p) f(p)
 *
 * by a midpoint rule over the grid. The solver drift is the drift moment
 * integrated by parts (D is the centered node gradient, one-sided at the
 * boundary): both discretize the same field, but the direct moment puts the
 * midpoint rule on a second-order singular integrand, which on practical
 * grids carries an O(1e-1) error that wrecks the energy balance, while the
 * by-parts form has the same bounded integrand as a^{ij} itself and, at an
 * equilibrium profile, cancels a^{ij} d_j f + b^i f node-by-node through
 * the kernel null direction, exactly in floating point. The direct moment
 * remains available for diagnostics.
 *
 * The O(N^2) double loop runs over unordered node pairs once (the kernel is
 * symmetric under p <-> q), tiled into rows that are dealt to worker
 * threads cyclically. Each worker owns a private accumulator image, and the
 * images are merged in worker order, so results are bitwise reproducible
 * for a fixed worker count.
 *
 * For eps > 0 the integrand is bounded and the plain midpoint sum applies,
 * with the diagonal node (q = p) carrying the direction-averaged limit of
 * the bounded kernel factor. For eps = 0 (diagnostics) the diagonal node is
 * excluded and a one-cell correction integrates the 1/|p-q| model of the
 * singularity analytically over the missing cell, restoring O(h^2).
 *
 * An optional ActiveSet restricts both source and target nodes to the
 * region where f is above a relative threshold (plus a dilation buffer);
 * coefficients outside are left at zero. Inputs are read-only during
 * assembly and outputs are written disjointly, so concurrent assemblies on
 * different fields are safe.
 */
#ifndef RLANDAU_COEFF_HPP
#define RLANDAU_COEFF_HPP

#include <array>
#include <cstdint>
#include <vector>

#if defined(__AVX512F__)
#include <immintrin.h>
#endif

#include "rlandau/common.hpp"
#include "rlandau/grid.hpp"
#include "rlandau/kernel.hpp"

namespace rlandau {

struct CoefficientField {
    GridGeometry geom;
    std::array<std::vector<double>, 6> a;  // xx, yy, zz, xy, xz, yz
    std::array<std::vector<double>, 3> b;

    CoefficientField() = default;
    explicit CoefficientField(const GridGeometry& g) : geom(g) {
        for (auto& v : a) v.assign(g.size(), 0.0);
        for (auto& v : b) v.assign(g.size(), 0.0);
    }

    SymMat3 a_at(std::size_t i) const {
        return {a[0][i], a[1][i], a[2][i], a[3][i], a[4][i], a[5][i]};
    }
    Vec3 b_at(std::size_t i) const { return {b[0][i], b[1][i], b[2][i]}; }

    double max_a_abs() const {
        double m = 0.0;
        for (const auto& v : a)
            for (double x : v) m = std::max(m, std::fabs(x));
        return m;
    }
};

// ---------------------------------------------------------------------------
// Active node set
// ---------------------------------------------------------------------------

struct ActiveSet {
    std::vector<std::uint32_t> idx;  // ascending node indices
    std::size_t count = 0;
    std::size_t padded = 0;                      // count rounded up to 8
    std::vector<double> px, py, pz, p0, fv;      // SoA, padded with inert lanes
    std::vector<double> dfx, dfy, dfz;           // centered node gradient of f

    void finalize(const DistributionGrid& f) {
        count = idx.size();
        padded = (count + 7) / 8 * 8;
        px.assign(padded, 0.0);
        py.assign(padded, 0.0);
        pz.assign(padded, 0.0);
        p0.assign(padded, 1.0);
        fv.assign(padded, 0.0);
        dfx.assign(padded, 0.0);
        dfy.assign(padded, 0.0);
        dfz.assign(padded, 0.0);
        const GridGeometry& g = f.geom;
        const int n = g.n;
        const double inv_h = 1.0 / g.h();
        const double inv_2h = 0.5 * inv_h;
        const std::size_t stride[3] = {static_cast<std::size_t>(n) * n,
                                       static_cast<std::size_t>(n), 1};
        for (std::size_t s = 0; s < count; ++s) {
            const std::size_t node = idx[s];
            const Vec3 v = g.node(node);
            px[s] = v.x;
            py[s] = v.y;
            pz[s] = v.z;
            p0[s] = std::sqrt(1.0 + v.norm2());
            fv[s] = f.values[node];
            int c[3];
            g.unpack(node, c[0], c[1], c[2]);
            double* const df[3] = {&dfx[s], &dfy[s], &dfz[s]};
            for (int ax = 0; ax < 3; ++ax) {
                const std::size_t st = stride[ax];
                if (c[ax] == 0) {
                    *df[ax] = (f.values[node + st] - f.values[node]) * inv_h;
                } else if (c[ax] == n - 1) {
                    *df[ax] = (f.values[node] - f.values[node - st]) * inv_h;
                } else {
                    *df[ax] = (f.values[node + st] - f.values[node - st]) * inv_2h;
                }
            }
        }
        // padding lanes: far-away momenta with zero weight, never degenerate
        // against any grid node
        for (std::size_t s = count; s < padded; ++s) {
            px[s] = 1.0e6 + static_cast<double>(s);
            py[s] = 0.5;
            pz[s] = 0.25;
            p0[s] = std::sqrt(1.0 + px[s] * px[s] + py[s] * py[s] + pz[s] * pz[s]);
            fv[s] = 0.0;
        }
    }
};

inline ActiveSet full_active_set(const DistributionGrid& f) {
    ActiveSet act;
    act.idx.resize(f.size());
    for (std::size_t i = 0; i < f.size(); ++i) act.idx[i] = static_cast<std::uint32_t>(i);
    act.finalize(f);
    return act;
}

/**
 * Nodes with f >= rel_threshold * max(f), dilated by `dilate` cells in the
 * Chebyshev metric. Contributions of the dropped nodes to any coefficient
 * are bounded by rel_threshold * max(f) * N h^3 * ||Phi||.
 */
inline ActiveSet build_active_set(const DistributionGrid& f, double rel_threshold,
                                  int dilate = 2) {
    const int n = f.geom.n;
    const double cut = rel_threshold * f.max_value();
    std::vector<std::uint8_t> mark(f.size(), 0);
    for (std::size_t i = 0; i < f.size(); ++i) mark[i] = f.values[i] >= cut ? 1 : 0;
    // separable box dilation, one axis at a time
    std::vector<std::uint8_t> tmp(f.size());
    const auto pass = [&](int axis) {
        const std::size_t stride = axis == 0 ? static_cast<std::size_t>(n) * n
                                 : axis == 1 ? static_cast<std::size_t>(n)
                                             : 1;
        for (std::size_t i = 0; i < f.size(); ++i) {
            int ii, jj, kk;
            f.geom.unpack(i, ii, jj, kk);
            const int c = axis == 0 ? ii : axis == 1 ? jj : kk;
            std::uint8_t v = 0;
            for (int d = -dilate; d <= dilate && !v; ++d) {
                const int cc = c + d;
                if (cc < 0 || cc >= n) continue;
                v = mark[i + static_cast<std::size_t>(d) * stride];
            }
            tmp[i] = v;
        }
        mark.swap(tmp);
    };
    pass(0);
    pass(1);
    pass(2);
    ActiveSet act;
    for (std::size_t i = 0; i < f.size(); ++i)
        if (mark[i]) act.idx.push_back(static_cast<std::uint32_t>(i));
    act.finalize(f);
    return act;
}

// ---------------------------------------------------------------------------
// Symmetric pair sweep for a and the conservative b
// ---------------------------------------------------------------------------

/** Radius of the sphere with the volume of one grid cell, over h. */
inline constexpr double kCellRadiusFactor = 0.620350490899400;  // (3/(4 pi))^{1/3}

namespace detail {

/** Cyclic row chunks; row r belongs to worker (r/8) % nt. */
inline bool row_owned(std::size_t r, int worker, int nt) {
    return static_cast<int>((r / 8) % static_cast<std::size_t>(nt)) == worker;
}

/**
 * Contribution of the diagonal cell to a^{ij}: the near-diagonal kernel
 * model Phi_eps(p, p+v) ~ B_u / (p0^2 sqrt(|v|^2 gamma_u + eps^2)) is
 * integrated over the sphere with the cell's volume,
 *
 *   int_cell Phi_eps ~ (4 pi / p0^2) < B_u I(gamma_u) >_u,
 *   I(gamma) = [X sqrt(X^2+eps^2) - eps^2 log((X + sqrt(X^2+eps^2))/eps)]
 *              / (2 gamma^{3/2}),        X = sqrt(gamma) r_cell.
 *
 * For eps >> h this reduces to the midpoint value h^3 Lambda_n(p,p) <B_u>,
 * and at eps = 0 to the 1/|v| one-cell correction; in between it is the
 * monotone interpolation the midpoint rule lacks (whose diagonal value
 * diverges like 1/eps at fixed h). The direction average is done by
 * Gauss-Legendre in c = p.u/|p||u|; the result multiplies f(p).
 */
inline SymMat3 diag_cell_matrix(const Momentum& m, double eps, double h) {
    const double rc = kCellRadiusFactor * h;
    const double p2 = m.p.norm2();
    const double b2 = p2 / (m.p0 * m.p0);
    // 16-point Gauss-Legendre on [0,1]; the integrands are smooth and even in c
    static constexpr double gl_x[8] = {0.0950125098376374, 0.2816035507792589,
                                       0.4580167776572274, 0.6178762444026438,
                                       0.7554044083550030, 0.8656312023878318,
                                       0.9445750230732326, 0.9894009349916499};
    static constexpr double gl_w[8] = {0.1894506104550685, 0.1826034150449236,
                                       0.1691565193950025, 0.1495959888165767,
                                       0.1246289712555339, 0.0951585116824928,
                                       0.0622535239386479, 0.0271524594117541};
    const auto i_radial = [&](double gamma) {
        const double x = std::sqrt(gamma) * rc;
        if (eps <= 0.0) return 0.5 * x * x / (gamma * std::sqrt(gamma));
        const double r = std::sqrt(x * x + eps * eps);
        return 0.5 * (x * r - eps * eps * std::log((x + r) / eps)) /
               (gamma * std::sqrt(gamma));
    };
    double a_iso = 0.0, a_cc = 0.0, a_ss = 0.0;  // <I>, <c^2 I/gamma>, <(1-c^2) I/gamma>
    for (int k = 0; k < 8; ++k) {
        // <g> = (1/2) int_{-1}^{1} g dc, nodes in symmetric pairs
        for (double c : {gl_x[k], -gl_x[k]}) {
            const double w = 0.5 * gl_w[k];
            const double gamma = 1.0 - b2 * c * c;
            const double iv = i_radial(gamma);
            a_iso += w * iv;
            a_cc += w * c * c * iv / gamma;
            a_ss += w * (1.0 - c * c) * iv / gamma;
        }
    }
    RadialSplit split;
    split.tangential = a_iso - 0.5 * a_ss;
    split.radial = (1.0 + p2) * a_iso - a_cc;
    const SymMat3 mm = assemble_radial(m.p, split);
    return mm * (4.0 * M_PI / (m.p0 * m.p0));
}

/**
 * Scalar pair update shared by the portable sweep and the vector peel.
 * Accumulates the (p,q) pair into the target registers (node r) and the
 * source-side image (node s): slots 0..5 get Phi_eps f, slots 6..8 get the
 * by-parts drift -Phi_eps . Df. `eps2` = eps^2; eps2 == 0 gives the exact
 * kernel (callers exclude the diagonal by construction, s > r).
 */
inline void pair_update_scalar(const ActiveSet& act, std::size_t r, std::size_t s,
                               double eps2, double* tgt /*9*/, double* acc /*9 x padded*/) {
    const double pxr = act.px[r], pyr = act.py[r], pzr = act.pz[r], p0r = act.p0[r];
    const double dx = pxr - act.px[s], dy = pyr - act.py[s], dz = pzr - act.pz[s];
    const double pq = pxr * act.px[s] + pyr * act.py[s] + pzr * act.pz[s];
    const double p0q0 = p0r * act.p0[s];
    const double cx = pyr * dz - pzr * dy;
    const double cy = pzr * dx - pxr * dz;
    const double cz = pxr * dy - pyr * dx;
    const double num = dx * dx + dy * dy + dz * dz + cx * cx + cy * cy + cz * cz;
    const double rho = num / (p0q0 + pq + 1.0);
    const double e = rho + 1.0;
    const double tr = rho * (rho + 2.0);
    const double w = e * e / (p0q0 * std::sqrt(tr + eps2) * tr);
    const double s11 = tr - dx * dx + 2.0 * rho * pxr * act.px[s];
    const double s22 = tr - dy * dy + 2.0 * rho * pyr * act.py[s];
    const double s33 = tr - dz * dz + 2.0 * rho * pzr * act.pz[s];
    const double s12 = -dx * dy + rho * (pxr * act.py[s] + pyr * act.px[s]);
    const double s13 = -dx * dz + rho * (pxr * act.pz[s] + pzr * act.px[s]);
    const double s23 = -dy * dz + rho * (pyr * act.pz[s] + pzr * act.py[s]);
    const double wfq = w * act.fv[s];  // weight for the target row
    tgt[0] += wfq * s11;
    tgt[1] += wfq * s22;
    tgt[2] += wfq * s33;
    tgt[3] += wfq * s12;
    tgt[4] += wfq * s13;
    tgt[5] += wfq * s23;
    const double gqx = act.dfx[s], gqy = act.dfy[s], gqz = act.dfz[s];
    tgt[6] -= w * (s11 * gqx + s12 * gqy + s13 * gqz);
    tgt[7] -= w * (s12 * gqx + s22 * gqy + s23 * gqz);
    tgt[8] -= w * (s13 * gqx + s23 * gqy + s33 * gqz);
    const double wfp = w * act.fv[r];  // mirrored contribution to the source
    const std::size_t P = act.padded;
    acc[0 * P + s] += wfp * s11;
    acc[1 * P + s] += wfp * s22;
    acc[2 * P + s] += wfp * s33;
    acc[3 * P + s] += wfp * s12;
    acc[4 * P + s] += wfp * s13;
    acc[5 * P + s] += wfp * s23;
    const double gpx = act.dfx[r], gpy = act.dfy[r], gpz = act.dfz[r];
    acc[6 * P + s] -= w * (s11 * gpx + s12 * gpy + s13 * gpz);
    acc[7 * P + s] -= w * (s12 * gpx + s22 * gpy + s23 * gpz);
    acc[8 * P + s] -= w * (s13 * gpx + s23 * gpy + s33 * gpz);
}

#if defined(__AVX512F__)

inline __m512d rsqrt_refined(__m512d x) {
    __m512d y = _mm512_rsqrt14_pd(x);
    const __m512d half = _mm512_set1_pd(0.5), three = _mm512_set1_pd(3.0);
    __m512d xyy = _mm512_mul_pd(x, _mm512_mul_pd(y, y));
    y = _mm512_mul_pd(_mm512_mul_pd(half, y), _mm512_sub_pd(three, xyy));
    xyy = _mm512_mul_pd(x, _mm512_mul_pd(y, y));
    y = _mm512_mul_pd(_mm512_mul_pd(half, y), _mm512_sub_pd(three, xyy));
    return y;
}

inline __m512d rcp_refined(__m512d x) {
    __m512d y = _mm512_rcp14_pd(x);
    const __m512d two = _mm512_set1_pd(2.0);
    y = _mm512_mul_pd(y, _mm512_fnmadd_pd(x, y, two));
    y = _mm512_mul_pd(y, _mm512_fnmadd_pd(x, y, two));
    return y;
}

/** Vector body of the pair sweep: sources [s0, padded) for target row r. */
inline void pair_update_avx512(const ActiveSet& act, std::size_t r, std::size_t s0,
                               double eps2, double* tgt, double* acc) {
    const std::size_t P = act.padded;
    const __m512d px = _mm512_set1_pd(act.px[r]);
    const __m512d py = _mm512_set1_pd(act.py[r]);
    const __m512d pz = _mm512_set1_pd(act.pz[r]);
    const __m512d p0 = _mm512_set1_pd(act.p0[r]);
    const __m512d fr = _mm512_set1_pd(act.fv[r]);
    const __m512d gpx = _mm512_set1_pd(act.dfx[r]);
    const __m512d gpy = _mm512_set1_pd(act.dfy[r]);
    const __m512d gpz = _mm512_set1_pd(act.dfz[r]);
    const __m512d one = _mm512_set1_pd(1.0);
    const __m512d two = _mm512_set1_pd(2.0);
    const __m512d veps2 = _mm512_set1_pd(eps2);
    __m512d t0 = _mm512_setzero_pd(), t1 = t0, t2 = t0, t3 = t0, t4 = t0, t5 = t0;
    __m512d t6 = t0, t7 = t0, t8 = t0;
    for (std::size_t s = s0; s < P; s += 8) {
        const __m512d qx = _mm512_loadu_pd(&act.px[s]);
        const __m512d qy = _mm512_loadu_pd(&act.py[s]);
        const __m512d qz = _mm512_loadu_pd(&act.pz[s]);
        const __m512d q0 = _mm512_loadu_pd(&act.p0[s]);
        const __m512d fq = _mm512_loadu_pd(&act.fv[s]);
        const __m512d dx = _mm512_sub_pd(px, qx);
        const __m512d dy = _mm512_sub_pd(py, qy);
        const __m512d dz = _mm512_sub_pd(pz, qz);
        const __m512d pq = _mm512_fmadd_pd(px, qx, _mm512_fmadd_pd(py, qy, _mm512_mul_pd(pz, qz)));
        const __m512d p0q0 = _mm512_mul_pd(p0, q0);
        const __m512d cxv = _mm512_fmsub_pd(py, dz, _mm512_mul_pd(pz, dy));
        const __m512d cyv = _mm512_fmsub_pd(pz, dx, _mm512_mul_pd(px, dz));
        const __m512d czv = _mm512_fmsub_pd(px, dy, _mm512_mul_pd(py, dx));
        __m512d num = _mm512_fmadd_pd(dx, dx, _mm512_fmadd_pd(dy, dy, _mm512_mul_pd(dz, dz)));
        num = _mm512_add_pd(num, _mm512_fmadd_pd(cxv, cxv,
                  _mm512_fmadd_pd(cyv, cyv, _mm512_mul_pd(czv, czv))));
        const __m512d den = _mm512_add_pd(_mm512_add_pd(p0q0, pq), one);
        const __m512d rho = _mm512_mul_pd(num, rcp_refined(den));
        const __m512d e = _mm512_add_pd(rho, one);
        const __m512d tr = _mm512_mul_pd(rho, _mm512_add_pd(rho, two));
        const __m512d irt = rsqrt_refined(_mm512_add_pd(tr, veps2));
        const __m512d w = _mm512_mul_pd(_mm512_mul_pd(e, e),
                          _mm512_mul_pd(irt, rcp_refined(_mm512_mul_pd(p0q0, tr))));
        const __m512d rho2 = _mm512_add_pd(rho, rho);
        const __m512d s11 = _mm512_fnmadd_pd(dx, dx, _mm512_fmadd_pd(rho2, _mm512_mul_pd(px, qx), tr));
        const __m512d s22 = _mm512_fnmadd_pd(dy, dy, _mm512_fmadd_pd(rho2, _mm512_mul_pd(py, qy), tr));
        const __m512d s33 = _mm512_fnmadd_pd(dz, dz, _mm512_fmadd_pd(rho2, _mm512_mul_pd(pz, qz), tr));
        const __m512d s12 = _mm512_fnmadd_pd(dx, dy, _mm512_mul_pd(rho, _mm512_fmadd_pd(px, qy, _mm512_mul_pd(py, qx))));
        const __m512d s13 = _mm512_fnmadd_pd(dx, dz, _mm512_mul_pd(rho, _mm512_fmadd_pd(px, qz, _mm512_mul_pd(pz, qx))));
        const __m512d s23 = _mm512_fnmadd_pd(dy, dz, _mm512_mul_pd(rho, _mm512_fmadd_pd(py, qz, _mm512_mul_pd(pz, qy))));
        const __m512d wfq = _mm512_mul_pd(w, fq);
        t0 = _mm512_fmadd_pd(wfq, s11, t0);
        t1 = _mm512_fmadd_pd(wfq, s22, t1);
        t2 = _mm512_fmadd_pd(wfq, s33, t2);
        t3 = _mm512_fmadd_pd(wfq, s12, t3);
        t4 = _mm512_fmadd_pd(wfq, s13, t4);
        t5 = _mm512_fmadd_pd(wfq, s23, t5);
        // by-parts drift: -Phi . Df on both sides of the pair
        const __m512d gqx = _mm512_loadu_pd(&act.dfx[s]);
        const __m512d gqy = _mm512_loadu_pd(&act.dfy[s]);
        const __m512d gqz = _mm512_loadu_pd(&act.dfz[s]);
        t6 = _mm512_fnmadd_pd(w,
            _mm512_fmadd_pd(s11, gqx, _mm512_fmadd_pd(s12, gqy, _mm512_mul_pd(s13, gqz))), t6);
        t7 = _mm512_fnmadd_pd(w,
            _mm512_fmadd_pd(s12, gqx, _mm512_fmadd_pd(s22, gqy, _mm512_mul_pd(s23, gqz))), t7);
        t8 = _mm512_fnmadd_pd(w,
            _mm512_fmadd_pd(s13, gqx, _mm512_fmadd_pd(s23, gqy, _mm512_mul_pd(s33, gqz))), t8);
        const __m512d wfp = _mm512_mul_pd(w, fr);
#define RLANDAU_ACC(k, val) \
        _mm512_storeu_pd(&acc[(k) * P + s], \
            _mm512_fmadd_pd(wfp, (val), _mm512_loadu_pd(&acc[(k) * P + s])))
        RLANDAU_ACC(0, s11);
        RLANDAU_ACC(1, s22);
        RLANDAU_ACC(2, s33);
        RLANDAU_ACC(3, s12);
        RLANDAU_ACC(4, s13);
        RLANDAU_ACC(5, s23);
#undef RLANDAU_ACC
#define RLANDAU_ACCB(k, v1, v2, v3) \
        _mm512_storeu_pd(&acc[(k) * P + s], \
            _mm512_fnmadd_pd(w, \
                _mm512_fmadd_pd((v1), gpx, _mm512_fmadd_pd((v2), gpy, _mm512_mul_pd((v3), gpz))), \
                _mm512_loadu_pd(&acc[(k) * P + s])))
        RLANDAU_ACCB(6, s11, s12, s13);
        RLANDAU_ACCB(7, s12, s22, s23);
        RLANDAU_ACCB(8, s13, s23, s33);
#undef RLANDAU_ACCB
    }
    alignas(64) double lane[8];
    const auto hsum = [&](const __m512d& v) {
        _mm512_store_pd(lane, v);
        double a = ((lane[0] + lane[1]) + (lane[2] + lane[3])) +
                   ((lane[4] + lane[5]) + (lane[6] + lane[7]));
        return a;
    };
    tgt[0] += hsum(t0);
    tgt[1] += hsum(t1);
    tgt[2] += hsum(t2);
    tgt[3] += hsum(t3);
    tgt[4] += hsum(t4);
    tgt[5] += hsum(t5);
    tgt[6] += hsum(t6);
    tgt[7] += hsum(t7);
    tgt[8] += hsum(t8);
}

#endif  // __AVX512F__

/**
 * Unordered pair sweep over the active set accumulating the a and
 * conservative-b moments (without the h^3 factor). out[0..5] receive a,
 * out[6..8] receive b, each of length act.count.
 */
inline void pair_sweep_ab(const ActiveSet& act, double eps2, bool use_simd,
                          std::array<std::vector<double>, 9>& out) {
    const std::size_t n = act.count;
    const std::size_t P = act.padded;
    for (auto& v : out) v.assign(n, 0.0);
    const int nt = max_threads();
    std::vector<std::vector<double>> images(static_cast<std::size_t>(nt));
#ifdef _OPENMP
#pragma omp parallel num_threads(nt)
#endif
    {
#ifdef _OPENMP
        const int worker = omp_get_thread_num();
        const int active_workers = omp_get_num_threads();
#else
        const int worker = 0;
        const int active_workers = 1;
#endif
        std::vector<double>& acc = images[static_cast<std::size_t>(worker)];
        acc.assign(9 * P, 0.0);
        for (std::size_t r = 0; r < n; ++r) {
            if (!row_owned(r, worker, active_workers)) continue;
            double tgt[9] = {0, 0, 0, 0, 0, 0, 0, 0, 0};
            std::size_t s = r + 1;
#if defined(__AVX512F__)
            if (use_simd) {
                // peel to the next 8-boundary, then run full vectors to the
                // padded end; if the peel exhausts the real sources first,
                // the trailing scalar loop below is a no-op
                const std::size_t vec_start = std::min((s + 7) / 8 * 8, P);
                for (; s < vec_start && s < n; ++s)
                    pair_update_scalar(act, r, s, eps2, tgt, acc.data());
                if (s == vec_start && vec_start < P) {
                    pair_update_avx512(act, r, vec_start, eps2, tgt, acc.data());
                    s = P;
                }
            }
#else
            (void)use_simd;
#endif
            for (; s < n; ++s) pair_update_scalar(act, r, s, eps2, tgt, acc.data());
            for (int k = 0; k < 9; ++k) acc[static_cast<std::size_t>(k) * P + r] += tgt[k];
        }
    }
    // merge worker images in worker order
    for (const auto& acc : images) {
        if (acc.empty()) continue;
        for (int k = 0; k < 9; ++k) {
            const double* src = acc.data() + static_cast<std::size_t>(k) * P;
            double* dst = out[static_cast<std::size_t>(k)].data();
            for (std::size_t i = 0; i < n; ++i) dst[i] += src[i];
        }
    }
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Public assemblers
// ---------------------------------------------------------------------------

namespace detail {

inline bool check_mass_or_zero(const DistributionGrid& f) {
    const double mass = f.mass();
    if (mass > 0.0) return true;
    bool all_zero = true;
    for (double v : f.values)
        if (v != 0.0) { all_zero = false; break; }
    if (all_zero) return false;  // zero field by linearity
    throw EmptyDistribution("assembly: distribution has non-positive mass");
}

}  // namespace detail

/**
 * Fused assembly of a^{ij} and the conservative drift b^{i} with the
 * regularized kernel (eps > 0), or the exact kernel with excluded diagonal
 * and one-cell correction (eps == 0, diagnostics). Nodes outside `act`
 * (default: all nodes) are left at zero.
 */
inline CoefficientField assemble_coefficients(const DistributionGrid& f, double eps,
                                              const ActiveSet* act = nullptr,
                                              bool use_simd = true) {
    if (eps < 0.0) throw ConfigError("assembly: eps must be >= 0");
    CoefficientField out(f.geom);
    if (!detail::check_mass_or_zero(f)) return out;
    ActiveSet local;
    if (!act) {
        local = full_active_set(f);
        act = &local;
    }
    std::array<std::vector<double>, 9> sums;
    detail::pair_sweep_ab(*act, eps * eps, use_simd, sums);
    const double h3 = f.geom.cell_volume();
    const std::size_t n = act->count;
#ifdef _OPENMP
#pragma omp parallel for schedule(static) num_threads(max_threads())
#endif
    for (std::int64_t ss = 0; ss < static_cast<std::int64_t>(n); ++ss) {
        const std::size_t s = static_cast<std::size_t>(ss);
        const std::size_t node = act->idx[s];
        SymMat3 am{h3 * sums[0][s], h3 * sums[1][s], h3 * sums[2][s],
                   h3 * sums[3][s], h3 * sums[4][s], h3 * sums[5][s]};
        Vec3 bm{h3 * sums[6][s], h3 * sums[7][s], h3 * sums[8][s]};
        const Momentum m = f.geom.momentum_at(node);
        const double fp = f.values[node];
        const Vec3 dfp{act->dfx[s], act->dfy[s], act->dfz[s]};
        const SymMat3 diag = detail::diag_cell_matrix(m, eps, f.geom.h());
        am += diag * fp;
        bm += -1.0 * diag.apply(dfp);
        out.a[0][node] = am.xx;
        out.a[1][node] = am.yy;
        out.a[2][node] = am.zz;
        out.a[3][node] = am.xy;
        out.a[4][node] = am.xz;
        out.a[5][node] = am.yz;
        out.b[0][node] = bm.x;
        out.b[1][node] = bm.y;
        out.b[2][node] = bm.z;
    }
    return out;
}

/** a^{ij}(f) alone; see assemble_coefficients. */
inline CoefficientField assemble_a(const DistributionGrid& f, double eps,
                                   const ActiveSet* act = nullptr) {
    return assemble_coefficients(f, eps, act);
}

/**
 * Conservative-form drift moment, the literal midpoint sum of the kernel
 * derivative: b^{i}(f)(p) = h^3 sum_q 2 Lambda_eps ((rho+1) p - q) f(q).
 * The diagonal term vanishes identically ((rho+1) p - q = 0 at q = p).
 * For diagnostics and cross-checks; the solver uses the by-parts drift from
 * assemble_coefficients, which carries the same continuum field without
 * putting the midpoint rule on a second-order singularity.
 */
inline std::array<std::vector<double>, 3> assemble_b_conservative(const DistributionGrid& f,
                                                                  double eps) {
    std::array<std::vector<double>, 3> out;
    const std::size_t N = f.size();
    for (auto& v : out) v.assign(N, 0.0);
    if (!detail::check_mass_or_zero(f)) return out;
    const ActiveSet act = full_active_set(f);
    const std::size_t n = act.count;
    const double eps2 = eps * eps;
    const int nt = max_threads();
    std::vector<std::vector<double>> images(static_cast<std::size_t>(nt));
#ifdef _OPENMP
#pragma omp parallel num_threads(nt)
#endif
    {
#ifdef _OPENMP
        const int worker = omp_get_thread_num();
        const int workers = omp_get_num_threads();
#else
        const int worker = 0;
        const int workers = 1;
#endif
        auto& acc = images[static_cast<std::size_t>(worker)];
        acc.assign(3 * n, 0.0);
        for (std::size_t r = 0; r < n; ++r) {
            if (!detail::row_owned(r, worker, workers)) continue;
            const double pxr = act.px[r], pyr = act.py[r], pzr = act.pz[r], p0r = act.p0[r];
            double t0 = 0, t1 = 0, t2 = 0;
            for (std::size_t s = r + 1; s < n; ++s) {
                const double dx = pxr - act.px[s], dy = pyr - act.py[s], dz = pzr - act.pz[s];
                const double pq = pxr * act.px[s] + pyr * act.py[s] + pzr * act.pz[s];
                const double p0q0 = p0r * act.p0[s];
                const double cx = pyr * dz - pzr * dy;
                const double cy = pzr * dx - pxr * dz;
                const double cz = pxr * dy - pyr * dx;
                const double num = dx * dx + dy * dy + dz * dz + cx * cx + cy * cy + cz * cz;
                const double rho = num / (p0q0 + pq + 1.0);
                const double e = rho + 1.0;
                const double tr = rho * (rho + 2.0);
                const double w2 = 2.0 * e * e / (p0q0 * std::sqrt(tr + eps2) * tr);
                t0 += w2 * act.fv[s] * (e * pxr - act.px[s]);
                t1 += w2 * act.fv[s] * (e * pyr - act.py[s]);
                t2 += w2 * act.fv[s] * (e * pzr - act.pz[s]);
                acc[0 * n + s] += w2 * act.fv[r] * (e * act.px[s] - pxr);
                acc[1 * n + s] += w2 * act.fv[r] * (e * act.py[s] - pyr);
                acc[2 * n + s] += w2 * act.fv[r] * (e * act.pz[s] - pzr);
            }
            acc[0 * n + r] += t0;
            acc[1 * n + r] += t1;
            acc[2 * n + r] += t2;
        }
    }
    const double h3 = f.geom.cell_volume();
    for (const auto& acc : images) {
        if (acc.empty()) continue;
        for (int k = 0; k < 3; ++k)
            for (std::size_t i = 0; i < n; ++i)
                out[static_cast<std::size_t>(k)][act.idx[i]] +=
                    h3 * acc[static_cast<std::size_t>(k) * n + i];
    }
    return out;
}

/**
 * Non-conservative drift b^{j}(f) = 2 h^3 sum_{q != p} Lambda rho (p_j + q_j) f(q).
 * Diagnostics only; the diagonal is excluded and no cell correction applies.
 */
inline std::array<std::vector<double>, 3> assemble_b_nonconservative(const DistributionGrid& f) {
    std::array<std::vector<double>, 3> out;
    const std::size_t N = f.size();
    for (auto& v : out) v.assign(N, 0.0);
    if (!detail::check_mass_or_zero(f)) return out;
    const ActiveSet act = full_active_set(f);
    const std::size_t n = act.count;
    const int nt = max_threads();
    std::vector<std::vector<double>> images(static_cast<std::size_t>(nt));
#ifdef _OPENMP
#pragma omp parallel num_threads(nt)
#endif
    {
#ifdef _OPENMP
        const int worker = omp_get_thread_num();
        const int workers = omp_get_num_threads();
#else
        const int worker = 0;
        const int workers = 1;
#endif
        auto& acc = images[static_cast<std::size_t>(worker)];
        acc.assign(3 * n, 0.0);
        for (std::size_t r = 0; r < n; ++r) {
            if (!detail::row_owned(r, worker, workers)) continue;
            const Momentum mp = f.geom.momentum_at(act.idx[r]);
            double t0 = 0, t1 = 0, t2 = 0;
            for (std::size_t s = r + 1; s < n; ++s) {
                const Momentum mq = f.geom.momentum_at(act.idx[s]);
                const auto sc = detail::pair_scalars(mp, mq);
                if (sc.taurho < kDegenerateTauRho) continue;
                const double e = sc.rho + 1.0;
                const double lam = e * e / (sc.p0q0 * sc.taurho * std::sqrt(sc.taurho));
                const double g = 2.0 * lam * sc.rho;
                const Vec3 v = mp.p + mq.p;
                t0 += g * act.fv[s] * v.x;
                t1 += g * act.fv[s] * v.y;
                t2 += g * act.fv[s] * v.z;
                acc[0 * n + s] += g * act.fv[r] * v.x;
                acc[1 * n + s] += g * act.fv[r] * v.y;
                acc[2 * n + s] += g * act.fv[r] * v.z;
            }
            acc[0 * n + r] += t0;
            acc[1 * n + r] += t1;
            acc[2 * n + r] += t2;
        }
    }
    const double h3 = f.geom.cell_volume();
    for (const auto& acc : images) {
        if (acc.empty()) continue;
        for (int k = 0; k < 3; ++k)
            for (std::size_t i = 0; i < n; ++i)
                out[static_cast<std::size_t>(k)][act.idx[i]] +=
                    h3 * acc[static_cast<std::size_t>(k) * n + i];
    }
    return out;
}

/**
 * c(f)(p) = 4 h^3 sum_{q != p} (rho+1) / (p0 q0 sqrt(rho tau)) f(q)
 *         + one-cell correction + kappa(p) f(p).
 */
inline std::vector<double> assemble_c(const DistributionGrid& f) {
    const std::size_t N = f.size();
    std::vector<double> out(N, 0.0);
    if (!detail::check_mass_or_zero(f)) return out;
    const ActiveSet act = full_active_set(f);
    const std::size_t n = act.count;
    const int nt = max_threads();
    std::vector<std::vector<double>> images(static_cast<std::size_t>(nt));
#ifdef _OPENMP
#pragma omp parallel num_threads(nt)
#endif
    {
#ifdef _OPENMP
        const int worker = omp_get_thread_num();
        const int workers = omp_get_num_threads();
#else
        const int worker = 0;
        const int workers = 1;
#endif
        auto& acc = images[static_cast<std::size_t>(worker)];
        acc.assign(n, 0.0);
        for (std::size_t r = 0; r < n; ++r) {
            if (!detail::row_owned(r, worker, workers)) continue;
            double t = 0.0;
            const double pxr = act.px[r], pyr = act.py[r], pzr = act.pz[r], p0r = act.p0[r];
            for (std::size_t s = r + 1; s < n; ++s) {
                const double dx = pxr - act.px[s], dy = pyr - act.py[s], dz = pzr - act.pz[s];
                const double pq = pxr * act.px[s] + pyr * act.py[s] + pzr * act.pz[s];
                const double p0q0 = p0r * act.p0[s];
                const double cx = pyr * dz - pzr * dy;
                const double cy = pzr * dx - pxr * dz;
                const double cz = pxr * dy - pyr * dx;
                const double num = dx * dx + dy * dy + dz * dz + cx * cx + cy * cy + cz * cz;
                const double rho = num / (p0q0 + pq + 1.0);
                const double g = 4.0 * (rho + 1.0) / (p0q0 * std::sqrt(rho * (rho + 2.0)));
                t += g * act.fv[s];
                acc[s] += g * act.fv[r];
            }
            acc[r] += t;
        }
    }
    const double h3 = f.geom.cell_volume();
    // one-cell correction: the 1/|v| model integrated over the cell sphere
    const double rc = kCellRadiusFactor * f.geom.h();
    const double cell_inv_r = 2.0 * M_PI * rc * rc;
    std::vector<double> sums(n, 0.0);
    for (const auto& acc : images) {
        if (acc.empty()) continue;
        for (std::size_t i = 0; i < n; ++i) sums[i] += acc[i];
    }
#ifdef _OPENMP
#pragma omp parallel for schedule(static) num_threads(max_threads())
#endif
    for (std::int64_t ss = 0; ss < static_cast<std::int64_t>(n); ++ss) {
        const std::size_t s = static_cast<std::size_t>(ss);
        const std::size_t node = act.idx[s];
        const Momentum m = f.geom.momentum_at(node);
        const double fp = f.values[node];
        double v = h3 * sums[s];
        v += fp * (4.0 / (m.p0 * m.p0)) * diagonal_inv_sqrt_gamma(m) * cell_inv_r;
        v += kappa(m) * fp;
        out[node] = v;
    }
    return out;
}

}  // namespace rlandau

#endif  // RLANDAU_COEFF_HPP
