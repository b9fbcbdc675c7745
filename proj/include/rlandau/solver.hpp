/**
 * Time integration of the eps-regularized homogeneous equation
 *
 *     df/dt = d/dp_i ( a_eps^{ij}(f) d/dp_j f + b_eps^{i}(f) f + eps d/dp_i f )
 *
 * on the truncated momentum box, in finite-volume flux form with zero-flux
 * (reflecting) boundaries. Face coefficients are arithmetic averages of the
 * adjacent nodes, in-face gradients are centered differences, and the update
 * telescopes over faces, so the discrete mass is conserved to round-off at
 * every accepted step.
 *
 * Coefficients are assembled from the current density once per step and
 * frozen across the step (both stages for rk2). The time step obeys
 *
 *     dt <= dt_safety * h^2 / (2 (3 max|a| + 3 eps)),
 *
 * and steps driving the density below -negativity_tol * max(f) are rejected
 * and retried at dt/2 until the step underflows (BlowUp).
 */
#ifndef RLANDAU_SOLVER_HPP
#define RLANDAU_SOLVER_HPP

#include <cstdio>
#include <cstring>
#include <string>
#include <vector>

#include "rlandau/coeff.hpp"
#include "rlandau/common.hpp"
#include "rlandau/grid.hpp"

namespace rlandau {

enum class Scheme { ExplicitEuler, Rk2 };

struct SolverConfig {
    double eps = 1e-3;        // regularization, > 0
    double radius = 8.0;      // grid half-width; >= 3 covers the equilibrium bulk
    int n_per_axis = 41;      // odd
    double t_end = 0.5;
    double dt_init = 1.0;     // cap on the very first (and any) step
    double dt_safety = 0.9;   // in (0,1)
    Scheme scheme = Scheme::ExplicitEuler;
    double negativity_tol = 1e-12;
    double active_threshold = 1e-10;  // relative source/target cut for assembly

    void validate() const {
        if (!(eps > 0.0)) throw ConfigError("solver: eps must be > 0");
        if (!(radius >= 3.0)) throw ConfigError("solver: radius must be >= 3");
        if (n_per_axis < 3 || n_per_axis % 2 == 0)
            throw ConfigError("solver: n_per_axis must be odd and >= 3");
        if (!(t_end >= 0.0)) throw ConfigError("solver: t_end must be >= 0");
        if (!(dt_init > 0.0)) throw ConfigError("solver: dt_init must be > 0");
        if (!(dt_safety > 0.0 && dt_safety < 1.0))
            throw ConfigError("solver: dt_safety must be in (0,1)");
        if (negativity_tol < 0.0) throw ConfigError("solver: negativity_tol must be >= 0");
    }
    GridGeometry geometry() const { return GridGeometry(radius, n_per_axis); }
};

struct SolverState {
    double t = 0.0;
    DistributionGrid f;
    CoefficientField coeffs;  // frozen at step start
    long step_count = 0;
    double dt_last = 0.0;
    long rejected_steps = 0;
};

namespace detail {

/**
 * Exponential-fitting weight for the drift face value: with the face Peclet
 * number w = B h / D, the weight of the lower cell in b*f is
 * delta(w) = 1/w - 1/(e^w - 1), which reduces to the arithmetic average
 * (1/2) as w -> 0 and makes the face flux vanish exactly on the two-point
 * steady profile f_R/f_L = e^{-w}. Keeps second order and gives the drift
 * term a sign structure compatible with positivity under the CFL bound.
 */
inline double drift_face_weight(double w) {
    const double aw = std::fabs(w);
    if (aw < 1e-4) {
        return 0.5 - w / 12.0 + w * w * w / 720.0;
    }
    if (w > 40.0) return 1.0 / w;
    if (w < -40.0) return 1.0 + 1.0 / w;
    return 1.0 / w - 1.0 / std::expm1(w);
}

/**
 * Monotonized-central limited slope: equals the centered difference in
 * smooth monotone regions (second order) and is reduced only at extrema or
 * under-resolved fronts, where an unlimited centered cross-gradient would
 * overshoot several orders of local magnitude.
 */
inline double mc_slope(double fwd, double bwd) {
    if (fwd * bwd <= 0.0) return 0.0;
    const double centered = 0.5 * (fwd + bwd);
    const double lim = 2.0 * std::min(std::fabs(fwd), std::fabs(bwd));
    return std::copysign(std::min(std::fabs(centered), lim), centered);
}

/**
 * Divergence of the face fluxes for frozen coefficients:
 * out[m] = sum_i (F_i(upper face of m) - F_i(lower face of m)) / h,
 * F_i = a^{ij} df/dp_j + b^i f + eps df/dp_i at the face, with a and b
 * arithmetic face averages, the in-face gradient exact centered, the drift
 * face value exponential-fitted and the cross-gradients MC-limited node
 * slopes averaged to the face (one-sided at the box boundary).
 */
inline void flux_divergence(const DistributionGrid& f, const CoefficientField& cf,
                            double eps, std::vector<double>& out) {
    const GridGeometry& g = f.geom;
    const int n = g.n;
    const double h = g.h();
    const double inv_h = 1.0 / h;
    const std::size_t N = g.size();
    const std::size_t stride[3] = {static_cast<std::size_t>(n) * n,
                                   static_cast<std::size_t>(n), 1};
    std::vector<double> grad[3];
    for (int ax = 0; ax < 3; ++ax) grad[ax].assign(N, 0.0);
#ifdef _OPENMP
#pragma omp parallel for schedule(static) num_threads(max_threads())
#endif
    for (std::int64_t mm = 0; mm < static_cast<std::int64_t>(N); ++mm) {
        const std::size_t m = static_cast<std::size_t>(mm);
        int c[3];
        g.unpack(m, c[0], c[1], c[2]);
        for (int ax = 0; ax < 3; ++ax) {
            const std::size_t st = stride[ax];
            if (c[ax] == 0 || c[ax] == n - 1) {
                // wall ring: a one-sided slope here is inconsistent with the
                // zero-flux balance and pushes the discrete steady state of
                // wall cells negative through the cross terms; drop it
                grad[ax][m] = 0.0;
            } else {
                grad[ax][m] = mc_slope((f.values[m + st] - f.values[m]) * inv_h,
                                       (f.values[m] - f.values[m - st]) * inv_h);
            }
        }
    }
    out.assign(N, 0.0);
    // accumulate per-axis face fluxes; within an axis, faces of a given node
    // line are visited by a single worker, so writes do not race
    for (int ax = 0; ax < 3; ++ax) {
        const std::size_t st = stride[ax];
        const int a1 = (ax + 1) % 3, a2 = (ax + 2) % 3;
        const int s1 = ax + a1;  // off-diagonal component: 1->xy, 2->xz, 3->yz
        const int comp1 = s1 == 1 ? 3 : (s1 == 2 ? 4 : 5);
        const int s2 = ax + a2;
        const int comp2 = s2 == 1 ? 3 : (s2 == 2 ? 4 : 5);
#ifdef _OPENMP
#pragma omp parallel for schedule(static) collapse(2) num_threads(max_threads())
#endif
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < n; ++j) {
                int c[3] = {0, 0, 0};
                c[a1] = i;
                c[a2] = j;
                // walk the line along ax; face between k and k+1
                for (int k = 0; k + 1 < n; ++k) {
                    c[ax] = k;
                    const std::size_t m = g.index(c[0], c[1], c[2]);
                    const std::size_t mp = m + st;
                    const double df_ax = (f.values[mp] - f.values[m]) * inv_h;
                    const double diag = std::max(0.5 * (cf.a[ax][m] + cf.a[ax][mp]), 0.0) + eps;
                    double flux = diag * df_ax;
                    {
                        const double aij = 0.5 * (cf.a[comp1][m] + cf.a[comp1][mp]);
                        flux += aij * 0.5 * (grad[a1][m] + grad[a1][mp]);
                    }
                    {
                        const double aij = 0.5 * (cf.a[comp2][m] + cf.a[comp2][mp]);
                        flux += aij * 0.5 * (grad[a2][m] + grad[a2][mp]);
                    }
                    const double bface = 0.5 * (cf.b[ax][m] + cf.b[ax][mp]);
                    const double delta = drift_face_weight(bface * h / diag);
                    flux += bface * (delta * f.values[m] + (1.0 - delta) * f.values[mp]);
                    out[m] += flux * inv_h;
                    out[mp] -= flux * inv_h;
                }
            }
        }
    }
}

}  // namespace detail

/** Stability-limited step size for frozen coefficients. */
inline double stable_dt(const SolverConfig& cfg, const CoefficientField& cf) {
    const double h = cfg.geometry().h();
    const double amax = cf.max_a_abs();
    return cfg.dt_safety * h * h / (2.0 * (3.0 * amax + 3.0 * cfg.eps));
}

namespace detail {

/**
 * Negativity-guarded advance: applies `attempt(dt)` (which must return the
 * min of the candidate state) and halves dt until the candidate is
 * acceptable. Returns the accepted dt; throws BlowUp when dt underflows
 * below 1e-12 * dt_init. `commit()` is called once for the accepted dt.
 */
template <class Attempt, class Commit>
double advance_with_retries(double dt, double dt_init, double neg_floor,
                            long& rejected, Attempt&& attempt, Commit&& commit) {
    for (;;) {
        if (dt < 1e-12 * dt_init) {
            throw BlowUp("solver: time step underflow during negativity retries");
        }
        const double min_candidate = attempt(dt);
        if (min_candidate >= neg_floor) {
            commit();
            return dt;
        }
        ++rejected;
        dt *= 0.5;
    }
}

}  // namespace detail

/**
 * One accepted step. Assembles coefficients from the current density,
 * freezes them, picks the stability-limited dt (capped by dt_init and the
 * remaining time), and advances with negativity retries.
 */
inline void step(SolverState& state, const SolverConfig& cfg) {
    cfg.validate();
    const GridGeometry g = state.f.geom;
    const std::size_t N = g.size();
    ActiveSet act = build_active_set(state.f, cfg.active_threshold, 2);
    state.coeffs = assemble_coefficients(state.f, cfg.eps, &act);
    double dt = std::min(stable_dt(cfg, state.coeffs), cfg.dt_init);
    if (state.t + dt > cfg.t_end) dt = cfg.t_end - state.t;
    if (dt <= 0.0) return;

    std::vector<double> div1, div2, cand, mid;
    detail::flux_divergence(state.f, state.coeffs, cfg.eps, div1);

    const double fmax = state.f.max_value();
    const double neg_floor = -cfg.negativity_tol * std::max(fmax, 0.0);

    const auto apply_euler = [&](double dtv) {
        cand.resize(N);
        double mn = 0.0;
#ifdef _OPENMP
#pragma omp parallel for schedule(static) reduction(min : mn) num_threads(max_threads())
#endif
        for (std::int64_t i = 0; i < static_cast<std::int64_t>(N); ++i) {
            const double v = state.f.values[static_cast<std::size_t>(i)] +
                             dtv * div1[static_cast<std::size_t>(i)];
            cand[static_cast<std::size_t>(i)] = v;
            mn = std::min(mn, v);
        }
        return mn;
    };
    const auto apply_rk2 = [&](double dtv) {
        // Heun with coefficients frozen at the step start
        mid.resize(N);
        for (std::size_t i = 0; i < N; ++i) mid[i] = state.f.values[i] + dtv * div1[i];
        DistributionGrid fmid(g);
        fmid.values = mid;
        detail::flux_divergence(fmid, state.coeffs, cfg.eps, div2);
        cand.resize(N);
        double mn = 0.0;
#ifdef _OPENMP
#pragma omp parallel for schedule(static) reduction(min : mn) num_threads(max_threads())
#endif
        for (std::int64_t i = 0; i < static_cast<std::int64_t>(N); ++i) {
            const std::size_t ii = static_cast<std::size_t>(i);
            const double v = state.f.values[ii] + 0.5 * dtv * (div1[ii] + div2[ii]);
            cand[ii] = v;
            mn = std::min(mn, v);
        }
        return mn;
    };

    double accepted;
    if (cfg.scheme == Scheme::ExplicitEuler) {
        accepted = detail::advance_with_retries(dt, cfg.dt_init, neg_floor, state.rejected_steps,
                                                apply_euler, [&] { state.f.values.swap(cand); });
    } else {
        accepted = detail::advance_with_retries(dt, cfg.dt_init, neg_floor, state.rejected_steps,
                                                apply_rk2, [&] { state.f.values.swap(cand); });
    }
    state.t += accepted;
    state.dt_last = accepted;
    ++state.step_count;
}

// ---------------------------------------------------------------------------
// Checkpoints
// ---------------------------------------------------------------------------

struct Checkpoint {
    GridGeometry geom;
    double t = 0.0;
    double eps = 0.0;
    std::vector<double> values;
};

inline void write_checkpoint(const std::string& path, const Checkpoint& cp) {
    std::FILE* fp = std::fopen(path.c_str(), "wb");
    if (!fp) throw CheckpointError("checkpoint: cannot open " + path + " for writing");
    const char magic[5] = {'R', 'L', 'N', 'D', '1'};
    std::uint32_t n = static_cast<std::uint32_t>(cp.geom.n);
    bool ok = std::fwrite(magic, 1, 5, fp) == 5;
    ok = ok && std::fwrite(&n, sizeof n, 1, fp) == 1;
    ok = ok && std::fwrite(&cp.geom.radius, sizeof(double), 1, fp) == 1;
    ok = ok && std::fwrite(&cp.t, sizeof(double), 1, fp) == 1;
    ok = ok && std::fwrite(&cp.eps, sizeof(double), 1, fp) == 1;
    ok = ok && std::fwrite(cp.values.data(), sizeof(double), cp.values.size(), fp) ==
                   cp.values.size();
    std::fclose(fp);
    if (!ok) throw CheckpointError("checkpoint: short write to " + path);
}

inline Checkpoint read_checkpoint(const std::string& path) {
    std::FILE* fp = std::fopen(path.c_str(), "rb");
    if (!fp) throw CheckpointError("checkpoint: cannot open " + path);
    char magic[5];
    std::uint32_t n = 0;
    double radius = 0.0;
    Checkpoint cp;
    bool ok = std::fread(magic, 1, 5, fp) == 5 && std::memcmp(magic, "RLND1", 5) == 0;
    ok = ok && std::fread(&n, sizeof n, 1, fp) == 1;
    ok = ok && std::fread(&radius, sizeof(double), 1, fp) == 1;
    ok = ok && std::fread(&cp.t, sizeof(double), 1, fp) == 1;
    ok = ok && std::fread(&cp.eps, sizeof(double), 1, fp) == 1;
    if (ok) {
        try {
            cp.geom = GridGeometry(radius, static_cast<int>(n));
        } catch (const ConfigError&) {
            ok = false;
        }
    }
    if (ok) {
        cp.values.resize(cp.geom.size());
        ok = std::fread(cp.values.data(), sizeof(double), cp.values.size(), fp) ==
             cp.values.size();
        // trailing bytes mean a geometry/payload mismatch
        if (ok) {
            char extra;
            ok = std::fread(&extra, 1, 1, fp) == 0;
        }
    }
    std::fclose(fp);
    if (!ok) throw CheckpointError("checkpoint: corrupt or truncated file " + path);
    return cp;
}

}  // namespace rlandau

#endif  // RLANDAU_SOLVER_HPP
