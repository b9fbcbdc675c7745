/**
 * Trajectory driver: integrates a density to t_end, sampling the full
 * diagnostics record on a fixed step stride, and verifies the structural
 * identities along the way (exact mass conservation, entropy monotonicity,
 * and the first-order energy-drift prediction drift ~ t * eps * mass).
 */
#ifndef RLANDAU_RUN_HPP
#define RLANDAU_RUN_HPP

#include <functional>
#include <vector>

#include "rlandau/diagnostics.hpp"
#include "rlandau/solver.hpp"

namespace rlandau {

struct RunSummary {
    double mass_error_rel = 0.0;        // max |m(t) - m(0)| / m(0)
    double energy_drift = 0.0;          // E(T) - E(0)
    double energy_drift_predicted = 0.0;  // T * eps * m(0)
    double energy_identity_rel = 0.0;   // |drift - predicted| / E(0)
    double max_entropy_increase = 0.0;  // max over consecutive samples
    bool entropy_monotone = true;       // within tau_H = 1e-8
    double floor_entropy = 0.0;         // h^3 sum f log f over floored nodes at t = 0
    long steps = 0;
    long rejected = 0;
};

/** Tolerances of the along-the-run verification. */
inline constexpr double kMassTolRel = 1e-12;
inline constexpr double kEntropyIncreaseTol = 1e-8;   // tau_H
inline constexpr double kEnergyIdentityTolRel = 5e-3; // tau_E, relative to E(0)

using SampleHook = std::function<void(const DiagnosticsRecord&, const DistributionGrid&)>;

/**
 * Integrate f0 to cfg.t_end. Samples (including t = 0 and the final state)
 * are appended to the returned trajectory and passed to `hook` when set.
 * Throws DiagnosticsFailure when the entropy record increases by more than
 * tau_H between samples. Initial data must be nonnegative with positive
 * mass; the mollification floor is applied before stepping.
 */
inline std::vector<DiagnosticsRecord> run(const DistributionGrid& f0, const SolverConfig& cfg,
                                          int diag_stride, RunSummary* summary = nullptr,
                                          const SampleHook& hook = nullptr) {
    cfg.validate();
    if (diag_stride < 1) throw ConfigError("run: diag_stride must be >= 1");
    for (double v : f0.values)
        if (v < 0.0) throw NonpositiveDensity("run: initial data must be nonnegative");

    SolverState state;
    state.f = f0;
    const double fmax_before = state.f.max_value();
    mollify_floor(state.f);
    if (!(state.f.mass() > 0.0)) throw EmptyDistribution("run: initial mass must be positive");

    RunSummary local;
    RunSummary& sum = summary ? *summary : local;
    // entropy carried by the floor itself, reported once
    if (fmax_before > 0.0) {
        const double h3 = state.f.geom.cell_volume();
        double fe = 0.0;
        for (std::size_t i = 0; i < state.f.size(); ++i) {
            if (f0.values[i] < state.f.values[i]) {
                fe += state.f.values[i] * std::log(state.f.values[i]);
            }
        }
        sum.floor_entropy = h3 * fe;
    }

    // The entropy functionals are evaluated on the floored density (the
    // floor keeps log f finite; its contribution is reported once below),
    // while min_f records the true state including tolerated transients.
    const std::vector<double> floor_values = [&] {
        std::vector<double> v(state.f.size());
        const double scale = 1e-12 * state.f.max_value();
        for (std::size_t i = 0; i < v.size(); ++i) {
            v[i] = scale * std::exp(1.0 - state.f.geom.momentum_at(i).p0);
        }
        return v;
    }();

    std::vector<DiagnosticsRecord> traj;
    DistributionGrid floored(state.f.geom);
    const auto sample = [&](double dt_last) {
        floored.values = state.f.values;
        for (std::size_t i = 0; i < floored.size(); ++i) {
            floored.values[i] = std::max(floored.values[i], floor_values[i]);
        }
        DiagnosticsRecord rec = sample_diagnostics(floored, cfg.eps, state.t, dt_last);
        rec.min_f = state.f.min_value();
        if (!traj.empty()) {
            const DiagnosticsRecord& prev = traj.back();
            const double m0 = traj.front().mass;
            sum.mass_error_rel =
                std::max(sum.mass_error_rel, std::fabs(rec.mass - m0) / std::fabs(m0));
            const double dH = rec.entropy - prev.entropy;
            sum.max_entropy_increase = std::max(sum.max_entropy_increase, dH);
            if (dH > kEntropyIncreaseTol) {
                sum.entropy_monotone = false;
                throw DiagnosticsFailure("run: entropy increased between samples");
            }
        }
        traj.push_back(rec);
        if (hook) hook(rec, state.f);
    };

    sample(0.0);
    while (state.t < cfg.t_end) {
        step(state, cfg);
        if (state.step_count % diag_stride == 0 || state.t >= cfg.t_end) {
            sample(state.dt_last);
        }
    }
    sum.steps = state.step_count;
    sum.rejected = state.rejected_steps;
    const DiagnosticsRecord& first = traj.front();
    const DiagnosticsRecord& last = traj.back();
    sum.energy_drift = last.energy - first.energy;
    sum.energy_drift_predicted = (last.t - first.t) * cfg.eps * first.mass;
    sum.energy_identity_rel =
        std::fabs(sum.energy_drift - sum.energy_drift_predicted) / std::fabs(first.energy);
    return traj;
}

}  // namespace rlandau

#endif  // RLANDAU_RUN_HPP
