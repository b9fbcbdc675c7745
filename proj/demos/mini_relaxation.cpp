/** Two-bump relaxation on a small grid, printing H(t) and the moments. */
#include <cstdio>

#include "rlandau/run.hpp"
#include "rlandau/scenarios.hpp"

int main() {
    using namespace rlandau;
    SolverConfig cfg;
    cfg.radius = 5.0;
    cfg.n_per_axis = 15;
    cfg.eps = 1e-2;
    cfg.t_end = 0.2;
    const DistributionGrid f0 = two_bump(cfg.geometry());
    RunSummary summary;
    const auto traj = run(f0, cfg, 5, &summary);
    std::printf("%-10s %-14s %-14s %-14s\n", "t", "H", "D", "mass");
    for (const auto& r : traj) {
        std::printf("%-10.4f %-14.8f %-14.6e %-14.10f\n", r.t, r.entropy, r.dissipation, r.mass);
    }
    std::printf("steps=%ld mass_err=%.2e\n", summary.steps, summary.mass_error_rel);
    return 0;
}
