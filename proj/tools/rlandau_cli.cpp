/**
 * Command-line front end.
 *
 *   rlandau verify  [--seed N] [--samples N]      randomized kernel identity suite
 *   rlandau run     --config PATH [--output DIR]  integrate a scenario, write CSV + checkpoints
 *   rlandau certify --checkpoint PATH             determinant certificate + entropy audit
 *
 * Exit codes: 0 success, 1 configuration / usage error, 2 rejected step
 * surfaced, 3 blow-up, 4 corrupt checkpoint. RLANDAU_THREADS caps the
 * worker count.
 */
#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "rlandau/config.hpp"
#include "rlandau/run.hpp"
#include "rlandau/scenarios.hpp"
#include "rlandau/verify.hpp"

namespace {

int cmd_verify(std::uint64_t seed, std::size_t samples) {
    if (samples == 0) {
        std::printf("warning: sample_count = 0, all checks pass vacuously\n");
    }
    const auto t0 = std::chrono::steady_clock::now();
    const auto results = rlandau::verify_kernel_identities(seed, samples);
    bool all_pass = true;
    for (const auto& c : results) {
        std::printf("%-36s %s  max_err=%.17g  tol=%.3g  samples=%zu\n", c.name.c_str(),
                    c.pass ? "PASS" : "FAIL", c.max_err, c.tol, c.samples);
        all_pass = all_pass && c.pass;
    }
    const double sec = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::fprintf(stderr, "verify: %zu samples in %.2f s\n", samples, sec);
    if (!all_pass) {
        for (const auto& c : results) {
            if (!c.pass) std::printf("failing check: %s\n", c.name.c_str());
        }
        return 1;
    }
    return 0;
}

rlandau::DistributionGrid build_initial(const rlandau::RunConfig& cfg) {
    const rlandau::GridGeometry geom = cfg.solver.geometry();
    switch (cfg.scenario) {
        case rlandau::Scenario::Equilibrium:
            return rlandau::juttner(geom);
        case rlandau::Scenario::TwoBump:
            return rlandau::two_bump(geom);
        case rlandau::Scenario::PerturbedJuttner:
            return rlandau::perturbed_juttner(geom);
        case rlandau::Scenario::CustomCheckpoint: {
            const rlandau::Checkpoint cp = rlandau::read_checkpoint(cfg.checkpoint_path);
            if (!(cp.geom == geom)) {
                throw rlandau::ConfigError("run: checkpoint geometry differs from config");
            }
            rlandau::DistributionGrid f(geom);
            f.values = cp.values;
            return f;
        }
    }
    throw rlandau::ConfigError("run: unknown scenario");
}

int cmd_run(const std::string& config_path, const std::string& output_override) {
    const rlandau::RunConfig cfg = rlandau::load_config(config_path);
    const std::string outdir = output_override.empty() ? cfg.output_dir : output_override;
    std::filesystem::create_directories(outdir);

    rlandau::DistributionGrid f0 = build_initial(cfg);
    std::ofstream csv(outdir + "/diagnostics.csv");
    if (!csv) throw rlandau::ConfigError("run: cannot write to " + outdir);
    csv << rlandau::csv_header() << "\n";

    int checkpoint_count = 0;
    const auto hook = [&](const rlandau::DiagnosticsRecord& rec,
                          const rlandau::DistributionGrid& f) {
        csv << rlandau::csv_row(rec) << "\n";
        rlandau::Checkpoint cp{f.geom, rec.t, cfg.solver.eps, f.values};
        char name[64];
        std::snprintf(name, sizeof name, "/checkpoint_%04d.rl", checkpoint_count++);
        rlandau::write_checkpoint(outdir + name, cp);
    };

    rlandau::RunSummary summary;
    const auto traj = rlandau::run(f0, cfg.solver, cfg.diag_stride, &summary, hook);

    std::printf("run: scenario=%s steps=%ld rejected=%ld samples=%zu\n",
                rlandau::to_string(cfg.scenario).c_str(), summary.steps, summary.rejected,
                traj.size());
    std::printf("  mass error (rel):            %.3e  [tol %.1e]\n", summary.mass_error_rel,
                rlandau::kMassTolRel);
    std::printf("  energy drift:                %.6e (predicted t*eps*mass = %.6e)\n",
                summary.energy_drift, summary.energy_drift_predicted);
    std::printf("  energy identity (rel E0):    %.3e  [tol %.1e]\n", summary.energy_identity_rel,
                rlandau::kEnergyIdentityTolRel);
    std::printf("  max entropy increase:        %.3e  [tol %.1e]  -> %s\n",
                summary.max_entropy_increase, rlandau::kEntropyIncreaseTol,
                summary.entropy_monotone ? "monotone" : "VIOLATED");
    std::printf("  entropy drift H(T)-H(0):     %.6e\n",
                traj.back().entropy - traj.front().entropy);
    std::printf("  floor entropy contribution:  %.3e\n", summary.floor_entropy);
    const bool ok = summary.mass_error_rel <= rlandau::kMassTolRel &&
                    summary.energy_identity_rel <= rlandau::kEnergyIdentityTolRel &&
                    summary.entropy_monotone;
    std::printf("run verdict: %s\n", ok ? "PASS" : "FAIL");
    return 0;
}

int cmd_certify(const std::string& checkpoint_path) {
    const rlandau::Checkpoint cp = rlandau::read_checkpoint(checkpoint_path);
    rlandau::DistributionGrid f(cp.geom);
    f.values = cp.values;
    rlandau::mollify_floor(f);

    const double hbar = rlandau::abs_entropy(f);
    const auto cert = rlandau::certificate_constants(f, hbar);
    std::printf("certificate constants (phi(r) = exp(-r)):\n");
    std::printf("  R    = %.17g\n", cert.R_cert);
    std::printf("  A    = %.17g\n", cert.A_cert);
    std::printf("  eps0 = %.17g\n", cert.eps0);
    std::printf("  eps1 = %.17g\n", cert.eps1);
    std::printf("  eps2 = %.17g\n", cert.eps2);
    std::printf("  eps3 = %.17g\n", cert.eps3);
    std::printf("  eps4 = %.17g\n", cert.eps4);
    std::printf("  lower bound = %.17g (log10 = %.4f)\n", cert.lower_bound,
                cert.log10_lower_bound);

    bool all_ok = true;
    for (int i = 0; i < 3; ++i) {
        for (int j = i + 1; j < 3; ++j) {
            const double d = rlandau::delta_phi(f, i, j);
            const bool ok = d >= cert.lower_bound;
            const double margin = d - cert.lower_bound;
            std::printf("  delta_phi(%d,%d) = %.17g  margin = %.6e  %s\n", i, j, d, margin,
                        ok ? "PASS" : "FAIL");
            if (d < 1e-30) {
                std::printf("    warning: near-singular Gram matrix; lemma hypotheses "
                            "strained (near-degenerate data)\n");
            }
            all_ok = all_ok && ok;
        }
    }

    const auto audit = rlandau::check_entropy_theorem(f, cp.eps > 0.0 ? cp.eps : 1e-3);
    std::printf("entropy-theorem audit:\n");
    std::printf("  fisher = %.17g\n", audit.fisher);
    std::printf("  dissipation = %.17g\n", audit.dissipation);
    std::printf("  C1 = %.6e  C2 = %.6e  bound = %.6e\n", audit.c1, audit.c2, audit.bound);
    std::printf("  margin = %.6e  %s%s\n", audit.margin, audit.pass ? "PASS" : "FAIL",
                audit.hypotheses_strained ? "  (hypotheses strained)" : "");
    all_ok = all_ok && audit.pass;
    std::printf("certify verdict: %s\n", all_ok ? "PASS" : "FAIL");
    return all_ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"relativistic Landau kernel library and solver"};
    app.require_subcommand(1);

    auto* verify = app.add_subcommand("verify", "randomized kernel identity suite");
    std::uint64_t seed = 1;
    std::size_t samples = 100000;
    verify->add_option("--seed", seed, "random seed");
    verify->add_option("--samples", samples, "number of momentum pairs");

    auto* runcmd = app.add_subcommand("run", "integrate a scenario from a config file");
    std::string config_path, output_override;
    runcmd->add_option("--config", config_path, "configuration file")->required();
    runcmd->add_option("--output", output_override, "override output_dir");

    auto* certify = app.add_subcommand("certify", "certificate report for a checkpoint");
    std::string checkpoint_path;
    certify->add_option("--checkpoint", checkpoint_path, "checkpoint file")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (verify->parsed()) return cmd_verify(seed, samples);
        if (runcmd->parsed()) return cmd_run(config_path, output_override);
        if (certify->parsed()) return cmd_certify(checkpoint_path);
    } catch (const rlandau::CheckpointError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 4;
    } catch (const rlandau::BlowUp& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 3;
    } catch (const rlandau::ConfigError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    } catch (const rlandau::Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 1;
}
