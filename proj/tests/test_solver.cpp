#include <catch2/catch.hpp>

#include <cstdio>
#include <filesystem>

#include "rlandau/run.hpp"
#include "rlandau/scenarios.hpp"
#include "rlandau/solver.hpp"

using namespace rlandau;

TEST_CASE("juttner grid") {
    SECTION("value at the origin is 1/(4 pi e)") {
        const GridGeometry g(4.0, 9);
        const DistributionGrid f = juttner(g);
        REQUIRE(f.values[g.index(4, 4, 4)] ==
                Approx(std::exp(-1.0) / (4.0 * M_PI)).epsilon(1e-14));
    }
    SECTION("ratio identity J(p)/J(q) = exp(q0 - p0)") {
        const GridGeometry g(4.0, 9);
        const DistributionGrid f = juttner(g);
        const std::size_t a = g.index(1, 2, 3), b = g.index(6, 4, 7);
        const double expected =
            std::exp(g.momentum_at(b).p0 - g.momentum_at(a).p0);
        REQUIRE(f.values[a] / f.values[b] == Approx(expected).epsilon(1e-12));
    }
    SECTION("discrete mass converges to the radial quadrature value") {
        // oracle: int_0^inf r^2 exp(-sqrt(1+r^2)) dr by small-step Simpson
        double oracle = 0.0;
        {
            const double hh = 1e-4;
            const auto fn = [](double r) { return r * r * std::exp(-std::sqrt(1.0 + r * r)); };
            for (double r = 0.0; r < 40.0; r += hh) {
                oracle += hh / 6.0 * (fn(r) + 4.0 * fn(r + 0.5 * hh) + fn(r + hh));
            }
        }
        double prev_err = 1e300;
        for (auto [radius, n] : {std::pair{6.0, 13}, {8.0, 21}, {10.0, 31}}) {
            const double mass = juttner(GridGeometry(radius, n)).mass();
            const double err = std::fabs(mass - oracle);
            REQUIRE(err < prev_err);
            prev_err = err;
        }
        REQUIRE(prev_err < 5e-3);
    }
}

TEST_CASE("stepping the zero state is a no-op") {
    SolverConfig cfg;
    cfg.radius = 3.0;
    cfg.n_per_axis = 7;
    cfg.eps = 0.05;
    cfg.t_end = 0.1;
    SolverState st;
    st.f = DistributionGrid(cfg.geometry());
    step(st, cfg);
    for (double v : st.f.values) REQUIRE(v == 0.0);
}

TEST_CASE("mass is conserved to round-off at every accepted step") {
    SolverConfig cfg;
    cfg.radius = 4.0;
    cfg.n_per_axis = 17;
    cfg.eps = 0.02;
    cfg.t_end = 1.0;
    DistributionGrid f0 = two_bump(cfg.geometry(), {1.0, 0.0, 0.0}, 0.8);
    mollify_floor(f0);
    SolverState st;
    st.f = f0;
    const double mass0 = st.f.mass();
    double prev = mass0;
    for (int k = 0; k < 25; ++k) {
        step(st, cfg);
        const double m = st.f.mass();
        REQUIRE(std::fabs(m - prev) <= 1e-14 * mass0);   // per accepted step
        REQUIRE(std::fabs(m - mass0) <= 1e-12 * mass0);  // along the run
        prev = m;
    }
    REQUIRE(st.step_count == 25);
}

TEST_CASE("equilibrium is a near-fixed point and tightens with resolution") {
    const auto drift_rate = [](int n, double eps) {
        SolverConfig cfg;
        cfg.radius = 4.0;
        cfg.n_per_axis = n;
        cfg.eps = eps;
        cfg.t_end = 1.0;
        DistributionGrid f0 = juttner(cfg.geometry());
        mollify_floor(f0);
        SolverState st;
        st.f = f0;
        step(st, cfg);
        double dmax = 0.0;
        for (std::size_t i = 0; i < st.f.size(); ++i)
            dmax = std::max(dmax, std::fabs(st.f.values[i] - f0.values[i]));
        return dmax / st.dt_last / f0.max_value();
    };
    const double coarse = drift_rate(9, 1e-2);
    const double fine = drift_rate(17, 1e-2);
    REQUIRE(fine < coarse);
    // shrinking the regularization cannot make the equilibrium drift worse
    const double small_eps = drift_rate(17, 1e-3);
    REQUIRE(small_eps <= 1.1 * fine);
    REQUIRE(fine < 0.3);  // near-fixed point at modest resolution
}

TEST_CASE("equilibrium flux residual shrinks under refinement") {
    // a grad J + b J cancels through the kernel null direction up to the
    // O(h^2) difference between the discrete and exact gradients
    const auto residual = [](int n) {
        const GridGeometry g(4.0, n);
        const DistributionGrid f = juttner(g);
        const CoefficientField cf = assemble_coefficients(f, 1e-3);
        const ActiveSet act = full_active_set(f);
        double num = 0.0, den = 0.0;  // density-weighted aggregate
        for (std::size_t s = 0; s < act.count; ++s) {
            const std::size_t i = act.idx[s];
            const Vec3 df{act.dfx[s], act.dfy[s], act.dfz[s]};
            const Vec3 r = cf.a_at(i).apply(df) + f.values[i] * cf.b_at(i);
            num += f.values[i] * r.norm();
            den += f.values[i] * (cf.a_at(i).apply(df).norm() +
                                  (f.values[i] * cf.b_at(i)).norm() + 1e-300);
        }
        return num / den;
    };
    const double coarse = residual(9);
    const double fine = residual(17);
    REQUIRE(fine < coarse);
    REQUIRE(fine < 0.04);
}

TEST_CASE("negativity retries halve the step and underflow throws") {
    long rejected = 0;
    SECTION("a persistent negative candidate blows up") {
        REQUIRE_THROWS_AS(
            detail::advance_with_retries(
                1.0, 1.0, 0.0, rejected, [](double) { return -1.0; }, [] {}),
            BlowUp);
        REQUIRE(rejected > 30);
    }
    SECTION("the step is halved until the candidate is acceptable") {
        bool committed = false;
        const double dt = detail::advance_with_retries(
            1.0, 1.0, -1e-12, rejected,
            [](double dtv) { return dtv > 0.2 ? -1.0 : 0.5; },
            [&] { committed = true; });
        REQUIRE(committed);
        REQUIRE(dt == Approx(0.125));
    }
}

TEST_CASE("checkpoint round trip is bit exact") {
    const GridGeometry g(3.0, 7);
    DistributionGrid f = perturbed_juttner(g);
    Checkpoint cp{g, 0.375, 1e-3, f.values};
    const std::string path = (std::filesystem::temp_directory_path() / "rl_test.ckpt").string();
    write_checkpoint(path, cp);
    const Checkpoint back = read_checkpoint(path);
    REQUIRE(back.geom == g);
    REQUIRE(back.t == cp.t);
    REQUIRE(back.eps == cp.eps);
    REQUIRE(back.values.size() == cp.values.size());
    for (std::size_t i = 0; i < cp.values.size(); ++i) {
        REQUIRE(back.values[i] == cp.values[i]);
    }
    std::filesystem::remove(path);
}

TEST_CASE("corrupt checkpoints are rejected") {
    const std::string path = (std::filesystem::temp_directory_path() / "rl_bad.ckpt").string();
    SECTION("wrong magic") {
        std::FILE* fp = std::fopen(path.c_str(), "wb");
        std::fwrite("BOGUS, not a checkpoint", 1, 23, fp);
        std::fclose(fp);
        REQUIRE_THROWS_AS(read_checkpoint(path), CheckpointError);
    }
    SECTION("truncated payload") {
        const GridGeometry g(3.0, 7);
        Checkpoint cp{g, 0.0, 1e-3, std::vector<double>(g.size(), 1.0)};
        write_checkpoint(path, cp);
        std::filesystem::resize_file(path, 64);
        REQUIRE_THROWS_AS(read_checkpoint(path), CheckpointError);
    }
    SECTION("missing file") {
        REQUIRE_THROWS_AS(read_checkpoint("/nonexistent/nowhere.ckpt"), CheckpointError);
    }
    std::filesystem::remove(path);
}

TEST_CASE("run enforces the trajectory contracts on a small relaxation") {
    SolverConfig cfg;
    cfg.radius = 4.0;
    cfg.n_per_axis = 17;
    cfg.eps = 5e-3;
    cfg.t_end = 0.4;
    const DistributionGrid f0 = two_bump(cfg.geometry(), {1.0, 0.0, 0.0}, 0.8);
    RunSummary summary;
    const auto traj = run(f0, cfg, 4, &summary);
    REQUIRE(traj.size() >= 3);
    REQUIRE(summary.mass_error_rel <= 1e-12);
    REQUIRE(summary.entropy_monotone);
    // strict decrease on non-equilibrium data
    REQUIRE(traj.back().entropy < traj.front().entropy - 1e-4);
    // dissipation positive on the way down
    REQUIRE(traj.front().dissipation > 0.0);
    // momentum stays near zero for even initial data
    REQUIRE(traj.back().momentum.norm() < 1e-6);
    REQUIRE(summary.steps > 0);
}

TEST_CASE("run rejects bad initial data") {
    SolverConfig cfg;
    cfg.radius = 3.0;
    cfg.n_per_axis = 7;
    DistributionGrid f0(cfg.geometry());
    SECTION("negative values") {
        f0.values[3] = -1.0;
        REQUIRE_THROWS_AS(run(f0, cfg, 1), NonpositiveDensity);
    }
    SECTION("zero mass") {
        REQUIRE_THROWS_AS(run(f0, cfg, 1), EmptyDistribution);
    }
}
