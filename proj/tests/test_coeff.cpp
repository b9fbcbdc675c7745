#include <catch2/catch.hpp>

#include <random>

#include "rlandau/coeff.hpp"
#include "rlandau/grid.hpp"
#include "rlandau/diagnostics.hpp"
#include "rlandau/scenarios.hpp"

using namespace rlandau;

namespace {

DistributionGrid random_grid(const GridGeometry& g, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    DistributionGrid f(g);
    for (auto& v : f.values) v = u(rng);
    return f;
}

/** Centered node gradient with one-sided boundary stencils. */
std::array<std::vector<double>, 3> node_gradient(const DistributionGrid& f) {
    const GridGeometry& g = f.geom;
    const int n = g.n;
    const double inv_h = 1.0 / g.h(), inv_2h = 0.5 * inv_h;
    const std::size_t stride[3] = {static_cast<std::size_t>(n) * n,
                                   static_cast<std::size_t>(n), 1};
    std::array<std::vector<double>, 3> df;
    for (auto& v : df) v.assign(g.size(), 0.0);
    for (std::size_t m = 0; m < g.size(); ++m) {
        int c[3];
        g.unpack(m, c[0], c[1], c[2]);
        for (int ax = 0; ax < 3; ++ax) {
            const std::size_t st = stride[ax];
            if (c[ax] == 0) df[ax][m] = (f.values[m + st] - f.values[m]) * inv_h;
            else if (c[ax] == n - 1) df[ax][m] = (f.values[m] - f.values[m - st]) * inv_h;
            else df[ax][m] = (f.values[m + st] - f.values[m - st]) * inv_2h;
        }
    }
    return df;
}

/** Dense reference assembly straight from the public kernel evaluations. */
void dense_reference(const DistributionGrid& f, double eps, CoefficientField& out) {
    const GridGeometry& g = f.geom;
    const double h3 = g.cell_volume();
    out = CoefficientField(g);
    const RegularizedKernel rk{eps};
    const auto df = node_gradient(f);
    for (std::size_t i = 0; i < g.size(); ++i) {
        const Momentum p = g.momentum_at(i);
        const SymMat3 diag = detail::diag_cell_matrix(p, eps, g.h());
        SymMat3 a = diag * f.values[i];
        Vec3 b = -1.0 * diag.apply(Vec3{df[0][i], df[1][i], df[2][i]});
        for (std::size_t j = 0; j < g.size(); ++j) {
            if (j == i) continue;
            const Momentum q = g.momentum_at(j);
            const KernelEval ke = regularized_eval(rk, p, q);
            a += ke.phi * (h3 * f.values[j]);
            b += (-h3) * ke.phi.apply(Vec3{df[0][j], df[1][j], df[2][j]});
        }
        out.a[0][i] = a.xx; out.a[1][i] = a.yy; out.a[2][i] = a.zz;
        out.a[3][i] = a.xy; out.a[4][i] = a.xz; out.a[5][i] = a.yz;
        out.b[0][i] = b.x; out.b[1][i] = b.y; out.b[2][i] = b.z;
    }
}

}  // namespace

TEST_CASE("assembly on the zero distribution returns zero fields") {
    const GridGeometry g(3.0, 5);
    const DistributionGrid f(g);
    const CoefficientField cf = assemble_coefficients(f, 0.1);
    REQUIRE(cf.max_a_abs() == 0.0);
    const auto c = assemble_c(f);
    for (double v : c) REQUIRE(v == 0.0);
}

TEST_CASE("assembly rejects negative-mass input") {
    const GridGeometry g(3.0, 5);
    DistributionGrid f(g);
    for (auto& v : f.values) v = -1.0;
    REQUIRE_THROWS_AS(assemble_coefficients(f, 0.1), EmptyDistribution);
}

TEST_CASE("single-node spike reproduces the kernel") {
    const GridGeometry g(3.0, 7);
    const double eps = 0.05;
    DistributionGrid f(g);
    const std::size_t spike = g.index(2, 3, 4);
    f.values[spike] = 3.0;
    const double mass = f.mass();
    const CoefficientField cf = assemble_coefficients(f, eps);
    const auto bmom = assemble_b_conservative(f, eps);
    const Momentum qs = g.momentum_at(spike);
    const RegularizedKernel rk{eps};
    std::mt19937_64 rng(5);
    for (int it = 0; it < 20; ++it) {
        const std::size_t node = rng() % g.size();
        const Momentum p = g.momentum_at(node);
        const KernelEval ke = regularized_eval(rk, p, qs);
        const SymMat3 expected = node == spike
                                     ? detail::diag_cell_matrix(p, eps, g.h()) * f.values[spike]
                                     : ke.phi * mass;
        REQUIRE((cf.a_at(node) - expected).max_abs() <=
                1e-12 * (1.0 + expected.frobenius()));
        const Vec3 bm{bmom[0][node], bmom[1][node], bmom[2][node]};
        if (node == spike) {
            // diagonal drift moment cancels identically
            REQUIRE(bm.norm() == 0.0);
        } else {
            REQUIRE((bm - mass * ke.div_q_phi).norm() <=
                    1e-12 * (1.0 + ke.div_q_phi.norm() * mass));
        }
    }
}

TEST_CASE("assembly matches the dense reference") {
    const GridGeometry g(2.5, 7);
    const DistributionGrid f = random_grid(g, 99);
    const double eps = 0.08;
    CoefficientField ref;
    dense_reference(f, eps, ref);
    const CoefficientField fast = assemble_coefficients(f, eps);
    double worst = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) {
        worst = std::max(worst, (fast.a_at(i) - ref.a_at(i)).max_abs() /
                                    (1.0 + ref.a_at(i).frobenius()));
        worst = std::max(worst, (fast.b_at(i) - ref.b_at(i)).norm() /
                                    (1.0 + ref.b_at(i).norm()));
    }
    REQUIRE(worst < 1e-12);
}

TEST_CASE("portable and vector paths agree") {
    const GridGeometry g(3.0, 9);
    const DistributionGrid f = random_grid(g, 7);
    const CoefficientField simd = assemble_coefficients(f, 0.02, nullptr, true);
    const CoefficientField plain = assemble_coefficients(f, 0.02, nullptr, false);
    double worst = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) {
        worst = std::max(worst, (simd.a_at(i) - plain.a_at(i)).max_abs() /
                                    (1.0 + plain.a_at(i).frobenius()));
        worst = std::max(worst, (simd.b_at(i) - plain.b_at(i)).norm() /
                                    (1.0 + plain.b_at(i).norm()));
    }
    REQUIRE(worst < 1e-13);
}

TEST_CASE("linearity of the assemblers") {
    const GridGeometry g(2.5, 7);
    const DistributionGrid f = random_grid(g, 1);
    const DistributionGrid gg = random_grid(g, 2);
    const double alpha = 0.7, beta = 1.9;
    DistributionGrid mix(g);
    for (std::size_t i = 0; i < g.size(); ++i)
        mix.values[i] = alpha * f.values[i] + beta * gg.values[i];
    const double eps = 0.05;
    const CoefficientField cf = assemble_coefficients(f, eps);
    const CoefficientField cg = assemble_coefficients(gg, eps);
    const CoefficientField cm = assemble_coefficients(mix, eps);
    double worst = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) {
        const SymMat3 lin = cf.a_at(i) * alpha + cg.a_at(i) * beta;
        worst = std::max(worst,
                         (cm.a_at(i) - lin).max_abs() / (1.0 + lin.frobenius()));
        const Vec3 linb = alpha * cf.b_at(i) + beta * cg.b_at(i);
        worst = std::max(worst, (cm.b_at(i) - linb).norm() / (1.0 + linb.norm()));
    }
    REQUIRE(worst < 1e-12);
    // c and the non-conservative b are linear as well
    const auto c1 = assemble_c(f);
    const auto c2 = assemble_c(gg);
    const auto cmx = assemble_c(mix);
    for (std::size_t i = 0; i < g.size(); ++i) {
        REQUIRE(cmx[i] == Approx(alpha * c1[i] + beta * c2[i]).epsilon(1e-12));
    }
}

TEST_CASE("a is positive semidefinite at every node") {
    const GridGeometry g(3.0, 9);
    const DistributionGrid f = two_bump(g, {1.0, 0.0, 0.0}, 0.6);
    const CoefficientField cf = assemble_coefficients(f, 0.05);
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (std::size_t i = 0; i < g.size(); ++i) {
        const SymMat3 a = cf.a_at(i);
        for (int k = 0; k < 8; ++k) {
            const Vec3 xi{u(rng), u(rng), u(rng)};
            REQUIRE(a.quad(xi) >= -1e-10 * a.frobenius() * xi.norm2());
        }
    }
}

TEST_CASE("regularized assembly is Cauchy as eps decreases") {
    const GridGeometry g(2.5, 7);
    const DistributionGrid f = juttner(g);
    double prev_diff = std::numeric_limits<double>::infinity();
    CoefficientField prev;
    bool have_prev = false;
    for (double eps : {1e-1, 1e-2, 1e-3, 1e-4}) {
        const CoefficientField cf = assemble_coefficients(f, eps);
        if (have_prev) {
            double diff = 0.0;
            for (std::size_t i = 0; i < g.size(); ++i)
                diff = std::max(diff, (cf.a_at(i) - prev.a_at(i)).max_abs());
            REQUIRE(diff < prev_diff);
            prev_diff = diff;
        }
        prev = cf;
        have_prev = true;
    }
}

TEST_CASE("eps = 0 diagnostics assembly stays close to small-eps assembly") {
    const GridGeometry g(2.5, 7);
    const DistributionGrid f = juttner(g);
    const CoefficientField exact = assemble_coefficients(f, 0.0);
    const CoefficientField reg = assemble_coefficients(f, 1e-5);
    for (std::size_t i = 0; i < g.size(); ++i) {
        REQUIRE((exact.a_at(i) - reg.a_at(i)).max_abs() <
                5e-2 * (1.0 + exact.a_at(i).frobenius()));
        const Vec3 xi{0.3, -0.8, 0.51};
        REQUIRE(exact.a_at(i).quad(xi) >= -1e-10 * exact.a_at(i).frobenius());
    }
}

TEST_CASE("non-conservative drift") {
    const GridGeometry g(2.5, 7);
    SECTION("even data gives zero drift at the origin") {
        const DistributionGrid f = juttner(g);
        const auto b = assemble_b_nonconservative(f);
        const std::size_t origin = g.index(3, 3, 3);
        REQUIRE(std::fabs(b[0][origin]) < 1e-13);
        REQUIRE(std::fabs(b[1][origin]) < 1e-13);
        REQUIRE(std::fabs(b[2][origin]) < 1e-13);
    }
    SECTION("matches the kernel derivative-field sum") {
        // (d/dp_i + d/dq_i) Phi^{ij} = div_p_phi + div_q_phi = 2 Lambda rho (p + q)
        const DistributionGrid f = random_grid(g, 21);
        const auto b = assemble_b_nonconservative(f);
        const double h3 = g.cell_volume();
        std::mt19937_64 rng(23);
        for (int it = 0; it < 10; ++it) {
            const std::size_t node = rng() % g.size();
            const Momentum p = g.momentum_at(node);
            Vec3 expected{};
            for (std::size_t j = 0; j < g.size(); ++j) {
                if (j == node) continue;
                const KernelEval ke = kernel_eval(p, g.momentum_at(j));
                expected += h3 * f.values[j] * (ke.div_p_phi + ke.div_q_phi);
            }
            const Vec3 got{b[0][node], b[1][node], b[2][node]};
            REQUIRE((got - expected).norm() <= 1e-11 * (1.0 + expected.norm()));
        }
    }
}

TEST_CASE("scalar field c") {
    const GridGeometry g(2.5, 7);
    SECTION("spike away from the target gives the single term") {
        DistributionGrid f(g);
        const std::size_t spike = g.index(1, 2, 3);
        f.values[spike] = 2.0;
        const double mass = f.mass();
        const auto c = assemble_c(f);
        const Momentum qs = g.momentum_at(spike);
        const std::size_t node = g.index(5, 4, 2);
        const Momentum p = g.momentum_at(node);
        const auto [rho, tau] = rho_tau(p, qs);
        const double expected =
            4.0 * mass * (rho + 1.0) / (p.p0 * qs.p0 * std::sqrt(rho * tau));
        REQUIRE(c[node] == Approx(expected).epsilon(1e-12));
    }
    SECTION("spike at the target gives the kappa term") {
        DistributionGrid f(g);
        const std::size_t spike = g.index(3, 3, 3);
        f.values[spike] = 2.0;
        const auto c = assemble_c(f);
        const Momentum p = g.momentum_at(spike);
        // off-diagonal sum is empty; the one-cell correction plus kappa remain
        const double rc = kCellRadiusFactor * g.h();
        const double corr = f.values[spike] * (4.0 / (p.p0 * p.p0)) *
                            diagonal_inv_sqrt_gamma(p) * 2.0 * M_PI * rc * rc;
        REQUIRE(c[spike] == Approx(kappa(p) * f.values[spike] + corr).epsilon(1e-10));
    }
    SECTION("positive everywhere for nonnegative data") {
        const DistributionGrid f = two_bump(g, {0.8, 0.0, 0.0}, 0.6);
        const auto c = assemble_c(f);
        for (double v : c) REQUIRE(v > 0.0);
    }
}

TEST_CASE("active set restriction leaves far coefficients at zero") {
    const GridGeometry g(4.0, 9);
    DistributionGrid f(g);
    const std::size_t center = g.index(4, 4, 4);
    f.values[center] = 1.0;
    const ActiveSet act = build_active_set(f, 1e-12, 1);
    REQUIRE(act.count < g.size());
    const CoefficientField cf = assemble_coefficients(f, 0.05, &act);
    // a corner far outside the dilated active set
    const std::size_t corner = g.index(0, 0, 0);
    REQUIRE(cf.a_at(corner).max_abs() == 0.0);
    REQUIRE(cf.a_at(center).max_abs() > 0.0);
}

TEST_CASE("diagonal cell integral") {
    const Momentum m(1.1, -0.6, 0.3);
    const double h = 0.4;
    SECTION("eps = 0 reduces to the closed-form 1/|v| model") {
        const double rc = kCellRadiusFactor * h;
        const SymMat3 expected =
            diagonal_phi_model(m) * (2.0 * M_PI * rc * rc / (m.p0 * m.p0));
        REQUIRE((detail::diag_cell_matrix(m, 0.0, h) - expected).max_abs() <
                1e-8 * expected.frobenius());
    }
    SECTION("eps >> h reduces to the midpoint value") {
        const double eps = 50.0;
        const SymMat3 expected =
            diagonal_bounded_factor(m) * (h * h * h / (eps * m.p0 * m.p0));
        const SymMat3 got = detail::diag_cell_matrix(m, eps, h);
        REQUIRE((got - expected).max_abs() < 1e-4 * expected.frobenius());
    }
    SECTION("matches brute-force integration of the model at moderate eps") {
        const double eps = 0.05;
        const double rc = kCellRadiusFactor * h;
        // direct midpoint 2-D quadrature over (c, delta)
        double iso = 0.0, cc = 0.0, ss = 0.0;
        const int nc = 2000, nd = 2000;
        for (int a = 0; a < nc; ++a) {
            const double c = -1.0 + (a + 0.5) * 2.0 / nc;
            const double gamma = 1.0 - m.p.norm2() / (m.p0 * m.p0) * c * c;
            double rad = 0.0;
            for (int d = 0; d < nd; ++d) {
                const double del = (d + 0.5) * rc / nd;
                rad += del * del / std::sqrt(del * del * gamma + eps * eps) * (rc / nd);
            }
            iso += rad / nc;
            cc += c * c * rad / gamma / nc;
            ss += (1.0 - c * c) * rad / gamma / nc;
        }
        // assemble the same radial/tangential split
        const double p2 = m.p.norm2();
        SymMat3 expected = SymMat3::identity(iso - 0.5 * ss);
        expected += SymMat3::outer(m.p) *
                    (((1.0 + p2) * iso - cc - (iso - 0.5 * ss)) / p2);
        expected = expected * (4.0 * M_PI / (m.p0 * m.p0));
        const SymMat3 got = detail::diag_cell_matrix(m, eps, h);
        REQUIRE((got - expected).max_abs() < 1e-5 * (1.0 + expected.frobenius()));
    }
    SECTION("trace grows monotonically toward the eps = 0 limit") {
        double prev = 0.0;
        for (double eps : {1e-1, 1e-2, 1e-3, 1e-4, 0.0}) {
            const SymMat3 mm = detail::diag_cell_matrix(m, eps, h);
            const double tr = mm.xx + mm.yy + mm.zz;
            REQUIRE(tr >= prev * (1.0 - 1e-12));
            prev = tr;
        }
    }
}

TEST_CASE("diffusion matrix sandwich") {
    // a profile outside the calibration family: scaled equilibrium plus an
    // off-center bump
    const GridGeometry g(7.0, 15);
    DistributionGrid f = juttner(g);
    for (std::size_t i = 0; i < g.size(); ++i) {
        const Vec3 p = g.node(i);
        f.values[i] = 1.7 * f.values[i] + 0.4 * std::exp(-(p - Vec3{1.4, -0.7, 0.3}).norm2());
    }
    mollify_floor(f);
    const DiffusionBounds bounds = diffusion_matrix_bounds(f);
    REQUIRE(bounds.lower > 0.0);
    const CoefficientField cf = assemble_coefficients(f, 0.0);
    for (std::size_t i = 0; i < g.size(); ++i) {
        const auto [lo, hi] = cf.a_at(i).eigen_range();
        const double p0 = std::sqrt(1.0 + g.node(i).norm2());
        REQUIRE(lo >= bounds.lower);
        REQUIRE(hi <= bounds.upper_per_p0 * p0);
    }
}

TEST_CASE("kernel evaluation flags colinear pairs") {
    REQUIRE(kernel_eval(Momentum(1, 1, 0), Momentum(2, 2, 0)).colinear);
    REQUIRE(kernel_eval(Momentum(0, 0, 0), Momentum(1, 0, 0)).colinear);
    REQUIRE(!kernel_eval(Momentum(1, 0, 0), Momentum(0, 1, 0)).colinear);
}
