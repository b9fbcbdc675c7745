#include <catch2/catch.hpp>

#include <random>

#include "rlandau/kernel.hpp"
#include "rlandau/verify.hpp"

using namespace rlandau;

namespace {

Vec3 ball(std::mt19937_64& rng, double r) { return detail::random_ball(rng, r); }

/** Fourth-order central difference of g along coordinate k. */
template <class G>
double fd4(const G& g, Vec3 q, int k, double step) {
    Vec3 qp2 = q, qp1 = q, qm1 = q, qm2 = q;
    qp2[k] += 2 * step;
    qp1[k] += step;
    qm1[k] -= step;
    qm2[k] -= 2 * step;
    return (-g(qp2) + 8.0 * g(qp1) - 8.0 * g(qm1) + g(qm2)) / (12.0 * step);
}

}  // namespace

TEST_CASE("momentum energy identity") {
    std::mt19937_64 rng(7);
    for (int i = 0; i < 1000; ++i) {
        const Momentum m(ball(rng, 10.0));
        REQUIRE(m.p0 >= 1.0);
        const double lhs = m.p0 * m.p0 - m.p.norm2();
        // 4 ulp of the operands entering the cancellation
        const double tol = 4 * std::numeric_limits<double>::epsilon() * m.p0 * m.p0;
        REQUIRE(std::fabs(lhs - 1.0) <= tol);
    }
}

TEST_CASE("rho and tau at reference pairs") {
    SECTION("identical momenta") {
        const Momentum p(0.3, -1.2, 2.0);
        const auto [rho, tau] = rho_tau(p, p);
        REQUIRE(rho == Approx(0.0).margin(1e-14));
        REQUIRE(tau == Approx(2.0).margin(1e-14));
    }
    SECTION("one momentum at rest") {
        const Momentum o(0.0, 0.0, 0.0);
        const Momentum q(1.0, -2.0, 0.5);
        const auto [rho, tau] = rho_tau(o, q);
        REQUIRE(rho == Approx(q.p0 - 1.0).epsilon(1e-14));
        REQUIRE(tau == Approx(q.p0 + 1.0).epsilon(1e-14));
    }
    SECTION("orthogonal unit momenta") {
        const auto [rho, tau] = rho_tau(Momentum(1, 0, 0), Momentum(0, 1, 0));
        REQUIRE(rho == Approx(1.0).epsilon(1e-14));
        REQUIRE(tau == Approx(3.0).epsilon(1e-14));
    }
    SECTION("tau = rho + 2 bitwise") {
        std::mt19937_64 rng(11);
        for (int i = 0; i < 2000; ++i) {
            const auto [rho, tau] = rho_tau(Momentum(ball(rng, 10.0)), Momentum(ball(rng, 10.0)));
            REQUIRE(tau == rho + 2.0);
            REQUIRE(rho >= 0.0);
        }
    }
}

TEST_CASE("kernel evaluation at the orthogonal unit pair") {
    const Momentum p(1, 0, 0), q(0, 1, 0);
    const KernelEval ke = kernel_eval(p, q);
    // rho = 1, tau = 3, Lambda = 4 / (2 * 3^{3/2}) = 2 / sqrt(27)
    REQUIRE(ke.rho == Approx(1.0).epsilon(1e-14));
    REQUIRE(ke.lambda == Approx(2.0 / std::sqrt(27.0)).epsilon(1e-14));
    SECTION("null-space direction") {
        const Vec3 nullv = q.velocity() - p.velocity();
        REQUIRE(ke.s.apply(nullv).norm() == Approx(0.0).margin(1e-13));
        REQUIRE(ke.phi.apply(nullv).norm() == Approx(0.0).margin(1e-13));
    }
    SECTION("projection split") {
        REQUIRE((ke.s - (ke.p_proj - ke.a_proj)).max_abs() == Approx(0.0).margin(1e-13));
    }
}

TEST_CASE("degenerate pair is rejected") {
    const Momentum p(0.5, 0.5, -0.25);
    REQUIRE_THROWS_AS(kernel_eval(p, p), DegeneratePair);
    REQUIRE_THROWS_AS(phi_upper_bound(p, p), DegeneratePair);
}

TEST_CASE("divergence identities against finite differences") {
    std::mt19937_64 rng(23);
    for (int it = 0; it < 25; ++it) {
        const Momentum p(ball(rng, 4.0));
        Vec3 qv = ball(rng, 4.0);
        if ((p.p - qv).norm() < 0.3) qv = qv + Vec3{1.0, 0.5, -0.75};
        const Momentum q(qv);
        const KernelEval ke = kernel_eval(p, q);
        for (int i = 0; i < 3; ++i) {
            double fd = 0.0;
            for (int j = 0; j < 3; ++j) {
                fd += fd4(
                    [&](const Vec3& v) { return kernel_eval(p, Momentum(v)).phi(i, j); },
                    qv, j, 2e-3);
            }
            REQUIRE(fd == Approx(ke.div_q_phi[i]).epsilon(5e-7).margin(1e-7));
        }
        double fd2 = 0.0;
        for (int i = 0; i < 3; ++i) {
            fd2 += fd4(
                [&](const Vec3& u) { return kernel_eval(Momentum(u), q).div_q_phi[i]; },
                p.p, i, 2e-3);
        }
        REQUIRE(fd2 == Approx(ke.double_div).epsilon(5e-7).margin(1e-7));
    }
}

TEST_CASE("regularized drift moment matches the finite difference of Phi_eps") {
    std::mt19937_64 rng(29);
    const RegularizedKernel rk{5e-2};
    for (int it = 0; it < 15; ++it) {
        const Momentum p(ball(rng, 4.0));
        Vec3 qv = ball(rng, 4.0);
        if ((p.p - qv).norm() < 0.3) qv = qv + Vec3{0.9, -0.4, 0.6};
        const Momentum q(qv);
        const KernelEval re = regularized_eval(rk, p, q);
        for (int i = 0; i < 3; ++i) {
            double fd = 0.0;
            for (int j = 0; j < 3; ++j) {
                fd += fd4(
                    [&](const Vec3& v) { return regularized_eval(rk, p, Momentum(v)).phi(i, j); },
                    qv, j, 2e-3);
            }
            REQUIRE(fd == Approx(re.div_q_phi[i]).epsilon(5e-7).margin(1e-7));
        }
    }
}

TEST_CASE("closed-form eigenpairs") {
    SECTION("reference pair") {
        const EigenPairs eg = eigen_pairs(Momentum(1, 0, 0), Momentum(0, 1, 0));
        REQUIRE(eg.lam1 == 0.0);
        REQUIRE(eg.lam2 == Approx(3.0).epsilon(1e-13));
        REQUIRE(eg.lam3 == Approx(4.0).epsilon(1e-13));
    }
    SECTION("lam2 equals tau rho and v1 is annihilated") {
        std::mt19937_64 rng(31);
        for (int it = 0; it < 500; ++it) {
            const Momentum p(ball(rng, 10.0)), q(ball(rng, 10.0));
            try {
                const EigenPairs eg = eigen_pairs(p, q);
                const KernelEval ke = kernel_eval(p, q);
                REQUIRE(eg.lam2 == Approx(ke.rho * ke.tau).epsilon(1e-10).margin(1e-12));
                REQUIRE(ke.s.apply(eg.v1).norm() <= 1e-9 * ke.s.frobenius());
            } catch (const ColinearPair&) {
            } catch (const DegeneratePair&) {
            }
        }
    }
    SECTION("colinear pairs are rejected") {
        REQUIRE_THROWS_AS(eigen_pairs(Momentum(1, 1, 0), Momentum(2, 2, 0)), ColinearPair);
        REQUIRE_THROWS_AS(eigen_pairs(Momentum(0, 0, 0), Momentum(1, 0, 0)), ColinearPair);
    }
}

TEST_CASE("quadratic form") {
    const Momentum p(1, 0, 0), q(0, 1, 0);
    SECTION("null direction gives zero") {
        const Vec3 xi = q.velocity() - p.velocity();
        REQUIRE(quadratic_form(p, q, xi) == Approx(0.0).margin(1e-12));
    }
    SECTION("direction orthogonal to both momenta") {
        // S xi.xi = |q0 p - p0 q|^2 - |p x q|^2 = 4 - 1
        REQUIRE(quadratic_form(p, q, Vec3{0, 0, 1}) == Approx(3.0).epsilon(1e-13));
    }
    SECTION("orthogonal direction identity on random pairs") {
        std::mt19937_64 rng(37);
        for (int it = 0; it < 200; ++it) {
            const Momentum a(ball(rng, 8.0)), b(ball(rng, 8.0));
            const Vec3 cx = a.p.cross(b.p);
            if (cx.norm() < 1e-6) continue;
            const Vec3 xi = cx.normalized();
            const Vec3 w = b.p0 * a.p - a.p0 * b.p;
            const double expected = w.norm2() - cx.norm2();
            REQUIRE(quadratic_form(a, b, xi) ==
                    Approx(expected).epsilon(1e-9).margin(1e-10));
        }
    }
    SECTION("triple agreement") {
        std::mt19937_64 rng(41);
        for (int it = 0; it < 3000; ++it) {
            const Momentum a(ball(rng, 10.0)), b(ball(rng, 10.0));
            const Vec3 xi = detail::random_unit(rng);
            const auto r = quadratic_form_routes(a, b, xi);
            const double scale = std::max({std::fabs(r.direct), 1.0});
            REQUIRE(std::fabs(r.direct - r.cross_identity) / scale < 1e-10);
            if (r.eigen_valid) {
                REQUIRE(std::fabs(r.direct - r.eigen_expansion) / scale < 1e-10);
            }
        }
    }
}

TEST_CASE("kappa") {
    SECTION("value at rest: 2^{9/2} pi") {
        REQUIRE(kappa(Momentum(0, 0, 0)) == Approx(std::pow(2.0, 4.5) * M_PI).epsilon(1e-9));
    }
    SECTION("quadrature against the closed form 2^{9/2} pi / p0") {
        // the theta integral evaluates to 2 / p0^2 analytically
        std::mt19937_64 rng(43);
        for (int it = 0; it < 50; ++it) {
            const Momentum m(ball(rng, 10.0));
            REQUIRE(kappa(m) == Approx(std::pow(2.0, 4.5) * M_PI / m.p0).epsilon(1e-9));
        }
    }
    SECTION("positive with a bounded scaled tail") {
        double prev = -1.0;
        for (double r : {0.5, 1.0, 2.0, 4.0, 8.0, 16.0, 32.0}) {
            const Momentum m(r, 0, 0);
            const double k = kappa(m);
            REQUIRE(k > 0.0);
            const double scaled = k * m.p.norm() / m.p0;
            if (prev > 0.0 && r > 2.0) REQUIRE(scaled < prev);
            prev = scaled;
        }
    }
}

TEST_CASE("glassey-strauss sandwich") {
    SECTION("identical momenta") {
        const Momentum p(0.4, 0.0, -1.0);
        const auto [lo, hi] = glassey_strauss_bounds(p, p);
        REQUIRE(lo == 0.0);
        REQUIRE(hi == 0.0);
        REQUIRE(rho_tau(p, p).first == Approx(0.0).margin(1e-15));
    }
    SECTION("one momentum at rest") {
        const Momentum o(0, 0, 0), q(0.5, -1.5, 2.5);
        const auto [lo, hi] = glassey_strauss_bounds(o, q);
        const double rho = rho_tau(o, q).first;
        REQUIRE(lo <= rho);
        REQUIRE(rho <= hi);
        REQUIRE(lo == Approx(q.p.norm2() / (2.0 * q.p0)).epsilon(1e-14));
        REQUIRE(hi == Approx(0.5 * q.p.norm2()).epsilon(1e-14));
    }
    SECTION("randomized sandwich") {
        std::mt19937_64 rng(47);
        for (int it = 0; it < 20000; ++it) {
            const Momentum a(ball(rng, 10.0)), b(ball(rng, 10.0));
            const auto [lo, hi] = glassey_strauss_bounds(a, b);
            const double rho = rho_tau(a, b).first;
            const double scale = std::max(1.0, rho);
            REQUIRE(lo - rho <= 1e-12 * scale);
            REQUIRE(rho - hi <= 1e-12 * scale);
        }
    }
}

TEST_CASE("pointwise kernel bound") {
    std::mt19937_64 rng(53);
    std::size_t checked_small = 0, checked_large = 0;
    for (int it = 0; it < 20000; ++it) {
        const Momentum a(ball(rng, 10.0)), b(ball(rng, 10.0));
        KernelEval ke;
        try {
            ke = kernel_eval(a, b);
        } catch (const DegeneratePair&) {
            continue;
        }
        REQUIRE(ke.phi.max_abs() <= phi_upper_bound(a, b));
        const double lt = ke.lambda * ke.tau * (a.p - b.p).norm2();
        REQUIRE(lt <= kLambdaTauBoundConstant * phi_bound_shape(a, b));
        (ke.rho < 0.125 ? checked_small : checked_large)++;
    }
    // dedicated near-diagonal draws to exercise the rho < 1/8 regime
    for (int it = 0; it < 4000; ++it) {
        const Momentum a(ball(rng, 10.0));
        const Momentum b(a.p + 1e-2 * detail::random_unit(rng));
        KernelEval ke;
        try {
            ke = kernel_eval(a, b);
        } catch (const DegeneratePair&) {
            continue;
        }
        REQUIRE(ke.phi.max_abs() <= phi_upper_bound(a, b));
        if (ke.rho < 0.125) ++checked_small;
    }
    REQUIRE(checked_small > 100);
    REQUIRE(checked_large > 1000);
}

TEST_CASE("regularized kernel") {
    const RegularizedKernel rk{0.1};
    SECTION("finite on the diagonal with PSD intact") {
        const Momentum p(0.7, -0.4, 1.3);
        const KernelEval re = regularized_eval(rk, p, p);
        REQUIRE(std::isfinite(re.phi.frobenius()));
        REQUIRE(re.phi.frobenius() > 0.0);
        std::mt19937_64 rng(59);
        for (int i = 0; i < 100; ++i) {
            REQUIRE(re.phi.quad(detail::random_unit(rng)) >= -1e-12 * re.phi.frobenius());
        }
    }
    SECTION("pointwise convergence is monotone on fixed pairs") {
        std::mt19937_64 rng(61);
        for (int it = 0; it < 200; ++it) {
            const Momentum a(ball(rng, 10.0)), b(ball(rng, 10.0));
            KernelEval exact;
            try {
                exact = kernel_eval(a, b);
            } catch (const DegeneratePair&) {
                continue;
            }
            double prev = std::numeric_limits<double>::infinity();
            for (double ev : {1e-1, 1e-2, 1e-3}) {
                const double err =
                    (regularized_eval(RegularizedKernel{ev}, a, b).phi - exact.phi).max_abs();
                REQUIRE(err < prev);
                prev = err;
            }
        }
    }
    SECTION("positivity and null direction over random triples") {
        std::mt19937_64 rng(67);
        for (int it = 0; it < 10000; ++it) {
            const Momentum a(ball(rng, 10.0)), b(ball(rng, 10.0));
            const Vec3 xi = detail::random_unit(rng);
            const KernelEval re = regularized_eval(RegularizedKernel{1e-2}, a, b);
            REQUIRE(re.phi.quad(xi) >= -1e-12 * re.phi.frobenius());
            const Vec3 nullv = b.velocity() - a.velocity();
            REQUIRE(re.phi.apply(nullv).norm() <=
                    1e-10 * (re.phi.frobenius() * nullv.norm() + 1e-300));
        }
    }
}

TEST_CASE("diagonal limit matrices") {
    SECTION("at rest both averages are 2/3 of the identity") {
        const SymMat3 b0 = diagonal_bounded_factor(Momentum(0, 0, 0));
        REQUIRE(b0.xx == Approx(2.0 / 3.0).epsilon(1e-12));
        REQUIRE(b0.yy == Approx(2.0 / 3.0).epsilon(1e-12));
        REQUIRE(b0.xy == Approx(0.0).margin(1e-15));
        const SymMat3 m0 = diagonal_phi_model(Momentum(0, 0, 0));
        REQUIRE(m0.xx == Approx(2.0 / 3.0).epsilon(1e-12));
    }
    SECTION("closed forms match direct sphere quadrature") {
        const Momentum m(1.3, -0.7, 0.4);
        SymMat3 acc0{}, acc1{};
        double accg = 0.0, wsum = 0.0;
        const int nth = 400, nph = 400;
        for (int a = 0; a < nth; ++a) {
            const double th = (a + 0.5) * M_PI / nth;
            for (int b = 0; b < nph; ++b) {
                const double ph = (b + 0.5) * 2.0 * M_PI / nph;
                const Vec3 u{std::sin(th) * std::cos(ph), std::sin(th) * std::sin(ph),
                             std::cos(th)};
                const double w = std::sin(th);
                const double gamma = 1.0 - std::pow(m.p.dot(u), 2) / (m.p0 * m.p0);
                SymMat3 bu = SymMat3::identity(1.0) + SymMat3::outer(m.p);
                bu += SymMat3::outer(u) * (-1.0 / gamma);
                acc0 += bu * w;
                acc1 += bu * (w / std::sqrt(gamma));
                accg += w / std::sqrt(gamma);
                wsum += w;
            }
        }
        REQUIRE((acc0 * (1.0 / wsum) - diagonal_bounded_factor(m)).max_abs() < 1e-4);
        REQUIRE((acc1 * (1.0 / wsum) - diagonal_phi_model(m)).max_abs() < 1e-4);
        REQUIRE(accg / wsum == Approx(diagonal_inv_sqrt_gamma(m)).epsilon(1e-6));
    }
    SECTION("positive semidefinite out to large momenta") {
        std::mt19937_64 rng(71);
        for (int it = 0; it < 500; ++it) {
            const Momentum m(ball(rng, 50.0));
            const SymMat3 b0 = diagonal_bounded_factor(m);
            const SymMat3 b1 = diagonal_phi_model(m);
            const Vec3 xi = detail::random_unit(rng);
            REQUIRE(b0.quad(xi) >= -1e-12 * b0.frobenius());
            REQUIRE(b1.quad(xi) >= -1e-12 * b1.frobenius());
        }
    }
}

TEST_CASE("pair swap symmetry") {
    std::mt19937_64 rng(73);
    for (int it = 0; it < 1000; ++it) {
        const Momentum a(ball(rng, 10.0)), b(ball(rng, 10.0));
        KernelEval kab, kba;
        try {
            kab = kernel_eval(a, b);
            kba = kernel_eval(b, a);
        } catch (const DegeneratePair&) {
            continue;
        }
        REQUIRE(kab.rho == Approx(kba.rho).epsilon(1e-14));
        REQUIRE((kab.phi - kba.phi).max_abs() <= 1e-12 * (1.0 + kab.phi.frobenius()));
        REQUIRE((kab.div_p_phi - kba.div_q_phi).norm() <= 1e-12 * (1.0 + kab.div_q_phi.norm()));
        REQUIRE(kab.double_div >= 0.0);
    }
}

TEST_CASE("verification suite runs clean on a seeded draw") {
    const auto results = verify_kernel_identities(12345, 5000);
    for (const auto& c : results) {
        INFO(c.name << " max_err=" << c.max_err << " tol=" << c.tol);
        REQUIRE(c.pass);
    }
}
