/** Walk through the kernel quantities for one momentum pair. */
#include <cstdio>

#include "rlandau/kernel.hpp"

int main() {
    using namespace rlandau;
    const Momentum p(1.0, 0.0, 0.0);
    const Momentum q(0.0, 1.0, 0.0);
    const auto [rho, tau] = rho_tau(p, q);
    std::printf("rho = %.12g, tau = %.12g\n", rho, tau);
    const KernelEval ke = kernel_eval(p, q);
    std::printf("Lambda = %.12g\n", ke.lambda);
    std::printf("Phi = [%.6g %.6g %.6g; . %.6g %.6g; . . %.6g]\n", ke.phi.xx, ke.phi.xy,
                ke.phi.xz, ke.phi.yy, ke.phi.yz, ke.phi.zz);
    const EigenPairs eg = eigen_pairs(p, q);
    std::printf("eigenvalues: 0, %.12g, %.12g\n", eg.lam2, eg.lam3);
    const Vec3 nullv = q.velocity() - p.velocity();
    std::printf("|Phi . null| = %.3e\n", ke.phi.apply(nullv).norm());
    std::printf("kappa(p) = %.12g\n", kappa(p));
    return 0;
}
