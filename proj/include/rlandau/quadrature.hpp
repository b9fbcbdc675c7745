/** Adaptive 1-D quadrature for smooth integrands. */
#ifndef RLANDAU_QUADRATURE_HPP
#define RLANDAU_QUADRATURE_HPP

#include <cmath>
#include <cstddef>

namespace rlandau {

namespace detail {

template <class F>
double simpson(const F& f, double a, double fa, double b, double fb, double fm) {
    return (b - a) / 6.0 * (fa + 4.0 * fm + fb);
}

template <class F>
double adapt(const F& f, double a, double fa, double b, double fb, double fm,
             double whole, double tol, int depth) {
    const double m = 0.5 * (a + b);
    const double fl = f(0.5 * (a + m));
    const double fr = f(0.5 * (m + b));
    const double left = simpson(f, a, fa, m, fm, fl);
    const double right = simpson(f, m, fm, b, fb, fr);
    const double delta = left + right - whole;
    if (depth <= 0 || std::fabs(delta) <= 15.0 * tol) {
        return left + right + delta / 15.0;
    }
    return adapt(f, a, fa, m, fm, fl, left, 0.5 * tol, depth - 1) +
           adapt(f, m, fm, b, fb, fr, right, 0.5 * tol, depth - 1);
}

}  // namespace detail

/**
 * Adaptive Simpson rule with Richardson correction. `rel_tol` is applied to
 * a first coarse estimate of the integral (plus `abs_floor` to keep the
 * request meaningful for integrals near zero).
 */
template <class F>
double integrate_adaptive(const F& f, double a, double b, double rel_tol = 1e-11,
                          double abs_floor = 1e-300, int max_depth = 48) {
    const double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
    const double whole = detail::simpson(f, a, fa, b, fb, fm);
    const double tol = std::max(std::fabs(whole) * rel_tol, abs_floor);
    return detail::adapt(f, a, fa, b, fb, fm, whole, tol, max_depth);
}

}  // namespace rlandau

#endif  // RLANDAU_QUADRATURE_HPP
