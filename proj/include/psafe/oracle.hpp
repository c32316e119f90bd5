#pragma once

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace psafe::oracle {

// Survival probability of standard Brownian motion on (0, 1):
// P(tau >= T | X_0 = x) via the Dirichlet heat-kernel eigenfunction series,
// summed over odd m up to `terms`.
inline double bm1d_survival(double x, double T, int terms = 999) {
    if (!(x > 0.0 && x < 1.0)) throw std::domain_error("bm1d_survival: x must be in (0,1)");
    if (terms < 1) throw std::invalid_argument("bm1d_survival: terms must be >= 1");
    const double pi = std::numbers::pi;
    double s = 0.0;
    for (int m = 1; m <= terms; m += 2) {
        const double mp = m * pi;
        s += (4.0 / mp) * std::sin(mp * x) * std::exp(-0.5 * mp * mp * T);
    }
    return s;
}

// Termwise x-derivative of the series above.
inline double bm1d_survival_dx(double x, double T, int terms = 999) {
    if (!(x > 0.0 && x < 1.0)) throw std::domain_error("bm1d_survival_dx: x must be in (0,1)");
    if (terms < 1) throw std::invalid_argument("bm1d_survival_dx: terms must be >= 1");
    const double pi = std::numbers::pi;
    double s = 0.0;
    for (int m = 1; m <= terms; m += 2) {
        const double mp = m * pi;
        s += 4.0 * std::cos(mp * x) * std::exp(-0.5 * mp * mp * T);
    }
    return s;
}

// Root of bm1d_survival(x, T) = p on [lo, hi] by bisection. Requires a sign
// change of P - p over the bracket.
inline double bm1d_root(double p, double T, double lo, double hi, int terms = 999) {
    double flo = bm1d_survival(lo, T, terms) - p;
    double fhi = bm1d_survival(hi, T, terms) - p;
    if (flo * fhi > 0.0) throw std::domain_error("bm1d_root: no sign change on bracket");
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double fm = bm1d_survival(mid, T, terms) - p;
        if (fm == 0.0) return mid;
        if (flo * fm <= 0.0) {
            hi = mid;
        } else {
            lo = mid;
            flo = fm;
        }
    }
    return 0.5 * (lo + hi);
}

} // namespace psafe::oracle
