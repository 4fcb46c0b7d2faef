#pragma once

// Finite-difference residual of the radial Schroedinger equation
//   i dR/dt = -1/2 [R'' + (2/r) R' - l(l+1) R / r^2]
// for an exact moving-wall mode.

#include "sphtrap/dynamics.hpp"

#include <algorithm>
#include <cmath>

namespace sphtrap::verify {

inline double max_pde_residual(const TrapGeometry& geom, const BesselZeroTable& table, int l, int n, double h)
{
    double worst = 0.0;
    for (double t : {0.05, 0.2, 0.35}) {
        if (!geom.valid_time(t + 2 * h) || !geom.valid_time(t - 2 * h))
            continue;
        const double L = geom.radius(t);
        for (int k = 1; k <= 9; ++k) {
            const double r = 0.1 * k * L;
            if (r + h > std::min(geom.radius(t - h), geom.radius(t + h)))
                continue;
            auto R = [&](double rr, double tt) { return exact_radial(geom, table, l, n, rr, tt); };
            const complex c = R(r, t);
            const complex dt = (R(r, t + h) - R(r, t - h)) / (2 * h);
            const complex d2 = (R(r + h, t) - 2.0 * c + R(r - h, t)) / (h * h);
            const complex d1 = (R(r + h, t) - R(r - h, t)) / (2 * h);
            const complex res = complex(0, 1) * dt + 0.5 * (d2 + 2.0 / r * d1 - l * (l + 1.0) / (r * r) * c);
            worst = std::max(worst, std::abs(res));
        }
    }
    return worst;
}

/// Observed convergence order between spacings h and h/2.
inline double pde_residual_order(const TrapGeometry& geom, const BesselZeroTable& table, int l, int n, double h)
{
    return std::log2(max_pde_residual(geom, table, l, n, h) / max_pde_residual(geom, table, l, n, 0.5 * h));
}

} // namespace sphtrap::verify
