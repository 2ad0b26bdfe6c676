#pragma once

// sin and cos of a phase already wrapped into [0, 2 pi): quadrant reduction by
// a two-part pi/2 and the fdlibm kernel polynomials on [-pi/4, pi/4]. Agrees
// with libm to a few ulp and, being branch-light, lets the particle loop
// run without calls into libm.

#include <cmath>

namespace selforg {

inline void sincos_phase(double x, double& s, double& c)
{
    constexpr double two_over_pi = 6.36619772367581382433e-01;
    constexpr double pio2_hi = 1.57079632673412561417e+00;
    constexpr double pio2_lo = 6.07710050650619224932e-11;

    const double q = std::nearbyint(x * two_over_pi);
    const double r = (x - q * pio2_hi) - q * pio2_lo;
    const double z = r * r;

    const double sp = -1.66666666666666324348e-01
                      + z * (8.33333333332248946124e-03
                             + z * (-1.98412698298579493134e-04
                                    + z * (2.75573137070700676789e-06
                                           + z * (-2.50507602534068634195e-08 + z * 1.58969099521155010221e-10))));
    const double sr = r + r * z * sp;
    const double cp = 4.16666666666666019037e-02
                      + z * (-1.38888888888741095749e-03
                             + z * (2.48015872894767294178e-05
                                    + z * (-2.75573143513906633035e-07
                                           + z * (2.08757232129817482790e-09 + z * -1.13596475577881948265e-11))));
    const double cr = 1.0 - 0.5 * z + z * z * cp;

    switch (static_cast<int>(q) & 3) {
    case 0: s = sr; c = cr; break;
    case 1: s = cr; c = -sr; break;
    case 2: s = -sr; c = -cr; break;
    default: s = -cr; c = sr; break;
    }
}

}  // namespace selforg
