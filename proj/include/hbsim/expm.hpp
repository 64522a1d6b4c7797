#pragma once

#include <cmath>
#include <stdexcept>

#include "hbsim/core2.hpp"

namespace hbsim {

namespace detail {

// Entire functions c(d) = cosh(sqrt(d)) and s(d) = sinh(sqrt(d))/sqrt(d),
// evaluated by their power series in d. Valid for either sign of d; used
// when |d| is small enough that the direct trig/hyperbolic forms would
// cancel (coincident or nearly coincident eigenvalues).
inline void cosh_sinhc_series(double d, double& c, double& s) {
    c = 1.0;
    s = 1.0;
    double tc = 1.0;
    double ts = 1.0;
    for (int k = 1; k <= 12; ++k) {
        tc *= d / (2.0 * k * (2.0 * k - 1.0));
        ts *= d / (2.0 * k * (2.0 * k + 1.0));
        c += tc;
        s += ts;
    }
}

}  // namespace detail

/// Matrix exponential e^{m t} for 2x2 m, via the closed-form eigenvalue
/// decomposition: with theta = tr(m t)/2 and D = m t - theta I (traceless,
/// D^2 = d I), e^{m t} = e^theta (cosh(mu) I + sinh(mu)/mu D), mu = sqrt(d).
/// A series branch handles nearly coincident eigenvalues (|d| small).
inline Mat2 expm(const Mat2& m, double t) {
    if (!m.finite() || !std::isfinite(t)) {
        throw std::invalid_argument("expm: non-finite input");
    }
    const Mat2 mt = m * t;
    const double theta = 0.5 * mt.trace();
    const Mat2 dev{mt.a11 - theta, mt.a12, mt.a21, mt.a22 - theta};
    // dev^2 = d I with d = (a11-a22)^2/4 + a12 a21 = -det(dev)
    const double d = dev.a11 * dev.a11 + dev.a12 * dev.a21;

    double c, s;
    if (std::fabs(d) <= 0.25) {
        detail::cosh_sinhc_series(d, c, s);
    } else if (d > 0.0) {
        // Real, well separated eigenvalues theta +/- mu. Work with the
        // eigenvalue exponentials directly so that stiff stable systems
        // (theta << 0, mu ~ |theta|) do not overflow in cosh.
        const double mu = std::sqrt(d);
        const double ep = std::exp(theta + mu);
        const double em = std::exp(theta - mu);
        return 0.5 * (ep + em) * Mat2::identity() + (0.5 * (ep - em) / mu) * dev;
    } else {
        const double nu = std::sqrt(-d);
        c = std::cos(nu);
        s = std::sin(nu) / nu;
    }
    const double et = std::exp(theta);
    return (et * c) * Mat2::identity() + (et * s) * dev;
}

/// Exact solution operator of x' = a x + b u over one hold interval:
/// x(t+h) = phi x(t) + gd u for constant u.
struct DiscreteMap {
    Mat2 phi = Mat2::identity();
    Vec2 gd{0.0, 0.0};
    double h = 0.0;
};

/// Zero-order-hold discretization: phi = e^{a h},
/// gd = (integral_0^h e^{a s} ds) b, which equals a^-1 (phi - I) b when a
/// is invertible. gd is evaluated through the scaled series
/// psi(X) = sum X^k/(k+1)! plus interval doubling, so it stays accurate
/// when phi - I would cancel and when a is singular.
inline DiscreteMap zoh_discretize(const Mat2& a, const Vec2& b, double h) {
    if (!a.finite() || !b.finite() || !std::isfinite(h)) {
        throw std::invalid_argument("zoh_discretize: non-finite input");
    }
    if (h < 0.0) {
        throw std::invalid_argument("zoh_discretize: negative step");
    }
    if (h == 0.0) {
        return DiscreteMap{Mat2::identity(), {0.0, 0.0}, 0.0};
    }

    int doublings = 0;
    double scale = a.max_abs() * h;
    while (scale > 0.25 && doublings < 64) {
        scale *= 0.5;
        ++doublings;
    }
    const double hs = std::ldexp(h, -doublings);

    // psi(a hs) = sum_{k>=0} (a hs)^k / (k+1)!
    const Mat2 x = a * hs;
    Mat2 term = Mat2::identity();
    Mat2 psi = term;
    for (int k = 1; k <= 13; ++k) {
        term = term * x * (1.0 / (k + 1.0));
        psi = psi + term;
    }
    Vec2 gd = hs * (psi * b);

    // Doubling step: G_{2tau} = (I + Phi_tau) G_tau, Phi_{2tau} = Phi_tau^2.
    Mat2 phi_s = expm(a, hs);
    for (int i = 0; i < doublings; ++i) {
        gd = gd + phi_s * gd;
        phi_s = phi_s * phi_s;
    }

    return DiscreteMap{expm(a, h), gd, h};
}

}  // namespace hbsim
