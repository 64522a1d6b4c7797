#pragma once

#include <array>
#include <cmath>
#include <stdexcept>

#include "hbsim/core2.hpp"
#include "hbsim/params.hpp"

namespace hbsim {

/// Symmetric positive-definite solution P of A^T P + P A = -alpha I,
/// stored as its three distinct entries (p21 == p12 by construction).
struct LyapMatrix {
    double p11 = 1.0;
    double p12 = 0.0;
    double p22 = 1.0;
    double alpha = 1.0;

    /// Positive definiteness via leading principal minors (exact for 2x2).
    bool positive_definite() const { return p11 > 0.0 && p11 * p22 - p12 * p12 > 0.0; }

    constexpr Mat2 as_mat2() const { return {p11, p12, p12, p22}; }

    /// Quadratic form e^T P e.
    constexpr double value(const Vec2& e) const {
        return p11 * e.x1 * e.x1 + 2.0 * p12 * e.x1 * e.x2 + p22 * e.x2 * e.x2;
    }
};

/// True iff both eigenvalues of a have strictly negative real part.
/// For 2x2 this is exactly trace < 0 and det > 0.
inline bool is_hurwitz(const Mat2& a) {
    if (!a.finite()) throw std::invalid_argument("is_hurwitz: non-finite input");
    return a.trace() < 0.0 && a.det() > 0.0;
}

/// Residual A^T P + P A + alpha I of a candidate solution (max-abs norm).
inline double lyapunov_residual(const Mat2& a, const LyapMatrix& p) {
    const Mat2 pm = p.as_mat2();
    const Mat2 res = a.transpose() * pm + pm * a + Mat2::identity() * p.alpha;
    return res.max_abs();
}

/// Solve A^T P + P A = -alpha I for symmetric P by assembling the three
/// scalar equations in (p11, p12, p22) and eliminating with partial
/// pivoting. Accumulation in extended precision plus one refinement pass
/// keeps the residual at the 1e-9 alpha level across the full parameter
/// ranges exercised by the tests.
inline LyapMatrix solve_lyapunov(const Mat2& a, double alpha) {
    if (!std::isfinite(alpha) || alpha <= 0.0) {
        throw std::invalid_argument("solve_lyapunov: alpha must be positive");
    }
    if (!is_hurwitz(a)) {
        throw std::domain_error("solve_lyapunov: matrix is not Hurwitz, no positive-definite solution");
    }

    using Row = std::array<long double, 3>;
    const std::array<Row, 3> m{{{2.0L * a.a11, 2.0L * a.a21, 0.0L},
                                {a.a12, (long double)a.a11 + a.a22, a.a21},
                                {0.0L, 2.0L * a.a12, 2.0L * a.a22}}};

    auto eliminate = [&m](const std::array<long double, 3>& rhs) {
        std::array<Row, 3> w = m;
        std::array<long double, 3> b = rhs;
        std::array<int, 3> piv{0, 1, 2};
        for (int col = 0; col < 2; ++col) {
            int best = col;
            for (int row = col + 1; row < 3; ++row) {
                if (std::fabs(w[piv[row]][col]) > std::fabs(w[piv[best]][col])) best = row;
            }
            std::swap(piv[col], piv[best]);
            for (int row = col + 1; row < 3; ++row) {
                const long double f = w[piv[row]][col] / w[piv[col]][col];
                for (int j = col; j < 3; ++j) w[piv[row]][j] -= f * w[piv[col]][j];
                b[piv[row]] -= f * b[piv[col]];
            }
        }
        std::array<long double, 3> x{};
        for (int row = 2; row >= 0; --row) {
            long double s = b[piv[row]];
            for (int j = row + 1; j < 3; ++j) s -= w[piv[row]][j] * x[j];
            x[row] = s / w[piv[row]][row];
        }
        return x;
    };

    auto x = eliminate({-(long double)alpha, 0.0L, -(long double)alpha});

    // One step of iterative refinement on the extended-precision residual.
    std::array<long double, 3> res{
        -(long double)alpha - (m[0][0] * x[0] + m[0][1] * x[1] + m[0][2] * x[2]),
        -(m[1][0] * x[0] + m[1][1] * x[1] + m[1][2] * x[2]),
        -(long double)alpha - (m[2][0] * x[0] + m[2][1] * x[1] + m[2][2] * x[2])};
    const auto dx = eliminate(res);
    for (int i = 0; i < 3; ++i) x[i] += dx[i];

    LyapMatrix p{(double)x[0], (double)x[1], (double)x[2], alpha};
    if (!p.positive_definite()) {
        throw std::domain_error("solve_lyapunov: solution is not positive definite");
    }
    return p;
}

/// Closed-form Lyapunov solution for the RLC inverter plant:
/// P = (alpha/2) [ RC + RC^2/L, -C; -C, RL + L/R + RC ].
inline LyapMatrix closed_form_lyapunov(const InverterParams& params, double alpha) {
    params.validate();
    if (!std::isfinite(alpha) || alpha <= 0.0) {
        throw std::invalid_argument("closed_form_lyapunov: alpha must be positive");
    }
    const double r = params.r, l = params.l, c = params.c;
    return LyapMatrix{0.5 * alpha * (r * c + r * c * c / l),
                      -0.5 * alpha * c,
                      0.5 * alpha * (r * l + l / r + r * c),
                      alpha};
}

}  // namespace hbsim
