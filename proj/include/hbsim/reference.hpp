#pragma once

#include <cmath>
#include <stdexcept>

#include "hbsim/core2.hpp"
#include "hbsim/params.hpp"
#include "hbsim/plant.hpp"

namespace hbsim {

/// Target sinusoid: v_ref(t) = v_m sin(omega t).
struct ReferenceSpec {
    double v_m = 177.0;                    // amplitude, V
    double omega = 2.0 * M_PI * 60.0;      // angular frequency, rad/s

    void validate() const {
        if (!std::isfinite(v_m) || v_m < 0.0) {
            throw std::invalid_argument("ReferenceSpec: v_m must be non-negative and finite");
        }
        if (!std::isfinite(omega) || omega <= 0.0) {
            throw std::invalid_argument("ReferenceSpec: omega must be positive and finite");
        }
    }
};

/// Oscillator state z with ||z|| equal to the commanded amplitude;
/// z(t) = (v_m sin(omega t), v_m cos(omega t)).
struct OscState {
    double z1 = 0.0;
    double z2 = 0.0;

    constexpr Vec2 as_vec2() const { return {z1, z2}; }
    double amplitude() const { return std::hypot(z1, z2); }
};

/// Feed-forward input row: u_ff(t) = Gamma z(t) is the continuous input
/// that would hold the plant exactly on the reference.
struct GainRow {
    double g1 = 0.0;
    double g2 = 0.0;

    double norm() const { return std::hypot(g1, g2); }
    constexpr double dot(const Vec2& z) const { return g1 * z.x1 + g2 * z.x2; }
};

/// Advance the oscillator by the exact rotation over h seconds.
/// Norm-preserving by construction, unlike a numerical integration of
/// z' = Theta z.
inline OscState oscillator_step(const OscState& z, double omega, double h) {
    if (!std::isfinite(omega) || !std::isfinite(h) || h < 0.0) {
        throw std::invalid_argument("oscillator_step: bad omega or step");
    }
    const double c = std::cos(omega * h);
    const double s = std::sin(omega * h);
    return OscState{c * z.z1 + s * z.z2, -s * z.z1 + c * z.z2};
}

/// Precomputed rotation for the fixed-rate loop; equivalent to
/// oscillator_step with the same (omega, h).
struct OscRotation {
    double c = 1.0;
    double s = 0.0;

    OscRotation() = default;
    OscRotation(double omega, double h) : c(std::cos(omega * h)), s(std::sin(omega * h)) {}
    constexpr OscState apply(const OscState& z) const {
        return OscState{c * z.z1 + s * z.z2, -s * z.z1 + c * z.z2};
    }
};

/// Map from oscillator state to plant reference: x_ref = Pi z with
/// Pi = [ 1, 0; 1/R, omega C ].
inline Mat2 reference_map(const InverterParams& p, double omega) {
    p.validate();
    return Mat2{1.0, 0.0, 1.0 / p.r, omega * p.c};
}

/// Feed-forward row defined by Pi Theta = A Pi + B Gamma:
/// Gamma = (2/V_dc) [ 1 - omega^2 L C, omega L / R ], so that u = Gamma z
/// is the continuous input holding the plant on x_ref = Pi z. g1 weights
/// the sin component of z, g2 the cos component; ||Gamma|| is what the
/// feasibility condition uses.
inline GainRow feedforward_gain(const InverterParams& p, double omega) {
    p.validate();
    return GainRow{2.0 * (1.0 - omega * omega * p.l * p.c) / p.v_dc,
                   2.0 * omega * p.l / (p.v_dc * p.r)};
}

/// 1 - v_m ||Gamma||: positive iff the switching law's feasibility
/// condition ||Gamma|| < 1/v_m holds.
inline double stability_margin(const InverterParams& p, const ReferenceSpec& spec) {
    spec.validate();
    return 1.0 - spec.v_m * feedforward_gain(p, spec.omega).norm();
}

/// x_ref = Pi z.
inline StateVec reference_state(const OscState& z, const Mat2& pi) {
    return StateVec::from_vec2(pi * z.as_vec2());
}

/// Rescale the oscillator to a new amplitude, preserving phase.
inline OscState with_amplitude(const OscState& z, double v_m_new) {
    if (!std::isfinite(v_m_new) || v_m_new < 0.0) {
        throw std::invalid_argument("with_amplitude: amplitude must be non-negative");
    }
    if (v_m_new == 0.0) return OscState{0.0, 0.0};
    const double n = z.amplitude();
    if (n == 0.0) {
        throw std::domain_error("with_amplitude: zero oscillator state has no phase to preserve");
    }
    const double f = v_m_new / n;
    return OscState{z.z1 * f, z.z2 * f};
}

}  // namespace hbsim
