#pragma once

#include <cmath>

#include "hbsim/core2.hpp"
#include "hbsim/lyapunov.hpp"
#include "hbsim/plant.hpp"
#include "hbsim/reference.hpp"

namespace hbsim {

/// Tracking error e = x - x_ref in plant coordinates.
struct ErrorVec {
    double dv = 0.0;  // V
    double di = 0.0;  // A

    constexpr Vec2 as_vec2() const { return {dv, di}; }
    double norm() const { return std::hypot(dv, di); }
};

/// Everything the switching policy needs, rebuilt wholesale whenever the
/// known plant parameters or the reference change.
struct ControllerState {
    LyapMatrix p;
    Vec2 b{0.0, 0.0};   // input vector of the params the controller believes
    double margin = 1.0;  // cached 1 - v_m ||Gamma||
    double alpha = 1.0;

    /// Lyapunov value V(e) = e^T P e.
    constexpr double lyap_value(const ErrorVec& e) const { return p.value(e.as_vec2()); }
};

/// Build (or rebuild after a known load change) the controller for the
/// given parameters: P from the closed-form Lyapunov solution, B from the
/// plant, margin from the feasibility condition. A margin <= 0 is not an
/// error; the caller decides whether to warn or refuse.
inline ControllerState retune(const InverterParams& params, const ReferenceSpec& spec,
                              double alpha) {
    const StateSpace2 ss = state_matrices(params);
    if (!is_hurwitz(ss.a)) {
        throw std::domain_error("retune: plant matrix is not Hurwitz");
    }
    return ControllerState{closed_form_lyapunov(params, alpha), ss.b,
                           stability_margin(params, spec), alpha};
}

/// Switching policy u = -sign(B^T P e), with sign(0) = +1, so zero error
/// commands u = -1.
inline SwitchCmd decide_switch(const ErrorVec& e, const ControllerState& ctrl) {
    const Vec2 pe = ctrl.p.as_mat2() * e.as_vec2();
    const double s = ctrl.b.dot(pe);
    return s >= 0.0 ? SwitchCmd::minus : SwitchCmd::plus;
}

}  // namespace hbsim
