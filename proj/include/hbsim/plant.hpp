#pragma once

#include <cmath>
#include <stdexcept>

#include "hbsim/core2.hpp"
#include "hbsim/expm.hpp"
#include "hbsim/params.hpp"

namespace hbsim {

/// Plant state: capacitor voltage and inductor current.
struct StateVec {
    double v_c = 0.0;  // V
    double i_l = 0.0;  // A

    constexpr Vec2 as_vec2() const { return {v_c, i_l}; }
    static constexpr StateVec from_vec2(const Vec2& v) { return {v.x1, v.x2}; }
};

/// Binary switch command. +1 puts the positive rail on the filter,
/// -1 the negative rail.
enum class SwitchCmd : int { minus = -1, plus = +1 };

constexpr int value(SwitchCmd u) { return static_cast<int>(u); }

/// Continuous-time state-space pair of the switched model
/// x' = A x + B u, u in {+1, -1}.
struct StateSpace2 {
    Mat2 a;
    Vec2 b;
};

/// A = [ -1/(RC), 1/C; -1/L, 0 ], B = (0, V_dc/(2L)).
inline StateSpace2 state_matrices(const InverterParams& p) {
    p.validate();
    return StateSpace2{{-1.0 / (p.r * p.c), 1.0 / p.c, -1.0 / p.l, 0.0},
                       {0.0, p.v_dc / (2.0 * p.l)}};
}

/// Propagate the plant exactly over one hold interval with u constant.
inline StateVec step(const StateVec& x, SwitchCmd u, const DiscreteMap& map) {
    const Vec2 next = map.phi * x.as_vec2() + map.gd * static_cast<double>(value(u));
    return StateVec::from_vec2(next);
}

}  // namespace hbsim
