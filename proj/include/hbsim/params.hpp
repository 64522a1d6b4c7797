#pragma once

#include <cmath>
#include <stdexcept>

namespace hbsim {

/// Physical constants of the half-bridge inverter and its load.
struct InverterParams {
    double r = 50.0;       // load resistance, ohm
    double l = 450e-6;     // filter inductance, H
    double c = 2.5e-3;     // filter capacitance, F
    double v_dc = 1200.0;  // DC supply voltage, V

    void validate() const {
        auto pos = [](double v) { return std::isfinite(v) && v > 0.0; };
        if (!pos(r)) throw std::invalid_argument("InverterParams: r must be positive and finite");
        if (!pos(l)) throw std::invalid_argument("InverterParams: l must be positive and finite");
        if (!pos(c)) throw std::invalid_argument("InverterParams: c must be positive and finite");
        if (!pos(v_dc)) throw std::invalid_argument("InverterParams: v_dc must be positive and finite");
    }
};

}  // namespace hbsim
