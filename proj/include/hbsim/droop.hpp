#pragma once

#include <cmath>
#include <optional>
#include <stdexcept>
#include <vector>

#include "hbsim/params.hpp"
#include "hbsim/reference.hpp"

namespace hbsim {

/// Droop law coefficients and setpoints:
///   omega = omega_star + k_p (p_star - P),  v_m = v_m_star + k_q (q_star - Q).
struct DroopParams {
    double omega_star = 2.0 * M_PI * 60.0;  // rad/s
    double v_m_star = 177.0;                // V
    double k_p = 0.01;                      // (rad/s)/W
    double k_q = 0.0025;                    // V/VAR
    double p_star = 0.0;                    // W
    double q_star = 0.0;                    // VAR

    void validate() const {
        auto fin = [](double v) { return std::isfinite(v); };
        if (!fin(omega_star) || omega_star <= 0.0) {
            throw std::invalid_argument("DroopParams: omega_star must be positive");
        }
        if (!fin(v_m_star) || v_m_star < 0.0) {
            throw std::invalid_argument("DroopParams: v_m_star must be non-negative");
        }
        if (!fin(k_p) || k_p < 0.0) throw std::invalid_argument("DroopParams: k_p must be >= 0");
        if (!fin(k_q) || k_q < 0.0) throw std::invalid_argument("DroopParams: k_q must be >= 0");
        if (!fin(p_star) || !fin(q_star)) {
            throw std::invalid_argument("DroopParams: power setpoints must be finite");
        }
    }
};

struct PowerMeasurement {
    double p = 0.0;  // W
    double q = 0.0;  // VAR
};

/// Ring buffer of (v_c, i_l) samples spanning exactly one fundamental
/// period of the droop setpoint frequency. Measurements are defined only
/// once the buffer has filled.
class PowerWindow {
  public:
    PowerWindow() = default;

    /// Capacity = round(period / sample_period).
    PowerWindow(double omega_star, double sample_period) {
        if (!std::isfinite(omega_star) || omega_star <= 0.0 || !std::isfinite(sample_period) ||
            sample_period <= 0.0) {
            throw std::invalid_argument("PowerWindow: bad omega or sample period");
        }
        const double period = 2.0 * M_PI / omega_star;
        capacity_ = static_cast<std::size_t>(std::llround(period / sample_period));
        if (capacity_ < 4) {
            throw std::invalid_argument("PowerWindow: sample period too coarse for one period");
        }
        v_.assign(capacity_, 0.0);
        i_.assign(capacity_, 0.0);
    }

    std::size_t capacity() const { return capacity_; }
    bool full() const { return count_ >= capacity_; }

    void push(double v, double i) {
        v_[head_] = v;
        i_[head_] = i;
        head_ = (head_ + 1) % capacity_;
        if (count_ < capacity_) ++count_;
    }

    /// Active power: window mean of v(t) i(t). Reactive power: window mean
    /// of v(t - T/4) i(t), the quarter-period-delayed voltage convention
    /// (exact for sinusoids; a leading current yields negative Q). The
    /// delayed index wraps inside the one-period window.
    std::optional<PowerMeasurement> measure() const {
        if (!full()) return std::nullopt;
        const std::size_t quarter = (capacity_ + 2) / 4;  // round(capacity/4)
        double p = 0.0;
        double q = 0.0;
        // head_ is the oldest sample once the window is full.
        for (std::size_t n = 0; n < capacity_; ++n) {
            const std::size_t at = (head_ + n) % capacity_;
            const std::size_t delayed = (head_ + n + capacity_ - quarter) % capacity_;
            p += v_[at] * i_[at];
            q += v_[delayed] * i_[at];
        }
        const double inv = 1.0 / static_cast<double>(capacity_);
        return PowerMeasurement{p * inv, q * inv};
    }

  private:
    std::size_t capacity_ = 0;
    std::size_t head_ = 0;
    std::size_t count_ = 0;
    std::vector<double> v_;
    std::vector<double> i_;
};

inline std::optional<PowerMeasurement> measure_power(const PowerWindow& w) { return w.measure(); }

/// The affine droop law itself.
struct DroopCommand {
    double omega = 0.0;
    double v_m = 0.0;
};

inline DroopCommand droop_update(const DroopParams& dp, double p, double q) {
    return DroopCommand{dp.omega_star + dp.k_p * (dp.p_star - p),
                        dp.v_m_star + dp.k_q * (dp.q_star - q)};
}

struct PowerTargets {
    double p_star = 0.0;
    double q_star = 0.0;
};

/// Setpoint powers that make (omega_star, v_m_star) a true equilibrium of
/// the droop loop: both are the windowed measurement applied to one
/// analytic period of the reference pair, so a perfectly tracked reference
/// reads back exactly (p_star, q_star). For sinusoids this evaluates to
/// p_star = v_m_star^2/(2R) and q_star = -omega C v_m_star^2/2 (the
/// resistive load still draws a quadrature capacitor current, so q_star
/// is not zero).
inline PowerTargets steady_state_targets(const InverterParams& params, double v_m_star,
                                         double omega_star, double sample_period = 1e-6) {
    params.validate();
    if (!std::isfinite(v_m_star) || v_m_star < 0.0) {
        throw std::invalid_argument("steady_state_targets: v_m_star must be non-negative");
    }
    PowerWindow w(omega_star, sample_period);
    const double wc = omega_star * params.c;
    for (std::size_t n = 0; n < w.capacity(); ++n) {
        const double t = static_cast<double>(n) * sample_period;
        const double sn = std::sin(omega_star * t);
        const double cs = std::cos(omega_star * t);
        const double v = v_m_star * sn;
        const double i = v_m_star * (sn / params.r + wc * cs);
        w.push(v, i);
    }
    const auto m = w.measure();
    return m ? PowerTargets{m->p, m->q} : PowerTargets{0.0, 0.0};
}

/// DroopParams with consistent power targets for the given plant.
inline DroopParams make_droop_params(const InverterParams& params, double omega_star,
                                     double v_m_star, double k_p, double k_q,
                                     double sample_period = 1e-6) {
    const PowerTargets t = steady_state_targets(params, v_m_star, omega_star, sample_period);
    DroopParams dp{omega_star, v_m_star, k_p, k_q, t.p_star, t.q_star};
    dp.validate();
    return dp;
}

}  // namespace hbsim
