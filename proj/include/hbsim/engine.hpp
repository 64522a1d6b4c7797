#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <variant>
#include <vector>

#include "hbsim/controller.hpp"
#include "hbsim/droop.hpp"
#include "hbsim/expm.hpp"
#include "hbsim/lyapunov.hpp"
#include "hbsim/params.hpp"
#include "hbsim/plant.hpp"
#include "hbsim/reference.hpp"

namespace hbsim {

/// Load step. `known = true` retunes the controller and the reference map
/// at the event instant; `known = false` changes only the physical plant,
/// leaving the controller and reference stale.
struct LoadChange {
    double r_new = 50.0;
    bool known = true;
};

/// New droop setpoints (amplitude and frequency). With droop active this
/// retargets the droop loop, including its power setpoints; without droop
/// it is applied directly to the reference.
struct SetpointChange {
    double v_m_star = 177.0;
    double omega_star = 2.0 * M_PI * 60.0;
};

/// Turn the droop outer loop on mid-run.
struct DroopEnable {
    DroopParams droop;
};

struct Event {
    double t = 0.0;
    std::variant<LoadChange, SetpointChange, DroopEnable> action;
};

/// Complete description of one deterministic simulation.
struct Scenario {
    InverterParams params;
    ReferenceSpec spec;
    double alpha = 1.0;
    StateVec initial_state{70.0, 0.0};
    std::optional<OscState> initial_osc;  // defaults to (0, v_m): phase zero
    double t_end = 4.0;
    double control_period = 1e-6;
    std::vector<Event> events;
    std::optional<DroopParams> droop;
    std::int64_t record_decimation = 10;
};

struct TraceRow {
    double t;
    double v_c;
    double i_l;
    double v_ref;
    double i_ref;
    int u;
    double lyap_v;
    double p_meas;
    double q_meas;
    double omega_cmd;
    double v_m_cmd;
};

using Trace = std::vector<TraceRow>;

struct Metrics {
    std::optional<double> rms_error_final_period;  // V, over the last fundamental period
    double max_abs_error = 0.0;                    // V
    std::optional<double> settling_time;           // s, 2%-of-amplitude band
    bool diverged = false;
    std::optional<double> diverged_time;
    std::vector<double> period_peak_abs_error;  // V, per full fundamental period
};

struct RunResult {
    Trace trace;
    Metrics metrics;
};

/// e = x - Pi z.
inline ErrorVec tracking_error(const StateVec& x, const OscState& z, const Mat2& pi) {
    const StateVec ref = reference_state(z, pi);
    return ErrorVec{x.v_c - ref.v_c, x.i_l - ref.i_l};
}

/// Per-tick view passed to simulation observers, sampled at the decision
/// instant (before the hold interval is applied).
struct TickInfo {
    std::int64_t tick;
    double t;
    StateVec x;
    OscState z;
    StateVec x_ref;
    ErrorVec e;
    double lyap_v;
    SwitchCmd u;
    double omega_cmd;
    double v_m_cmd;
};

namespace detail {

inline void validate_scenario(const Scenario& sc) {
    sc.params.validate();
    sc.spec.validate();
    if (!std::isfinite(sc.alpha) || sc.alpha <= 0.0) {
        throw std::invalid_argument("Scenario: alpha must be positive");
    }
    if (!std::isfinite(sc.t_end) || sc.t_end <= 0.0) {
        throw std::invalid_argument("Scenario: t_end must be positive");
    }
    if (!std::isfinite(sc.control_period) || sc.control_period <= 0.0) {
        throw std::invalid_argument("Scenario: control_period must be positive");
    }
    if (sc.record_decimation < 1) {
        throw std::invalid_argument("Scenario: record_decimation must be >= 1");
    }
    if (!std::isfinite(sc.initial_state.v_c) || !std::isfinite(sc.initial_state.i_l)) {
        throw std::invalid_argument("Scenario: initial state must be finite");
    }
    if (!is_hurwitz(state_matrices(sc.params).a)) {
        throw std::domain_error("Scenario: plant matrix is not Hurwitz");
    }
    double prev_t = 0.0;
    InverterParams p = sc.params;
    for (const auto& ev : sc.events) {
        if (!std::isfinite(ev.t) || ev.t < 0.0 || ev.t > sc.t_end) {
            throw std::invalid_argument("Scenario: event time outside [0, t_end]");
        }
        if (ev.t < prev_t) throw std::invalid_argument("Scenario: events must be sorted by time");
        prev_t = ev.t;
        if (const auto* lc = std::get_if<LoadChange>(&ev.action)) {
            if (!std::isfinite(lc->r_new) || lc->r_new <= 0.0) {
                throw std::invalid_argument("Scenario: load change r_new must be positive");
            }
            p.r = lc->r_new;
            if (!is_hurwitz(state_matrices(p).a)) {
                throw std::domain_error("Scenario: plant matrix not Hurwitz after load change");
            }
        } else if (const auto* spc = std::get_if<SetpointChange>(&ev.action)) {
            if (!std::isfinite(spc->v_m_star) || spc->v_m_star < 0.0 ||
                !std::isfinite(spc->omega_star) || spc->omega_star <= 0.0) {
                throw std::invalid_argument("Scenario: bad setpoint change");
            }
        } else if (const auto* de = std::get_if<DroopEnable>(&ev.action)) {
            de->droop.validate();
        }
    }
    if (sc.droop) sc.droop->validate();
}

}  // namespace detail

/// Deterministic closed-loop run. Each control tick: sample the state,
/// form the tracking error, decide the switch, then propagate the plant
/// exactly over one hold interval and rotate the oscillator. Events apply
/// at the first tick at or after their timestamp, before that tick's
/// decision. The observer is invoked once per tick at the decision point.
template <typename Observer>
RunResult simulate_observed(const Scenario& sc, Observer&& observe) {
    detail::validate_scenario(sc);

    const double h = sc.control_period;
    const std::int64_t n_ticks = std::llround(sc.t_end / h);
    if (n_ticks < 1) throw std::invalid_argument("Scenario: t_end shorter than one control period");

    // Physical plant vs what the controller believes; they drift apart on
    // unknown load changes.
    InverterParams actual = sc.params;
    InverterParams known = sc.params;

    double omega_cmd = sc.spec.omega;
    double v_m_cmd = sc.spec.v_m;

    StateVec x = sc.initial_state;
    OscState z = sc.initial_osc ? *sc.initial_osc : OscState{0.0, sc.spec.v_m};

    ControllerState ctrl = retune(known, sc.spec, sc.alpha);
    Mat2 pi = reference_map(known, omega_cmd);
    DiscreteMap map = zoh_discretize(state_matrices(actual).a, state_matrices(actual).b, h);
    OscRotation rot(omega_cmd, h);

    // Droop bookkeeping.
    bool droop_on = sc.droop.has_value();
    DroopParams dp = droop_on ? *sc.droop : DroopParams{};
    PowerWindow window;
    std::int64_t pushes = 0;
    if (droop_on) window = PowerWindow(dp.omega_star, h);
    double p_meas = 0.0;
    double q_meas = 0.0;

    // Metrics bookkeeping at full rate, regardless of trace decimation.
    const std::int64_t ticks_per_period =
        std::max<std::int64_t>(1, std::llround(2.0 * M_PI / (sc.spec.omega * h)));
    std::vector<double> ev_ring(static_cast<std::size_t>(ticks_per_period), 0.0);
    Metrics metrics;
    double period_peak = 0.0;
    std::int64_t last_violation = -1;  // settling tracker

    Trace trace;
    trace.reserve(static_cast<std::size_t>(n_ticks / sc.record_decimation + 2));

    std::size_t next_event = 0;
    std::vector<std::int64_t> event_ticks(sc.events.size());
    for (std::size_t i = 0; i < sc.events.size(); ++i) {
        event_ticks[i] = static_cast<std::int64_t>(std::ceil(sc.events[i].t / h - 1e-9));
    }

    auto refresh_margin = [&]() {
        ctrl.margin = 1.0 - v_m_cmd * feedforward_gain(known, omega_cmd).norm();
    };

    std::int64_t k = 0;
    for (; k < n_ticks; ++k) {
        const double t = static_cast<double>(k) * h;

        while (next_event < sc.events.size() && event_ticks[next_event] <= k) {
            const Event& ev = sc.events[next_event++];
            if (const auto* lc = std::get_if<LoadChange>(&ev.action)) {
                actual.r = lc->r_new;
                const StateSpace2 ss = state_matrices(actual);
                map = zoh_discretize(ss.a, ss.b, h);
                if (lc->known) {
                    known.r = lc->r_new;
                    ctrl = retune(known, ReferenceSpec{v_m_cmd, omega_cmd}, sc.alpha);
                    pi = reference_map(known, omega_cmd);
                }
            } else if (const auto* spc = std::get_if<SetpointChange>(&ev.action)) {
                if (droop_on) {
                    dp.v_m_star = spc->v_m_star;
                    dp.omega_star = spc->omega_star;
                    const PowerTargets targets =
                        steady_state_targets(known, dp.v_m_star, dp.omega_star, h);
                    dp.p_star = targets.p_star;
                    dp.q_star = targets.q_star;
                } else {
                    omega_cmd = spc->omega_star;
                    v_m_cmd = spc->v_m_star;
                    z = with_amplitude(z, v_m_cmd);
                    pi = reference_map(known, omega_cmd);
                    rot = OscRotation(omega_cmd, h);
                    refresh_margin();
                }
            } else if (const auto* de = std::get_if<DroopEnable>(&ev.action)) {
                droop_on = true;
                dp = de->droop;
                window = PowerWindow(dp.omega_star, h);
                pushes = 0;
            }
        }

        const StateVec x_ref = reference_state(z, pi);
        const ErrorVec e{x.v_c - x_ref.v_c, x.i_l - x_ref.i_l};
        const double lyap_v = ctrl.lyap_value(e);

        // Divergence ceiling guards the runaway cases without overflow.
        if (v_m_cmd > 0.0 && std::fabs(x.v_c) > 100.0 * v_m_cmd) {
            metrics.diverged = true;
            metrics.diverged_time = t;
            break;
        }

        const double abs_ev = std::fabs(e.dv);
        metrics.max_abs_error = std::max(metrics.max_abs_error, abs_ev);
        period_peak = std::max(period_peak, abs_ev);
        if ((k + 1) % ticks_per_period == 0) {
            metrics.period_peak_abs_error.push_back(period_peak);
            period_peak = 0.0;
        }
        ev_ring[static_cast<std::size_t>(k % ticks_per_period)] = e.dv;
        if (abs_ev >= 0.02 * v_m_cmd) last_violation = k;

        const SwitchCmd u = decide_switch(e, ctrl);

        if (k % sc.record_decimation == 0) {
            trace.push_back(TraceRow{t, x.v_c, x.i_l, x_ref.v_c, x_ref.i_l, value(u), lyap_v,
                                     p_meas, q_meas, omega_cmd, v_m_cmd});
        }
        observe(TickInfo{k, t, x, z, x_ref, e, lyap_v, u, omega_cmd, v_m_cmd});

        if (droop_on) {
            window.push(x.v_c, x.i_l);
            ++pushes;
            if (window.full() && pushes % static_cast<std::int64_t>(window.capacity()) == 0) {
                const PowerMeasurement pm = *window.measure();
                p_meas = pm.p;
                q_meas = pm.q;
                const DroopCommand cmd = droop_update(dp, pm.p, pm.q);
                omega_cmd = cmd.omega;
                v_m_cmd = std::max(0.0, cmd.v_m);
                z = with_amplitude(z, v_m_cmd);
                pi = reference_map(known, omega_cmd);
                rot = OscRotation(omega_cmd, h);
                refresh_margin();
            }
        }

        x = step(x, u, map);
        z = rot.apply(z);
    }

    if (!metrics.diverged) {
        if (k >= ticks_per_period) {
            double sum_sq = 0.0;
            for (double v : ev_ring) sum_sq += v * v;
            metrics.rms_error_final_period = std::sqrt(sum_sq / static_cast<double>(ticks_per_period));
        }
        if (last_violation < k - 1) {
            metrics.settling_time = static_cast<double>(last_violation + 1) * h;
        }
    }

    return RunResult{std::move(trace), std::move(metrics)};
}

inline RunResult simulate(const Scenario& sc) {
    return simulate_observed(sc, [](const TickInfo&) {});
}

/// Recompute metrics from a recorded trace (meaningful at decimation 1;
/// coarser traces give the same quantities sampled coarser). A trace
/// shorter than one fundamental period yields only the max error.
inline Metrics compute_metrics(const Trace& trace, const ReferenceSpec& spec,
                               bool diverged = false) {
    if (trace.empty()) throw std::invalid_argument("compute_metrics: empty trace");
    spec.validate();
    Metrics m;
    m.diverged = diverged;
    const double period = 2.0 * M_PI / spec.omega;
    const double t_last = trace.back().t;

    double peak = 0.0;
    std::size_t bucket = 0;
    std::int64_t last_violation = -1;
    double sum_sq = 0.0;
    std::size_t n_final = 0;
    for (std::size_t i = 0; i < trace.size(); ++i) {
        const TraceRow& row = trace[i];
        const double ev = row.v_c - row.v_ref;
        const double abs_ev = std::fabs(ev);
        m.max_abs_error = std::max(m.max_abs_error, abs_ev);
        const std::size_t b = static_cast<std::size_t>(std::floor(row.t / period + 1e-9));
        if (b != bucket) {
            m.period_peak_abs_error.push_back(peak);
            peak = 0.0;
            bucket = b;
        }
        peak = std::max(peak, abs_ev);
        if (abs_ev >= 0.02 * row.v_m_cmd) last_violation = static_cast<std::int64_t>(i);
        if (row.t > t_last - period) {
            sum_sq += ev * ev;
            ++n_final;
        }
    }
    if (diverged) return m;
    if (t_last - trace.front().t >= period - 1e-12 && n_final > 0) {
        m.rms_error_final_period = std::sqrt(sum_sq / static_cast<double>(n_final));
    }
    if (last_violation < static_cast<std::int64_t>(trace.size()) - 1) {
        m.settling_time =
            last_violation < 0 ? 0.0 : trace[static_cast<std::size_t>(last_violation) + 1].t;
    }
    return m;
}

}  // namespace hbsim
