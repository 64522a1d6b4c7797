#pragma once

#include <atomic>
#include <cmath>
#include <fstream>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "hbsim/engine.hpp"
#include "hbsim/trace_io.hpp"

namespace hbsim {

enum class SweepAxis { load_r, v_m, omega };

/// One-axis parameter sweep around a base scenario. For load_r the value
/// is applied as a load-change event mid-run (known iff retune), matching
/// the robustness experiment; for v_m / omega the reference itself is
/// rebuilt and the run starts on-reference unless the base pins a state.
struct SweepSpec {
    Scenario base;
    SweepAxis axis = SweepAxis::v_m;
    std::vector<double> values;
    bool retune = false;
    double load_event_time = 1.0;  // load_r axis only

    void validate() const {
        if (values.empty()) throw std::invalid_argument("SweepSpec: values must be non-empty");
        for (double v : values) {
            if (!std::isfinite(v) || v <= 0.0) {
                throw std::invalid_argument("SweepSpec: values must be positive");
            }
        }
    }
};

struct SweepPoint {
    double value = 0.0;
    Metrics metrics;
    double predicted_margin = 0.0;
};

struct SweepResult {
    SweepAxis axis = SweepAxis::v_m;
    std::vector<SweepPoint> points;
};

namespace detail {

inline Scenario scenario_for_value(const SweepSpec& spec, double value) {
    Scenario sc = spec.base;
    switch (spec.axis) {
        case SweepAxis::load_r:
            sc.events.push_back(Event{spec.load_event_time, LoadChange{value, spec.retune}});
            std::sort(sc.events.begin(), sc.events.end(),
                      [](const Event& a, const Event& b) { return a.t < b.t; });
            break;
        case SweepAxis::v_m:
            sc.spec.v_m = value;
            break;
        case SweepAxis::omega:
            sc.spec.omega = value;
            break;
    }
    return sc;
}

inline double margin_for_value(const SweepSpec& spec, double value) {
    InverterParams p = spec.base.params;
    ReferenceSpec r = spec.base.spec;
    switch (spec.axis) {
        case SweepAxis::load_r:
            p.r = value;
            break;
        case SweepAxis::v_m:
            r.v_m = value;
            break;
        case SweepAxis::omega:
            r.omega = value;
            break;
    }
    return stability_margin(p, r);
}

}  // namespace detail

/// Run every sweep point; points are independent, so they are mapped over
/// a small worker pool and merged by index (the result does not depend on
/// scheduling). Diverged points are recorded, not fatal.
inline SweepResult sweep(const SweepSpec& spec, unsigned max_threads = 0) {
    spec.validate();
    detail::validate_scenario(spec.base);

    const std::size_t n = spec.values.size();
    std::vector<SweepPoint> points(n);

    unsigned workers = max_threads ? max_threads : std::thread::hardware_concurrency();
    if (workers == 0) workers = 1;
    workers = static_cast<unsigned>(std::min<std::size_t>(workers, n));

    std::atomic<std::size_t> next{0};
    std::vector<std::string> errors(n);
    auto work = [&]() {
        for (std::size_t i = next.fetch_add(1); i < n; i = next.fetch_add(1)) {
            try {
                const double value = spec.values[i];
                Scenario sc = detail::scenario_for_value(spec, value);
                sc.record_decimation = std::max<std::int64_t>(sc.record_decimation, 100);
                RunResult rr = simulate(sc);
                points[i] = SweepPoint{value, std::move(rr.metrics),
                                       detail::margin_for_value(spec, value)};
            } catch (const std::exception& ex) {
                errors[i] = ex.what();
            }
        }
    };

    if (workers <= 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(workers);
        for (unsigned i = 0; i < workers; ++i) pool.emplace_back(work);
        for (auto& th : pool) th.join();
    }
    for (const auto& err : errors) {
        if (!err.empty()) throw std::runtime_error("sweep point failed: " + err);
    }

    return SweepResult{spec.axis, std::move(points)};
}

/// Axis value where v_m * ||Gamma(omega)|| crosses 1, found by bisection
/// to 1e-6 relative. For the omega axis the root above the LC resonance is
/// returned (||Gamma|| dips to its minimum at resonance and grows beyond).
/// nullopt when the condition never binds in the search interval.
inline std::optional<double> stability_boundary(const InverterParams& params, SweepAxis axis,
                                                double fixed_other) {
    params.validate();
    if (axis == SweepAxis::load_r) {
        throw std::invalid_argument("stability_boundary: axis must be v_m or omega");
    }
    if (!std::isfinite(fixed_other) || fixed_other <= 0.0) {
        throw std::invalid_argument("stability_boundary: fixed value must be positive");
    }

    auto excess = [&](double v_m, double omega) {
        return v_m * feedforward_gain(params, omega).norm() - 1.0;
    };

    double lo, hi;
    if (axis == SweepAxis::v_m) {
        const double gn = feedforward_gain(params, fixed_other).norm();
        if (gn <= 0.0) return std::nullopt;
        lo = 0.0;
        hi = 2.0 / gn;
        if (excess(hi, fixed_other) <= 0.0) return std::nullopt;
    } else {
        const double resonance = 1.0 / std::sqrt(params.l * params.c);
        if (excess(fixed_other, resonance) >= 0.0) {
            // Condition already violated at the ||Gamma|| minimum: the
            // crossing (if any) sits below resonance.
            lo = resonance * 1e-9;
            hi = resonance;
            if (excess(fixed_other, lo) >= 0.0) return std::nullopt;
        } else {
            lo = resonance;
            hi = 1e9;
            if (excess(fixed_other, hi) <= 0.0) return std::nullopt;
        }
    }

    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double f = (axis == SweepAxis::v_m) ? excess(mid, fixed_other)
                                                  : excess(fixed_other, mid);
        if (f < 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
        if (hi - lo <= 1e-7 * std::max(1.0, std::fabs(mid))) break;
    }
    return 0.5 * (lo + hi);
}

inline const char* axis_name(SweepAxis axis) {
    switch (axis) {
        case SweepAxis::load_r: return "load_r";
        case SweepAxis::v_m: return "v_m";
        case SweepAxis::omega: return "omega";
    }
    return "?";
}

inline void write_sweep_csv(std::ostream& os, const SweepResult& result) {
    os << axis_name(result.axis) << ",rms_error,max_error,diverged,predicted_margin\n";
    for (const SweepPoint& p : result.points) {
        os << detail::fmt_g17(p.value) << ','
           << (p.metrics.rms_error_final_period
                   ? detail::fmt_g17(*p.metrics.rms_error_final_period)
                   : std::string("nan"))
           << ',' << detail::fmt_g17(p.metrics.max_abs_error) << ','
           << (p.metrics.diverged ? 1 : 0) << ',' << detail::fmt_g17(p.predicted_margin) << '\n';
    }
}

inline void write_sweep_csv(const std::string& path, const SweepResult& result) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot open for writing: " + path);
    write_sweep_csv(os, result);
    if (!os) throw std::runtime_error("write failed: " + path);
}

}  // namespace hbsim
