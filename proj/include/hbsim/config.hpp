#pragma once

#include <cctype>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "hbsim/analysis.hpp"
#include "hbsim/droop.hpp"
#include "hbsim/engine.hpp"

namespace hbsim {

/// Configuration error with enough context to point at the offending
/// key or line.
class ConfigError : public std::runtime_error {
  public:
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

/// Flat key-value scenario configuration. Every physical key carries its
/// unit in the name. Missing keys take the nominal bench values; unknown
/// keys are rejected.
struct Config {
    // plant
    double r_ohm = 50.0;
    double l_henry = 450e-6;
    double c_farad = 2.5e-3;
    double v_dc_volt = 1200.0;
    // reference
    double f_hz = 60.0;
    double v_m_volt = 177.0;
    // controller / simulation
    double alpha = 1.0;
    double v_c0_volt = 70.0;
    double i_l0_amp = 0.0;
    double t_end_s = 4.0;
    double control_period_s = 1e-6;
    long decimation = 10;
    // droop loop
    bool droop = false;
    std::optional<double> omega_star_radps;  // default: 2 pi f_hz
    std::optional<double> v_m_star_volt;     // default: v_m_volt
    double kp_radps_per_w = 0.01;
    double kq_volt_per_var = 0.0025;
    // sweep
    std::string sweep_axis = "v_m";
    double sweep_start = 100.0;
    double sweep_stop = 900.0;
    double sweep_step = 50.0;
    bool sweep_retune = false;
    // optional scheduled events
    std::optional<double> load_t_s;
    std::optional<double> load_r_ohm;
    bool load_known = true;
    std::optional<double> setpoint_t_s;
    std::optional<double> setpoint_v_m_star_volt;
    std::optional<double> setpoint_omega_star_radps;

    double omega() const { return 2.0 * M_PI * f_hz; }

    InverterParams params() const { return InverterParams{r_ohm, l_henry, c_farad, v_dc_volt}; }

    ReferenceSpec reference() const { return ReferenceSpec{v_m_volt, omega()}; }

    DroopParams droop_params() const {
        const double ws = omega_star_radps.value_or(omega());
        const double vs = v_m_star_volt.value_or(v_m_volt);
        return make_droop_params(params(), ws, vs, kp_radps_per_w, kq_volt_per_var,
                                 control_period_s);
    }

    /// Assemble the scenario, including any events configured here.
    Scenario scenario() const {
        Scenario sc;
        sc.params = params();
        sc.spec = reference();
        sc.alpha = alpha;
        sc.initial_state = StateVec{v_c0_volt, i_l0_amp};
        sc.t_end = t_end_s;
        sc.control_period = control_period_s;
        sc.record_decimation = decimation;
        if (droop) sc.droop = droop_params();
        if (load_t_s || load_r_ohm) {
            if (!load_t_s || !load_r_ohm) {
                throw ConfigError("config: load_t_s and load_r_ohm must be given together");
            }
            sc.events.push_back(Event{*load_t_s, LoadChange{*load_r_ohm, load_known}});
        }
        if (setpoint_t_s || setpoint_v_m_star_volt || setpoint_omega_star_radps) {
            if (!setpoint_t_s) {
                throw ConfigError("config: setpoint_t_s required with setpoint changes");
            }
            sc.events.push_back(Event{
                *setpoint_t_s,
                SetpointChange{setpoint_v_m_star_volt.value_or(v_m_star_volt.value_or(v_m_volt)),
                               setpoint_omega_star_radps.value_or(
                                   omega_star_radps.value_or(omega()))}});
        }
        std::sort(sc.events.begin(), sc.events.end(),
                  [](const Event& a, const Event& b) { return a.t < b.t; });
        return sc;
    }

    SweepSpec sweep_spec() const {
        SweepSpec spec;
        spec.base = scenario();
        if (sweep_axis == "load_r") {
            spec.axis = SweepAxis::load_r;
        } else if (sweep_axis == "v_m") {
            spec.axis = SweepAxis::v_m;
        } else if (sweep_axis == "omega") {
            spec.axis = SweepAxis::omega;
        } else {
            throw ConfigError("config: sweep_axis must be load_r, v_m or omega");
        }
        spec.retune = sweep_retune;
        if (!(std::isfinite(sweep_start) && std::isfinite(sweep_stop) &&
              std::isfinite(sweep_step) && sweep_step > 0.0 && sweep_stop >= sweep_start)) {
            throw ConfigError("config: bad sweep range (sweep_start/sweep_stop/sweep_step)");
        }
        for (double v = sweep_start; v <= sweep_stop + 1e-9 * sweep_step; v += sweep_step) {
            spec.values.push_back(v);
        }
        return spec;
    }

    void validate() const {
        auto require = [](bool ok, const char* key, const char* what) {
            if (!ok) throw ConfigError(std::string("config: ") + key + " " + what);
        };
        require(std::isfinite(r_ohm) && r_ohm > 0, "r_ohm", "must be positive");
        require(std::isfinite(l_henry) && l_henry > 0, "l_henry", "must be positive");
        require(std::isfinite(c_farad) && c_farad > 0, "c_farad", "must be positive");
        require(std::isfinite(v_dc_volt) && v_dc_volt > 0, "v_dc_volt", "must be positive");
        require(std::isfinite(f_hz) && f_hz > 0, "f_hz", "must be positive");
        require(std::isfinite(v_m_volt) && v_m_volt >= 0, "v_m_volt", "must be non-negative");
        require(std::isfinite(alpha) && alpha > 0, "alpha", "must be positive");
        require(std::isfinite(v_c0_volt), "v_c0_volt", "must be finite");
        require(std::isfinite(i_l0_amp), "i_l0_amp", "must be finite");
        require(std::isfinite(t_end_s) && t_end_s > 0, "t_end_s", "must be positive");
        require(std::isfinite(control_period_s) && control_period_s > 0, "control_period_s",
                "must be positive");
        require(decimation >= 1, "decimation", "must be >= 1");
        require(std::isfinite(kp_radps_per_w) && kp_radps_per_w >= 0, "kp_radps_per_w",
                "must be >= 0");
        require(std::isfinite(kq_volt_per_var) && kq_volt_per_var >= 0, "kq_volt_per_var",
                "must be >= 0");
        if (omega_star_radps) {
            require(std::isfinite(*omega_star_radps) && *omega_star_radps > 0,
                    "omega_star_radps", "must be positive");
        }
        if (v_m_star_volt) {
            require(std::isfinite(*v_m_star_volt) && *v_m_star_volt >= 0, "v_m_star_volt",
                    "must be non-negative");
        }
        if (load_r_ohm) {
            require(std::isfinite(*load_r_ohm) && *load_r_ohm > 0, "load_r_ohm",
                    "must be positive");
        }
        if (load_t_s) require(std::isfinite(*load_t_s) && *load_t_s >= 0, "load_t_s", "must be >= 0");
        if (setpoint_t_s) {
            require(std::isfinite(*setpoint_t_s) && *setpoint_t_s >= 0, "setpoint_t_s",
                    "must be >= 0");
        }
    }
};

namespace detail {

inline std::string trim(const std::string& s) {
    std::size_t b = 0;
    std::size_t e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

inline double parse_double(const std::string& text, const std::string& where) {
    const std::string t = trim(text);
    if (t.empty()) throw ConfigError(where + ": empty value");
    char* end = nullptr;
    const double v = std::strtod(t.c_str(), &end);
    if (end != t.c_str() + t.size()) throw ConfigError(where + ": not a number: '" + t + "'");
    return v;
}

inline long parse_long(const std::string& text, const std::string& where) {
    const double v = parse_double(text, where);
    if (v != std::floor(v)) throw ConfigError(where + ": expected an integer");
    return static_cast<long>(v);
}

inline bool parse_bool(const std::string& text, const std::string& where) {
    const std::string t = trim(text);
    if (t == "on" || t == "true" || t == "1") return true;
    if (t == "off" || t == "false" || t == "0") return false;
    throw ConfigError(where + ": expected on/off, got '" + t + "'");
}

}  // namespace detail

/// Parse a key-value config stream ('#' starts a comment, blank lines
/// ignored). Unknown keys are rejected with the line number.
inline Config parse_config(std::istream& is, const std::string& name = "<config>") {
    Config cfg;
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        const std::size_t hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        const std::string stripped = detail::trim(line);
        if (stripped.empty()) continue;
        const std::size_t eq = stripped.find('=');
        const std::string where = name + ":" + std::to_string(lineno);
        if (eq == std::string::npos) throw ConfigError(where + ": expected 'key = value'");
        const std::string key = detail::trim(stripped.substr(0, eq));
        const std::string value = detail::trim(stripped.substr(eq + 1));
        if (value.empty()) continue;  // blank value keeps the default

        const std::string ctx = where + " (" + key + ")";
        if (key == "r_ohm") cfg.r_ohm = detail::parse_double(value, ctx);
        else if (key == "l_henry") cfg.l_henry = detail::parse_double(value, ctx);
        else if (key == "c_farad") cfg.c_farad = detail::parse_double(value, ctx);
        else if (key == "v_dc_volt") cfg.v_dc_volt = detail::parse_double(value, ctx);
        else if (key == "f_hz") cfg.f_hz = detail::parse_double(value, ctx);
        else if (key == "v_m_volt") cfg.v_m_volt = detail::parse_double(value, ctx);
        else if (key == "alpha") cfg.alpha = detail::parse_double(value, ctx);
        else if (key == "v_c0_volt") cfg.v_c0_volt = detail::parse_double(value, ctx);
        else if (key == "i_l0_amp") cfg.i_l0_amp = detail::parse_double(value, ctx);
        else if (key == "t_end_s") cfg.t_end_s = detail::parse_double(value, ctx);
        else if (key == "control_period_s") cfg.control_period_s = detail::parse_double(value, ctx);
        else if (key == "decimation") cfg.decimation = detail::parse_long(value, ctx);
        else if (key == "droop") cfg.droop = detail::parse_bool(value, ctx);
        else if (key == "omega_star_radps") cfg.omega_star_radps = detail::parse_double(value, ctx);
        else if (key == "v_m_star_volt") cfg.v_m_star_volt = detail::parse_double(value, ctx);
        else if (key == "kp_radps_per_w") cfg.kp_radps_per_w = detail::parse_double(value, ctx);
        else if (key == "kq_volt_per_var") cfg.kq_volt_per_var = detail::parse_double(value, ctx);
        else if (key == "sweep_axis") cfg.sweep_axis = value;
        else if (key == "sweep_start") cfg.sweep_start = detail::parse_double(value, ctx);
        else if (key == "sweep_stop") cfg.sweep_stop = detail::parse_double(value, ctx);
        else if (key == "sweep_step") cfg.sweep_step = detail::parse_double(value, ctx);
        else if (key == "sweep_retune") cfg.sweep_retune = detail::parse_bool(value, ctx);
        else if (key == "load_t_s") cfg.load_t_s = detail::parse_double(value, ctx);
        else if (key == "load_r_ohm") cfg.load_r_ohm = detail::parse_double(value, ctx);
        else if (key == "load_known") cfg.load_known = detail::parse_bool(value, ctx);
        else if (key == "setpoint_t_s") cfg.setpoint_t_s = detail::parse_double(value, ctx);
        else if (key == "setpoint_v_m_star_volt")
            cfg.setpoint_v_m_star_volt = detail::parse_double(value, ctx);
        else if (key == "setpoint_omega_star_radps")
            cfg.setpoint_omega_star_radps = detail::parse_double(value, ctx);
        else throw ConfigError(where + ": unknown key '" + key + "'");
    }
    cfg.validate();
    return cfg;
}

inline Config parse_config_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("cannot open config file: " + path);
    return parse_config(is, path);
}

}  // namespace hbsim
