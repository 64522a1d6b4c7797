// hbsim — command-line front end for the switched half-bridge inverter
// simulation toolkit. Subcommands: simulate | loadstep | sweep | droop |
// boundary. Exit codes: 0 success, 2 config error, 3 diverged, 4 internal.

#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "hbsim/hbsim.hpp"

namespace fs = std::filesystem;
using namespace hbsim;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitDiverged = 3;
constexpr int kExitInternal = 4;

struct CommonOpts {
    std::string config_path;
    std::string out_dir = ".";
    bool plot = false;
    bool seed_free = false;
    std::optional<long> decimation;
};

void add_common(CLI::App* cmd, CommonOpts& opts) {
    cmd->add_option("--config", opts.config_path, "scenario config file (key = value)");
    cmd->add_option("--out", opts.out_dir, "output directory")->capture_default_str();
    cmd->add_flag("--plot", opts.plot, "emit SVG plots next to the CSV output");
    cmd->add_flag("--seed-free", opts.seed_free,
                  "assert that the run uses no randomness (always true: the simulator is "
                  "deterministic by construction)");
    cmd->add_option("--decimation", opts.decimation, "record every Nth control tick");
}

Config load_config(const CommonOpts& opts) {
    Config cfg = opts.config_path.empty() ? Config{} : parse_config_file(opts.config_path);
    if (opts.decimation) {
        if (*opts.decimation < 1) throw ConfigError("--decimation must be >= 1");
        cfg.decimation = *opts.decimation;
    }
    cfg.validate();
    return cfg;
}

std::string path_in(const CommonOpts& opts, const std::string& name) {
    fs::create_directories(opts.out_dir);
    return (fs::path(opts.out_dir) / name).string();
}

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.10g", v);
    return buf;
}

void write_metrics_file(const std::string& path, const Metrics& m, const Scenario& sc,
                        const Trace& trace,
                        const std::vector<std::pair<std::string, double>>& extras = {}) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot open for writing: " + path);
    os << "diverged = " << (m.diverged ? 1 : 0) << "\n";
    if (m.diverged_time) os << "diverged_time_s = " << fmt(*m.diverged_time) << "\n";
    os << "rms_error_final_period_volt = "
       << (m.rms_error_final_period ? fmt(*m.rms_error_final_period) : "nan") << "\n";
    os << "max_abs_error_volt = " << fmt(m.max_abs_error) << "\n";
    os << "settling_time_s = " << (m.settling_time ? fmt(*m.settling_time) : "nan") << "\n";
    os << "stability_margin = " << fmt(stability_margin(sc.params, sc.spec)) << "\n";
    if (!trace.empty()) {
        os << "omega_cmd_final_radps = " << fmt(trace.back().omega_cmd) << "\n";
        os << "v_m_cmd_final_volt = " << fmt(trace.back().v_m_cmd) << "\n";
    }
    for (const auto& [key, value] : extras) os << key << " = " << fmt(value) << "\n";
    if (!os) throw std::runtime_error("write failed: " + path);
}

void emit_trace_plots(const CommonOpts& opts, const Trace& trace) {
    svg::Plot voltage;
    voltage.title = "Capacitor voltage vs reference";
    voltage.x_label = "t [s]";
    voltage.y_label = "voltage [V]";
    svg::Series vc{"v_c", "#1f77b4", {}, {}};
    svg::Series vref{"v_ref", "#d62728", {}, {}};
    svg::Plot error;
    error.title = "Absolute voltage tracking error";
    error.x_label = "t [s]";
    error.y_label = "|v_c - v_ref| [V]";
    error.log_y = true;
    svg::Series err{"", "#2ca02c", {}, {}};
    for (const TraceRow& r : trace) {
        vc.x.push_back(r.t);
        vc.y.push_back(r.v_c);
        vref.x.push_back(r.t);
        vref.y.push_back(r.v_ref);
        err.x.push_back(r.t);
        err.y.push_back(std::fabs(r.v_c - r.v_ref));
    }
    voltage.series = {vc, vref};
    error.series = {err};
    svg::write(path_in(opts, "voltage.svg"), voltage);
    svg::write(path_in(opts, "abs_error.svg"), error);
}

void print_run_summary(const RunResult& rr, const Scenario& sc) {
    const Metrics& m = rr.metrics;
    std::cout << "margin: " << fmt(stability_margin(sc.params, sc.spec)) << "\n";
    if (m.rms_error_final_period) {
        std::cout << "final-period RMS error: " << fmt(*m.rms_error_final_period) << " V\n";
    }
    std::cout << "max |v_c - v_ref|: " << fmt(m.max_abs_error) << " V\n";
    if (m.settling_time) std::cout << "settling time (2% band): " << fmt(*m.settling_time) << " s\n";
    if (m.diverged) {
        std::cout << "DIVERGED at t = " << fmt(m.diverged_time.value_or(0.0)) << " s\n";
    }
}

int cmd_simulate(const CommonOpts& opts) {
    const Config cfg = load_config(opts);
    const Scenario sc = cfg.scenario();
    const RunResult rr = simulate(sc);
    write_trace_csv(path_in(opts, "trace.csv"), rr.trace);
    write_metrics_file(path_in(opts, "metrics.txt"), rr.metrics, sc, rr.trace);
    if (opts.plot) emit_trace_plots(opts, rr.trace);
    print_run_summary(rr, sc);
    return rr.metrics.diverged ? kExitDiverged : kExitOk;
}

int cmd_loadstep(const CommonOpts& opts, double r_new, double t_event, bool known) {
    const Config cfg = load_config(opts);
    Scenario sc = cfg.scenario();
    sc.events.push_back(Event{t_event, LoadChange{r_new, known}});
    std::sort(sc.events.begin(), sc.events.end(),
              [](const Event& a, const Event& b) { return a.t < b.t; });

    const RunResult rr = simulate(sc);
    write_trace_csv(path_in(opts, "trace.csv"), rr.trace);

    // Pre-event level: peak |v_c - v_ref| of the period ending at the event.
    const double period = 2.0 * M_PI / sc.spec.omega;
    const auto& peaks = rr.metrics.period_peak_abs_error;
    const long pre_idx = std::lround(std::floor(t_event / period)) - 1;
    const double pre_peak =
        (pre_idx >= 0 && pre_idx < static_cast<long>(peaks.size())) ? peaks[pre_idx] : 0.0;
    const double final_peak = peaks.empty() ? rr.metrics.max_abs_error : peaks.back();
    const double growth = pre_peak > 0.0 ? final_peak / pre_peak
                                         : std::numeric_limits<double>::infinity();
    const bool diverged = rr.metrics.diverged || growth >= 10.0;

    write_metrics_file(path_in(opts, "metrics.txt"), rr.metrics, sc, rr.trace,
                       {{"pre_event_peak_volt", pre_peak},
                        {"final_period_peak_volt", final_peak},
                        {"post_event_growth_ratio", growth}});
    if (opts.plot) emit_trace_plots(opts, rr.trace);

    print_run_summary(rr, sc);
    std::cout << "pre-event peak error: " << fmt(pre_peak) << " V, final-period peak: "
              << fmt(final_peak) << " V (x" << fmt(growth) << ")\n";
    if (diverged) std::cout << "tracking lost after the load change\n";
    return diverged ? kExitDiverged : kExitOk;
}

int cmd_sweep(const CommonOpts& opts, const std::string& axis_flag, const std::string& range,
              bool retune_flag, bool retune_given) {
    Config cfg = load_config(opts);
    if (!axis_flag.empty()) cfg.sweep_axis = axis_flag;
    if (!range.empty()) {
        double lo = 0, hi = 0, step = 0;
        if (std::sscanf(range.c_str(), "%lf:%lf:%lf", &lo, &hi, &step) != 3) {
            throw ConfigError("--range expects start:stop:step");
        }
        cfg.sweep_start = lo;
        cfg.sweep_stop = hi;
        cfg.sweep_step = step;
    }
    if (retune_given) cfg.sweep_retune = retune_flag;

    SweepSpec spec = cfg.sweep_spec();
    const SweepResult result = sweep(spec);
    write_sweep_csv(path_in(opts, "sweep.csv"), result);

    std::optional<double> cutoff;
    if (spec.axis == SweepAxis::v_m) {
        cutoff = stability_boundary(spec.base.params, SweepAxis::v_m, spec.base.spec.omega);
    } else if (spec.axis == SweepAxis::omega) {
        cutoff = stability_boundary(spec.base.params, SweepAxis::omega, spec.base.spec.v_m);
    }

    if (opts.plot) {
        svg::Plot plot;
        plot.title = std::string("Tracking error sweep over ") + axis_name(result.axis);
        plot.x_label = axis_name(result.axis);
        plot.y_label = "final-period RMS error [V]";
        plot.log_y = true;
        svg::Series rms{"rms error", "#1f77b4", {}, {}};
        for (const SweepPoint& p : result.points) {
            if (p.metrics.rms_error_final_period) {
                rms.x.push_back(p.value);
                rms.y.push_back(*p.metrics.rms_error_final_period);
            }
        }
        plot.series = {rms};
        if (cutoff) plot.dotted_vlines.push_back(*cutoff);
        svg::write(path_in(opts, "sweep.svg"), plot);
    }

    for (const SweepPoint& p : result.points) {
        std::cout << axis_name(result.axis) << " = " << fmt(p.value) << ": margin "
                  << fmt(p.predicted_margin) << ", rms "
                  << (p.metrics.rms_error_final_period ? fmt(*p.metrics.rms_error_final_period)
                                                       : std::string("nan"))
                  << (p.metrics.diverged ? " V  [diverged]" : " V") << "\n";
    }
    if (cutoff) std::cout << "predicted stability cutoff: " << fmt(*cutoff) << "\n";
    return kExitOk;
}

int cmd_droop(const CommonOpts& opts, double v_m_star_new, double t_event,
              std::optional<double> k_p, std::optional<double> k_q) {
    Config cfg = load_config(opts);
    cfg.droop = true;
    if (k_p) cfg.kp_radps_per_w = *k_p;
    if (k_q) cfg.kq_volt_per_var = *k_q;
    cfg.validate();

    Scenario sc = cfg.scenario();
    // Start on the reference; the experiment is about following droop
    // commands, not about recovering from an off-reference start.
    const Mat2 pi = reference_map(sc.params, sc.spec.omega);
    sc.initial_state = reference_state(OscState{0.0, sc.spec.v_m}, pi);
    sc.events.push_back(
        Event{t_event, SetpointChange{v_m_star_new, sc.droop->omega_star}});
    std::sort(sc.events.begin(), sc.events.end(),
              [](const Event& a, const Event& b) { return a.t < b.t; });

    const RunResult rr = simulate(sc);
    write_trace_csv(path_in(opts, "trace.csv"), rr.trace);
    const double settled_omega = rr.trace.empty() ? 0.0 : rr.trace.back().omega_cmd;
    const double settled_v_m = rr.trace.empty() ? 0.0 : rr.trace.back().v_m_cmd;
    write_metrics_file(path_in(opts, "metrics.txt"), rr.metrics, sc, rr.trace,
                       {{"settled_omega_radps", settled_omega},
                        {"settled_v_m_volt", settled_v_m}});

    if (opts.plot) {
        emit_trace_plots(opts, rr.trace);
        svg::Plot plot;
        plot.title = "Droop-commanded amplitude";
        plot.x_label = "t [s]";
        plot.y_label = "V_m command [V]";
        svg::Series vm{"v_m_cmd", "#9467bd", {}, {}};
        for (const TraceRow& r : rr.trace) {
            vm.x.push_back(r.t);
            vm.y.push_back(r.v_m_cmd);
        }
        plot.series = {vm};
        svg::write(path_in(opts, "droop.svg"), plot);
    }

    print_run_summary(rr, sc);
    std::cout << "settled command: omega = " << fmt(settled_omega) << " rad/s, V_m = "
              << fmt(settled_v_m) << " V\n";
    return rr.metrics.diverged ? kExitDiverged : kExitOk;
}

int cmd_boundary(const CommonOpts& opts, const std::string& axis_flag) {
    const Config cfg = load_config(opts);
    SweepAxis axis;
    double fixed;
    if (axis_flag == "v_m") {
        axis = SweepAxis::v_m;
        fixed = cfg.omega();
    } else if (axis_flag == "omega") {
        axis = SweepAxis::omega;
        fixed = cfg.v_m_volt;
    } else {
        throw ConfigError("--axis must be v_m or omega");
    }
    const auto b = stability_boundary(cfg.params(), axis, fixed);
    if (!b) {
        std::cout << "no stability boundary in the search interval\n";
        return kExitOk;
    }
    if (axis == SweepAxis::v_m) {
        std::cout << "boundary v_m = " << fmt(*b) << " V at omega = " << fmt(fixed) << " rad/s\n";
    } else {
        std::cout << "boundary omega = " << fmt(*b) << " rad/s at v_m = " << fmt(fixed) << " V\n";
    }
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"hbsim: switched half-bridge inverter simulation toolkit"};
    app.require_subcommand(1);

    CommonOpts opts;

    auto* sim = app.add_subcommand("simulate", "run one scenario and write trace + metrics");
    add_common(sim, opts);

    auto* loadstep = app.add_subcommand("loadstep", "run with a scheduled load change");
    add_common(loadstep, opts);
    double r_new = 60.0, t_event_load = 1.0;
    bool known = false, unknown = false;
    loadstep->add_option("--r-new", r_new, "new load resistance, ohm")->required();
    loadstep->add_option("--t-event", t_event_load, "event time, s")->capture_default_str();
    auto* known_flag = loadstep->add_flag("--known", known, "retune the controller at the event");
    loadstep->add_flag("--unknown", unknown, "leave the controller stale")->excludes(known_flag);

    auto* swp = app.add_subcommand("sweep", "parameter sweep with per-point metrics");
    add_common(swp, opts);
    std::string axis_flag, range;
    bool retune_flag = false;
    swp->add_option("--axis", axis_flag, "sweep axis: load_r | v_m | omega");
    swp->add_option("--range", range, "start:stop:step");
    auto* retune_opt = swp->add_flag("--retune", retune_flag, "retune at each load change");

    auto* droop_cmd = app.add_subcommand("droop", "droop-controlled run with a setpoint change");
    add_common(droop_cmd, opts);
    double v_m_star_new = 185.0, t_event_droop = 0.2;
    std::optional<double> k_p, k_q;
    droop_cmd->add_option("--v-m-star-new", v_m_star_new, "new amplitude setpoint, V")->required();
    droop_cmd->add_option("--t-event", t_event_droop, "event time, s")->capture_default_str();
    droop_cmd->add_option("--k-p", k_p, "frequency droop gain, (rad/s)/W");
    droop_cmd->add_option("--k-q", k_q, "amplitude droop gain, V/VAR");

    auto* bnd = app.add_subcommand("boundary", "predicted stability cutoff via bisection");
    add_common(bnd, opts);
    std::string bnd_axis = "v_m";
    bnd->add_option("--axis", bnd_axis, "boundary axis: v_m | omega")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitConfig;
    }

    try {
        if (sim->parsed()) return cmd_simulate(opts);
        if (loadstep->parsed()) {
            if (!known && !unknown) {
                throw ConfigError("loadstep: specify --known or --unknown");
            }
            return cmd_loadstep(opts, r_new, t_event_load, known);
        }
        if (swp->parsed()) return cmd_sweep(opts, axis_flag, range, retune_flag,
                                            retune_opt->count() > 0);
        if (droop_cmd->parsed()) return cmd_droop(opts, v_m_star_new, t_event_droop, k_p, k_q);
        if (bnd->parsed()) return cmd_boundary(opts, bnd_axis);
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::domain_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return kExitInternal;
    }
    return kExitInternal;
}
