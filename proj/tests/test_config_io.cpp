#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstring>
#include <sstream>

#include "hbsim/config.hpp"
#include "hbsim/trace_io.hpp"

using namespace hbsim;

namespace {

Config parse_text(const std::string& text) {
    std::istringstream is(text);
    return parse_config(is, "test.cfg");
}

}  // namespace

TEST_CASE("an empty config yields the bench defaults") {
    const Config cfg = parse_text("");
    CHECK(cfg.r_ohm == 50.0);
    CHECK(cfg.l_henry == 450e-6);
    CHECK(cfg.c_farad == 2.5e-3);
    CHECK(cfg.v_dc_volt == 1200.0);
    CHECK(cfg.f_hz == 60.0);
    CHECK(cfg.v_m_volt == 177.0);
    CHECK(cfg.v_c0_volt == 70.0);
    CHECK(cfg.t_end_s == 4.0);
    CHECK(cfg.control_period_s == 1e-6);
    CHECK_FALSE(cfg.droop);

    const Scenario sc = cfg.scenario();
    CHECK(sc.spec.omega == Catch::Approx(2.0 * M_PI * 60.0));
    CHECK(sc.events.empty());
    CHECK_FALSE(sc.droop.has_value());
}

TEST_CASE("keys, comments and blank values parse") {
    const Config cfg = parse_text(
        "# plant\n"
        "r_ohm = 60\n"
        "l_henry = 500e-6   # inline comment\n"
        "\n"
        "v_m_volt = 185\n"
        "t_end_s = 0.5\n"
        "decimation = 100\n"
        "droop = on\n"
        "kq_volt_per_var = 0.003\n"
        "omega_star_radps =\n");  // blank keeps default
    CHECK(cfg.r_ohm == 60.0);
    CHECK(cfg.l_henry == 500e-6);
    CHECK(cfg.v_m_volt == 185.0);
    CHECK(cfg.decimation == 100);
    CHECK(cfg.droop);
    CHECK(cfg.kq_volt_per_var == 0.003);
    CHECK_FALSE(cfg.omega_star_radps.has_value());

    const Scenario sc = cfg.scenario();
    REQUIRE(sc.droop.has_value());
    CHECK(sc.droop->v_m_star == 185.0);
    CHECK(sc.droop->omega_star == Catch::Approx(2.0 * M_PI * 60.0));
    // consistent power targets were derived from the reference trajectory
    CHECK(sc.droop->p_star == Catch::Approx(185.0 * 185.0 / (2.0 * 60.0)).epsilon(1e-3));
}

TEST_CASE("unknown keys are rejected with their line number") {
    try {
        parse_text("r_ohm = 50\nbogus_key = 1\n");
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("test.cfg:2") != std::string::npos);
        CHECK(std::string(e.what()).find("bogus_key") != std::string::npos);
    }
}

TEST_CASE("malformed values are rejected") {
    CHECK_THROWS_AS(parse_text("r_ohm = fifty\n"), ConfigError);
    CHECK_THROWS_AS(parse_text("droop = maybe\n"), ConfigError);
    CHECK_THROWS_AS(parse_text("decimation = 2.5\n"), ConfigError);
    CHECK_THROWS_AS(parse_text("r_ohm 50\n"), ConfigError);
}

TEST_CASE("validation names the offending key") {
    try {
        parse_text("r_ohm = -5\n");
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("r_ohm") != std::string::npos);
    }
    CHECK_THROWS_AS(parse_text("t_end_s = 0\n"), ConfigError);
    CHECK_THROWS_AS(parse_text("kp_radps_per_w = -0.01\n"), ConfigError);
}

TEST_CASE("config events are assembled in order") {
    const Config cfg = parse_text(
        "t_end_s = 2\n"
        "setpoint_t_s = 1.5\n"
        "setpoint_v_m_star_volt = 185\n"
        "load_t_s = 1\n"
        "load_r_ohm = 60\n"
        "load_known = on\n");
    const Scenario sc = cfg.scenario();
    REQUIRE(sc.events.size() == 2);
    CHECK(sc.events[0].t == 1.0);
    CHECK(std::holds_alternative<LoadChange>(sc.events[0].action));
    CHECK(sc.events[1].t == 1.5);
    CHECK(std::holds_alternative<SetpointChange>(sc.events[1].action));
}

TEST_CASE("a load event needs both its keys") {
    const Config cfg = parse_text("load_t_s = 1\n");
    CHECK_THROWS_AS(cfg.scenario(), ConfigError);
}

TEST_CASE("sweep range expansion") {
    const Config cfg = parse_text(
        "sweep_axis = omega\n"
        "sweep_start = 200\n"
        "sweep_stop = 1000\n"
        "sweep_step = 200\n");
    const SweepSpec spec = cfg.sweep_spec();
    CHECK(spec.axis == SweepAxis::omega);
    REQUIRE(spec.values.size() == 5);
    CHECK(spec.values.front() == 200.0);
    CHECK(spec.values.back() == 1000.0);

    CHECK_THROWS_AS(parse_text("sweep_axis = watts\n").sweep_spec(), ConfigError);
    CHECK_THROWS_AS(parse_text("sweep_step = -5\n").sweep_spec(), ConfigError);
}

TEST_CASE("trace csv layout and determinism") {
    Scenario sc;
    sc.t_end = 0.002;
    sc.record_decimation = 10;
    const RunResult rr = simulate(sc);

    std::ostringstream a, b;
    write_trace_csv(a, rr.trace);
    write_trace_csv(b, rr.trace);
    CHECK(a.str() == b.str());

    std::istringstream is(a.str());
    std::string line;
    std::getline(is, line);
    CHECK(line == "# units: s,V,A,V,A,-,V*V,W,VAR,rad/s,V");
    std::getline(is, line);
    CHECK(line == "t,v_c,i_l,v_ref,i_ref,u,lyap_v,p_meas,q_meas,omega_cmd,v_m_cmd");

    // 17 significant digits round-trip doubles exactly
    std::getline(is, line);  // first data row: t = 0
    std::getline(is, line);  // second data row
    const std::size_t comma = line.find(',');
    const double t_back = std::strtod(line.substr(0, comma).c_str(), nullptr);
    CHECK(t_back == rr.trace[1].t);
}
