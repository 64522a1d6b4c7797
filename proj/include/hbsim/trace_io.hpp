#pragma once

#include <cstdio>
#include <fstream>
#include <stdexcept>
#include <string>

#include "hbsim/engine.hpp"

namespace hbsim {

namespace detail {

/// 17 significant digits: enough to round-trip any double exactly.
inline std::string fmt_g17(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace detail

inline void write_trace_csv(std::ostream& os, const Trace& trace) {
    os << "# units: s,V,A,V,A,-,V*V,W,VAR,rad/s,V\n";
    os << "t,v_c,i_l,v_ref,i_ref,u,lyap_v,p_meas,q_meas,omega_cmd,v_m_cmd\n";
    for (const TraceRow& r : trace) {
        os << detail::fmt_g17(r.t) << ',' << detail::fmt_g17(r.v_c) << ','
           << detail::fmt_g17(r.i_l) << ',' << detail::fmt_g17(r.v_ref) << ','
           << detail::fmt_g17(r.i_ref) << ',' << r.u << ',' << detail::fmt_g17(r.lyap_v) << ','
           << detail::fmt_g17(r.p_meas) << ',' << detail::fmt_g17(r.q_meas) << ','
           << detail::fmt_g17(r.omega_cmd) << ',' << detail::fmt_g17(r.v_m_cmd) << '\n';
    }
}

inline void write_trace_csv(const std::string& path, const Trace& trace) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot open for writing: " + path);
    write_trace_csv(os, trace);
    if (!os) throw std::runtime_error("write failed: " + path);
}

}  // namespace hbsim
