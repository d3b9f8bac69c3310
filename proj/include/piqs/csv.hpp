#pragma once

#include <cstdio>
#include <ostream>
#include <string>
#include <vector>

#include "dynamics.hpp"
#include "full_oracle.hpp"
#include "pi_state.hpp"

// CSV serialization.  All floating-point values are printed with 17
// significant digits so downstream comparisons are bitwise reproducible.

namespace piqs::io {

inline std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

// Trajectory CSV: t, intensity, jz, trace, then optional population columns
// p_J{twoJ}_M{twoM} in (twoJ ascending, twoM descending) order.
inline void write_trajectory_header(std::ostream& os, int N, bool with_populations) {
    os << "t,intensity,jz,trace";
    if (with_populations)
        for (const auto& b : spin::block_list(N))
            for (int twoM = b.twoJ; twoM >= -b.twoJ; twoM -= 2)
                os << ",p_J" << b.twoJ << "_M" << twoM;
    os << "\n";
}

inline void write_trajectory_row(std::ostream& os, const SystemParams& params,
                                 const TrajectoryPoint& pt, bool with_populations) {
    os << fmt(pt.t) << ',' << fmt(intensity(pt.state, params)) << ','
       << fmt(expect_Jz(pt.state)) << ',' << fmt(trace(pt.state));
    if (with_populations)
        for (const auto& p : populations(pt.state)) os << ',' << fmt(p.value);
    os << "\n";
}

inline void write_trajectory(std::ostream& os, const SystemParams& params,
                             const std::vector<TrajectoryPoint>& traj,
                             bool with_populations) {
    write_trajectory_header(os, params.N, with_populations);
    for (const auto& pt : traj) write_trajectory_row(os, params, pt, with_populations);
}

// Metrics CSV: N, gamma, dgamma, ddd, A_I, t_I, emitted.
inline void write_metrics_header(std::ostream& os) {
    os << "N,gamma,dgamma,ddd,A_I,t_I,emitted\n";
}

inline void write_metrics_row(std::ostream& os, const SystemParams& params,
                              const PulseMetrics& m) {
    os << params.N << ',' << fmt(params.gamma) << ',' << fmt(params.dgamma) << ','
       << fmt(params.ddd) << ',' << fmt(m.A_I) << ',' << fmt(m.t_I) << ','
       << fmt(m.emitted) << "\n";
}

// Element snapshot CSV: twoJ, twoM, twoMp, re, im.
inline void write_elements(std::ostream& os, const PIState& s) {
    os << "twoJ,twoM,twoMp,re,im\n";
    for (const auto& r : flatten_records(s))
        os << r.twoJ << ',' << r.twoM << ',' << r.twoMp << ',' << fmt(r.re) << ','
           << fmt(r.im) << "\n";
}

// Oracle report CSV: N, seed, gamma, dgamma, ddd, max_abs_err_I,
// max_abs_err_Jz, pass.
inline void write_oracle_header(std::ostream& os) {
    os << "N,seed,gamma,dgamma,ddd,max_abs_err_I,max_abs_err_Jz,pass\n";
}

inline void write_oracle_row(std::ostream& os, const oracle::OracleRow& r) {
    os << r.N << ',' << r.seed << ',' << fmt(r.gamma) << ',' << fmt(r.dgamma) << ','
       << fmt(r.ddd) << ',' << fmt(r.max_abs_err_I) << ',' << fmt(r.max_abs_err_Jz) << ','
       << (r.pass ? 1 : 0) << "\n";
}

}  // namespace piqs::io
