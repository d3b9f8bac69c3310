#pragma once

#include <complex>
#include <map>
#include <tuple>
#include <vector>

#include <Eigen/Dense>

#include "spin_algebra.hpp"

// Block-diagonal permutation-invariant density matrices.  Each block twoJ
// stores the (2J+1)x(2J+1) matrix of elements rho_J^{M,M'} with row a
// mapping to M = J - a (so row 0 is M = +J).  Degeneracy factors d_N^J are
// NOT folded into the stored entries; observables apply them.

namespace piqs {

struct PIState {
    int N = 0;
    std::map<int, Eigen::MatrixXcd> blocks;  // twoJ -> block

    static PIState zero(int N) {
        PIState s;
        s.N = N;
        for (const auto& b : spin::block_list(N))
            s.blocks[b.twoJ] = Eigen::MatrixXcd::Zero(b.dim, b.dim);
        return s;
    }

    // Row index of M within block twoJ.
    static int row(int twoJ, int twoM) { return (twoJ - twoM) / 2; }

    std::complex<double>& at(int twoJ, int twoM, int twoMp) {
        return blocks.at(twoJ)(row(twoJ, twoM), row(twoJ, twoMp));
    }
    std::complex<double> at(int twoJ, int twoM, int twoMp) const {
        return blocks.at(twoJ)(row(twoJ, twoM), row(twoJ, twoMp));
    }

    std::size_t size() const {
        std::size_t n = 0;
        for (const auto& [twoJ, b] : blocks) n += static_cast<std::size_t>(b.size());
        return n;
    }
};

// Degeneracy d_N^J as a double (exact for every N used here).
inline double block_degeneracy(int N, int twoJ) {
    return static_cast<double>(spin::multiplicity(N, twoJ));
}

// The PI representative of the Dicke state |J0, M0>: the uniform mixture
// over the k_J multiplicity label, entry 1/d_N^{J0}.  It has the same
// dynamics and observables as any single k_J copy.
inline PIState init_dicke(int N, int twoJ0, int twoM0) {
    spin::require_block(N, twoJ0);
    if (twoM0 < -twoJ0 || twoM0 > twoJ0 || (twoM0 - twoJ0) % 2 != 0)
        throw std::domain_error("init_dicke: twoM0 invalid for block twoJ0");
    PIState s = PIState::zero(N);
    s.at(twoJ0, twoM0, twoM0) = 1.0 / block_degeneracy(N, twoJ0);
    return s;
}

// Degeneracy-weighted trace, sum_J d_N^J sum_M Re rho_J^{M,M}.
inline double trace(const PIState& s) {
    double tr = 0.0;
    for (const auto& [twoJ, b] : s.blocks)
        tr += block_degeneracy(s.N, twoJ) * b.real().trace();
    return tr;
}

// <J_z> = sum_J d_N^J sum_M M rho_J^{M,M}.
inline double expect_Jz(const PIState& s) {
    double jz = 0.0;
    for (const auto& [twoJ, b] : s.blocks) {
        const double d = block_degeneracy(s.N, twoJ);
        for (int a = 0; a < b.rows(); ++a) {
            const double M = 0.5 * (twoJ - 2 * a);
            jz += d * M * b(a, a).real();
        }
    }
    return jz;
}

struct Population {
    int twoJ;
    int twoM;
    double value;
};

// Diagonal entries in (twoJ ascending, twoM descending) order.
inline std::vector<Population> populations(const PIState& s) {
    std::vector<Population> out;
    out.reserve(s.blocks.size() * 4);
    for (const auto& [twoJ, b] : s.blocks)
        for (int a = 0; a < b.rows(); ++a)
            out.push_back(Population{twoJ, twoJ - 2 * a, b(a, a).real()});
    return out;
}

// Flat record list (twoJ, twoM, twoM', re, im) of all stored elements,
// deterministic order.
struct ElementRecord {
    int twoJ, twoM, twoMp;
    double re, im;
};

inline std::vector<ElementRecord> flatten_records(const PIState& s) {
    std::vector<ElementRecord> recs;
    for (const auto& [twoJ, b] : s.blocks)
        for (int a = 0; a < b.rows(); ++a)
            for (int c = 0; c < b.cols(); ++c)
                recs.push_back(ElementRecord{twoJ, twoJ - 2 * a, twoJ - 2 * c,
                                             b(a, c).real(), b(a, c).imag()});
    return recs;
}

}  // namespace piqs
