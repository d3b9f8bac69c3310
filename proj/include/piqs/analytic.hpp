#pragma once

#include <cmath>
#include <complex>
#include <stdexcept>

#include "dynamics.hpp"
#include "pi_state.hpp"
#include "spin_algebra.hpp"

// Closed-form reference solutions: the exact two-atom solution, the
// mean-field (logistic) model, and the subradiant |J,-J> cascade.

namespace piqs::analytic {

using cplx = std::complex<double>;

namespace detail {

// (e^{z t} - 1) / z, stable for small |z| (and exact limit t at z = 0).
inline double expm1_ratio(double z, double t) {
    if (std::abs(z * t) < 1e-12) return t * (1.0 + 0.5 * z * t);
    return std::expm1(z * t) / z;
}

inline cplx expm1_ratio(cplx z, double t) {
    if (std::abs(z * t) < 1e-12) return t * (1.0 + 0.5 * z * t);
    return (std::exp(z * t) - 1.0) / z;
}

}  // namespace detail

// The seven tracked elements of a general two-atom state.
struct TwoAtomState {
    double r11 = 0.0;   // rho_1^{1,1}
    double r00 = 0.0;   // rho_1^{0,0}
    double rmm = 0.0;   // rho_1^{-1,-1}
    double s00 = 0.0;   // rho_0^{0,0}
    cplx c10{};         // rho_1^{1,0}
    cplx c1m{};         // rho_1^{1,-1}
    cplx c0m{};         // rho_1^{0,-1}

    static TwoAtomState excited() {
        TwoAtomState s;
        s.r11 = 1.0;
        return s;
    }
    static TwoAtomState singlet() {
        TwoAtomState s;
        s.s00 = 1.0;
        return s;
    }

    PIState to_pi_state() const {
        PIState s = PIState::zero(2);
        s.at(2, 2, 2) = r11;
        s.at(2, 0, 0) = r00;
        s.at(2, -2, -2) = rmm;
        s.at(0, 0, 0) = s00;
        s.at(2, 2, 0) = c10;
        s.at(2, 0, 2) = std::conj(c10);
        s.at(2, 2, -2) = c1m;
        s.at(2, -2, 2) = std::conj(c1m);
        s.at(2, 0, -2) = c0m;
        s.at(2, -2, 0) = std::conj(c0m);
        return s;
    }
};

// Exact two-atom solution at time t.  The 0/0 ratios of the printed forms
// at dgamma -> 0 and 2 gamma + dgamma -> 0 are evaluated through expm1.
inline TwoAtomState two_atom_solution(const SystemParams& params, const TwoAtomState& init,
                                      double t) {
    if (params.N != 2) throw std::domain_error("two_atom_solution: params.N must be 2");
    const double g = params.gamma, dg = params.dgamma, dd = params.ddd;

    TwoAtomState s;
    s.r11 = init.r11 * std::exp(-2.0 * (g + dg) * t);
    s.r00 = init.r00 * std::exp(-(2.0 * g + dg) * t) +
            (2.0 * g + dg) * s.r11 * detail::expm1_ratio(dg, t);
    s.s00 = init.s00 * std::exp(-dg * t) +
            dg * s.r11 * detail::expm1_ratio(2.0 * g + dg, t);
    s.rmm = 1.0 - s.r11 - s.r00 - s.s00;
    // Coherence phases follow the sign convention of the projected equations
    // (Im Gamma1 = ddd (M'^2 - M^2)).
    s.c10 = init.c10 * std::exp(cplx(-(4.0 * g + 3.0 * dg) * 0.5 * t, dd * t));
    s.c1m = init.c1m * std::exp(-(g + dg) * t);
    const cplx z(g + dg, -2.0 * dd);
    s.c0m = init.c0m * std::exp(cplx(-(2.0 * g + dg) * 0.5 * t, -dd * t)) +
            s.c10 * (2.0 * g + dg) * detail::expm1_ratio(z, t);
    return s;
}

// Radiated energy rate for two fully excited atoms, regrouped so the
// dgamma = 0 and gamma = 0 limits come out of expm1 ratios directly.
inline double two_atom_intensity(const SystemParams& params, double t) {
    if (params.N != 2) throw std::domain_error("two_atom_intensity: params.N must be 2");
    const double g = params.gamma, dg = params.dgamma;
    const double a = 2.0 * g + dg;
    return std::exp(-2.0 * (g + dg) * t) *
           (a + dg + a * a * detail::expm1_ratio(dg, t) +
            dg * dg * detail::expm1_ratio(a, t));
}

// Mean-field excited-state population and phase,
//   p(t) = 1 / (1 + e^{N gamma (t - t_I)}),
//   theta(t) = theta0 + (ddd/gamma) ln[p(t)(1 + e^{-N gamma t_I})].
struct MeanFieldPoint {
    double p;
    double theta;
};

inline MeanFieldPoint meanfield_trajectory(int N, double gamma, double ddd, double t_I,
                                           double t, double theta0 = 0.0) {
    if (gamma <= 0.0)
        throw std::domain_error("meanfield: gamma must be > 0");
    if (N < 1) throw std::domain_error("meanfield: N must be >= 1");
    const double p = 1.0 / (1.0 + std::exp(N * gamma * (t - t_I)));
    const double theta =
        theta0 + ddd / gamma * std::log(p * (1.0 + std::exp(-N * gamma * t_I)));
    return {p, theta};
}

// I_mf(t) = (N^2 gamma / 4) cosh^{-2}[N gamma (t - t_I) / 2].
inline double meanfield_intensity(int N, double gamma, double t_I, double t) {
    if (gamma <= 0.0)
        throw std::domain_error("meanfield: gamma must be > 0");
    if (N < 1) throw std::domain_error("meanfield: N must be >= 1");
    const double c = std::cosh(0.5 * N * gamma * (t - t_I));
    return 0.25 * N * N * gamma / (c * c);
}

// Large-N delay-time estimate t_I ~ ln N / (N gamma).
inline double meanfield_delay_estimate(int N, double gamma) {
    if (gamma <= 0.0)
        throw std::domain_error("meanfield: gamma must be > 0");
    return std::log(static_cast<double>(N)) / (N * gamma);
}

namespace detail {

inline double factorial_d(int n) {
    double f = 1.0;
    for (int k = 2; k <= n; ++k) f *= k;
    return f;
}

}  // namespace detail

// Population rho_J^{-J,-J}(t) along the subradiant cascade started from
// |J0,-J0>:
//   (N/2-J0)! e^{-dg (N/2-J0) t} (e^{dg t}-1)^{J-J0}
//   / (d_N^J (N/2-J)! (J-J0)!).
inline double subradiant_population(int N, int twoJ0, int twoJ, double dgamma, double t) {
    spin::require_block(N, twoJ0);
    spin::require_block(N, twoJ);
    if (twoJ < twoJ0)
        throw std::domain_error("subradiant_population: need J >= J0");
    if (dgamma < 0.0)
        throw std::domain_error("subradiant_population: need dgamma >= 0");
    const int k = (twoJ - twoJ0) / 2;        // J - J0
    const int e0 = (N - twoJ0) / 2;          // N/2 - J0
    const int eJ = (N - twoJ) / 2;           // N/2 - J
    const double d = block_degeneracy(N, twoJ);
    if (dgamma == 0.0) return k == 0 ? 1.0 / d : 0.0;
    const double grow = k == 0 ? 1.0 : std::pow(std::expm1(dgamma * t), k);
    return detail::factorial_d(e0) * std::exp(-dgamma * e0 * t) * grow /
           (d * detail::factorial_d(eJ) * detail::factorial_d(k));
}

// I(t) = dgamma (N/2 - J0) e^{-dgamma t} for the |J0,-J0> start.
inline double subradiant_intensity(int N, int twoJ0, double dgamma, double t) {
    spin::require_block(N, twoJ0);
    return dgamma * 0.5 * (N - twoJ0) * std::exp(-dgamma * t);
}

}  // namespace piqs::analytic
