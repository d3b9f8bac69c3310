#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <stdexcept>
#include <utility>
#include <vector>

#include <boost/numeric/odeint.hpp>

#include "pi_state.hpp"
#include "spin_algebra.hpp"

// Projected master equation in the coupled spin basis: rate tables for the
// four transition channels, right-hand side, adaptive time integration,
// radiated energy rate and pulse characterization.

namespace piqs {

// Integration failed to make progress; carries the last time reached.
struct IntegrationError : std::runtime_error {
    double last_good_time;
    explicit IntegrationError(double t)
        : std::runtime_error("integration failure: step size underflow at t = " +
                             std::to_string(t)),
          last_good_time(t) {}
};

struct SystemParams {
    int N = 0;
    double gamma = 1.0;   // cooperative rate, units of gamma0
    double dgamma = 0.0;  // gamma0 - gamma
    double ddd = 0.0;     // dipole-dipole shift Delta_dd

    // gamma0 = 1 fixes the units; gamma + dgamma = 1 by construction.
    static SystemParams from_dgamma(int N, double dgamma, double ddd = 0.0) {
        SystemParams p;
        p.N = N;
        p.dgamma = dgamma;
        p.gamma = 1.0 - dgamma;
        p.ddd = ddd;
        p.validate();
        return p;
    }
    static SystemParams from_gamma(int N, double gamma, double ddd = 0.0) {
        SystemParams p;
        p.N = N;
        p.gamma = gamma;
        p.dgamma = 1.0 - gamma;
        p.ddd = ddd;
        p.validate();
        return p;
    }

    // Markov positivity of the Kossakowski matrix:
    // -1/(N-1) <= gamma <= 1, i.e. 0 <= dgamma <= N/(N-1).
    void validate() const {
        if (N < 1) throw std::domain_error("params: N must be >= 1");
        const double lo = N > 1 ? -1.0 / (N - 1) : 0.0;
        constexpr double eps = 1e-12;
        if (N > 1 && (gamma < lo - eps || gamma > 1.0 + eps))
            throw std::domain_error("params: Markov bound violated, need -1/(N-1) <= gamma <= 1");
    }
};

// Precomputed transition rates, indexed at the SOURCE element (twoJ, M, M').
//   gamma1: decay of the element itself,
//   gamma2: feeds (J,   M-1, M'-1),
//   gamma3: feeds (J-1, M-1, M'-1),
//   gamma4: feeds (J+1, M-1, M'-1).
class RateTable {
  public:
    explicit RateTable(const SystemParams& params) : params_(params) {
        params.validate();
        const int N = params.N;
        const auto blocks = spin::block_list(N);
        twoJ_min_ = blocks.front().twoJ;
        g1_.resize(blocks.size());
        g2_.resize(blocks.size());
        g3_.resize(blocks.size());
        g4_.resize(blocks.size());

        const double g = params.gamma;
        const double dg = params.dgamma;

        for (std::size_t bi = 0; bi < blocks.size(); ++bi) {
            const int twoJ = blocks[bi].twoJ;
            const int dim = blocks[bi].dim;
            const double J = 0.5 * twoJ;
            const double dJ = block_degeneracy(N, twoJ);
            const double alpha_up =
                static_cast<double>(spin::alpha(N, twoJ + 2));  // alpha_N^{J+1}
            const double alpha_here = static_cast<double>(spin::alpha(N, twoJ));

            // In-block feeding factor gamma + (dg/2J)(1 + alpha(2J+1)/(d(J+1))).
            // Only applied where the A- prefactor is non-zero, so the 1/(2J)
            // division never happens for J = 0.
            const double feed2 =
                twoJ > 0 ? g + dg / twoJ * (1.0 + alpha_up * (twoJ + 1) / (dJ * (J + 1.0)))
                         : 0.0;
            const double d_down =
                twoJ - 2 >= twoJ_min_ ? block_degeneracy(N, twoJ - 2) : 1.0;
            const double feed3 = twoJ > 0 ? dg * alpha_here / (twoJ * d_down) : 0.0;
            const double d_up = twoJ + 2 <= N ? block_degeneracy(N, twoJ + 2) : 1.0;
            const double feed4 = dg * alpha_up / ((twoJ + 2) * d_up);

            std::vector<spin::LadderCoeffs> lc(dim);
            for (int a = 0; a < dim; ++a) lc[a] = spin::ladder_coefficients(twoJ, twoJ - 2 * a);

            Eigen::MatrixXcd g1(dim, dim);
            Eigen::MatrixXd g2(dim, dim), g3(dim, dim), g4(dim, dim);
            for (int a = 0; a < dim; ++a) {
                const double M = J - a;
                for (int c = 0; c < dim; ++c) {
                    const double Mp = J - c;
                    g1(a, c) = std::complex<double>(
                        0.5 * g * (lc[a].a_minus * lc[a].a_minus + lc[c].a_minus * lc[c].a_minus) +
                            0.5 * dg * (N + M + Mp),
                        params.ddd * (Mp * Mp - M * M));
                    g2(a, c) = lc[a].a_minus * lc[c].a_minus * feed2;
                    g3(a, c) = lc[a].b_minus * lc[c].b_minus * feed3;
                    g4(a, c) = lc[a].d_minus * lc[c].d_minus * feed4;
                }
            }
            g1_[bi] = std::move(g1);
            g2_[bi] = std::move(g2);
            g3_[bi] = std::move(g3);
            g4_[bi] = std::move(g4);
        }
    }

    const SystemParams& params() const { return params_; }
    int N() const { return params_.N; }
    int block_index(int twoJ) const { return (twoJ - twoJ_min_) / 2; }
    int n_blocks() const { return static_cast<int>(g1_.size()); }
    int twoJ_of(int bi) const { return twoJ_min_ + 2 * bi; }

    const Eigen::MatrixXcd& gamma1(int bi) const { return g1_[bi]; }
    const Eigen::MatrixXd& gamma2(int bi) const { return g2_[bi]; }
    const Eigen::MatrixXd& gamma3(int bi) const { return g3_[bi]; }
    const Eigen::MatrixXd& gamma4(int bi) const { return g4_[bi]; }

  private:
    SystemParams params_;
    int twoJ_min_ = 0;
    std::vector<Eigen::MatrixXcd> g1_;
    std::vector<Eigen::MatrixXd> g2_, g3_, g4_;
};

// d rho_J^{M,M'} / dt from the four-channel system.  Absent sources are 0.
inline PIState rhs(const PIState& state, const RateTable& table) {
    if (state.N != table.N())
        throw std::domain_error("rhs: state and rate table built for different N");
    PIState out = PIState::zero(state.N);
    const int nb = table.n_blocks();
    for (int bi = 0; bi < nb; ++bi) {
        const int twoJ = table.twoJ_of(bi);
        const Eigen::MatrixXcd& rho = state.blocks.at(twoJ);
        Eigen::MatrixXcd& d = out.blocks.at(twoJ);
        const int dim = twoJ + 1;
        for (int a = 0; a < dim; ++a) {
            for (int c = 0; c < dim; ++c) {
                std::complex<double> v = -table.gamma1(bi)(a, c) * rho(a, c);
                // Source (J, M+1, M'+1) sits at (a-1, c-1) in the same block.
                if (a >= 1 && c >= 1)
                    v += table.gamma2(bi)(a - 1, c - 1) * rho(a - 1, c - 1);
                // Source (J+1, M+1, M'+1) sits at (a, c) in the block above.
                if (bi + 1 < nb)
                    v += table.gamma3(bi + 1)(a, c) * state.blocks.at(twoJ + 2)(a, c);
                // Source (J-1, M+1, M'+1) sits at (a-2, c-2) in the block below.
                if (bi >= 1 && a >= 2 && c >= 2)
                    v += table.gamma4(bi - 1)(a - 2, c - 2) *
                         state.blocks.at(twoJ - 2)(a - 2, c - 2);
                d(a, c) = v;
            }
        }
    }
    return out;
}

// Radiated energy rate I = sum_J d_N^J sum_M c_J^M rho_J^{M,M},
// c_J^M = (J+M)(J-M+1) gamma + (M+N/2) dgamma.
inline double intensity(const PIState& state, const SystemParams& params) {
    double I = 0.0;
    for (const auto& [twoJ, b] : state.blocks) {
        const double d = block_degeneracy(state.N, twoJ);
        const double J = 0.5 * twoJ;
        for (int a = 0; a <= twoJ; ++a) {
            const double M = J - a;
            const double c = (J + M) * (J - M + 1.0) * params.gamma +
                             (M + 0.5 * params.N) * params.dgamma;
            I += d * c * b(a, a).real();
        }
    }
    return I;
}

// dI/dt with coefficients
// ctilde_J^M = 2 (J+M)(J-M+1) [(M-1) gamma - dgamma] gamma - (M+N/2) dgamma^2.
inline double intensity_derivative(const PIState& state, const SystemParams& params) {
    double dI = 0.0;
    for (const auto& [twoJ, b] : state.blocks) {
        const double d = block_degeneracy(state.N, twoJ);
        const double J = 0.5 * twoJ;
        for (int a = 0; a <= twoJ; ++a) {
            const double M = J - a;
            const double c =
                2.0 * (J + M) * (J - M + 1.0) * ((M - 1.0) * params.gamma - params.dgamma) *
                    params.gamma -
                (M + 0.5 * params.N) * params.dgamma * params.dgamma;
            dI += d * c * b(a, a).real();
        }
    }
    return dI;
}

namespace detail {

// Flat complex vector layout: blocks ascending in twoJ, row-major.
struct Layout {
    int N = 0;
    std::vector<int> twoJs;
    std::vector<std::size_t> offsets;
    std::size_t total = 0;

    explicit Layout(int N_) : N(N_) {
        for (const auto& b : spin::block_list(N)) {
            twoJs.push_back(b.twoJ);
            offsets.push_back(total);
            total += static_cast<std::size_t>(b.dim) * b.dim;
        }
    }
};

using CVec = std::vector<std::complex<double>>;

inline CVec flatten(const PIState& s, const Layout& lay) {
    CVec x(lay.total);
    for (std::size_t bi = 0; bi < lay.twoJs.size(); ++bi) {
        const Eigen::MatrixXcd& b = s.blocks.at(lay.twoJs[bi]);
        const int dim = lay.twoJs[bi] + 1;
        for (int a = 0; a < dim; ++a)
            for (int c = 0; c < dim; ++c)
                x[lay.offsets[bi] + static_cast<std::size_t>(a) * dim + c] = b(a, c);
    }
    return x;
}

inline PIState unflatten(const CVec& x, const Layout& lay) {
    PIState s = PIState::zero(lay.N);
    for (std::size_t bi = 0; bi < lay.twoJs.size(); ++bi) {
        Eigen::MatrixXcd& b = s.blocks.at(lay.twoJs[bi]);
        const int dim = lay.twoJs[bi] + 1;
        for (int a = 0; a < dim; ++a)
            for (int c = 0; c < dim; ++c)
                b(a, c) = x[lay.offsets[bi] + static_cast<std::size_t>(a) * dim + c];
    }
    return s;
}

// rhs on the flat layout, allocation-free.
struct FlatSystem {
    const RateTable* table;
    const Layout* lay;

    void operator()(const CVec& x, CVec& dxdt, double /*t*/) const {
        const int nb = static_cast<int>(lay->twoJs.size());
        for (int bi = 0; bi < nb; ++bi) {
            const int dim = lay->twoJs[bi] + 1;
            const std::size_t off = lay->offsets[bi];
            const auto& g1 = table->gamma1(bi);
            const auto& g2 = table->gamma2(bi);
            for (int a = 0; a < dim; ++a) {
                for (int c = 0; c < dim; ++c) {
                    std::complex<double> v =
                        -g1(a, c) * x[off + static_cast<std::size_t>(a) * dim + c];
                    if (a >= 1 && c >= 1)
                        v += g2(a - 1, c - 1) *
                             x[off + static_cast<std::size_t>(a - 1) * dim + (c - 1)];
                    if (bi + 1 < nb) {
                        const int dimu = dim + 2;
                        v += table->gamma3(bi + 1)(a, c) *
                             x[lay->offsets[bi + 1] + static_cast<std::size_t>(a) * dimu + c];
                    }
                    if (bi >= 1 && a >= 2 && c >= 2) {
                        const int dimd = dim - 2;
                        v += table->gamma4(bi - 1)(a - 2, c - 2) *
                             x[lay->offsets[bi - 1] +
                               static_cast<std::size_t>(a - 2) * dimd + (c - 2)];
                    }
                    dxdt[off + static_cast<std::size_t>(a) * dim + c] = v;
                }
            }
        }
    }
};

// Populations-only layout (real vector of block diagonals); populations are
// decoupled from the coherences so this closes exactly.
struct DiagLayout {
    int N = 0;
    std::vector<int> twoJs;
    std::vector<std::size_t> offsets;
    std::size_t total = 0;

    explicit DiagLayout(int N_) : N(N_) {
        for (const auto& b : spin::block_list(N)) {
            twoJs.push_back(b.twoJ);
            offsets.push_back(total);
            total += static_cast<std::size_t>(b.dim);
        }
    }
};

using RVec = std::vector<double>;

struct DiagSystem {
    const RateTable* table;
    const DiagLayout* lay;

    void operator()(const RVec& x, RVec& dxdt, double /*t*/) const {
        const int nb = static_cast<int>(lay->twoJs.size());
        for (int bi = 0; bi < nb; ++bi) {
            const int dim = lay->twoJs[bi] + 1;
            const std::size_t off = lay->offsets[bi];
            for (int a = 0; a < dim; ++a) {
                double v = -table->gamma1(bi)(a, a).real() * x[off + a];
                if (a >= 1) v += table->gamma2(bi)(a - 1, a - 1) * x[off + a - 1];
                if (bi + 1 < nb)
                    v += table->gamma3(bi + 1)(a, a) * x[lay->offsets[bi + 1] + a];
                if (bi >= 1 && a >= 2)
                    v += table->gamma4(bi - 1)(a - 2, a - 2) * x[lay->offsets[bi - 1] + a - 2];
                dxdt[off + a] = v;
            }
        }
    }
};

inline double diag_intensity(const RVec& x, const DiagLayout& lay, const SystemParams& p,
                             const std::vector<double>& degens) {
    double I = 0.0;
    for (std::size_t bi = 0; bi < lay.twoJs.size(); ++bi) {
        const double J = 0.5 * lay.twoJs[bi];
        for (int a = 0; a <= lay.twoJs[bi]; ++a) {
            const double M = J - a;
            const double c =
                (J + M) * (J - M + 1.0) * p.gamma + (M + 0.5 * p.N) * p.dgamma;
            I += degens[bi] * c * x[lay.offsets[bi] + a];
        }
    }
    return I;
}

inline double diag_intensity_derivative(const RVec& x, const DiagLayout& lay,
                                        const SystemParams& p,
                                        const std::vector<double>& degens) {
    double dI = 0.0;
    for (std::size_t bi = 0; bi < lay.twoJs.size(); ++bi) {
        const double J = 0.5 * lay.twoJs[bi];
        for (int a = 0; a <= lay.twoJs[bi]; ++a) {
            const double M = J - a;
            const double c =
                2.0 * (J + M) * (J - M + 1.0) * ((M - 1.0) * p.gamma - p.dgamma) * p.gamma -
                (M + 0.5 * p.N) * p.dgamma * p.dgamma;
            dI += degens[bi] * c * x[lay.offsets[bi] + a];
        }
    }
    return dI;
}

inline double diag_jz(const RVec& x, const DiagLayout& lay,
                      const std::vector<double>& degens) {
    double jz = 0.0;
    for (std::size_t bi = 0; bi < lay.twoJs.size(); ++bi) {
        const double J = 0.5 * lay.twoJs[bi];
        for (int a = 0; a <= lay.twoJs[bi]; ++a)
            jz += degens[bi] * (J - a) * x[lay.offsets[bi] + a];
    }
    return jz;
}

inline std::vector<double> block_degens(int N) {
    std::vector<double> d;
    for (const auto& b : spin::block_list(N)) d.push_back(block_degeneracy(N, b.twoJ));
    return d;
}

inline bool is_diagonal(const PIState& s, double tol = 0.0) {
    for (const auto& [twoJ, b] : s.blocks)
        for (int a = 0; a <= twoJ; ++a)
            for (int c = 0; c <= twoJ; ++c)
                if (a != c && std::abs(b(a, c)) > tol) return false;
    return true;
}

}  // namespace detail

struct TrajectoryPoint {
    double t;
    PIState state;
};

// Adaptive Dormand-Prince 5(4) integration with dense output sampled at
// sample_grid (must be ascending, within [0, t_end]).
inline std::vector<TrajectoryPoint> evolve(const SystemParams& params, const PIState& state0,
                                           double t_end, double reltol, double abstol,
                                           const std::vector<double>& sample_grid) {
    if (t_end <= 0.0) throw std::domain_error("evolve: t_end must be > 0");
    if (reltol <= 0.0 || abstol <= 0.0)
        throw std::domain_error("evolve: tolerances must be > 0");
    namespace ode = boost::numeric::odeint;

    const RateTable table(params);
    const detail::Layout lay(params.N);
    detail::CVec x = detail::flatten(state0, lay);
    detail::FlatSystem sys{&table, &lay};

    auto stepper = ode::make_dense_output(
        abstol, reltol, ode::runge_kutta_dopri5<detail::CVec>());
    stepper.initialize(x, 0.0, std::min(0.01, t_end));

    std::vector<TrajectoryPoint> out;
    out.reserve(sample_grid.size());
    std::size_t gi = 0;
    detail::CVec xi(lay.total);
    while (gi < sample_grid.size() && sample_grid[gi] <= 0.0) {
        out.push_back({sample_grid[gi], state0});
        ++gi;
    }
    while (stepper.current_time() < t_end && gi < sample_grid.size()) {
        const double t_before = stepper.current_time();
        stepper.do_step(sys);
        if (stepper.current_time() - t_before < 1e-14 * std::max(1.0, std::abs(t_before)))
            throw IntegrationError(t_before);
        while (gi < sample_grid.size() && sample_grid[gi] <= stepper.current_time()) {
            stepper.calc_state(sample_grid[gi], xi);
            out.push_back({sample_grid[gi], detail::unflatten(xi, lay)});
            ++gi;
        }
    }
    return out;
}

struct PulseMetrics {
    double A_I = 0.0;     // pulse height above I(0), floored at 0
    double t_I = 0.0;     // time of maximum
    double emitted = 0.0; // integral of I over the horizon
    double I0 = 0.0;      // initial rate
};

namespace detail {

// Shared pulse search over any intensity-evaluating integrator loop.
// Locates the maximum of I(t) by tracking sign changes of dI/dt across
// adaptive steps and bisecting inside the step's dense output.
template <typename Stepper, typename System, typename State, typename IntensityFn,
          typename DIntensityFn>
PulseMetrics pulse_search(Stepper& stepper, System& sys, const State& x0, State& scratch,
                          double horizon, double n_scale, const IntensityFn& I_of,
                          const DIntensityFn& dI_of,
                          const std::function<double(const State&)>& jz_of) {
    const double I0 = I_of(x0);
    const double jz0 = jz_of(x0);

    double best_I = I0, best_t = 0.0;
    double t_prev = 0.0;
    double dI_prev = dI_of(x0);

    const double floor_I = 1e-8 * n_scale;
    const double max_horizon = 64.0 * horizon;
    double t_stop = horizon;
    while (true) {
        const double t_before = stepper.current_time();
        stepper.do_step(sys);
        const double t_cur = stepper.current_time();
        if (t_cur - t_before < 1e-14 * std::max(1.0, std::abs(t_before)))
            throw IntegrationError(t_before);
        stepper.calc_state(t_cur, scratch);
        const double I_cur = I_of(scratch);
        const double dI_cur = dI_of(scratch);
        if (I_cur > best_I) {
            best_I = I_cur;
            best_t = t_cur;
        }
        if (dI_prev > 0.0 && dI_cur <= 0.0) {
            // bisect the sign change to 1e-6 absolute time
            double lo = t_prev, hi = t_cur;
            while (hi - lo > 1e-6) {
                const double mid = 0.5 * (lo + hi);
                stepper.calc_state(mid, scratch);
                if (dI_of(scratch) > 0.0)
                    lo = mid;
                else
                    hi = mid;
            }
            const double t_max = 0.5 * (lo + hi);
            stepper.calc_state(t_max, scratch);
            const double I_max = I_of(scratch);
            if (I_max > best_I) {
                best_I = I_max;
                best_t = t_max;
            }
        }
        t_prev = t_cur;
        dI_prev = dI_cur;
        if (t_cur >= t_stop) {
            if (I_cur < floor_I || t_cur >= max_horizon) break;
            t_stop = std::min(2.0 * t_stop, max_horizon);
        }
    }
    stepper.calc_state(stepper.current_time(), scratch);
    PulseMetrics m;
    m.I0 = I0;
    m.emitted = jz0 - jz_of(scratch);
    const double eps = 1e-9 * n_scale * n_scale;
    const double height = best_I - I0;
    if (height > eps) {
        m.A_I = height;
        m.t_I = best_t;
    }
    return m;
}

}  // namespace detail

// Pulse height and delay time from an initial state over a horizon that is
// auto-extended until I < 1e-8 N.  Uses the populations-only fast path when
// the initial state is diagonal.
inline PulseMetrics pulse_metrics(const SystemParams& params, const PIState& initial,
                                  double horizon = 10.0, double reltol = 1e-8,
                                  double abstol = 1e-10) {
    namespace ode = boost::numeric::odeint;
    const RateTable table(params);
    const auto degens = detail::block_degens(params.N);

    if (detail::is_diagonal(initial)) {
        const detail::DiagLayout lay(params.N);
        detail::RVec x(lay.total);
        for (std::size_t bi = 0; bi < lay.twoJs.size(); ++bi) {
            const Eigen::MatrixXcd& b = initial.blocks.at(lay.twoJs[bi]);
            for (int a = 0; a <= lay.twoJs[bi]; ++a) x[lay.offsets[bi] + a] = b(a, a).real();
        }
        detail::DiagSystem sys{&table, &lay};
        auto stepper =
            ode::make_dense_output(abstol, reltol, ode::runge_kutta_dopri5<detail::RVec>());
        stepper.initialize(x, 0.0, 0.01);
        detail::RVec scratch(lay.total);
        return detail::pulse_search(
            stepper, sys, x, scratch, horizon, static_cast<double>(params.N),
            [&](const detail::RVec& v) { return detail::diag_intensity(v, lay, params, degens); },
            [&](const detail::RVec& v) {
                return detail::diag_intensity_derivative(v, lay, params, degens);
            },
            std::function<double(const detail::RVec&)>(
                [&](const detail::RVec& v) { return detail::diag_jz(v, lay, degens); }));
    }

    const detail::Layout lay(params.N);
    detail::CVec x = detail::flatten(initial, lay);
    detail::FlatSystem sys{&table, &lay};
    auto stepper =
        ode::make_dense_output(abstol, reltol, ode::runge_kutta_dopri5<detail::CVec>());
    stepper.initialize(x, 0.0, 0.01);
    detail::CVec scratch(lay.total);
    return detail::pulse_search(
        stepper, sys, x, scratch, horizon, static_cast<double>(params.N),
        [&](const detail::CVec& v) { return intensity(detail::unflatten(v, lay), params); },
        [&](const detail::CVec& v) {
            return intensity_derivative(detail::unflatten(v, lay), params);
        },
        std::function<double(const detail::CVec&)>([&](const detail::CVec& v) {
            return expect_Jz(detail::unflatten(v, lay));
        }));
}

// Closed-form sufficient-condition bound dgamma* = 1 - 1/sqrt(N-1).
inline double critical_dgamma_formula(int N) {
    if (N < 2) throw std::domain_error("critical_dgamma_formula: N must be >= 2");
    return 1.0 - 1.0 / std::sqrt(static_cast<double>(N - 1));
}

// Critical dgamma located by bisection on the predicate A_I > eps, starting
// from the fully excited state.
inline double critical_dgamma_numeric(int N, double grid_tol) {
    if (N < 3) throw std::domain_error("critical_dgamma_numeric: N must be >= 3");
    const PIState excited = init_dicke(N, N, N);
    auto has_pulse = [&](double dg) {
        const SystemParams p = SystemParams::from_dgamma(N, dg);
        return pulse_metrics(p, excited).A_I > 0.0;
    };
    double lo = 0.0, hi = 1.0;
    if (!has_pulse(lo)) return 0.0;
    while (hi - lo > grid_tol) {
        const double mid = 0.5 * (lo + hi);
        if (has_pulse(mid))
            lo = mid;
        else
            hi = mid;
    }
    return 0.5 * (lo + hi);
}

}  // namespace piqs
