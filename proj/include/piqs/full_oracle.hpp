#pragma once

#include <complex>
#include <map>
#include <random>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>
#include <boost/numeric/odeint.hpp>

#include "dynamics.hpp"
#include "pi_state.hpp"
#include "spin_algebra.hpp"

// Brute-force 2^N Lindblad simulator (N <= 6): the independent correctness
// oracle for the projected solver, plus the coupled-basis projection and
// permutation-symmetry checks.
//
// Basis convention: computational index b encodes |s_1 ... s_N> with atom k
// at bit position N-k (atom 1 most significant); bit = 1 means excited.

namespace piqs::oracle {

inline constexpr int kMaxAtoms = 6;

struct CapacityError : std::runtime_error {
    explicit CapacityError(const std::string& what) : std::runtime_error(what) {}
};

struct NotPermutationInvariantError : std::runtime_error {
    explicit NotPermutationInvariantError(const std::string& what)
        : std::runtime_error(what) {}
};

inline void require_capacity(int N) {
    if (N < 1) throw std::domain_error("oracle: N must be >= 1");
    if (N > kMaxAtoms)
        throw CapacityError("oracle: full-space evolution limited to N <= " +
                            std::to_string(kMaxAtoms));
}

using Matrix = Eigen::MatrixXcd;

struct KossakowskiSpectrum {
    double lambda1;  // N gamma + dgamma, onefold
    double lambda2;  // dgamma, (N-1)-fold
    int mult2;
};

// Numerically diagonalize the N x N rate matrix (gamma0 on the diagonal,
// gamma off-diagonal).
inline KossakowskiSpectrum kossakowski_spectrum(int N, double gamma, double dgamma) {
    SystemParams p;
    p.N = N;
    p.gamma = gamma;
    p.dgamma = dgamma;
    p.validate();
    Eigen::MatrixXd k = Eigen::MatrixXd::Constant(N, N, gamma);
    k.diagonal().setConstant(gamma + dgamma);  // gamma0 = gamma + dgamma = 1
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(k);
    const Eigen::VectorXd ev = es.eigenvalues();
    // The uniform vector carries N gamma + dgamma; the rest are degenerate.
    const double collective = N * gamma + dgamma;
    int best = 0;
    for (int i = 1; i < N; ++i)
        if (std::abs(ev[i] - collective) < std::abs(ev[best] - collective)) best = i;
    double rest = 0.0;
    for (int i = 0; i < N; ++i)
        if (i != best) rest += ev[i];
    return {ev[best], N > 1 ? rest / (N - 1) : ev[best], N - 1};
}

namespace detail {

inline int dim_of(int N) { return 1 << N; }
inline int bit_of_atom(int N, int atom) { return N - atom; }  // atom in 1..N

}  // namespace detail

// Precomputed operators for the standard-form master equation.
class FullLiouvillian {
  public:
    explicit FullLiouvillian(const SystemParams& params) : params_(params) {
        require_capacity(params.N);
        params.validate();
        const int N = params.N;
        const int dim = detail::dim_of(N);
        Jm_ = Matrix::Zero(dim, dim);
        number_ = Matrix::Zero(dim, dim);
        for (int b = 0; b < dim; ++b) {
            int excited = 0;
            for (int i = 0; i < N; ++i)
                if (b & (1 << i)) ++excited;
            number_(b, b) = excited;
            for (int i = 0; i < N; ++i)
                if (b & (1 << i)) Jm_(b & ~(1 << i), b) = 1.0;
        }
        Jp_ = Jm_.adjoint();
        JpJm_ = Jp_ * Jm_;
        // H_dd = ddd sum_{i != j} sp_i sm_j = ddd (J+ J- - number)
        H_ = params.ddd * (JpJm_ - number_);
        K_ = params.gamma * JpJm_ + params.dgamma * number_;
    }

    const SystemParams& params() const { return params_; }
    int N() const { return params_.N; }
    int dim() const { return detail::dim_of(params_.N); }
    const Matrix& Jm() const { return Jm_; }
    const Matrix& Jp() const { return Jp_; }
    const Matrix& number_op() const { return number_; }
    const Matrix& H() const { return H_; }

    // sum_i sm_i rho sp_i via bit indexing.
    Matrix single_site_jumps(const Matrix& rho) const {
        const int N = params_.N;
        const int dim = detail::dim_of(N);
        Matrix out = Matrix::Zero(dim, dim);
        for (int i = 0; i < N; ++i) {
            const int bit = 1 << i;
            for (int a = 0; a < dim; ++a) {
                if (a & bit) continue;
                for (int b = 0; b < dim; ++b) {
                    if (b & bit) continue;
                    out(a, b) += rho(a | bit, b | bit);
                }
            }
        }
        return out;
    }

    // -i [H, rho] + gamma (J- rho J+ - 1/2 {J+J-, rho})
    //            + dgamma (sum_i sm_i rho sp_i - 1/2 {number, rho})
    // which equals the standard i != j / diagonal split exactly.
    Matrix rhs(const Matrix& rho) const {
        const std::complex<double> im(0.0, 1.0);
        Matrix out = -im * (H_ * rho - rho * H_);
        out += params_.gamma * (Jm_ * rho * Jp_);
        out += params_.dgamma * single_site_jumps(rho);
        out -= 0.5 * (K_ * rho + rho * K_);
        return out;
    }

  private:
    SystemParams params_;
    Matrix Jm_, Jp_, JpJm_, number_, H_, K_;
};

inline Matrix full_rhs(const Matrix& rho, const SystemParams& params) {
    return FullLiouvillian(params).rhs(rho);
}

// ---------------------------------------------------------------------------
// Coupled spin basis by recursive angular-momentum coupling.

// For each twoJ, paths[k] is the k_J-th Bratteli path; paths[k][a] is the
// 2^N coefficient vector of |J, M, k_J> with M = J - a.
class CoupledBasis {
  public:
    explicit CoupledBasis(int N) : N_(N) {
        require_capacity(N);
        // one atom: twoJ = 1, |1/2,+1/2> = |e>, |1/2,-1/2> = |g>
        std::vector<Path> paths;
        Path p0;
        p0.twoJ = 1;
        p0.vecs = {Eigen::VectorXd::Unit(2, 1), Eigen::VectorXd::Unit(2, 0)};
        paths.push_back(std::move(p0));

        for (int n = 2; n <= N; ++n) {
            const int dim = 1 << n;
            std::vector<Path> next;
            for (const Path& p : paths) {
                next.push_back(couple_up(p, dim));
                if (p.twoJ >= 1) next.push_back(couple_down(p, dim));
            }
            paths = std::move(next);
        }
        for (Path& p : paths) sectors_[p.twoJ].push_back(std::move(p.vecs));
    }

    int N() const { return N_; }
    const std::vector<std::vector<Eigen::VectorXd>>& sector(int twoJ) const {
        return sectors_.at(twoJ);
    }

    // rho_full = sum_{J,k,M,M'} rho_J^{M,M'} |J,M,k><J,M',k|.
    Matrix embed(const PIState& s) const {
        const int dim = detail::dim_of(N_);
        Matrix rho = Matrix::Zero(dim, dim);
        for (const auto& [twoJ, block] : s.blocks) {
            for (const auto& path : sectors_.at(twoJ)) {
                for (int a = 0; a <= twoJ; ++a)
                    for (int c = 0; c <= twoJ; ++c)
                        rho += block(a, c) * (path[a] * path[c].transpose()).cast<std::complex<double>>();
            }
        }
        return rho;
    }

    // Extract rho_J^{M,M'} from the first k_J path of each sector and verify
    // all other paths agree to 1e-9.
    PIState project(const Matrix& rho) const {
        PIState s = PIState::zero(N_);
        for (auto& [twoJ, block] : s.blocks) {
            const auto& paths = sectors_.at(twoJ);
            for (int a = 0; a <= twoJ; ++a) {
                for (int c = 0; c <= twoJ; ++c) {
                    const std::complex<double> v =
                        paths[0][a].cast<std::complex<double>>().dot(rho * paths[0][c].cast<std::complex<double>>());
                    for (std::size_t k = 1; k < paths.size(); ++k) {
                        const std::complex<double> vk =
                            paths[k][a].cast<std::complex<double>>().dot(
                                rho * paths[k][c].cast<std::complex<double>>());
                        if (std::abs(vk - v) > 1e-9)
                            throw NotPermutationInvariantError(
                                "project_to_pi: k_J sectors disagree at twoJ = " +
                                std::to_string(twoJ));
                    }
                    block(a, c) = v;
                }
            }
        }
        // coherences between different (J, k_J) sectors have no block-diagonal
        // image; their presence means the input is not permutation invariant
        if ((rho - embed(s)).cwiseAbs().maxCoeff() > 1e-9)
            throw NotPermutationInvariantError(
                "project_to_pi: coherence outside the invariant blocks");
        return s;
    }

  private:
    struct Path {
        int twoJ;
        std::vector<Eigen::VectorXd> vecs;  // index a, M = J - a
    };

    // |chi> |s> with the new atom at the least significant bit.
    static Eigen::VectorXd tensor_with(const Eigen::VectorXd& chi, int s, int dim) {
        Eigen::VectorXd v = Eigen::VectorXd::Zero(dim);
        for (int i = 0; i < chi.size(); ++i) v[2 * i + s] = chi[i];
        return v;
    }

    static Path couple_up(const Path& p, int dim) {
        const int twoJ = p.twoJ, twoJn = twoJ + 1;
        Path out;
        out.twoJ = twoJn;
        for (int twoM = twoJn; twoM >= -twoJn; twoM -= 2) {
            Eigen::VectorXd v = Eigen::VectorXd::Zero(dim);
            if (std::abs(twoM - 1) <= twoJ) {
                const double ce = std::sqrt((twoJ + twoM + 1) / (2.0 * (twoJ + 1)));
                v += ce * tensor_with(p.vecs[(twoJ - (twoM - 1)) / 2], 1, dim);
            }
            if (std::abs(twoM + 1) <= twoJ) {
                const double cg = std::sqrt((twoJ - twoM + 1) / (2.0 * (twoJ + 1)));
                v += cg * tensor_with(p.vecs[(twoJ - (twoM + 1)) / 2], 0, dim);
            }
            out.vecs.push_back(std::move(v));
        }
        return out;
    }

    static Path couple_down(const Path& p, int dim) {
        const int twoJ = p.twoJ, twoJn = twoJ - 1;
        Path out;
        out.twoJ = twoJn;
        for (int twoM = twoJn; twoM >= -twoJn; twoM -= 2) {
            const double ce = -std::sqrt((twoJ - twoM + 1) / (2.0 * (twoJ + 1)));
            const double cg = std::sqrt((twoJ + twoM + 1) / (2.0 * (twoJ + 1)));
            Eigen::VectorXd v =
                ce * tensor_with(p.vecs[(twoJ - (twoM - 1)) / 2], 1, dim) +
                cg * tensor_with(p.vecs[(twoJ - (twoM + 1)) / 2], 0, dim);
            out.vecs.push_back(std::move(v));
        }
        return out;
    }

    int N_;
    std::map<int, std::vector<std::vector<Eigen::VectorXd>>> sectors_;
};

inline PIState project_to_pi(const Matrix& rho, int N) { return CoupledBasis(N).project(rho); }

// True iff P_tau rho P_tau^dagger = rho for every transposition tau (which
// generate S_N), to 1e-10 in max norm.
inline bool check_permutation_invariance(const Matrix& rho, int N) {
    require_capacity(N);
    const int dim = detail::dim_of(N);
    for (int p = 0; p < N; ++p) {
        for (int q = p + 1; q < N; ++q) {
            auto swap_bits = [&](int b) {
                const int bp = (b >> p) & 1, bq = (b >> q) & 1;
                if (bp == bq) return b;
                return b ^ (1 << p) ^ (1 << q);
            };
            double maxdiff = 0.0;
            for (int a = 0; a < dim; ++a)
                for (int b = 0; b < dim; ++b)
                    maxdiff = std::max(maxdiff,
                                       std::abs(rho(swap_bits(a), swap_bits(b)) - rho(a, b)));
            if (maxdiff > 1e-10) return false;
        }
    }
    return true;
}

// ---------------------------------------------------------------------------
// Full-space time evolution (same adaptive RK contract as the PI solver).

struct FullTrajectoryPoint {
    double t;
    Matrix rho;
};

inline std::vector<FullTrajectoryPoint> evolve_full(const SystemParams& params,
                                                    const Matrix& rho0, double t_end,
                                                    double reltol, double abstol,
                                                    const std::vector<double>& sample_grid) {
    namespace ode = boost::numeric::odeint;
    require_capacity(params.N);
    const FullLiouvillian liou(params);
    const int dim = liou.dim();

    using CVec = std::vector<std::complex<double>>;
    auto to_vec = [dim](const Matrix& m) {
        CVec v(static_cast<std::size_t>(dim) * dim);
        Eigen::Map<Matrix>(v.data(), dim, dim) = m;
        return v;
    };
    auto to_mat = [dim](const CVec& v) {
        return Matrix(Eigen::Map<const Matrix>(v.data(), dim, dim));
    };

    auto sys = [&](const CVec& x, CVec& dxdt, double) {
        Eigen::Map<const Matrix> rho(x.data(), dim, dim);
        Eigen::Map<Matrix> out(dxdt.data(), dim, dim);
        out = liou.rhs(rho);
    };

    CVec x = to_vec(rho0);
    auto stepper = ode::make_dense_output(abstol, reltol, ode::runge_kutta_dopri5<CVec>());
    stepper.initialize(x, 0.0, std::min(0.01, t_end));

    std::vector<FullTrajectoryPoint> out;
    std::size_t gi = 0;
    CVec xi(x.size());
    while (gi < sample_grid.size() && sample_grid[gi] <= 0.0) {
        out.push_back({sample_grid[gi], rho0});
        ++gi;
    }
    while (stepper.current_time() < t_end && gi < sample_grid.size()) {
        const double t_before = stepper.current_time();
        stepper.do_step(sys);
        if (stepper.current_time() - t_before < 1e-14 * std::max(1.0, std::abs(t_before)))
            throw IntegrationError(t_before);
        while (gi < sample_grid.size() && sample_grid[gi] <= stepper.current_time()) {
            stepper.calc_state(sample_grid[gi], xi);
            out.push_back({sample_grid[gi], to_mat(xi)});
            ++gi;
        }
    }
    return out;
}

inline double full_expect_Jz(const Matrix& rho, int N) {
    double jz = 0.0;
    const int dim = detail::dim_of(N);
    for (int b = 0; b < dim; ++b) {
        int excited = 0;
        for (int i = 0; i < N; ++i)
            if (b & (1 << i)) ++excited;
        jz += (excited - 0.5 * N) * rho(b, b).real();
    }
    return jz;
}

// I(t) = -Tr(Jz L[rho]), evaluated from the full right-hand side.
inline double full_intensity(const Matrix& rho, const FullLiouvillian& liou) {
    return -full_expect_Jz(liou.rhs(rho), liou.N());
}

// ---------------------------------------------------------------------------
// Oracle equivalence suite: PI solver vs full evolution.

struct OracleRow {
    int N;
    std::uint64_t seed;
    double gamma, dgamma, ddd;
    double max_abs_err_I;
    double max_abs_err_Jz;
    bool pass;
};

inline OracleRow run_oracle_case(int N, std::uint64_t seed, double tol = 1e-6,
                                 int n_samples = 50, double t_end = 10.0) {
    require_capacity(N);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unif(0.0, 1.0);

    const double dgamma = unif(rng) * N / (N - 1.0);
    const double ddd = -2.0 + 4.0 * unif(rng);
    const SystemParams params = SystemParams::from_dgamma(N, dgamma, ddd);

    const auto blocks = spin::block_list(N);
    const int twoJ0 = blocks[static_cast<std::size_t>(unif(rng) * blocks.size())].twoJ;
    const int steps = static_cast<int>(unif(rng) * (twoJ0 + 1));
    const int twoM0 = twoJ0 - 2 * std::min(steps, twoJ0);

    const PIState pi0 = init_dicke(N, twoJ0, twoM0);
    const CoupledBasis basis(N);
    const Matrix rho0 = basis.embed(pi0);

    std::vector<double> grid(n_samples);
    for (int i = 0; i < n_samples; ++i) grid[i] = t_end * (i + 1) / n_samples;

    const auto pi_traj = evolve(params, pi0, t_end, 1e-10, 1e-12, grid);
    const auto full_traj = evolve_full(params, rho0, t_end, 1e-10, 1e-12, grid);
    const FullLiouvillian liou(params);

    OracleRow row{N, seed, params.gamma, params.dgamma, params.ddd, 0.0, 0.0, false};
    for (int i = 0; i < n_samples; ++i) {
        const double I_pi = intensity(pi_traj[i].state, params);
        const double I_full = full_intensity(full_traj[i].rho, liou);
        const double jz_pi = expect_Jz(pi_traj[i].state);
        const double jz_full = full_expect_Jz(full_traj[i].rho, N);
        row.max_abs_err_I = std::max(row.max_abs_err_I, std::abs(I_pi - I_full));
        row.max_abs_err_Jz = std::max(row.max_abs_err_Jz, std::abs(jz_pi - jz_full));
    }
    row.pass = row.max_abs_err_I <= tol && row.max_abs_err_Jz <= tol;
    return row;
}

inline std::vector<OracleRow> run_oracle_suite(int N, int n_seeds,
                                               std::uint64_t base_seed = 12345) {
    std::vector<OracleRow> rows;
    for (int s = 0; s < n_seeds; ++s)
        rows.push_back(run_oracle_case(N, base_seed + static_cast<std::uint64_t>(s)));
    return rows;
}

}  // namespace piqs::oracle
