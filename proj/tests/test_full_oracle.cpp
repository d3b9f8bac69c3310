#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include <piqs/full_oracle.hpp>

using namespace piqs;
using namespace piqs::oracle;
using cplx = std::complex<double>;

namespace {

// Literal single-site lowering operator for atom at bit position `bit`.
Matrix site_sm(int N, int bit) {
    const int dim = 1 << N;
    Matrix m = Matrix::Zero(dim, dim);
    for (int b = 0; b < dim; ++b)
        if (b & (1 << bit)) m(b & ~(1 << bit), b) = 1.0;
    return m;
}

// Standard-form dissipator assembled from the explicit pairwise double sum,
// independent of the library's grouped evaluation.
Matrix standard_dissipator(const Matrix& rho, const SystemParams& p) {
    const int N = p.N;
    const int dim = 1 << N;
    std::vector<Matrix> sm, sp;
    for (int i = 0; i < N; ++i) {
        sm.push_back(site_sm(N, i));
        sp.push_back(sm.back().adjoint());
    }
    Matrix out = Matrix::Zero(dim, dim);
    const double g0 = p.gamma + p.dgamma;
    for (int i = 0; i < N; ++i) {
        for (int j = 0; j < N; ++j) {
            const double rate = i == j ? g0 : p.gamma;
            const Matrix k = sp[i] * sm[j];
            out += rate * (sm[j] * rho * sp[i] - 0.5 * (k * rho + rho * k));
        }
    }
    return out;
}

// Lindblad-form dissipator: F1 = J-/sqrt(N) with rate N gamma + dgamma, plus
// N-1 discrete-Fourier combinations orthogonal to the uniform vector, each
// with rate dgamma.
Matrix lindblad_dissipator(const Matrix& rho, const SystemParams& p) {
    const int N = p.N;
    const int dim = 1 << N;
    std::vector<Matrix> sm;
    for (int i = 0; i < N; ++i) sm.push_back(site_sm(N, i));
    Matrix out = Matrix::Zero(dim, dim);
    for (int k = 0; k < N; ++k) {
        Matrix F = Matrix::Zero(dim, dim);
        for (int i = 0; i < N; ++i) {
            const double phase = 2.0 * M_PI * k * i / N;
            F += cplx(std::cos(phase), std::sin(phase)) / std::sqrt(double(N)) * sm[i];
        }
        const double rate = k == 0 ? N * p.gamma + p.dgamma : p.dgamma;
        const Matrix K = F.adjoint() * F;
        out += rate * (F * rho * F.adjoint() - 0.5 * (K * rho + rho * K));
    }
    return out;
}

Matrix random_hermitian(int dim, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> unif(-1.0, 1.0);
    Matrix m(dim, dim);
    for (int a = 0; a < dim; ++a)
        for (int b = 0; b < dim; ++b) m(a, b) = cplx(unif(rng), unif(rng));
    return 0.5 * (m + m.adjoint());
}

}  // namespace

TEST_CASE("kossakowski spectrum: pinned values") {
    auto s = kossakowski_spectrum(4, 1.0, 0.0);
    CHECK(s.lambda1 == doctest::Approx(4.0).epsilon(1e-12));
    CHECK(s.lambda2 == doctest::Approx(0.0).scale(1).epsilon(1e-12));
    CHECK(s.mult2 == 3);

    s = kossakowski_spectrum(2, 0.0, 1.0);
    CHECK(s.lambda1 == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(s.lambda2 == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(s.mult2 == 1);

    s = kossakowski_spectrum(3, 0.5, 0.5);
    CHECK(s.lambda1 == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(s.lambda2 == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(s.mult2 == 2);
}

TEST_CASE("capacity guard") {
    CHECK_THROWS_AS(FullLiouvillian(SystemParams::from_dgamma(7, 0.3)), CapacityError);
    CHECK_THROWS_AS(CoupledBasis(8), CapacityError);
    CHECK_THROWS_AS(run_oracle_case(7, 1), CapacityError);
}

TEST_CASE("full rhs: pinned cases") {
    // ground state is stationary
    const FullLiouvillian liou(SystemParams::from_dgamma(3, 0.4, 1.0));
    Matrix ground = Matrix::Zero(8, 8);
    ground(0, 0) = 1.0;
    CHECK(liou.rhs(ground).cwiseAbs().maxCoeff() < 1e-15);

    // N=2 fully excited, gamma=1: d<Jz>/dt = -2
    const FullLiouvillian l2(SystemParams::from_dgamma(2, 0.0));
    Matrix ee = Matrix::Zero(4, 4);
    ee(3, 3) = 1.0;
    CHECK(full_expect_Jz(l2.rhs(ee), 2) == doctest::Approx(-2.0).epsilon(1e-13));
    CHECK(full_intensity(ee, l2) == doctest::Approx(2.0).epsilon(1e-13));

    // singlet is dark at dgamma = 0
    Eigen::VectorXcd singlet(4);
    singlet << 0.0, 1.0 / std::sqrt(2.0), -1.0 / std::sqrt(2.0), 0.0;
    const Matrix rho_s = singlet * singlet.adjoint();
    CHECK(l2.rhs(rho_s).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("full rhs: equals the literal pairwise standard form") {
    std::mt19937_64 rng(31);
    for (int N : {2, 3, 4}) {
        const SystemParams p = SystemParams::from_dgamma(N, 0.35, 1.4);
        const FullLiouvillian liou(p);
        const cplx im(0.0, 1.0);
        for (int rep = 0; rep < 3; ++rep) {
            const Matrix rho = random_hermitian(1 << N, rng);
            const Matrix ref =
                -im * (liou.H() * rho - rho * liou.H()) + standard_dissipator(rho, p);
            CHECK((liou.rhs(rho) - ref).cwiseAbs().maxCoeff() < 1e-12);
        }
    }
}

TEST_CASE("Lindblad form equals the standard form as a superoperator") {
    std::mt19937_64 rng(37);
    for (int N : {2, 3, 4}) {
        const SystemParams p = SystemParams::from_dgamma(N, 0.45);
        const int dim = 1 << N;
        // matrix-unit basis spans all operators; agreement on it is
        // superoperator equality
        for (int a = 0; a < dim; ++a) {
            for (int b = 0; b < dim; ++b) {
                Matrix unit = Matrix::Zero(dim, dim);
                unit(a, b) = 1.0;
                const Matrix d1 = standard_dissipator(unit, p);
                const Matrix d2 = lindblad_dissipator(unit, p);
                CHECK((d1 - d2).cwiseAbs().maxCoeff() < 1e-10);
            }
        }
    }
}

TEST_CASE("coupled basis: orthonormal and complete") {
    for (int N = 1; N <= 5; ++N) {
        const CoupledBasis basis(N);
        const int dim = 1 << N;
        std::vector<Eigen::VectorXd> all;
        for (const auto& blk : spin::block_list(N)) {
            const auto& sector = basis.sector(blk.twoJ);
            CHECK(sector.size() ==
                  static_cast<std::size_t>(spin::multiplicity(N, blk.twoJ)));
            for (const auto& path : sector) {
                REQUIRE(static_cast<int>(path.size()) == blk.dim);
                for (const auto& v : path) all.push_back(v);
            }
        }
        REQUIRE(static_cast<int>(all.size()) == dim);
        for (std::size_t i = 0; i < all.size(); ++i)
            for (std::size_t j = i; j < all.size(); ++j)
                CHECK(all[i].dot(all[j]) ==
                      doctest::Approx(i == j ? 1.0 : 0.0).scale(1).epsilon(1e-12));
    }
}

TEST_CASE("coupled basis: vectors diagonalize Jz and J^2") {
    for (int N : {2, 3, 4}) {
        const CoupledBasis basis(N);
        const FullLiouvillian liou(SystemParams::from_dgamma(N, 0.0));
        const Eigen::MatrixXcd J2 =
            liou.Jp() * liou.Jm() +
            (liou.number_op() - 0.5 * N * Matrix::Identity(1 << N, 1 << N)) *
                (liou.number_op() - 0.5 * N * Matrix::Identity(1 << N, 1 << N)) -
            (liou.number_op() - 0.5 * N * Matrix::Identity(1 << N, 1 << N));
        // J^2 = J+J- + Jz^2 - Jz
        for (const auto& blk : spin::block_list(N)) {
            const double J = 0.5 * blk.twoJ;
            for (const auto& path : basis.sector(blk.twoJ)) {
                for (int a = 0; a <= blk.twoJ; ++a) {
                    const double M = J - a;
                    const Eigen::VectorXcd v = path[a].cast<cplx>();
                    const Eigen::VectorXcd jz =
                        (liou.number_op() - 0.5 * N * Matrix::Identity(1 << N, 1 << N)) * v;
                    CHECK((jz - M * v).cwiseAbs().maxCoeff() < 1e-12);
                    CHECK(((J2 * v) - J * (J + 1.0) * v).cwiseAbs().maxCoeff() < 1e-11);
                }
            }
        }
    }
}

TEST_CASE("project_to_pi: pinned states") {
    {
        Matrix ee = Matrix::Zero(4, 4);
        ee(3, 3) = 1.0;
        const PIState s = project_to_pi(ee, 2);
        CHECK(s.at(2, 2, 2).real() == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(trace(s) == doctest::Approx(1.0).epsilon(1e-12));
    }
    {
        Eigen::VectorXcd singlet(4);
        singlet << 0.0, 1.0 / std::sqrt(2.0), -1.0 / std::sqrt(2.0), 0.0;
        const PIState s = project_to_pi(Matrix(singlet * singlet.adjoint()), 2);
        CHECK(s.at(0, 0, 0).real() == doctest::Approx(1.0).epsilon(1e-12));
    }
    {
        const Matrix mixed = Matrix::Identity(16, 16) / 16.0;
        const PIState s = project_to_pi(mixed, 4);
        for (const auto& pop : populations(s))
            CHECK(pop.value == doctest::Approx(1.0 / 16.0).epsilon(1e-12));
        CHECK(trace(s) == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("project_to_pi: rejects non-invariant input") {
    Matrix eg = Matrix::Zero(4, 4);
    eg(2, 2) = 1.0;  // |e,g><e,g|
    CHECK_THROWS_AS(project_to_pi(eg, 2), NotPermutationInvariantError);
    CHECK_FALSE(check_permutation_invariance(eg, 2));
}

TEST_CASE("embed/project round trip on random PI states") {
    std::mt19937_64 rng(53);
    std::uniform_real_distribution<double> unif(-0.5, 0.5);
    for (int N : {2, 3, 5}) {
        const CoupledBasis basis(N);
        PIState s = PIState::zero(N);
        double tr = 0.0;
        for (auto& [twoJ, b] : s.blocks) {
            for (int a = 0; a <= twoJ; ++a) {
                b(a, a) = unif(rng) + 0.6;
                tr += block_degeneracy(N, twoJ) * b(a, a).real();
                for (int c = a + 1; c <= twoJ; ++c) {
                    b(a, c) = cplx(unif(rng), unif(rng));
                    b(c, a) = std::conj(b(a, c));
                }
            }
        }
        for (auto& [twoJ, b] : s.blocks) b /= tr;
        const Matrix full = basis.embed(s);
        CHECK(check_permutation_invariance(full, N));
        CHECK(std::abs(full.trace().real() - 1.0) < 1e-12);
        const PIState back = basis.project(full);
        for (const auto& [twoJ, b] : s.blocks)
            CHECK((b - back.blocks.at(twoJ)).cwiseAbs().maxCoeff() < 1e-12);
    }
}

TEST_CASE("full evolution: preserves permutation invariance and positivity") {
    const int N = 4;
    const SystemParams p = SystemParams::from_dgamma(N, 0.4, 0.9);
    const CoupledBasis basis(N);
    const Matrix rho0 = basis.embed(init_dicke(N, 4, 2));
    std::vector<double> grid;
    for (int i = 1; i <= 10; ++i) grid.push_back(0.6 * i);
    const auto traj = evolve_full(p, rho0, 6.0, 1e-10, 1e-12, grid);
    REQUIRE(traj.size() == grid.size());
    for (const auto& pt : traj) {
        CHECK(check_permutation_invariance(pt.rho, N));
        CHECK_NOTHROW(basis.project(pt.rho));
        CHECK(std::abs(pt.rho.trace().real() - 1.0) < 1e-9);
        Eigen::SelfAdjointEigenSolver<Matrix> es(pt.rho);
        CHECK(es.eigenvalues().minCoeff() > -1e-9);
    }
}

TEST_CASE("oracle equivalence: small-N spot checks") {
    for (int N : {2, 3}) {
        const auto rows = run_oracle_suite(N, 3, 777);
        for (const auto& r : rows) {
            CAPTURE(r.N);
            CAPTURE(r.seed);
            CAPTURE(r.max_abs_err_I);
            CAPTURE(r.max_abs_err_Jz);
            CHECK(r.pass);
        }
    }
}
