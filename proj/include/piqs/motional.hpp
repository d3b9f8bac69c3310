#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

// Decay rates gamma and dipole-dipole shifts Delta_dd from motional states:
// classical two-atom kernels, closed forms for BEC regimes, and quadrature
// over arbitrary isotropic densities.  All rates in units of gamma0.

namespace piqs::motional {

struct ConvergenceError : std::runtime_error {
    double achieved;
    ConvergenceError(const std::string& what, double achieved_)
        : std::runtime_error(what), achieved(achieved_) {}
};

enum class TransitionKind { Pi, Sigma };

inline double angular_p(double alpha, TransitionKind kind) {
    const double c = std::cos(alpha);
    return kind == TransitionKind::Pi ? 1.0 - c * c : 0.5 * (1.0 + c * c);
}

inline double angular_q(double alpha, TransitionKind kind) {
    const double c = std::cos(alpha);
    return kind == TransitionKind::Pi ? 1.0 - 3.0 * c * c : 0.5 * (3.0 * c * c - 1.0);
}

namespace detail {

inline double sinc(double x) {
    return std::abs(x) < 1e-4 ? 1.0 - x * x / 6.0 * (1.0 - x * x / 20.0) : std::sin(x) / x;
}

// j1(x)/x = (sin x / x - cos x) / x^2, series below the cancellation region.
inline double j1_over_x(double x) {
    if (std::abs(x) < 1e-2) {
        const double x2 = x * x;
        return 1.0 / 3.0 - x2 / 30.0 + x2 * x2 / 840.0;
    }
    return (sinc(x) - std::cos(x)) / (x * x);
}

}  // namespace detail

// Classical pair decay rate
//   (3/2)[p sin(x)/x + q (cos(x)/x^2 - sin(x)/x^3)],  x = k0 r.
// The x -> 0 limit is 1 for both transition kinds.
inline double gamma_classical(double k0r, double alpha, TransitionKind kind) {
    return 1.5 * (angular_p(alpha, kind) * detail::sinc(k0r) -
                  angular_q(alpha, kind) * detail::j1_over_x(k0r));
}

// Classical pair dipole shift
//   (3/4)[-p cos(x)/x + q (sin(x)/x^2 + cos(x)/x^3)].
// Diverges as q/x^3 near x = 0; callers must stay above x ~ 1e-6.
inline double delta_classical(double k0r, double alpha, TransitionKind kind) {
    if (k0r < 1e-6)
        throw std::domain_error("delta_classical: near-field divergence, need k0r >= 1e-6");
    const double x = k0r;
    const double s = std::sin(x), c = std::cos(x);
    return 0.75 * (-angular_p(alpha, kind) * c / x +
                   angular_q(alpha, kind) * (s / (x * x) + c / (x * x * x)));
}

// Gaussian-ground-state BEC: gamma = e^{-eta^2}.
inline double gamma_gaussian(double eta) {
    if (eta < 0.0) throw std::domain_error("gamma_gaussian: eta must be >= 0");
    return std::exp(-eta * eta);
}

namespace detail {

// 15 (3x cos x + (x^2 - 3) sin x) / x^5, series below the cancellation
// region; tends to -1 as x -> 0.
inline double tf_bracket(double x) {
    if (std::abs(x) < 0.2) {
        const double x2 = x * x;
        return -(1.0 - x2 / 14.0 + x2 * x2 / 504.0 - x2 * x2 * x2 / 33264.0);
    }
    const double x5 = x * x * x * x * x;
    return 15.0 * (3.0 * x * std::cos(x) + (x * x - 3.0) * std::sin(x)) / x5;
}

}  // namespace detail

// Thomas-Fermi BEC: gamma = 225 (3x cos x + (x^2-3) sin x)^2 / x^10.
inline double gamma_thomas_fermi(double x) {
    if (x < 0.0) throw std::domain_error("gamma_thomas_fermi: x must be >= 0");
    const double f = detail::tf_bracket(x);
    return f * f;
}

// x = eta (60 N a / l)^{1/5} from the trap parameters.
inline double thomas_fermi_x(double eta, double n_atoms, double a_over_l) {
    return eta * std::pow(60.0 * n_atoms * a_over_l, 0.2);
}

// Thermal cloud (z -> 0 limit): the Debye-Waller factor e^{-k0^2 R^2}.
inline double gamma_thermal_cloud(double k0R) {
    if (k0R < 0.0) throw std::domain_error("gamma_thermal_cloud: k0R must be >= 0");
    return std::exp(-k0R * k0R);
}

namespace detail {

// Series terms of the finite-T trapped Bose gas.  Term k carries the weight
// z^k/(1-e^{-k b})^3 (the occupation series, which also fixes the
// normalization N) and the Gaussian width factor tanh(k b / 2).
struct BoseTerm {
    double weight;
    double tanh_half;  // tanh(k b / 2)
};

inline std::vector<BoseTerm> bose_series(double beta_omega, double z, double tol,
                                         std::size_t max_terms = 1000000) {
    if (z < 0.0 || z >= 1.0)
        throw std::domain_error("bose_series: need 0 <= z < 1");
    std::vector<BoseTerm> terms;
    double sum = 0.0;
    for (std::size_t k = 1; k <= max_terms; ++k) {
        const double kb = static_cast<double>(k) * beta_omega;
        const double denom = -std::expm1(-kb);  // 1 - e^{-kb}
        const double w = std::pow(z, static_cast<double>(k)) / (denom * denom * denom);
        terms.push_back({w, std::tanh(0.5 * kb)});
        sum += w;
        if (k > 1 && w < tol * sum) return terms;
        if (z == 0.0) return terms;
    }
    throw ConvergenceError("bose_series: no convergence within max term count", sum);
}

}  // namespace detail

// Finite-temperature trapped Bose gas:
//   gamma = [ sum_k w_k e^{-(eta^2/2) coth(k b / 2)} / sum_k w_k ]^2,
// with w_k = z^k / (1 - e^{-k b})^3.  The z = 1 boundary dispatches to the
// pure-condensate closed form.
inline double gamma_thermal_bose(double eta, double beta_omega, double z, double tol = 1e-12) {
    if (eta < 0.0) throw std::domain_error("gamma_thermal_bose: eta must be >= 0");
    if (beta_omega <= 0.0)
        throw std::domain_error("gamma_thermal_bose: beta_omega must be > 0");
    if (z == 1.0) return gamma_gaussian(eta);
    // z -> 0: geometric suppression leaves the k = 1 term of both series.
    if (z == 0.0) return std::exp(-eta * eta / std::tanh(0.5 * beta_omega));
    const auto terms = detail::bose_series(beta_omega, z, tol);
    double num = 0.0, den = 0.0;
    for (const auto& t : terms) {
        num += t.weight * std::exp(-0.5 * eta * eta / t.tanh_half);
        den += t.weight;
    }
    const double ratio = num / den;
    return ratio * ratio;
}

// ---------------------------------------------------------------------------
// Motional models and quadrature over isotropic densities.

struct GaussianGround { double eta = 0.0; };
struct ThomasFermi { double x = 0.0; };
struct ThermalBose { double eta = 0.0; double beta_omega = 0.1; double z = 0.0; };
struct ThermalCloud { double k0R = 0.0; };

// Arbitrary isotropic radial density rho1(r), unit 3D normalization
// 4 pi int rho1 r^2 dr = 1, compactly supported on [0, rmax].
struct CustomIsotropic {
    std::function<double(double)> rho;
    double rmax = 0.0;
    double k0 = 0.0;
};

using MotionalModel =
    std::variant<GaussianGround, ThomasFermi, ThermalBose, ThermalCloud, CustomIsotropic>;

namespace detail {

inline double integrate(const std::function<double(double)>& f, double a, double b,
                        double tol, double max_err) {
    using boost::math::quadrature::gauss_kronrod;
    double err = 0.0;
    const double val = gauss_kronrod<double, 31>::integrate(f, a, b, 15, tol, &err);
    if (err > std::max(max_err, max_err * std::abs(val)))
        throw ConvergenceError("quadrature: requested accuracy not reached", val);
    return val;
}

}  // namespace detail

// Reference density profiles for the closed-form regimes (k0 folded into the
// model; lengths in units where the profile parameter is 1).
inline CustomIsotropic gaussian_density(double eta) {
    // rho1 = e^{-r^2/2}/ (2 pi)^{3/2},  l = 1, k0 = eta
    const double norm = std::pow(2.0 * M_PI, -1.5);
    return {[norm](double r) { return norm * std::exp(-0.5 * r * r); }, 14.0, eta};
}

inline CustomIsotropic thomas_fermi_density(double x) {
    // rho1 = (15/8 pi)(1 - r^2) on [0,1],  R_TF = 1, k0 = x
    const double c = 15.0 / (8.0 * M_PI);
    return {[c](double r) { return r <= 1.0 ? c * (1.0 - r * r) : 0.0; }, 1.0, x};
}

inline CustomIsotropic thermal_bose_density(double eta, double beta_omega, double z,
                                            double tol = 1e-12) {
    // mixture of unit-normalized Gaussians, term k with variance
    // coth(k b / 2) (l = 1) and weight w_k
    auto terms = detail::bose_series(beta_omega, z, tol);
    double den = 0.0;
    for (const auto& t : terms) den += t.weight;
    const double norm = std::pow(2.0 * M_PI, -1.5) / den;
    double widest = 0.0;  // largest variance 1/tanh among retained terms
    for (const auto& t : terms) widest = std::max(widest, 1.0 / t.tanh_half);
    const double rmax = 14.0 * std::sqrt(widest);
    auto rho = [terms = std::move(terms), norm](double r) {
        double v = 0.0;
        for (const auto& t : terms)
            v += t.weight * std::pow(t.tanh_half, 1.5) *
                 std::exp(-0.5 * r * r * t.tanh_half);
        return norm * v;
    };
    return {std::move(rho), rmax, eta};
}

inline CustomIsotropic thermal_cloud_density(double k0R) {
    // isotropic Gaussian with per-axis variance R^2,  R = 1, k0 = k0R
    const double norm = std::pow(2.0 * M_PI, -1.5);
    return {[norm](double r) { return norm * std::exp(-0.5 * r * r); }, 14.0, k0R};
}

// Linear-interpolation density from a (r, rho1) table with strictly
// increasing r.  Normalization is validated to 1e-8.
inline CustomIsotropic density_from_table(const std::vector<std::pair<double, double>>& table,
                                          double k0) {
    if (table.size() < 2)
        throw std::domain_error("density_from_table: need at least two rows");
    for (std::size_t i = 0; i < table.size(); ++i) {
        if (table[i].second < 0.0)
            throw std::domain_error("density_from_table: density must be nonnegative");
        if (i > 0 && table[i].first <= table[i - 1].first)
            throw std::domain_error("density_from_table: r must be strictly increasing");
    }
    auto pts = table;
    auto rho = [pts](double r) -> double {
        if (r <= pts.front().first) return pts.front().second;
        if (r >= pts.back().first) return 0.0;
        auto it = std::lower_bound(pts.begin(), pts.end(), r,
                                   [](const auto& p, double v) { return p.first < v; });
        const auto& [r1, v1] = *it;
        const auto& [r0, v0] = *(it - 1);
        return v0 + (v1 - v0) * (r - r0) / (r1 - r0);
    };
    CustomIsotropic model{std::move(rho), table.back().first, k0};
    // the interpolant is piecewise linear, so 4 pi int rho r^2 dr is exact
    double norm = 0.0;
    for (std::size_t i = 1; i < table.size(); ++i) {
        const auto& [r0, v0] = table[i - 1];
        const auto& [r1, v1] = table[i];
        const double b = (v1 - v0) / (r1 - r0);
        const double a = v0 - b * r0;
        norm += 4.0 * M_PI * (a * (r1 * r1 * r1 - r0 * r0 * r0) / 3.0 +
                              b * (r1 * r1 * r1 * r1 - r0 * r0 * r0 * r0) / 4.0);
    }
    if (std::abs(norm - 1.0) > 1e-8)
        throw std::domain_error("density_from_table: density not unit-normalized (got " +
                                std::to_string(norm) + ")");
    return model;
}

// gamma for a product state of one isotropic orbital: the squared
// spherically averaged characteristic function at k0,
//   gamma = [4 pi int rho1(r) sinc(k0 r) r^2 dr]^2.
inline double gamma_from_density(const CustomIsotropic& model) {
    const double k0 = model.k0;
    const double c = detail::integrate(
        [&](double r) { return 4.0 * M_PI * model.rho(r) * detail::sinc(k0 * r) * r * r; },
        0.0, model.rmax, 1e-10, 1e-7);
    return c * c;
}

// Delta_dd for a product state of one isotropic orbital.  The angular
// average of the classical kernel leaves only -cos(k0 s)/(2 k0 s) (the
// q term vanishes for isotropic states), and the s integral against the
// shell-shell distance distribution is analytic:
//   Delta = -(4 pi^2 / k0^2) * int int r rho(r) r' rho(r')
//           [sin(k0 (r+r')) - sin(k0 |r-r'|)] dr dr'.
inline double delta_from_density(const CustomIsotropic& model) {
    const double k0 = model.k0;
    if (k0 <= 0.0) throw std::domain_error("delta_from_density: k0 must be > 0");
    auto inner = [&](double r) {
        return detail::integrate(
            [&](double rp) {
                return rp * model.rho(rp) *
                       (std::sin(k0 * (r + rp)) - std::sin(k0 * std::abs(r - rp)));
            },
            0.0, model.rmax, 1e-11, 1e-6);
    };
    const double outer = detail::integrate(
        [&](double r) { return r * model.rho(r) * inner(r); }, 0.0, model.rmax, 1e-10, 1e-7);
    return -4.0 * M_PI * M_PI / (k0 * k0) * outer;
}

// gamma for any motional model.
inline double gamma_of(const MotionalModel& model) {
    return std::visit(
        [](const auto& m) -> double {
            using T = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<T, GaussianGround>) return gamma_gaussian(m.eta);
            else if constexpr (std::is_same_v<T, ThomasFermi>) return gamma_thomas_fermi(m.x);
            else if constexpr (std::is_same_v<T, ThermalBose>)
                return gamma_thermal_bose(m.eta, m.beta_omega, m.z);
            else if constexpr (std::is_same_v<T, ThermalCloud>)
                return gamma_thermal_cloud(m.k0R);
            else
                return gamma_from_density(m);
        },
        model);
}

}  // namespace piqs::motional
