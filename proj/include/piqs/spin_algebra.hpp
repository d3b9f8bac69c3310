#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

// Exact combinatorics of the coupled spin basis for N two-level systems.
// All angular momentum quantum numbers are carried as doubled integers
// (twoJ = 2J, twoM = 2M) so that half-integer values for odd N stay exact.

namespace piqs::spin {

using BigInt = boost::multiprecision::cpp_int;

struct BlockIndex {
    int twoJ = 0;   // 2J
    int dim = 1;    // 2J + 1
};

inline void require_block(int N, int twoJ) {
    if (N < 1) throw std::domain_error("spin: N must be >= 1");
    if (twoJ < 0 || twoJ > N)
        throw std::domain_error("spin: twoJ out of range [" + std::to_string(N % 2) +
                                ", " + std::to_string(N) + "]: " + std::to_string(twoJ));
    if ((twoJ - N) % 2 != 0)
        throw std::domain_error("spin: twoJ parity mismatch with N");
}

inline BigInt factorial(int n) {
    BigInt f = 1;
    for (int k = 2; k <= n; ++k) f *= k;
    return f;
}

// Multiplicity d_N^J = (2J+1) N! / ((N/2-J)! (N/2+J+1)!) of the angular
// momentum J sector, exact.
inline BigInt multiplicity(int N, int twoJ) {
    require_block(N, twoJ);
    const int lower = (N - twoJ) / 2;       // N/2 - J
    const int upper = (N + twoJ) / 2 + 1;   // N/2 + J + 1
    return (twoJ + 1) * factorial(N) / (factorial(lower) * factorial(upper));
}

// Cumulative multiplicity alpha_N^J = sum_{J' >= J} d_N^{J'}.
// Zero above the top block; twoJ = N + 2 is accepted so callers can index
// one past the end.
inline BigInt alpha(int N, int twoJ) {
    if (N < 1) throw std::domain_error("spin: N must be >= 1");
    if (twoJ > N) {
        if ((twoJ - N) % 2 != 0)
            throw std::domain_error("spin: twoJ parity mismatch with N");
        return 0;
    }
    require_block(N, twoJ);
    BigInt sum = 0;
    for (int tj = twoJ; tj <= N; tj += 2) sum += multiplicity(N, tj);
    return sum;
}

struct LadderCoeffs {
    double a_plus;    // sqrt((J-M)(J+M+1))
    double a_minus;   // sqrt((J+M)(J-M+1))
    double b_minus;   // -sqrt((J+M)(J+M-1))
    double d_minus;   // sqrt((J-M+1)(J-M+2))
};

namespace detail {
inline double clamped_sqrt(double a, double b) {
    const double prod = a * b;
    return prod > 0.0 ? std::sqrt(prod) : 0.0;
}
}  // namespace detail

// Ladder coefficients at (J, M).  Arguments outside the physical range are
// allowed; any factor whose product under the root would be negative gives
// exactly 0, which makes block boundaries uniform for the rate engine.
inline LadderCoeffs ladder_coefficients(int twoJ, int twoM) {
    const double jm = 0.5 * (twoJ - twoM);  // J - M
    const double jp = 0.5 * (twoJ + twoM);  // J + M
    LadderCoeffs c{};
    c.a_plus  = detail::clamped_sqrt(jm, jp + 1.0);
    c.a_minus = detail::clamped_sqrt(jp, jm + 1.0);
    c.b_minus = -detail::clamped_sqrt(jp, jp - 1.0);
    c.d_minus = detail::clamped_sqrt(jm + 1.0, jm + 2.0);
    return c;
}

// Number of real parameters of a permutation-invariant state,
// (N+1)(N+2)(N+3)/6 = sum_J (2J+1)^2.
inline std::uint64_t parameter_count(int N) {
    if (N < 1) throw std::domain_error("spin: N must be >= 1");
    const std::uint64_t n = static_cast<std::uint64_t>(N);
    return (n + 1) * (n + 2) * (n + 3) / 6;
}

// All blocks twoJ = N mod 2, ..., N in ascending order.
inline std::vector<BlockIndex> block_list(int N) {
    if (N < 1) throw std::domain_error("spin: N must be >= 1");
    std::vector<BlockIndex> blocks;
    for (int twoJ = N % 2; twoJ <= N; twoJ += 2)
        blocks.push_back(BlockIndex{twoJ, twoJ + 1});
    return blocks;
}

}  // namespace piqs::spin
