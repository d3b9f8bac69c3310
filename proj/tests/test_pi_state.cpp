#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sstream>

#include <piqs/csv.hpp>
#include <piqs/pi_state.hpp>

using namespace piqs;

TEST_CASE("init_dicke: pinned examples") {
    const PIState ee = init_dicke(2, 2, 2);
    CHECK(ee.at(2, 2, 2).real() == 1.0);
    CHECK(trace(ee) == 1.0);

    const PIState singlet = init_dicke(2, 0, 0);
    CHECK(singlet.at(0, 0, 0).real() == 1.0);
    CHECK(trace(singlet) == 1.0);

    const PIState d = init_dicke(4, 2, -2);
    CHECK(d.at(2, -2, -2).real() == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
    CHECK(trace(d) == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("init_dicke: trace 1 and <Jz> = M0 for all valid inputs up to N = 12") {
    for (int N = 1; N <= 12; ++N) {
        for (const auto& b : spin::block_list(N)) {
            for (int twoM = -b.twoJ; twoM <= b.twoJ; twoM += 2) {
                const PIState s = init_dicke(N, b.twoJ, twoM);
                CHECK(trace(s) == doctest::Approx(1.0).epsilon(1e-14));
                CHECK(expect_Jz(s) == doctest::Approx(0.5 * twoM).epsilon(1e-14));
            }
        }
    }
}

TEST_CASE("init_dicke: invalid inputs") {
    CHECK_THROWS_AS(init_dicke(4, 3, 1), std::domain_error);   // parity
    CHECK_THROWS_AS(init_dicke(4, 2, 4), std::domain_error);   // |M| > J
    CHECK_THROWS_AS(init_dicke(4, 2, 1), std::domain_error);   // M parity
    CHECK_THROWS_AS(init_dicke(4, 6, 0), std::domain_error);   // J > N/2
}

TEST_CASE("expect_Jz: extremal states") {
    CHECK(expect_Jz(init_dicke(6, 6, 6)) == 3.0);
    CHECK(expect_Jz(init_dicke(6, 6, -6)) == -3.0);
    CHECK(expect_Jz(init_dicke(4, 2, 0)) == 0.0);
}

TEST_CASE("trace: zero state and mixtures") {
    CHECK(trace(PIState::zero(5)) == 0.0);
    PIState mix = PIState::zero(2);
    mix.at(2, 2, 2) = 0.5;
    mix.at(0, 0, 0) = 0.5;
    CHECK(trace(mix) == 1.0);
}

TEST_CASE("populations: deterministic order") {
    const auto pops = populations(init_dicke(2, 2, 2));
    REQUIRE(pops.size() == 4);
    CHECK(pops[0].twoJ == 0);
    CHECK(pops[0].twoM == 0);
    CHECK(pops[0].value == 0.0);
    CHECK(pops[1].twoJ == 2);
    CHECK(pops[1].twoM == 2);
    CHECK(pops[1].value == 1.0);
    CHECK(pops[2].twoM == 0);
    CHECK(pops[3].twoM == -2);
}

TEST_CASE("populations: count matches sum of block dims") {
    for (int N : {1, 3, 8, 15}) {
        std::size_t expect = 0;
        for (const auto& b : spin::block_list(N)) expect += b.dim;
        CHECK(populations(PIState::zero(N)).size() == expect);
    }
}

TEST_CASE("flatten_records: column order and round-trip values") {
    PIState s = init_dicke(2, 2, 0);
    s.at(2, 2, -2) = {0.25, -0.125};
    const auto recs = flatten_records(s);
    std::size_t expect = 0;
    for (const auto& b : spin::block_list(2)) expect += b.dim * b.dim;
    REQUIRE(recs.size() == expect);
    bool found = false;
    for (const auto& r : recs) {
        if (r.twoJ == 2 && r.twoM == 2 && r.twoMp == -2) {
            CHECK(r.re == 0.25);
            CHECK(r.im == -0.125);
            found = true;
        }
    }
    CHECK(found);
}

TEST_CASE("element CSV: header and 17-digit floats") {
    PIState s = init_dicke(4, 2, -2);
    std::ostringstream os;
    io::write_elements(os, s);
    const std::string text = os.str();
    CHECK(text.rfind("twoJ,twoM,twoMp,re,im\n", 0) == 0);
    CHECK(text.find("0.33333333333333331") != std::string::npos);
}
