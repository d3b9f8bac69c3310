#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <vector>

namespace {

int run(const std::string& args) {
    const std::string cmd = std::string(PIQSIM_BIN) + " " + args + " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    REQUIRE(WIFEXITED(status));
    return WEXITSTATUS(status);
}

bool exists(const std::string& path) {
    std::ifstream f(path);
    return f.good();
}

std::string slurp(const std::string& path) {
    std::ifstream f(path);
    REQUIRE(f.good());
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

// Parse a CSV file into rows of doubles, skipping the header and any
// non-numeric leading column.
std::vector<std::vector<double>> rows_of(const std::string& path, int skip_cols = 0) {
    std::ifstream f(path);
    REQUIRE(f.good());
    std::vector<std::vector<double>> rows;
    std::string line;
    std::getline(f, line);  // header
    while (std::getline(f, line)) {
        if (line.empty()) continue;
        std::vector<double> row;
        std::stringstream ss(line);
        std::string cell;
        int col = 0;
        while (std::getline(ss, cell, ',')) {
            if (col++ < skip_cols) continue;
            row.push_back(std::stod(cell));
        }
        rows.push_back(row);
    }
    return rows;
}

}  // namespace

TEST_CASE("evolve: two-atom pure superradiance intensity") {
    REQUIRE(run("evolve --n 2 --dgamma 0 --initial fully_excited --samples 51 "
                "--output cli_evolve2.csv") == 0);
    const auto rows = rows_of("cli_evolve2.csv");
    REQUIRE(rows.size() == 51);
    for (const auto& r : rows) {
        const double t = r[0], I = r[1];
        CHECK(std::abs(I - 2.0 * std::exp(-2.0 * t) * (1.0 + 2.0 * t)) < 1e-6);
    }
    std::remove("cli_evolve2.csv");
}

TEST_CASE("evolve: independent-decay limit at N = 30") {
    REQUIRE(run("evolve --n 30 --dgamma 1 --initial fully_excited --samples 21 "
                "--output cli_evolve30.csv") == 0);
    for (const auto& r : rows_of("cli_evolve30.csv"))
        CHECK(std::abs(r[1] - 30.0 * std::exp(-r[0])) < 1e-6);
    std::remove("cli_evolve30.csv");
}

TEST_CASE("evolve: subradiant initial intensity") {
    REQUIRE(run("evolve --n 4 --dgamma 0.3 --initial dicke:2,-2 --samples 11 "
                "--output cli_evolve_sub.csv") == 0);
    const auto rows = rows_of("cli_evolve_sub.csv");
    CHECK(std::abs(rows.front()[1] - 0.3) < 1e-12);
    std::remove("cli_evolve_sub.csv");
}

TEST_CASE("evolve: population columns appear in declared order") {
    REQUIRE(run("evolve --n 2 --dgamma 0.2 --populations --samples 5 "
                "--output cli_pops.csv") == 0);
    const std::string text = slurp("cli_pops.csv");
    CHECK(text.find("t,intensity,jz,trace,p_J0_M0,p_J2_M2,p_J2_M0,p_J2_M-2") !=
          std::string::npos);
    std::remove("cli_pops.csv");
}

TEST_CASE("validation failures exit 1 and create no file") {
    CHECK(run("evolve --n 4 --dgamma 1.4 --output cli_should_not_exist.csv") == 1);
    CHECK_FALSE(exists("cli_should_not_exist.csv"));
    CHECK(run("evolve --n 2 --dgamma 0.5 --gamma 0.9 --output cli_should_not_exist.csv") == 1);
    CHECK_FALSE(exists("cli_should_not_exist.csv"));
    CHECK(run("evolve --n 2 --initial dicke:3,1 --output cli_should_not_exist.csv") == 1);
    CHECK_FALSE(exists("cli_should_not_exist.csv"));
    CHECK(run("sweep --n 2:4:1 --dgamma 0:2:0.5 --output cli_should_not_exist.csv") == 1);
    CHECK_FALSE(exists("cli_should_not_exist.csv"));
    CHECK(run("rates thermal-bose --eta 0:1:0.5 --z 1.5") == 1);
    CHECK(run("rates thermal-bose --eta 0:1:0.5 --delta") == 1);
}

TEST_CASE("oracle: capacity error exits 2") {
    CHECK(run("oracle --n 7 --output cli_should_not_exist.csv") == 2);
    CHECK_FALSE(exists("cli_should_not_exist.csv"));
}

TEST_CASE("oracle: N = 2 report passes") {
    REQUIRE(run("oracle --n 2 --seeds 3 --output cli_oracle.csv") == 0);
    const auto rows = rows_of("cli_oracle.csv");
    REQUIRE(rows.size() == 3);
    for (const auto& r : rows) {
        CHECK(r[5] <= 1e-6);       // max_abs_err_I
        CHECK(r[6] <= 1e-6);       // max_abs_err_Jz
        CHECK(r.back() == 1.0);    // pass
    }
    std::remove("cli_oracle.csv");
}

TEST_CASE("rates: gaussian closed-form curve") {
    REQUIRE(run("rates gaussian --eta 0:2:0.1 --output cli_rates.csv") == 0);
    const auto rows = rows_of("cli_rates.csv", 1);
    REQUIRE(rows.size() == 21);
    for (const auto& r : rows)
        CHECK(std::abs(r[1] - std::exp(-r[0] * r[0])) < 1e-14);
    std::remove("cli_rates.csv");
}

TEST_CASE("rates: thermal-bose fugacity family") {
    REQUIRE(run("rates thermal-bose --eta 0:2:0.5 --beta-omega 0.1 --z 0,0.5,0.9,1 "
                "--output cli_tb.csv") == 0);
    const auto rows = rows_of("cli_tb.csv", 1);
    REQUIRE(rows.size() == 5 * 4);
    for (const auto& r : rows) {
        CHECK(r[3] >= 0.0);
        CHECK(r[3] <= 1.0);
    }
    std::remove("cli_tb.csv");
}

TEST_CASE("sweep: deterministic grid order, reproducible across thread counts") {
    const std::string base = "sweep --n 3,5 --dgamma 0:0.6:0.2 --horizon 10 ";
    REQUIRE(std::system((std::string("PIQSIM_THREADS=1 ") + PIQSIM_BIN + " " + base +
                         "--output cli_sweep1.csv > /dev/null 2>&1") .c_str()) == 0);
    REQUIRE(std::system((std::string("PIQSIM_THREADS=4 ") + PIQSIM_BIN + " " + base +
                         "--output cli_sweep4.csv > /dev/null 2>&1") .c_str()) == 0);
    CHECK(slurp("cli_sweep1.csv") == slurp("cli_sweep4.csv"));
    const auto rows = rows_of("cli_sweep1.csv");
    REQUIRE(rows.size() == 8);  // 2 N values x 4 dgamma values
    CHECK(rows[0][0] == 3.0);
    CHECK(rows[0][2] == 0.0);
    CHECK(rows[3][2] == doctest::Approx(0.6));
    CHECK(rows[4][0] == 5.0);
    // A_I(5) vanishes at and beyond the critical value 0.5
    CHECK(rows[4 + 3][4] == 0.0);
    std::remove("cli_sweep1.csv");
    std::remove("cli_sweep4.csv");
}

TEST_CASE("config file: values used, flags override") {
    {
        std::ofstream cfg("cli_cfg.json");
        cfg << R"({"n": 2, "dgamma": 0.0, "samples": 5, "t-end": 2.0})";
    }
    REQUIRE(run("evolve --config cli_cfg.json --output cli_cfg_out.csv") == 0);
    auto rows = rows_of("cli_cfg_out.csv");
    REQUIRE(rows.size() == 5);
    CHECK(rows.back()[0] == doctest::Approx(2.0));

    // flag overrides the file value
    REQUIRE(run("evolve --config cli_cfg.json --samples 3 --output cli_cfg_out.csv") == 0);
    rows = rows_of("cli_cfg_out.csv");
    REQUIRE(rows.size() == 3);

    CHECK(run("evolve --config cli_missing.json --output x.csv") == 1);
    std::remove("cli_cfg.json");
    std::remove("cli_cfg_out.csv");
}

TEST_CASE("identical invocations give byte-identical output") {
    REQUIRE(run("evolve --n 3 --dgamma 0.4 --ddd 0.3 --samples 31 --output cli_rep1.csv") == 0);
    REQUIRE(run("evolve --n 3 --dgamma 0.4 --ddd 0.3 --samples 31 --output cli_rep2.csv") == 0);
    CHECK(slurp("cli_rep1.csv") == slurp("cli_rep2.csv"));
    std::remove("cli_rep1.csv");
    std::remove("cli_rep2.csv");
}

TEST_CASE("meanfield: logistic trajectory CSV") {
    REQUIRE(run("meanfield --n 30 --gamma 1 --t-i 0.5 --samples 11 --t-end 1 "
                "--output cli_mf.csv") == 0);
    const auto rows = rows_of("cli_mf.csv");
    REQUIRE(rows.size() == 11);
    // p(t_I) = 1/2 and peak intensity N^2 gamma / 4 at t_I
    CHECK(rows[5][0] == doctest::Approx(0.5));
    CHECK(rows[5][1] == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(rows[5][3] == doctest::Approx(225.0).epsilon(1e-12));
    std::remove("cli_mf.csv");
}
