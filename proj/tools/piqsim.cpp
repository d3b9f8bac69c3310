// piqsim: simulation CLI for cooperative spontaneous emission of N two-level
// atoms.  Subcommands: evolve, sweep, rates, oracle, meanfield.
//
// Exit codes: 0 success, 1 validation error, 2 capacity error, 3 numerical
// failure.

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include <piqs/piqs.hpp>

namespace {

using nlohmann::json;

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitCapacity = 2;
constexpr int kExitNumerical = 3;

struct NumericalFailure : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// JSON config: identical field names to the long flags; flags override file
// values.

class ConfigBinder {
  public:
    template <typename T>
    CLI::Option* bind(CLI::App& app, const std::string& flag, T& var,
                      const std::string& desc) {
        CLI::Option* opt = app.add_option(flag, var, desc);
        register_fill(opt, var);
        return opt;
    }

    CLI::Option* bind_flag(CLI::App& app, const std::string& flag, bool& var,
                           const std::string& desc) {
        CLI::Option* opt = app.add_flag(flag, var, desc);
        register_fill(opt, var);
        return opt;
    }

    // required either on the command line or in the config file; checked
    // when apply() runs, after the file has been read
    CLI::Option* require(CLI::Option* opt) {
        required_.push_back(opt);
        return opt;
    }

    void apply(const json& cfg) {
        for (const auto& f : fills_) f(cfg);
        for (const auto* opt : required_)
            if (opt->count() == 0 && !cfg.contains(key_of(opt)))
                throw std::domain_error("--" + key_of(opt) + " is required");
    }

  private:
    static std::string key_of(const CLI::Option* opt) {
        std::string key = opt->get_lnames().empty() ? opt->get_name() : opt->get_lnames()[0];
        while (!key.empty() && key.front() == '-') key.erase(key.begin());
        return key;
    }

    template <typename T>
    void register_fill(CLI::Option* opt, T& var) {
        const std::string key = key_of(opt);
        fills_.push_back([opt, &var, key](const json& cfg) {
            if (opt->count() == 0 && cfg.contains(key)) var = cfg.at(key).get<T>();
        });
    }

    std::vector<std::function<void(const json&)>> fills_;
    std::vector<const CLI::Option*> required_;
};

json load_config(const std::string& path) {
    if (path.empty()) return json::object();
    std::ifstream in(path);
    if (!in) throw std::domain_error("config: cannot open file: " + path);
    json cfg;
    try {
        in >> cfg;
    } catch (const json::parse_error& e) {
        throw std::domain_error(std::string("config: invalid JSON: ") + e.what());
    }
    if (!cfg.is_object()) throw std::domain_error("config: top level must be an object");
    return cfg;
}

// ---------------------------------------------------------------------------
// Grid parsing: comma-separated values, each either a number or an inclusive
// range start:end:step (endpoints included within 1e-12).

std::vector<double> parse_grid(const std::string& spec) {
    std::vector<double> out;
    std::stringstream ss(spec);
    std::string token;
    while (std::getline(ss, token, ',')) {
        if (token.empty()) throw std::domain_error("grid: empty token in '" + spec + "'");
        const auto c1 = token.find(':');
        if (c1 == std::string::npos) {
            out.push_back(std::stod(token));
            continue;
        }
        const auto c2 = token.find(':', c1 + 1);
        if (c2 == std::string::npos)
            throw std::domain_error("grid: range must be start:end:step, got '" + token + "'");
        const double a = std::stod(token.substr(0, c1));
        const double b = std::stod(token.substr(c1 + 1, c2 - c1 - 1));
        const double step = std::stod(token.substr(c2 + 1));
        if (step == 0.0) throw std::domain_error("grid: step must be nonzero");
        if ((b - a) * step < 0.0)
            throw std::domain_error("grid: step direction does not reach end in '" + token + "'");
        const double tol = 1e-12 * std::max({1.0, std::abs(a), std::abs(b)});
        for (long i = 0;; ++i) {
            const double v = a + static_cast<double>(i) * step;
            if (step > 0.0 ? v > b + tol : v < b - tol) break;
            out.push_back(v);
        }
    }
    if (out.empty()) throw std::domain_error("grid: no values in '" + spec + "'");
    return out;
}

std::vector<int> parse_int_grid(const std::string& spec) {
    std::vector<int> out;
    for (double v : parse_grid(spec)) {
        const double r = std::round(v);
        if (std::abs(v - r) > 1e-9)
            throw std::domain_error("grid: expected integer values, got " + std::to_string(v));
        out.push_back(static_cast<int>(r));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Shared pieces.

piqs::PIState parse_initial(const std::string& spec, int N) {
    if (spec == "fully_excited") return piqs::init_dicke(N, N, N);
    if (spec.rfind("dicke:", 0) == 0) {
        const std::string rest = spec.substr(6);
        const auto comma = rest.find(',');
        if (comma == std::string::npos)
            throw std::domain_error("initial: expected dicke:twoJ0,twoM0");
        const int twoJ0 = std::stoi(rest.substr(0, comma));
        const int twoM0 = std::stoi(rest.substr(comma + 1));
        return piqs::init_dicke(N, twoJ0, twoM0);
    }
    throw std::domain_error("initial: expected 'fully_excited' or 'dicke:twoJ0,twoM0', got '" +
                            spec + "'");
}

piqs::SystemParams make_params(int N, std::optional<double> gamma,
                               std::optional<double> dgamma, double ddd) {
    if (gamma && dgamma && std::abs(*gamma + *dgamma - 1.0) > 1e-12)
        throw std::domain_error("params: gamma + dgamma must equal 1 (gamma0 units)");
    if (gamma) return piqs::SystemParams::from_gamma(N, *gamma, ddd);
    return piqs::SystemParams::from_dgamma(N, dgamma.value_or(0.0), ddd);
}

// Output buffered fully in memory, then written; validation and numerical
// failures never leave a partial file behind.
void emit(const std::string& path, const std::string& text) {
    if (path.empty() || path == "-") {
        std::cout << text;
        return;
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::domain_error("output: cannot open file: " + path);
    out << text;
}

unsigned thread_count() {
    if (const char* env = std::getenv("PIQSIM_THREADS")) {
        const int v = std::atoi(env);
        if (v >= 1) return static_cast<unsigned>(v);
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw ? hw : 1;
}

// Index-ordered parallel for; results must be written to preallocated slots
// so output order is independent of scheduling.
template <typename Fn>
void parallel_for(std::size_t n, Fn fn) {
    const unsigned workers =
        std::min<std::size_t>(thread_count(), n ? n : 1);
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (;;) {
                const std::size_t i = next.fetch_add(1);
                if (i >= n) return;
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(error_mutex);
                    if (!error) error = std::current_exception();
                    return;
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
}

// ---------------------------------------------------------------------------
// evolve

struct EvolveArgs {
    int n = 0;
    std::optional<double> gamma, dgamma;
    double ddd = 0.0;
    std::string initial = "fully_excited";
    double t_end = 10.0;
    double reltol = 1e-8, abstol = 1e-10;
    int samples = 201;
    std::string grid;
    bool populations = false;
    std::string output = "-";
    std::string config;
};

void run_evolve(const EvolveArgs& a) {
    const piqs::SystemParams params = make_params(a.n, a.gamma, a.dgamma, a.ddd);
    const piqs::PIState state0 = parse_initial(a.initial, a.n);
    if (a.t_end <= 0.0) throw std::domain_error("evolve: t-end must be > 0");
    if (a.samples < 2 && a.grid.empty())
        throw std::domain_error("evolve: samples must be >= 2");
    std::vector<double> grid;
    if (!a.grid.empty()) {
        grid = parse_grid(a.grid);
        for (std::size_t i = 0; i < grid.size(); ++i) {
            if (grid[i] < 0.0 || grid[i] > a.t_end)
                throw std::domain_error("evolve: grid points must lie in [0, t-end]");
            if (i > 0 && grid[i] <= grid[i - 1])
                throw std::domain_error("evolve: grid must be strictly ascending");
        }
    } else {
        for (int i = 0; i < a.samples; ++i)
            grid.push_back(a.t_end * i / (a.samples - 1));
    }

    const auto traj = piqs::evolve(params, state0, a.t_end, a.reltol, a.abstol, grid);
    std::ostringstream os;
    piqs::io::write_trajectory(os, params, traj, a.populations);
    emit(a.output, os.str());
}

void add_evolve(CLI::App& app) {
    auto args = std::make_shared<EvolveArgs>();
    auto binder = std::make_shared<ConfigBinder>();
    CLI::App* sub = app.add_subcommand("evolve", "Integrate one trajectory, write CSV");
    binder->require(binder->bind(*sub, "--n", args->n, "atom count"));
    auto gopt = std::make_shared<std::pair<double, double>>();
    CLI::Option* og = sub->add_option("--gamma", gopt->first, "collective rate (gamma0 units)");
    CLI::Option* odg = sub->add_option("--dgamma", gopt->second, "gamma0 - gamma");
    binder->bind(*sub, "--ddd", args->ddd, "dipole-dipole shift");
    binder->bind(*sub, "--initial", args->initial, "fully_excited | dicke:twoJ0,twoM0");
    binder->bind(*sub, "--t-end", args->t_end, "integration horizon");
    binder->bind(*sub, "--reltol", args->reltol, "relative tolerance");
    binder->bind(*sub, "--abstol", args->abstol, "absolute tolerance");
    binder->bind(*sub, "--samples", args->samples, "uniform sample count on [0, t-end]");
    binder->bind(*sub, "--grid", args->grid, "explicit sample grid (start:end:step or list)");
    binder->bind_flag(*sub, "--populations", args->populations, "append population columns");
    binder->bind(*sub, "--output", args->output, "output path ('-' = stdout)");
    sub->add_option("--config", args->config, "JSON config file (flags override)");
    sub->callback([args, binder, og, odg, gopt] {
        const json cfg = load_config(args->config);
        binder->apply(cfg);
        if (og->count() || cfg.contains("gamma"))
            args->gamma = og->count() ? gopt->first : cfg.at("gamma").get<double>();
        if (odg->count() || cfg.contains("dgamma"))
            args->dgamma = odg->count() ? gopt->second : cfg.at("dgamma").get<double>();
        run_evolve(*args);
    });
}

// ---------------------------------------------------------------------------
// sweep

struct SweepArgs {
    std::string n_spec;
    std::string dgamma_spec = "0:1:0.05";
    double ddd = 0.0;
    std::string initial = "fully_excited";
    double horizon = 10.0;
    double reltol = 1e-8, abstol = 1e-10;
    std::string output = "-";
    std::string config;
};

void run_sweep(const SweepArgs& a) {
    const std::vector<int> ns = parse_int_grid(a.n_spec);
    const std::vector<double> dgs = parse_grid(a.dgamma_spec);
    if (a.horizon <= 0.0) throw std::domain_error("sweep: horizon must be > 0");

    struct Task {
        piqs::SystemParams params;
        piqs::PIState initial;
    };
    std::vector<Task> tasks;  // deterministic grid order: N outer, dgamma inner
    for (int N : ns)
        for (double dg : dgs)
            tasks.push_back({piqs::SystemParams::from_dgamma(N, dg, a.ddd),
                             parse_initial(a.initial, N)});

    std::vector<piqs::PulseMetrics> results(tasks.size());
    parallel_for(tasks.size(), [&](std::size_t i) {
        results[i] = piqs::pulse_metrics(tasks[i].params, tasks[i].initial, a.horizon,
                                         a.reltol, a.abstol);
    });

    std::ostringstream os;
    piqs::io::write_metrics_header(os);
    for (std::size_t i = 0; i < tasks.size(); ++i)
        piqs::io::write_metrics_row(os, tasks[i].params, results[i]);
    emit(a.output, os.str());
}

void add_sweep(CLI::App& app) {
    auto args = std::make_shared<SweepArgs>();
    auto binder = std::make_shared<ConfigBinder>();
    CLI::App* sub = app.add_subcommand("sweep", "Pulse metrics over an (N, dgamma) grid");
    binder->require(binder->bind(*sub, "--n", args->n_spec, "atom counts (list or start:end:step)"));
    binder->bind(*sub, "--dgamma", args->dgamma_spec, "dgamma grid");
    binder->bind(*sub, "--ddd", args->ddd, "dipole-dipole shift");
    binder->bind(*sub, "--initial", args->initial, "fully_excited | dicke:twoJ0,twoM0");
    binder->bind(*sub, "--horizon", args->horizon, "integration horizon per point");
    binder->bind(*sub, "--reltol", args->reltol, "relative tolerance");
    binder->bind(*sub, "--abstol", args->abstol, "absolute tolerance");
    binder->bind(*sub, "--output", args->output, "output path ('-' = stdout)");
    sub->add_option("--config", args->config, "JSON config file (flags override)");
    sub->callback([args, binder] {
        binder->apply(load_config(args->config));
        run_sweep(*args);
    });
}

// ---------------------------------------------------------------------------
// rates

struct RatesArgs {
    std::string eta_spec, x_spec, k0r_spec, z_spec = "0";
    double beta_omega = 0.1;
    double k0 = 0.0;
    std::string table;
    bool delta = false;
    std::string output = "-";
    std::string config;
};

void write_rate_rows(std::ostringstream& os, const std::string& model,
                     const std::vector<std::pair<std::string, double>>& params, double gamma,
                     std::optional<double> delta) {
    os << model;
    for (const auto& [k, v] : params) os << ',' << piqs::io::fmt(v);
    os << ',' << piqs::io::fmt(gamma);
    if (delta) os << ',' << piqs::io::fmt(*delta);
    os << "\n";
}

void run_rates_gaussian(const RatesArgs& a) {
    const auto etas = parse_grid(a.eta_spec);
    for (double eta : etas) {
        if (eta < 0.0) throw std::domain_error("rates: eta must be >= 0");
        if (a.delta && eta <= 0.0)
            throw std::domain_error("rates: delta_dd requires eta > 0");
    }
    std::ostringstream os;
    os << "model,eta,gamma" << (a.delta ? ",delta_dd" : "") << "\n";
    for (double eta : etas) {
        std::optional<double> d;
        if (a.delta)
            d = piqs::motional::delta_from_density(piqs::motional::gaussian_density(eta));
        write_rate_rows(os, "gaussian", {{"eta", eta}},
                        piqs::motional::gamma_gaussian(eta), d);
    }
    emit(a.output, os.str());
}

void run_rates_thomas_fermi(const RatesArgs& a) {
    const auto xs = parse_grid(a.x_spec);
    for (double x : xs) {
        if (x < 0.0) throw std::domain_error("rates: x must be >= 0");
        if (a.delta && x <= 0.0) throw std::domain_error("rates: delta_dd requires x > 0");
    }
    std::ostringstream os;
    os << "model,x,gamma" << (a.delta ? ",delta_dd" : "") << "\n";
    for (double x : xs) {
        std::optional<double> d;
        if (a.delta)
            d = piqs::motional::delta_from_density(piqs::motional::thomas_fermi_density(x));
        write_rate_rows(os, "thomas-fermi", {{"x", x}},
                        piqs::motional::gamma_thomas_fermi(x), d);
    }
    emit(a.output, os.str());
}

void run_rates_thermal_bose(const RatesArgs& a) {
    if (a.delta)
        throw std::domain_error(
            "rates: delta_dd is unsupported for the thermal-bose model");
    const auto etas = parse_grid(a.eta_spec);
    const auto zs = parse_grid(a.z_spec);
    if (a.beta_omega <= 0.0) throw std::domain_error("rates: beta-omega must be > 0");
    for (double z : zs)
        if (z < 0.0 || z > 1.0) throw std::domain_error("rates: z must be in [0, 1]");
    for (double eta : etas)
        if (eta < 0.0) throw std::domain_error("rates: eta must be >= 0");
    std::ostringstream os;
    os << "model,eta,beta_omega,z,gamma\n";
    for (double z : zs)
        for (double eta : etas)
            write_rate_rows(os, "thermal-bose",
                            {{"eta", eta}, {"beta_omega", a.beta_omega}, {"z", z}},
                            piqs::motional::gamma_thermal_bose(eta, a.beta_omega, z),
                            std::nullopt);
    emit(a.output, os.str());
}

void run_rates_thermal_cloud(const RatesArgs& a) {
    const auto ks = parse_grid(a.k0r_spec);
    for (double k : ks) {
        if (k < 0.0) throw std::domain_error("rates: k0r must be >= 0");
        if (a.delta && k <= 0.0) throw std::domain_error("rates: delta_dd requires k0r > 0");
    }
    std::ostringstream os;
    os << "model,k0R,gamma" << (a.delta ? ",delta_dd" : "") << "\n";
    for (double k : ks) {
        std::optional<double> d;
        if (a.delta)
            d = piqs::motional::delta_from_density(piqs::motional::thermal_cloud_density(k));
        write_rate_rows(os, "thermal-cloud", {{"k0R", k}},
                        piqs::motional::gamma_thermal_cloud(k), d);
    }
    emit(a.output, os.str());
}

void run_rates_custom(const RatesArgs& a) {
    if (a.table.empty()) throw std::domain_error("rates: custom model needs --table");
    if (a.k0 <= 0.0) throw std::domain_error("rates: custom model needs --k0 > 0");
    std::ifstream in(a.table);
    if (!in) throw std::domain_error("rates: cannot open table: " + a.table);
    std::vector<std::pair<double, double>> table;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto comma = line.find(',');
        if (comma == std::string::npos)
            throw std::domain_error("rates: table rows must be 'r,rho1'");
        try {
            table.emplace_back(std::stod(line.substr(0, comma)),
                               std::stod(line.substr(comma + 1)));
        } catch (const std::invalid_argument&) {
            if (table.empty()) continue;  // header row
            throw std::domain_error("rates: non-numeric table row: " + line);
        }
    }
    const auto model = piqs::motional::density_from_table(table, a.k0);
    std::ostringstream os;
    os << "model,k0,gamma" << (a.delta ? ",delta_dd" : "") << "\n";
    std::optional<double> d;
    if (a.delta) d = piqs::motional::delta_from_density(model);
    write_rate_rows(os, "custom", {{"k0", a.k0}},
                    piqs::motional::gamma_from_density(model), d);
    emit(a.output, os.str());
}

void add_rates(CLI::App& app) {
    CLI::App* sub = app.add_subcommand("rates", "Motional-state decay rates over a grid");
    sub->require_subcommand(1);

    auto add_common = [](CLI::App& s, std::shared_ptr<RatesArgs> args,
                         std::shared_ptr<ConfigBinder> binder) {
        binder->bind_flag(s, "--delta", args->delta, "also compute delta_dd");
        binder->bind(s, "--output", args->output, "output path ('-' = stdout)");
        s.add_option("--config", args->config, "JSON config file (flags override)");
    };

    {
        auto args = std::make_shared<RatesArgs>();
        auto binder = std::make_shared<ConfigBinder>();
        CLI::App* m = sub->add_subcommand("gaussian", "condensate ground state");
        binder->require(binder->bind(*m, "--eta", args->eta_spec, "Lamb-Dicke parameter grid"));
        add_common(*m, args, binder);
        m->callback([args, binder] {
            binder->apply(load_config(args->config));
            run_rates_gaussian(*args);
        });
    }
    {
        auto args = std::make_shared<RatesArgs>();
        auto binder = std::make_shared<ConfigBinder>();
        CLI::App* m = sub->add_subcommand("thomas-fermi", "strongly interacting BEC");
        binder->require(binder->bind(*m, "--x", args->x_spec, "dimensionless recoil grid"));
        add_common(*m, args, binder);
        m->callback([args, binder] {
            binder->apply(load_config(args->config));
            run_rates_thomas_fermi(*args);
        });
    }
    {
        auto args = std::make_shared<RatesArgs>();
        auto binder = std::make_shared<ConfigBinder>();
        CLI::App* m = sub->add_subcommand("thermal-bose", "finite-temperature trapped gas");
        binder->require(binder->bind(*m, "--eta", args->eta_spec, "Lamb-Dicke parameter grid"));
        binder->bind(*m, "--beta-omega", args->beta_omega, "trap quantum / k_B T");
        binder->bind(*m, "--z", args->z_spec, "fugacity list");
        add_common(*m, args, binder);
        m->callback([args, binder] {
            binder->apply(load_config(args->config));
            run_rates_thermal_bose(*args);
        });
    }
    {
        auto args = std::make_shared<RatesArgs>();
        auto binder = std::make_shared<ConfigBinder>();
        CLI::App* m = sub->add_subcommand("thermal-cloud", "classical thermal cloud");
        binder->require(binder->bind(*m, "--k0r", args->k0r_spec, "k0 R grid"));
        add_common(*m, args, binder);
        m->callback([args, binder] {
            binder->apply(load_config(args->config));
            run_rates_thermal_cloud(*args);
        });
    }
    {
        auto args = std::make_shared<RatesArgs>();
        auto binder = std::make_shared<ConfigBinder>();
        CLI::App* m = sub->add_subcommand("custom", "tabulated isotropic density");
        binder->require(binder->bind(*m, "--table", args->table, "two-column CSV (r, rho1)"));
        binder->require(binder->bind(*m, "--k0", args->k0, "radiation wavenumber"));
        add_common(*m, args, binder);
        m->callback([args, binder] {
            binder->apply(load_config(args->config));
            run_rates_custom(*args);
        });
    }
}

// ---------------------------------------------------------------------------
// oracle

struct OracleArgs {
    int n = 0;
    int seeds = 10;
    std::uint64_t base_seed = 12345;
    std::string output = "-";
    std::string config;
};

void run_oracle(const OracleArgs& a) {
    if (a.n < 2) throw std::domain_error("oracle: n must be >= 2");
    piqs::oracle::require_capacity(a.n);
    if (a.seeds < 1) throw std::domain_error("oracle: seeds must be >= 1");

    std::vector<piqs::oracle::OracleRow> rows(a.seeds);
    parallel_for(static_cast<std::size_t>(a.seeds), [&](std::size_t i) {
        rows[i] = piqs::oracle::run_oracle_case(a.n, a.base_seed + i);
    });

    std::ostringstream os;
    piqs::io::write_oracle_header(os);
    bool all_pass = true;
    for (const auto& r : rows) {
        piqs::io::write_oracle_row(os, r);
        all_pass = all_pass && r.pass;
    }
    emit(a.output, os.str());
    if (!all_pass) throw NumericalFailure("oracle: equivalence failure (see report)");
}

void add_oracle(CLI::App& app) {
    auto args = std::make_shared<OracleArgs>();
    auto binder = std::make_shared<ConfigBinder>();
    CLI::App* sub = app.add_subcommand("oracle", "Brute-force equivalence suite (N <= 6)");
    binder->require(binder->bind(*sub, "--n", args->n, "atom count"));
    binder->bind(*sub, "--seeds", args->seeds, "number of random parameter triples");
    binder->bind(*sub, "--base-seed", args->base_seed, "first RNG seed");
    binder->bind(*sub, "--output", args->output, "output path ('-' = stdout)");
    sub->add_option("--config", args->config, "JSON config file (flags override)");
    sub->callback([args, binder] {
        binder->apply(load_config(args->config));
        run_oracle(*args);
    });
}

// ---------------------------------------------------------------------------
// meanfield

struct MeanfieldArgs {
    int n = 0;
    double gamma = 1.0;
    double ddd = 0.0;
    double theta0 = 0.0;
    std::optional<double> t_I;
    double t_end = 10.0;
    int samples = 201;
    std::string output = "-";
    std::string config;
};

void run_meanfield(const MeanfieldArgs& a) {
    if (a.n < 1) throw std::domain_error("meanfield: n must be >= 1");
    if (a.gamma <= 0.0) throw std::domain_error("meanfield: gamma must be > 0");
    if (a.t_end <= 0.0) throw std::domain_error("meanfield: t-end must be > 0");
    if (a.samples < 2) throw std::domain_error("meanfield: samples must be >= 2");
    const double tI =
        a.t_I ? *a.t_I : piqs::analytic::meanfield_delay_estimate(a.n, a.gamma);

    std::ostringstream os;
    os << "t,p,theta,intensity\n";
    for (int i = 0; i < a.samples; ++i) {
        const double t = a.t_end * i / (a.samples - 1);
        const auto pt =
            piqs::analytic::meanfield_trajectory(a.n, a.gamma, a.ddd, tI, t, a.theta0);
        os << piqs::io::fmt(t) << ',' << piqs::io::fmt(pt.p) << ','
           << piqs::io::fmt(pt.theta) << ','
           << piqs::io::fmt(piqs::analytic::meanfield_intensity(a.n, a.gamma, tI, t))
           << "\n";
    }
    emit(a.output, os.str());
}

void add_meanfield(CLI::App& app) {
    auto args = std::make_shared<MeanfieldArgs>();
    auto binder = std::make_shared<ConfigBinder>();
    CLI::App* sub = app.add_subcommand("meanfield", "Closed-form mean-field trajectory");
    binder->require(binder->bind(*sub, "--n", args->n, "atom count"));
    binder->bind(*sub, "--gamma", args->gamma, "collective rate (> 0)");
    binder->bind(*sub, "--ddd", args->ddd, "dipole-dipole shift");
    binder->bind(*sub, "--theta0", args->theta0, "initial phase");
    double tI = 0.0;
    auto tIbox = std::make_shared<double>(tI);
    CLI::Option* otI = sub->add_option("--t-i", *tIbox, "delay time (default ln N/(N gamma))");
    binder->bind(*sub, "--t-end", args->t_end, "horizon");
    binder->bind(*sub, "--samples", args->samples, "uniform sample count");
    binder->bind(*sub, "--output", args->output, "output path ('-' = stdout)");
    sub->add_option("--config", args->config, "JSON config file (flags override)");
    sub->callback([args, binder, otI, tIbox] {
        const json cfg = load_config(args->config);
        binder->apply(cfg);
        if (otI->count())
            args->t_I = *tIbox;
        else if (cfg.contains("t-i"))
            args->t_I = cfg.at("t-i").get<double>();
        run_meanfield(*args);
    });
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"piqsim: permutation-invariant collective-emission simulator"};
    app.require_subcommand(1);
    add_evolve(app);
    add_sweep(app);
    add_rates(app);
    add_oracle(app);
    add_meanfield(app);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitValidation;
    } catch (const piqs::oracle::CapacityError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitCapacity;
    } catch (const piqs::IntegrationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitNumerical;
    } catch (const piqs::motional::ConvergenceError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitNumerical;
    } catch (const NumericalFailure& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitNumerical;
    } catch (const std::domain_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitValidation;
    }
    return kExitOk;
}
