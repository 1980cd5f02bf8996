// Scenario CLI: runs heterogeneous-beliefs economies, verifies their
// invariant suite, and cross-checks small instances against the exhaustive
// lattice oracle.
//
//   bubblesim run <config> [--seed S] [--paths N] [--steps N] [--bridge]
//                          [--threads N] [--out DIR]
//   bubblesim verify <config> [flags]
//   bubblesim oracle <config> [flags]
//
// Exit codes: 0 success, 1 numeric/invariant failure, 2 usage or validation.

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <optional>
#include <string>
#include <vector>

#include "bubblesim/config_io.hpp"
#include "bubblesim/lattice.hpp"
#include "bubblesim/report_io.hpp"
#include "bubblesim/rng.hpp"
#include "bubblesim/scenario.hpp"
#include "bubblesim/valuation.hpp"
#include "bubblesim/version.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitNumeric = 1;
constexpr int kExitUsage = 2;

void print_usage(std::FILE* stream) {
    std::fprintf(stream,
                 "bubblesim %s - subjective-bubble scenario simulator\n"
                 "\n"
                 "usage:\n"
                 "  bubblesim run <config>     simulate and write result files\n"
                 "  bubblesim verify <config>  run the invariant suite only\n"
                 "  bubblesim oracle <config>  compare Monte Carlo against the lattice oracle\n"
                 "\n"
                 "flags:\n"
                 "  --seed <u64>    override simulation.seed\n"
                 "  --paths <n>     override simulation.n_paths\n"
                 "  --steps <n>     override simulation.n_steps\n"
                 "  --bridge        enable bridge-corrected hitting detection\n"
                 "  --threads <n>   worker threads (default 1)\n"
                 "  --out <dir>     output directory (default: out)\n",
                 bubblesim::kVersion);
}

struct CliOptions {
    std::string command;
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> paths;
    std::optional<int> steps;
    std::optional<unsigned> threads;
    bool bridge = false;
    std::string out_dir = "out";
};

std::optional<CliOptions> parse_cli(int argc, char** argv) {
    if (argc < 3) return std::nullopt;
    CliOptions opt;
    opt.command = argv[1];
    opt.config_path = argv[2];
    for (int i = 3; i < argc; ++i) {
        const std::string arg = argv[i];
        auto next = [&]() -> const char* {
            if (i + 1 >= argc) {
                std::fprintf(stderr, "error: flag %s expects a value\n", arg.c_str());
                return nullptr;
            }
            return argv[++i];
        };
        if (arg == "--bridge") {
            opt.bridge = true;
        } else if (arg == "--seed") {
            const char* v = next();
            if (!v) return std::nullopt;
            opt.seed = std::strtoull(v, nullptr, 10);
        } else if (arg == "--paths") {
            const char* v = next();
            if (!v) return std::nullopt;
            opt.paths = static_cast<std::size_t>(std::strtoull(v, nullptr, 10));
        } else if (arg == "--steps") {
            const char* v = next();
            if (!v) return std::nullopt;
            opt.steps = static_cast<int>(std::strtol(v, nullptr, 10));
        } else if (arg == "--threads") {
            const char* v = next();
            if (!v) return std::nullopt;
            opt.threads = static_cast<unsigned>(std::strtoul(v, nullptr, 10));
        } else if (arg == "--out") {
            const char* v = next();
            if (!v) return std::nullopt;
            opt.out_dir = v;
        } else {
            std::fprintf(stderr, "error: unknown flag %s\n", arg.c_str());
            return std::nullopt;
        }
    }
    return opt;
}

bubblesim::ScenarioConfig load_config(const CliOptions& opt) {
    bubblesim::ScenarioConfig cfg = bubblesim::parse_scenario_config(opt.config_path);
    if (opt.seed) cfg.seed = *opt.seed;
    if (opt.paths) cfg.n_paths = *opt.paths;
    if (opt.steps) cfg.n_steps = *opt.steps;
    if (opt.threads) cfg.workers = *opt.threads;
    if (opt.bridge) cfg.bridge = true;
    const auto errors = cfg.validate();
    if (!errors.empty()) throw bubblesim::ConfigError(opt.config_path + ": " + errors.front());
    return cfg;
}

int command_run(const CliOptions& opt) {
    const bubblesim::ScenarioConfig cfg = load_config(opt);
    const bubblesim::ScenarioOutput output = bubblesim::run_scenario(cfg);
    const bubblesim::RunArtifacts artifacts =
        bubblesim::write_run_artifacts(output, opt.out_dir, bubblesim::kVersion);
    std::printf("scenario %s: %zu paths, %d steps, %.2f s\n",
                bubblesim::to_string(cfg.kind), cfg.n_paths, cfg.n_steps,
                output.duration_seconds);
    for (std::size_t k = 0; k < output.market_bubbles.size(); ++k) {
        const auto& b = output.market_bubbles[k].bubble;
        const auto& r = output.riskless_bubbles[k];
        std::printf("agent %zu: market bubble %s (se %s, n %zu)  riskless bubble %s (se %s)\n",
                    k + 1, bubblesim::format_number(b.mean).c_str(),
                    bubblesim::format_number(b.std_error).c_str(), b.n,
                    bubblesim::format_number(r.mean).c_str(),
                    bubblesim::format_number(r.std_error).c_str());
    }
    std::printf("wrote %s\n", artifacts.manifest_path.c_str());
    return kExitOk;
}

int command_verify(const CliOptions& opt) {
    const bubblesim::ScenarioConfig cfg = load_config(opt);
    const std::vector<bubblesim::VerifyCheck> checks = bubblesim::verify_scenario(cfg);
    bool all_pass = true;
    for (const auto& check : checks) {
        std::printf("[%s] %s: %s\n", check.pass ? "PASS" : "FAIL", check.name.c_str(),
                    check.detail.c_str());
        all_pass = all_pass && check.pass;
    }
    std::printf("%s: %zu checks\n", all_pass ? "OK" : "FAILED", checks.size());
    return all_pass ? kExitOk : kExitNumeric;
}

int command_oracle(const CliOptions& opt) {
    const bubblesim::ScenarioConfig cfg = load_config(opt);
    if (cfg.kind != bubblesim::ScenarioKind::optimist)
        throw bubblesim::ConfigError("oracle: only optimist configs have a lattice oracle");
    if (cfg.n_steps > 20)
        throw bubblesim::ConfigError(
            "oracle: n_steps exceeds the exhaustive-enumeration bound of 20");
    bubblesim::LatticeEconomy econ;
    econ.d0 = cfg.d0;
    econ.vol = cfg.vol[0];
    econ.rho = cfg.rho;
    econ.horizon = cfg.horizon;
    econ.w1 = cfg.wealth[0];
    econ.w2 = cfg.wealth[1];
    econ.n_steps = cfg.n_steps;
    const bubblesim::LatticeValues oracle = bubblesim::lattice_oracle_value(econ);

    // Monte Carlo on the same binomial law, through the production pipeline.
    const bubblesim::TimeGrid grid = cfg.grid();
    bubblesim::ValuationEnsemble ens;
    ens.grid = grid;
    const double eta0 = bubblesim::eta(0.0, cfg.rho, cfg.horizon);
    ens.xi0 = (econ.w1 + econ.w2) / (econ.d0 * eta0);
    ens.market_price0 = econ.d0 * eta0;
    ens.truncated.resize(1);
    ens.tail.resize(1);
    ens.deflated_terminal.resize(1);
    for (std::size_t i = 0; i < cfg.n_paths; ++i) {
        const auto d =
            bubblesim::sample_lattice_dividend(econ, bubblesim::path_seed(cfg.seed, i));
        const auto z1 = bubblesim::density_optimist(d);
        const std::vector<bubblesim::DensityPath> densities = {
            z1, bubblesim::reference_density(grid, 1)};
        const std::vector<double> weights = {econ.w1, econ.w2};
        const auto xi = bubblesim::log_state_price_density(d, densities, weights, cfg.rho);
        const auto split = bubblesim::split_deflated_integral(
            xi.values, d.values, grid.dt, z1.bankruptcy_index.value_or(grid.n_points()),
            grid.n_points());
        ens.full.push_back(split.full);
        ens.truncated[0].push_back(split.before);
        ens.tail[0].push_back(split.tail);
    }
    const auto f = bubblesim::fundamental_value_reference(ens);
    const auto f1 = bubblesim::fundamental_value_subjective(ens, 0);
    const auto report = bubblesim::bubble_decomposition(ens, 0);

    auto line = [](const char* name, const bubblesim::MonteCarloEstimate& e, double target) {
        const double gap = std::abs(e.mean - target);
        const bool ok = gap <= 3.0 * e.std_error;
        std::printf("[%s] %s: mc %s vs lattice %s (|z| = %s)\n", ok ? "PASS" : "FAIL", name,
                    bubblesim::format_number(e.mean).c_str(),
                    bubblesim::format_number(target).c_str(),
                    bubblesim::format_number(e.std_error > 0 ? gap / e.std_error : 0.0).c_str());
        return ok;
    };
    bool all_ok = true;
    all_ok &= line("F", f, oracle.fundamental_reference);
    all_ok &= line("F1", f1, oracle.fundamental_subjective);
    all_ok &= line("B1", report.bubble, oracle.bubble);
    std::printf("lattice: P(tau_1 <= T) = %s, market price %s\n",
                bubblesim::format_number(oracle.hit_probability).c_str(),
                bubblesim::format_number(oracle.market_price).c_str());
    return all_ok ? kExitOk : kExitNumeric;
}

}  // namespace

int main(int argc, char** argv) {
    const auto opt = parse_cli(argc, argv);
    if (!opt) {
        print_usage(stderr);
        return kExitUsage;
    }
    try {
        if (opt->command == "run") return command_run(*opt);
        if (opt->command == "verify") return command_verify(*opt);
        if (opt->command == "oracle") return command_oracle(*opt);
        std::fprintf(stderr, "error: unknown subcommand `%s`\n", opt->command.c_str());
        print_usage(stderr);
        return kExitUsage;
    } catch (const bubblesim::ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return kExitUsage;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitNumeric;
    }
}
