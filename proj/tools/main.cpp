// Command-line front end: one subcommand per figure plus checks.
#include "commands.hpp"
#include "config.hpp"

#include "sphtrap/errors.hpp"

#include "CLI11.hpp"

#include <algorithm>
#include <iostream>
#include <map>

#ifndef SPHTRAP_VERSION
#define SPHTRAP_VERSION "unknown"
#endif

namespace {

using namespace sphtrap;
using namespace sphtrap::cli;

struct Shared {
    std::string config_file;
    std::string output_dir;
    std::string zero_cache;
    bool serial = false;
    bool no_assert_claims = false;
};

const char* const kKeys[] = {"alpha", "alpha_multipliers", "modes",   "n_trunc",  "target_deficit",
                             "max_norm_deficit", "xi_min", "xi_max",  "xi_steps", "eta_min",
                             "eta_max", "eta_steps", "T_min", "T_max", "T_steps",  "columns",
                             "r0", "l_max", "n_max", "kernel_modes"};

void add_shared_options(CLI::App* sub, Shared& shared, std::map<std::string, std::string>& raw)
{
    sub->add_option("--config", shared.config_file, "JSON file with config keys");
    sub->add_option("--output-dir", shared.output_dir, "Directory for data files");
    sub->add_option("--zero-cache", shared.zero_cache, "Bessel zero table cache (CSV)");
    sub->add_flag("--serial", shared.serial, "Disable threading");
    sub->add_flag("--no-assert-claims", shared.no_assert_claims, "Report failed physics claims without failing");
    for (const char* key : kKeys) {
        std::string flag = std::string("--") + key;
        std::replace(flag.begin() + 2, flag.end(), '_', '-');
        std::string help = std::string("Set config key '") + key + "'";
        if (std::string_view(key) == "modes")
            help += " as l,n,m entries separated by ';'";
        sub->add_option(flag, raw[key], help);
    }
}

int run(int argc, char** argv)
{
    CLI::App app{"Quantum states in a spherical trap with a uniformly moving wall"};
    app.set_version_flag("--version", SPHTRAP_VERSION);
    app.require_subcommand(1);

    Shared shared;
    std::map<std::string, std::string> raw;
    std::map<CLI::App*, Command> commands;
    const std::pair<const char*, const char*> subs[] = {
        {"zeros", "Tabulate spherical Bessel zeros"},
        {"transitions", "Occupation of instantaneous modes as the wall moves"},
        {"energy", "Energy expectation relative to the instantaneous ground level"},
        {"density-r", "Radial density profile at the moment the wall passes r0"},
        {"density-t", "Density history at fixed radius r0"},
        {"propagator-check", "Propagator invariants"},
        {"selfcheck", "End-to-end numerical self-test"},
    };
    for (auto [name, help] : subs) {
        auto* sub = app.add_subcommand(name, help);
        add_shared_options(sub, shared, raw);
        commands[sub] = parse_command(name);
    }
    std::string rerun_csv;
    auto* rerun = app.add_subcommand("rerun", "Repeat the run recorded in a CSV header");
    rerun->add_option("csv", rerun_csv, "CSV written by this tool")->required()->check(CLI::ExistingFile);
    rerun->add_option("--output-dir", shared.output_dir, "Directory for data files");
    rerun->add_flag("--serial", shared.serial, "Disable threading");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    CommandReport report;
    if (rerun->parsed()) {
        report = rerun_from_csv(rerun_csv, shared.output_dir.empty() ? "." : shared.output_dir, shared.serial,
                                std::cerr);
    } else {
        CLI::App* chosen = app.get_subcommands().front();
        RunConfig cfg = default_config(commands.at(chosen));
        if (!shared.config_file.empty())
            apply_json_file(cfg, shared.config_file);
        for (const auto& [key, value] : raw)
            if (chosen->count("--" + [&] {
                    std::string f = key;
                    std::replace(f.begin(), f.end(), '_', '-');
                    return f;
                }()))
                cfg.set(key, value);
        if (!shared.output_dir.empty())
            cfg.output_dir = shared.output_dir;
        if (!shared.zero_cache.empty())
            cfg.zero_cache = shared.zero_cache;
        cfg.serial = cfg.serial || shared.serial;
        if (shared.no_assert_claims)
            cfg.assert_claims = false;
        report = run_command(cfg, std::cerr);
    }
    for (const auto& f : report.files)
        std::cout << f << '\n';
    return report.exit_code();
}

} // namespace

int main(int argc, char** argv)
{
    try {
        return run(argc, argv);
    } catch (const sphtrap::cli::ConfigError& e) {
        std::cerr << "configuration error: " << e.what() << '\n';
        return 2;
    } catch (const sphtrap::DomainError& e) {
        std::cerr << "invalid argument: " << e.what() << '\n';
        return 2;
    } catch (const sphtrap::ValidationError& e) {
        std::cerr << "validation failed: " << e.what() << '\n';
        return 1;
    } catch (const sphtrap::TruncationError& e) {
        std::cerr << "truncation insufficient: " << e.what() << '\n';
        return 1;
    } catch (const sphtrap::ConvergenceError& e) {
        std::cerr << "no convergence: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
