#include "doctest.h"

#include "commands.hpp"
#include "config.hpp"
#include "series.hpp"

#include "sphtrap/errors.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>
#include <sys/wait.h>

using namespace sphtrap;
using namespace sphtrap::cli;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name)
{
    const fs::path p = fs::temp_directory_path() / ("sphtrap_test_cli_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

std::string slurp(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

int run_tool(const std::string& args)
{
    const std::string cmd = std::string(SPHTRAP_TOOL) + " " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

RunConfig small_transitions(const fs::path& out)
{
    RunConfig cfg = default_config(Command::transitions);
    cfg.alpha = {-2.0, -4.0};
    cfg.xi = {0.5, 1.0, 6};
    cfg.output_dir = out.string();
    return cfg;
}

const CheckResult* find_check(const CommandReport& r, const std::string& prefix)
{
    for (const auto& c : r.checks)
        if (c.name.rfind(prefix, 0) == 0)
            return &c;
    return nullptr;
}

} // namespace

TEST_CASE("config keys round-trip through their canonical text")
{
    RunConfig cfg = default_config(Command::density_t);
    cfg.set("alpha_multipliers", "0.5,1.25");
    cfg.set("modes", "0,3,0;2,4,-1");
    cfg.set("T_max", "12.5");
    RunConfig copy = default_config(Command::density_t);
    for (const auto& [k, v] : cfg.entries())
        copy.set(k, v);
    CHECK(copy.entries() == cfg.entries());
    CHECK(copy.modes.size() == 2);
    CHECK(copy.modes[1].m == -1);
    CHECK(copy.alpha_multipliers == std::vector<double>{0.5, 1.25});
}

TEST_CASE("bad settings are configuration errors")
{
    RunConfig cfg = default_config(Command::transitions);
    CHECK_THROWS_AS(cfg.set("no_such_key", "1"), ConfigError);
    CHECK_THROWS_AS(cfg.set("alpha", "fast"), ConfigError);
    CHECK_THROWS_AS(cfg.set("modes", "1,1"), ConfigError);
    CHECK_THROWS_AS(cfg.set("modes", "1,1,3"), ConfigError);
    cfg.columns = 20;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);

    RunConfig dt = default_config(Command::density_t);
    dt.r0 = 0.5;
    CHECK_THROWS_AS(dt.validate(), ConfigError);

    RunConfig unreachable = small_transitions(scratch("unreachable"));
    unreachable.alpha = {3.0};
    std::ostringstream log;
    CHECK_THROWS_AS(run_command(unreachable, log), ConfigError);
}

TEST_CASE("JSON configuration")
{
    RunConfig cfg = default_config(Command::energy);
    apply_json(cfg, nlohmann::json::parse(R"({"alpha": [-1, -3.5], "modes": [[1, 2, 0]], "xi_steps": 5,
                                              "assert_claims": false})"));
    CHECK(cfg.alpha == std::vector<double>{-1.0, -3.5});
    CHECK(cfg.modes.front().n == 2);
    CHECK(cfg.xi.steps == 5);
    CHECK_FALSE(cfg.assert_claims);
    CHECK_THROWS_AS(apply_json(cfg, nlohmann::json::parse(R"({"alpha": {"a": 1}})")), ConfigError);
    CHECK_THROWS_AS(apply_json(cfg, nlohmann::json::parse("[1, 2]")), ConfigError);
}

TEST_CASE("series files round-trip exactly")
{
    FigureSeries s;
    s.add_meta("command", "energy");
    s.add_meta("note", "a=b");
    s.columns = {"xi", "value"};
    s.rows = {{1.0, 0.1}, {0.5, 1.0 / 3.0}, {0.25, -2.5e-17}};
    std::stringstream io;
    write_series(io, s);
    const FigureSeries back = read_series(io);
    CHECK(back.metadata == s.metadata);
    CHECK(back.columns == s.columns);
    CHECK(back.rows == s.rows);
    CHECK(back.meta("note") == "a=b");
}

TEST_CASE("transitions output and byte-identical reruns")
{
    const fs::path dir = scratch("transitions");
    RunConfig cfg = small_transitions(dir / "a");
    cfg.serial = true;
    std::ostringstream log;
    const auto first = run_command(cfg, log);
    REQUIRE(first.files.size() == 2);
    CHECK(first.exit_code() == 0);

    const FigureSeries s = load_series(first.files.front());
    CHECK(s.columns.front() == "xi");
    CHECK(s.columns.size() == 1 + 4 + 2);
    CHECK(s.rows.front().front() == 1.0);
    CHECK(s.rows.back().front() == 0.5);
    for (const auto& row : s.rows)
        CHECK(row[5] <= 1.0 + 1e-6);
    CHECK(s.meta("config.command") == "transitions");

    cfg.output_dir = (dir / "b").string();
    cfg.serial = false;
    const auto parallel = run_command(cfg, log);
    const auto rerun = rerun_from_csv(first.files.front(), (dir / "c").string(), true, log);
    REQUIRE(parallel.files.size() == first.files.size());
    REQUIRE(rerun.files.size() == first.files.size());
    for (std::size_t i = 0; i < first.files.size(); ++i) {
        CHECK(slurp(first.files[i]) == slurp(parallel.files[i]));
        CHECK(slurp(first.files[i]) == slurp(rerun.files[i]));
    }
    CHECK(find_check(first, "mixing_at_xi_0.5_increases_with_speed")->passed);
}

TEST_CASE("energy claims are reported and gate the exit code only when asserted")
{
    const fs::path dir = scratch("energy");
    RunConfig cfg = default_config(Command::energy);
    cfg.alpha = {-2.0};
    cfg.xi = {0.3, 1.0, 15};
    cfg.output_dir = dir.string();
    std::ostringstream log;
    const auto report = run_command(cfg, log);
    const auto* ge1 = find_check(report, "ratio_at_least_one");
    REQUIRE(ge1 != nullptr);
    CHECK(ge1->passed);
    // The ratio peaks near xi = 0.7 and falls afterwards.
    const auto* mono = find_check(report, "ratio_nondecreasing_as_xi_decreases");
    REQUIRE(mono != nullptr);
    CHECK_FALSE(mono->passed);
    CHECK(report.exit_code() == 1);
    cfg.assert_claims = false;
    CHECK(run_command(cfg, log).exit_code() == 0);
}

TEST_CASE("density profile claims")
{
    const fs::path dir = scratch("density_r");
    RunConfig cfg = default_config(Command::density_r);
    cfg.alpha_multipliers = {0.0, 0.01, 20.0};
    cfg.eta.steps = 801;
    cfg.output_dir = dir.string();
    std::ostringstream log;
    const auto report = run_command(cfg, log);
    CHECK(report.all_passed());
    CHECK(find_check(report, "adiabatic_overlap_with_expanded_mode")->measured > 0.99);
    CHECK(find_check(report, "sudden_overlap_with_initial_profile")->measured > 0.95);
    const FigureSeries s = load_series(report.files.front());
    CHECK(s.columns == std::vector<std::string>{"eta", "rho_mult_0", "rho_mult_0.01", "rho_mult_20"});
    // The static wall stays at r = 1, so the density vanishes beyond eta = 1 / lambda.
    const double lambda = std::stod(s.meta("lambda"));
    for (const auto& row : s.rows)
        if (row[0] > 1.0 / lambda * (1 + 1e-9))
            CHECK(row[1] == 0.0);
}

TEST_CASE("density history is zero before the wall reaches r0")
{
    const fs::path dir = scratch("density_t");
    RunConfig cfg = default_config(Command::density_t);
    cfg.modes = {ModeIndex(0, 15, 0)};
    cfg.T.steps = 301;
    cfg.output_dir = dir.string();
    std::ostringstream log;
    const auto report = run_command(cfg, log);
    CHECK(report.exit_code() == 0);
    CHECK(find_check(report, "first_peak_heights_decrease_with_speed")->passed);
    const FigureSeries s = load_series(report.files.front());
    const double T1 = std::stod(s.meta("T1"));
    for (const auto& row : s.rows)
        if (row[0] < T1 * (1 - 1e-9))
            CHECK(row[2] == 0.0);
}

TEST_CASE("propagator check passes at the default truncation and fails when starved")
{
    CHECK(propagator_checks(0.5, 40, Execution::parallel).size() == 4);
    for (const auto& c : propagator_checks(-2.0, 40, Execution::parallel))
        CHECK_MESSAGE(c.passed, describe(c));
    bool fidelity_failed = false;
    for (const auto& c : propagator_checks(-2.0, 3, Execution::serial))
        if (c.name.rfind("mode_fidelity", 0) == 0) {
            fidelity_failed = !c.passed;
            CHECK(c.detail.find("norm deficit") != std::string::npos);
        }
    CHECK(fidelity_failed);
}

TEST_CASE("zero cache is written, reused and revalidated")
{
    const fs::path dir = scratch("cache");
    RunConfig cfg = default_config(Command::zeros);
    cfg.zero_cache = (dir / "zeros.csv").string();
    std::ostringstream log;
    const auto built = obtain_zero_table(cfg, 2, 6, log);
    REQUIRE(fs::exists(cfg.zero_cache));
    const auto reused = obtain_zero_table(cfg, 1, 4, log);
    CHECK(reused.n_max() == 6);
    const auto grown = obtain_zero_table(cfg, 2, 9, log);
    CHECK(grown.n_max() == 9);

    std::string text = slurp(cfg.zero_cache);
    const auto pos = text.find("\n0,3,");
    text.replace(pos + 5, 1, "8");
    std::ofstream(cfg.zero_cache, std::ios::binary) << text;
    CHECK_THROWS_AS(obtain_zero_table(cfg, 2, 6, log), ValidationError);
}

TEST_CASE("executable exit codes")
{
    const fs::path dir = scratch("exe");
    const std::string out = " --output-dir " + dir.string();
    CHECK(run_tool("transitions --alpha -2 --xi-steps 5" + out) == 0);
    CHECK(run_tool("transitions --alpha nope" + out) == 2);
    CHECK(run_tool("transitions --alpha 3" + out) == 2);
    CHECK(run_tool("no-such-command") == 2);
    CHECK(run_tool("energy --alpha -2 --xi-steps 15" + out) == 1);
    CHECK(run_tool("energy --alpha -2 --xi-steps 15 --no-assert-claims" + out) == 0);
    CHECK(run_tool("propagator-check --alpha -2 --kernel-modes 3" + out) == 1);

    std::ofstream(dir / "bad.csv") << "l,n,zero\n0,1,3.0\n";
    CHECK(run_tool("zeros --zero-cache " + (dir / "bad.csv").string() + out) == 1);

    std::ofstream(dir / "cfg.json") << R"({"alpha": [-2], "xi_steps": 4})";
    CHECK(run_tool("transitions --config " + (dir / "cfg.json").string() + out) == 0);
    CHECK(fs::exists(dir / "transitions_alpha_-2.csv"));
    CHECK(run_tool("rerun " + (dir / "transitions_alpha_-2.csv").string() + " --output-dir " +
                   (dir / "again").string()) == 0);
    CHECK(slurp(dir / "transitions_alpha_-2.csv") == slurp(dir / "again" / "transitions_alpha_-2.csv"));
}
