#include "commands.hpp"

#include "pde_residual.hpp"
#include "series.hpp"

#include "sphtrap/dynamics.hpp"
#include "sphtrap/errors.hpp"
#include "sphtrap/numfmt.hpp"
#include "sphtrap/oscint.hpp"
#include "sphtrap/propagator.hpp"

#include "json.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <numbers>
#include <ostream>
#include <sstream>

#include <unistd.h>

#ifndef SPHTRAP_VERSION
#define SPHTRAP_VERSION "unknown"
#endif

namespace sphtrap::cli {

namespace fs = std::filesystem;
using std::numbers::pi;

// ---------------------------------------------------------------------------
// Check bookkeeping

std::string_view kind_name(CheckKind kind)
{
    switch (kind) {
    case CheckKind::invariant:
        return "invariant";
    case CheckKind::claim:
        return "claim";
    case CheckKind::diagnostic:
        return "diagnostic";
    }
    return "unknown";
}

std::string describe(const CheckResult& c)
{
    std::string s = c.passed ? "PASS " : "FAIL ";
    s += std::string(kind_name(c.kind)) + " " + c.name + " measured=" + format_shortest(c.measured) +
         " tolerance=" + format_shortest(c.tolerance);
    if (!c.detail.empty())
        s += " (" + c.detail + ")";
    return s;
}

bool CommandReport::all_passed() const
{
    return std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.passed; });
}

int CommandReport::exit_code() const
{
    for (const auto& c : checks) {
        if (c.passed)
            continue;
        if (c.kind == CheckKind::invariant || (c.kind == CheckKind::claim && assert_claims))
            return 1;
    }
    return 0;
}

namespace {

Execution exec_of(const RunConfig& cfg)
{
    return cfg.serial ? Execution::serial : Execution::parallel;
}

CheckResult at_most(std::string name, CheckKind kind, double measured, double tolerance, std::string detail = {})
{
    return {std::move(name), kind, measured <= tolerance, measured, tolerance, std::move(detail)};
}

CheckResult at_least(std::string name, CheckKind kind, double measured, double tolerance, std::string detail = {})
{
    return {std::move(name), kind, measured >= tolerance, measured, tolerance, std::move(detail)};
}

std::string tagged(const std::string& name, const std::string& tag)
{
    return name + "[" + tag + "]";
}

std::string alpha_tag(double alpha)
{
    return "alpha=" + format_shortest(alpha);
}

/// Simpson's rule for an odd number of samples, trapezoid otherwise.
double integrate(const std::vector<double>& y, double h)
{
    if (y.size() < 2)
        return 0.0;
    if (y.size() % 2 == 0) {
        double s = 0.5 * (y.front() + y.back());
        for (std::size_t i = 1; i + 1 < y.size(); ++i)
            s += y[i];
        return s * h;
    }
    double s = y.front() + y.back();
    for (std::size_t i = 1; i + 1 < y.size(); ++i)
        s += (i % 2 ? 4.0 : 2.0) * y[i];
    return s * h / 3.0;
}

/// Bhattacharyya coefficient of two sampled densities.
double density_overlap(const std::vector<double>& a, const std::vector<double>& b, double h)
{
    std::vector<double> g(a.size());
    for (std::size_t i = 0; i < a.size(); ++i)
        g[i] = std::sqrt(std::max(0.0, a[i]) * std::max(0.0, b[i]));
    return integrate(g, h);
}

double time_for_xi(const TrapGeometry& geom, double xi)
{
    if (xi == 1.0)
        return 0.0;
    try {
        const double t = geom.time_at_xi(xi);
        geom.check_time(t);
        if (t < 0.0)
            throw DomainError("before the start");
        return t;
    } catch (const DomainError&) {
        throw ConfigError("xi=" + format_shortest(xi) + " is not reached for alpha=" + format_shortest(geom.alpha()));
    }
}

FigureSeries base_series(const RunConfig& cfg)
{
    FigureSeries s;
    s.add_meta("sphtrap_version", SPHTRAP_VERSION);
    s.add_meta("command", std::string(command_name(cfg.command)));
    for (const auto& [k, v] : cfg.entries())
        s.add_meta("config." + k, v);
    return s;
}

void attach_checks(FigureSeries& s, const std::vector<CheckResult>& checks)
{
    for (const auto& c : checks)
        s.add_meta("check." + c.name, std::string(c.passed ? "pass" : "FAIL") + " kind=" +
                                          std::string(kind_name(c.kind)) + " measured=" +
                                          format_shortest(c.measured) + " tolerance=" + format_shortest(c.tolerance));
}

std::string output_path(const RunConfig& cfg, const std::string& name)
{
    fs::create_directories(cfg.output_dir);
    return (fs::path(cfg.output_dir) / name).string();
}

void emit(CommandReport& report, const RunConfig& cfg, const std::string& name, FigureSeries series,
          std::ostream& log)
{
    attach_checks(series, report.checks);
    const std::string path = output_path(cfg, name);
    save_series(path, series);
    report.files.push_back(path);
    log << "wrote " << path << " (" << series.rows.size() << " rows)\n";
}

void emit_json(CommandReport& report, const RunConfig& cfg, const std::string& name, std::ostream& log)
{
    nlohmann::json j;
    j["sphtrap_version"] = SPHTRAP_VERSION;
    j["command"] = std::string(command_name(cfg.command));
    nlohmann::json conf = nlohmann::json::object();
    for (const auto& [k, v] : cfg.entries())
        conf[k] = v;
    j["config"] = conf;
    nlohmann::json list = nlohmann::json::array();
    for (const auto& c : report.checks)
        list.push_back({{"name", c.name},
                        {"kind", std::string(kind_name(c.kind))},
                        {"passed", c.passed},
                        {"measured", c.measured},
                        {"tolerance", c.tolerance},
                        {"detail", c.detail}});
    j["checks"] = list;
    j["passed"] = report.exit_code() == 0;
    const std::string path = output_path(cfg, name);
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw std::runtime_error("cannot write " + path);
    out << j.dump(2) << '\n';
    report.files.push_back(path);
    log << "wrote " << path << '\n';
}

void log_checks(const CommandReport& report, std::ostream& log)
{
    for (const auto& c : report.checks)
        log << describe(c) << '\n';
}

std::vector<double> descending_xi(const Grid& g)
{
    auto p = g.points();
    std::reverse(p.begin(), p.end());
    return p;
}

/// Strict ordering of `values` after sorting `pairs` by key; returns the
/// smallest successive increase.
double smallest_increase(std::vector<std::pair<double, double>> pairs)
{
    std::sort(pairs.begin(), pairs.end());
    double gap = INFINITY;
    for (std::size_t i = 1; i < pairs.size(); ++i)
        gap = std::min(gap, pairs[i].second - pairs[i - 1].second);
    return gap;
}

// ---------------------------------------------------------------------------
// zeros

CommandReport cmd_zeros(const RunConfig& cfg, std::ostream& log)
{
    CommandReport report;
    report.assert_claims = cfg.assert_claims;
    const auto table = obtain_zero_table(cfg, cfg.l_max, cfg.n_max, log);

    double worst = 0.0;
    for (int n = 1; n <= cfg.n_max; ++n)
        worst = std::max(worst, std::abs(table.zero(0, n) - n * pi));
    report.add(at_most("x0n_equals_n_pi", CheckKind::invariant, worst, 1e-12));
    try {
        table.validate();
        report.add({"table_monotone_and_interlaced", CheckKind::invariant, true, 0.0, 0.0, {}});
    } catch (const ValidationError& e) {
        report.add({"table_monotone_and_interlaced", CheckKind::invariant, false, 1.0, 0.0, e.what()});
    }

    FigureSeries s = base_series(cfg);
    s.columns = {"l", "n", "zero"};
    for (int l = 0; l <= cfg.l_max; ++l)
        for (int n = 1; n <= cfg.n_max; ++n)
            s.rows.push_back({double(l), double(n), table.zero(l, n)});
    emit(report, cfg, "zeros.csv", std::move(s), log);
    return report;
}

// ---------------------------------------------------------------------------
// transitions

CommandReport cmd_transitions(const RunConfig& cfg, std::ostream& log)
{
    CommandReport report;
    report.assert_claims = cfg.assert_claims;
    const ModeIndex mode = cfg.modes.front();
    const int N = cfg.n_trunc;
    const auto table = obtain_zero_table(cfg, mode.l, 2 * N, log);
    const auto xis = descending_xi(cfg.xi);
    ProjectionOptions opts;
    opts.max_norm_deficit = cfg.max_norm_deficit;

    std::vector<std::pair<double, FigureSeries>> files;
    std::vector<std::pair<double, double>> mixing;
    for (double alpha : cfg.alpha) {
        const TrapGeometry geom(alpha);
        std::vector<double> times(xis.size());
        for (std::size_t i = 0; i < xis.size(); ++i)
            times[i] = time_for_xi(geom, xis[i]);
        const auto state = project_eigenstate_initial(geom, table, mode, N, opts);
        const auto wide = project_eigenstate_initial(geom, table, mode, 2 * N, opts);
        std::vector<InstantCoeffs> b(xis.size()), b2(xis.size());
        parallel_for(xis.size(), exec_of(cfg), [&](std::size_t i) {
            b[i] = instantaneous_coeffs(state, table, times[i]);
            b2[i] = instantaneous_coeffs(wide, table, times[i]);
        });

        FigureSeries s = base_series(cfg);
        s.add_meta("alpha", format_shortest(alpha));
        s.add_meta("initial_mode", to_string(mode));
        s.add_meta("initial_norm_deficit", format_double(state.norm_deficit()));
        s.columns = {"xi"};
        for (int k = 1; k <= cfg.columns; ++k)
            s.columns.push_back("prob_n" + std::to_string(k));
        s.columns.push_back("sum_check");
        s.columns.push_back("captured_norm");

        double worst_sum = 0.0, worst_capture = 0.0, worst_doubling = 0.0;
        for (std::size_t i = 0; i < xis.size(); ++i) {
            std::vector<double> row{xis[i]};
            double sum = 0.0;
            for (int k = 1; k <= cfg.columns; ++k) {
                const double p = b[i].probability(k);
                row.push_back(p);
                sum += p;
                worst_doubling = std::max(worst_doubling, std::abs(p - b2[i].probability(k)));
            }
            row.push_back(sum);
            row.push_back(b[i].captured_norm());
            worst_sum = std::max(worst_sum, sum);
            worst_capture = std::max(worst_capture, std::abs(1.0 - b[i].captured_norm()));
            s.rows.push_back(std::move(row));
        }
        const std::string tag = alpha_tag(alpha);
        report.add(at_most(tagged("partial_sums_bounded", tag), CheckKind::invariant, worst_sum, 1.0 + 1e-6));
        if (xis.front() == 1.0) {
            double identity = std::abs(1.0 - b.front().probability(1));
            for (int k = 2; k <= cfg.columns; ++k)
                identity = std::max(identity, b.front().probability(k));
            report.add(at_most(tagged("first_row_is_initial_state", tag), CheckKind::diagnostic, identity, 1e-8,
                               "b(0) at N=" + std::to_string(N)));
        }
        report.add(at_most(tagged("captured_norm_near_one", tag), CheckKind::diagnostic, worst_capture, 1e-3));
        report.add(at_most(tagged("doubling_n_changes_plotted_values", tag), CheckKind::diagnostic, worst_doubling,
                           1e-3, "N=" + std::to_string(N) + " vs " + std::to_string(2 * N)));

        if ((0.5 - 1.0) * alpha > 0.0 && geom.valid_time(geom.time_at_xi(0.5))) {
            const auto half = instantaneous_coeffs(state, table, geom.time_at_xi(0.5));
            mixing.emplace_back(std::abs(alpha), 1.0 - half.probability(1));
        }
        files.emplace_back(alpha, std::move(s));
    }
    if (mixing.size() >= 2)
        report.add({"mixing_at_xi_0.5_increases_with_speed", CheckKind::claim, smallest_increase(mixing) > 0.0,
                    smallest_increase(mixing), 0.0, "1-|b_1|^2 ordered by |alpha|"});

    for (auto& [alpha, s] : files)
        emit(report, cfg, "transitions_alpha_" + format_shortest(alpha) + ".csv", std::move(s), log);
    return report;
}

// ---------------------------------------------------------------------------
// energy

CommandReport cmd_energy(const RunConfig& cfg, std::ostream& log)
{
    CommandReport report;
    report.assert_claims = cfg.assert_claims;
    const ModeIndex mode = cfg.modes.front();
    const int N = cfg.n_trunc;
    const auto table = obtain_zero_table(cfg, mode.l, 2 * N, log);
    const auto xis = descending_xi(cfg.xi);
    ProjectionOptions opts;
    opts.max_norm_deficit = cfg.max_norm_deficit;

    FigureSeries s = base_series(cfg);
    s.add_meta("initial_mode", to_string(mode));
    s.columns = {"xi"};
    std::vector<std::vector<double>> ratios;
    double min_ratio = INFINITY;
    std::vector<std::pair<double, double>> ordering;
    for (double alpha : cfg.alpha) {
        const TrapGeometry geom(alpha);
        std::vector<double> times(xis.size());
        for (std::size_t i = 0; i < xis.size(); ++i)
            times[i] = time_for_xi(geom, xis[i]);
        const auto state = project_eigenstate_initial(geom, table, mode, N, opts);
        const auto wide = project_eigenstate_initial(geom, table, mode, 2 * N, opts);
        std::vector<double> r(xis.size()), r2(xis.size());
        parallel_for(xis.size(), exec_of(cfg), [&](std::size_t i) {
            r[i] = energy_expectation(state, table, times[i]).ratio;
            r2[i] = energy_expectation(wide, table, times[i]).ratio;
        });
        s.columns.push_back("ratio_alpha_" + format_shortest(alpha));
        s.add_meta("initial_norm_deficit[" + alpha_tag(alpha) + "]", format_double(state.norm_deficit()));

        const std::string tag = alpha_tag(alpha);
        double largest_drop = 0.0, doubling = 0.0;
        for (std::size_t i = 0; i < r.size(); ++i) {
            min_ratio = std::min(min_ratio, r[i]);
            doubling = std::max(doubling, std::abs(r[i] - r2[i]));
            if (i > 0)
                largest_drop = std::max(largest_drop, r[i - 1] - r[i]);
        }
        report.add(at_most(tagged("ratio_nondecreasing_as_xi_decreases", tag), CheckKind::claim, largest_drop, 0.0,
                           "largest drop between successive rows"));
        if (xis.front() == 1.0)
            report.add(at_most(tagged("ratio_is_one_at_xi_1", tag), CheckKind::diagnostic, std::abs(r.front() - 1.0),
                               1e-8, "N=" + std::to_string(N)));
        report.add(at_most(tagged("doubling_n_changes_ratio", tag), CheckKind::diagnostic, doubling, 1e-3,
                           "N=" + std::to_string(N) + " vs " + std::to_string(2 * N)));
        if ((0.5 - 1.0) * alpha > 0.0 && geom.valid_time(geom.time_at_xi(0.5)))
            ordering.emplace_back(std::abs(alpha), energy_expectation(state, table, geom.time_at_xi(0.5)).ratio);
        ratios.push_back(std::move(r));
    }
    report.add(at_least("ratio_at_least_one", CheckKind::claim, min_ratio, 1.0 - 1e-12));
    if (ordering.size() >= 2)
        report.add({"faster_contraction_higher_ratio_at_xi_0.5", CheckKind::claim, smallest_increase(ordering) > 0.0,
                    smallest_increase(ordering), 0.0, "ratio ordered by |alpha|"});

    for (std::size_t i = 0; i < xis.size(); ++i) {
        std::vector<double> row{xis[i]};
        for (const auto& r : ratios)
            row.push_back(r[i]);
        s.rows.push_back(std::move(row));
    }
    emit(report, cfg, "energy.csv", std::move(s), log);
    return report;
}

// ---------------------------------------------------------------------------
// densities

/// Table deep enough for automatic truncation at every requested speed.
int density_table_depth(const RunConfig& cfg, const ModeIndex& mode, double max_alpha)
{
    if (cfg.n_trunc > 0)
        return std::max(cfg.n_trunc, mode.n);
    const double x_guess = (mode.n + 0.5 * mode.l) * pi;
    const int estimate = truncation_estimate(TrapGeometry(max_alpha), x_guess);
    return std::min(16384, std::max(512, 16 * estimate));
}

SpectralState density_state(const RunConfig& cfg, const TrapGeometry& geom, const BesselZeroTable& table,
                            const ModeIndex& mode)
{
    if (cfg.n_trunc > 0) {
        ProjectionOptions opts;
        opts.max_norm_deficit = cfg.max_norm_deficit;
        return project_eigenstate_initial(geom, table, mode, cfg.n_trunc, opts);
    }
    return project_eigenstate_converged(geom, table, mode, cfg.target_deficit);
}

CommandReport cmd_density_r(const RunConfig& cfg, std::ostream& log)
{
    CommandReport report;
    report.assert_claims = cfg.assert_claims;
    const ModeIndex mode = cfg.modes.front();
    const double max_mult = *std::max_element(cfg.alpha_multipliers.begin(), cfg.alpha_multipliers.end());
    BesselZeroTable table = BesselZeroTable::build(mode.l, mode.n);
    const double x = table.zero(mode.l, mode.n);
    const double alpha_ln = x / 2.0;
    table = obtain_zero_table(cfg, mode.l, density_table_depth(cfg, mode, max_mult * alpha_ln), log);

    const auto frame0 = observation_frame(TrapGeometry(0.0), table, mode, cfg.r0);
    const double admissible = cfg.r0 / frame0.lambda;
    Grid eg = cfg.eta;
    if (eg.max == 0.0)
        eg.max = admissible;
    const auto eta = eg.points();
    const double h = (eg.max - eg.min) / (eg.steps - 1);
    const bool covers = eg.min == 0.0 && eg.max >= admissible * (1.0 - 1e-12);

    // The static curve is shown at the observation time of the slowest moving case.
    double slowest = INFINITY;
    for (double m : cfg.alpha_multipliers)
        if (m > 0.0)
            slowest = std::min(slowest, m);
    const double static_time = std::isfinite(slowest) ? (cfg.r0 - 1.0) / (2.0 * slowest * alpha_ln) : 0.0;

    FigureSeries s = base_series(cfg);
    s.add_meta("alpha_ln", format_double(alpha_ln));
    s.add_meta("lambda", format_double(frame0.lambda));
    s.add_meta("nu", format_double(frame0.nu));
    s.add_meta("eta_admissible_max", format_double(admissible));
    s.add_meta("static_time", format_double(static_time));
    s.add_meta("static_T", format_double(frame0.nu * static_time));
    s.columns = {"eta"};

    std::vector<std::vector<double>> curves;
    for (double mult : cfg.alpha_multipliers) {
        const TrapGeometry geom(mult * alpha_ln);
        const auto frame = observation_frame(geom, table, mode, cfg.r0);
        const double t = mult > 0.0 ? frame.t_obs : static_time;
        const auto state = density_state(cfg, geom, table, mode);
        const double edge = geom.radius(t) / frame.lambda;

        std::vector<double> inside;
        for (double e : eta)
            if (e <= edge * (1.0 + 1e-12))
                inside.push_back(e);
        auto rho = radial_density_profile(state, table, frame, t, inside, exec_of(cfg));
        rho.resize(eta.size(), 0.0);

        const std::string tag = "multiplier=" + format_shortest(mult);
        s.columns.push_back("rho_mult_" + format_shortest(mult));
        s.add_meta("n_trunc[" + tag + "]", std::to_string(state.n_trunc()));
        s.add_meta("norm_deficit[" + tag + "]", format_double(state.norm_deficit()));
        s.add_meta("time[" + tag + "]", format_double(t));

        const double area = integrate(rho, h);
        report.add(at_most(tagged("density_integrates_to_one", tag),
                           covers ? CheckKind::invariant : CheckKind::diagnostic, std::abs(area - 1.0), 1e-4));

        if (std::abs(mult - 0.01) < 1e-12) {
            std::vector<double> ref(eta.size(), 0.0);
            for (std::size_t i = 0; i < eta.size(); ++i) {
                const double r = frame.lambda * eta[i];
                if (eta[i] <= edge * (1.0 + 1e-12)) {
                    const double u = instantaneous_radial(geom, table, mode.l, mode.n, std::min(r, geom.radius(t)), t);
                    ref[i] = std::pow(frame.lambda, 3) * eta[i] * eta[i] * u * u;
                }
            }
            report.add(at_least("adiabatic_overlap_with_expanded_mode", CheckKind::claim,
                                density_overlap(rho, ref, h), 0.99, "multiplier 0.01"));
        }
        if (std::abs(mult - 20.0) < 1e-12) {
            std::vector<double> ref(eta.size(), 0.0);
            const TrapGeometry still(0.0);
            for (std::size_t i = 0; i < eta.size(); ++i) {
                const double r = frame.lambda * eta[i];
                if (r <= 1.0) {
                    const double u = instantaneous_radial(still, table, mode.l, mode.n, r, 0.0);
                    ref[i] = std::pow(frame.lambda, 3) * eta[i] * eta[i] * u * u;
                }
            }
            report.add(at_least("sudden_overlap_with_initial_profile", CheckKind::claim,
                                density_overlap(rho, ref, h), 0.95, "multiplier 20"));
        }
        curves.push_back(std::move(rho));
    }
    for (std::size_t i = 0; i < eta.size(); ++i) {
        std::vector<double> row{eta[i]};
        for (const auto& c : curves)
            row.push_back(c[i]);
        s.rows.push_back(std::move(row));
    }
    emit(report, cfg, "density_r.csv", std::move(s), log);
    return report;
}

/// Height of the first local maximum after the density becomes nonzero.
double first_peak(const std::vector<double>& rho)
{
    std::size_t i = 0;
    while (i < rho.size() && rho[i] == 0.0)
        ++i;
    while (i + 1 < rho.size() && rho[i + 1] >= rho[i])
        ++i;
    return i < rho.size() ? rho[i] : 0.0;
}

CommandReport cmd_density_t(const RunConfig& cfg, std::ostream& log)
{
    CommandReport report;
    report.assert_claims = cfg.assert_claims;
    auto mults = cfg.alpha_multipliers;
    const double max_mult = *std::max_element(mults.begin(), mults.end());

    std::vector<std::pair<std::string, FigureSeries>> files;
    for (const ModeIndex& mode : cfg.modes) {
        BesselZeroTable table = BesselZeroTable::build(mode.l, mode.n);
        const double alpha_ln = table.zero(mode.l, mode.n) / 2.0;
        table = obtain_zero_table(cfg, mode.l, density_table_depth(cfg, mode, max_mult * alpha_ln), log);

        const auto frame0 = observation_frame(TrapGeometry(alpha_ln), table, mode, cfg.r0);
        Grid tg = cfg.T;
        if (tg.max == 0.0)
            tg.max = 3.0 * frame0.T2;
        const auto T = tg.points();

        const std::string mode_tag = "mode=" + to_string(mode);
        FigureSeries s = base_series(cfg);
        s.add_meta("mode", to_string(mode));
        s.add_meta("alpha_ln", format_double(alpha_ln));
        s.add_meta("lambda", format_double(frame0.lambda));
        s.add_meta("nu", format_double(frame0.nu));
        s.add_meta("eta0", format_double(frame0.eta0));
        s.add_meta("T1", format_double(frame0.T1));
        s.add_meta("T2", format_double(frame0.T2));
        s.columns = {"T"};

        std::vector<std::vector<double>> curves;
        std::vector<std::pair<double, double>> peaks;
        for (double mult : mults) {
            const TrapGeometry geom(mult * alpha_ln);
            const auto frame = observation_frame(geom, table, mode, cfg.r0);
            const auto state = density_state(cfg, geom, table, mode);
            auto rho = radial_density_history(state, table, frame, T, exec_of(cfg));

            const std::string tag = mode_tag + ",multiplier=" + format_shortest(mult);
            s.columns.push_back("rho_mult_" + format_shortest(mult));
            s.add_meta("n_trunc[" + tag + "]", std::to_string(state.n_trunc()));
            s.add_meta("norm_deficit[" + tag + "]", format_double(state.norm_deficit()));
            s.add_meta("wall_arrival_T[" + tag + "]", format_double(frame.nu * frame.t_obs));

            std::size_t violations = 0;
            for (std::size_t i = 0; i < T.size(); ++i)
                if (geom.radius(T[i] / frame.nu) <= cfg.r0 && rho[i] != 0.0)
                    ++violations;
            report.add(at_most(tagged("zero_before_wall_arrives", tag), CheckKind::invariant, double(violations), 0.0));
            peaks.emplace_back(mult, -first_peak(rho));
            curves.push_back(std::move(rho));
        }
        if (peaks.size() >= 2) {
            const double gap = smallest_increase(peaks);
            report.add({tagged("first_peak_heights_decrease_with_speed", mode_tag), CheckKind::claim, gap > 0.0, gap,
                        0.0, "smallest drop in first-peak height"});
        }
        if (curves.size() >= 2) {
            // Mean of the last tenth of the window, compared with the spread of first peaks.
            const std::size_t from = T.size() - std::max<std::size_t>(1, T.size() / 10);
            double lo = INFINITY, hi = -INFINITY, plo = INFINITY, phi = -INFINITY;
            for (std::size_t c = 0; c < curves.size(); ++c) {
                double mean = 0.0;
                for (std::size_t i = from; i < T.size(); ++i)
                    mean += curves[c][i];
                mean /= double(T.size() - from);
                lo = std::min(lo, mean);
                hi = std::max(hi, mean);
                plo = std::min(plo, -peaks[c].second);
                phi = std::max(phi, -peaks[c].second);
            }
            const double spread = phi > plo ? (hi - lo) / (phi - plo) : 0.0;
            report.add(at_most(tagged("late_time_curves_converge", mode_tag), CheckKind::diagnostic, spread, 0.1,
                               "tail spread relative to first-peak spread"));
        }
        for (std::size_t i = 0; i < T.size(); ++i) {
            std::vector<double> row{T[i]};
            for (const auto& c : curves)
                row.push_back(c[i]);
            s.rows.push_back(std::move(row));
        }
        files.emplace_back("density_t_l" + std::to_string(mode.l) + "_n" + std::to_string(mode.n) + "_m" +
                               std::to_string(mode.m) + ".csv",
                           std::move(s));
    }
    for (auto& [name, s] : files)
        emit(report, cfg, name, std::move(s), log);
    return report;
}

// ---------------------------------------------------------------------------
// propagator checks

/// int_0^L r^2 conj(f) g dr on a grid independent of the propagation nodes.
complex radial_inner(const std::function<complex(double)>& f, const std::function<complex(double)>& g, double L,
                     int panels)
{
    static const auto rule = gauss_legendre(16);
    return composite_gauss(
        panels, rule, [&](double r) { return r * r * std::conj(f(r)) * g(r); }, 0.0, L);
}

struct CheckTimes {
    double early;
    double late;
};

CheckTimes check_times(const TrapGeometry& geom)
{
    if (geom.alpha() < 0.0)
        return {geom.time_at_xi(0.8), geom.time_at_xi(0.55)};
    if (geom.alpha() > 0.0)
        return {geom.time_at_xi(1.4), geom.time_at_xi(2.0)};
    return {0.2, 0.5};
}

} // namespace

std::vector<CheckResult> propagator_checks(double alpha, int n_max, Execution exec)
{
    std::vector<CheckResult> out;
    const TrapGeometry geom(alpha);
    const auto table = BesselZeroTable::build(2, std::max(n_max, 6));
    const auto times = check_times(geom);
    const std::string tag = alpha_tag(alpha) + ",N=" + std::to_string(n_max);

    // 1D reduction of the l = 0 channel.
    {
        const double frac[] = {0.05, 0.3, 0.5, 0.71, 0.97};
        double worst = 0.0;
        for (double fx : frac)
            for (double fy : frac) {
                const double x = fx * geom.radius(times.late);
                const double xp = fy * geom.radius(times.early);
                const complex direct = kernel_1d(geom, x, times.late, xp, times.early, n_max);
                const complex via_3d = 4.0 * pi * x * xp *
                                       full_kernel(geom, table, {x, 0.4, 0.3, times.late}, {xp, 0.4, 0.3, times.early},
                                                   0, n_max)
                                           .value;
                worst = std::max(worst, std::abs(direct - via_3d) / std::max(1.0, std::abs(direct)));
            }
        out.push_back(at_most(tagged("equivalence_1d", tag), CheckKind::invariant, worst, 1e-10,
                              "relative deviation on a 5x5 grid"));
    }
    if (alpha == 0.0) {
        double worst = 0.0;
        for (double x : {0.2, 0.45, 0.9})
            for (double xp : {0.1, 0.6}) {
                complex box = 0.0;
                for (int n = 1; n <= n_max; ++n)
                    box += 2.0 * std::sin(n * pi * x) * std::sin(n * pi * xp) *
                           std::polar(1.0, -n * n * pi * pi * (times.late - times.early) / 2.0);
                const complex k = x * xp * radial_kernel(geom, table, 0, x, times.late, xp, times.early, n_max).value;
                worst = std::max(worst, std::abs(k - box) / std::max(1.0, std::abs(box)));
            }
        out.push_back(at_most(tagged("static_box_reduction", tag), CheckKind::invariant, worst, 1e-10));
    }

    // Exact modes stay in their state.
    {
        struct Item {
            int l, n;
            double loss = 0.0, deficit = 0.0;
        };
        std::vector<Item> items;
        for (int l = 0; l <= 2; ++l)
            for (int n = 1; n <= 5; ++n)
                items.push_back({l, n});
        const int panels = 16 + n_max / 4;
        parallel_for(items.size(), exec, [&](std::size_t i) {
            auto& it = items[i];
            const auto p = propagate(
                geom, table, it.l, 0, [&](double r) { return exact_radial(geom, table, it.l, it.n, r, 0.0); }, 0.0,
                times.late, n_max);
            const complex ov = radial_inner([&](double r) { return exact_radial(geom, table, it.l, it.n, r, times.late); },
                                            [&](double r) { return p.evaluate(table, r); }, geom.radius(times.late),
                                            panels);
            it.loss = 1.0 - std::abs(ov);
            it.deficit = p.norm_deficit();
        });
        const auto worst = std::max_element(items.begin(), items.end(),
                                            [](const Item& a, const Item& b) { return a.loss < b.loss; });
        std::ostringstream detail;
        detail << "worst mode (l=" << worst->l << ",n=" << worst->n << ") norm deficit "
               << format_shortest(worst->deficit);
        out.push_back(at_most(tagged("mode_fidelity", tag), CheckKind::invariant, worst->loss, 1e-6, detail.str()));
    }

    // Composition and norm on band-limited data.
    {
        const int modes = std::min(6, n_max);
        std::vector<complex> c(static_cast<std::size_t>(modes));
        double total = 0.0;
        for (int k = 1; k <= modes; ++k) {
            c[k - 1] = std::polar(1.0 / k, 0.7 * k);
            total += std::norm(c[k - 1]);
        }
        auto data = [&](double r) {
            complex s = 0.0;
            for (int k = 1; k <= modes; ++k)
                s += c[k - 1] / std::sqrt(total) * exact_radial(geom, table, 1, k, r, 0.0);
            return s;
        };
        const auto direct = propagate(geom, table, 1, 0, data, 0.0, times.late, n_max);
        const auto half = propagate(geom, table, 1, 0, data, 0.0, times.early, n_max);
        const auto two = propagate(
            geom, table, 1, 0, [&](double r) { return half.evaluate(table, r); }, times.early, times.late, n_max);
        const double L = geom.radius(times.late);
        std::vector<double> diffs(51);
        parallel_for(diffs.size(), exec, [&](std::size_t i) {
            const double r = L * double(i) / 50.0;
            diffs[i] = std::abs(two.evaluate(table, r) - direct.evaluate(table, r));
        });
        out.push_back(at_most(tagged("composition", tag), CheckKind::invariant,
                              *std::max_element(diffs.begin(), diffs.end()), 2e-6));
        const double norm =
            radial_inner([&](double r) { return direct.evaluate(table, r); },
                         [&](double r) { return direct.evaluate(table, r); }, L, 16 + n_max / 4)
                .real();
        out.push_back(at_most(tagged("norm_preserved", tag), CheckKind::invariant, std::abs(norm - 1.0), 1e-6));
    }
    return out;
}

namespace {

CommandReport cmd_propagator_check(const RunConfig& cfg, std::ostream& log)
{
    CommandReport report;
    report.assert_claims = cfg.assert_claims;
    for (int n_max : cfg.kernel_modes)
        for (double alpha : cfg.alpha)
            for (auto& c : propagator_checks(alpha, n_max, exec_of(cfg)))
                report.add(std::move(c));
    emit_json(report, cfg, "propagator_check.json", log);
    return report;
}

// ---------------------------------------------------------------------------
// selfcheck

bool same_bytes(const std::string& a, const std::string& b)
{
    std::ifstream fa(a, std::ios::binary), fb(b, std::ios::binary);
    const std::string sa((std::istreambuf_iterator<char>(fa)), std::istreambuf_iterator<char>());
    const std::string sb((std::istreambuf_iterator<char>(fb)), std::istreambuf_iterator<char>());
    return fa.good() == fb.good() && !sa.empty() && sa == sb;
}

CommandReport cmd_selfcheck(const RunConfig& cfg, std::ostream& log)
{
    using clock = std::chrono::steady_clock;
    CommandReport report;
    report.assert_claims = cfg.assert_claims;
    const Execution exec = exec_of(cfg);
    auto stage = [&](const char* name) { log << "selfcheck: " << name << '\n'; };

    stage("zero table");
    {
        const auto t0 = clock::now();
        const auto table = cfg.zero_cache.empty() ? BesselZeroTable::build(50, 100)
                                                  : obtain_zero_table(cfg, 50, 100, log);
        log << "  zero table ready in " << std::chrono::duration<double>(clock::now() - t0).count() << " s\n";
        double worst = 0.0;
        for (int n = 1; n <= 100; ++n)
            worst = std::max(worst, std::abs(table.zero(0, n) - n * pi));
        report.add(at_most("zeros.x0n_equals_n_pi", CheckKind::invariant, worst, 1e-12));
        try {
            table.validate();
            report.add({"zeros.monotone_and_interlaced", CheckKind::invariant, true, 0.0, 0.0, {}});
        } catch (const ValidationError& e) {
            report.add({"zeros.monotone_and_interlaced", CheckKind::invariant, false, 1.0, 0.0, e.what()});
        }
    }

    stage("zero-table cache corruption is detected");
    {
        const fs::path dir = fs::temp_directory_path() / ("sphtrap_selfcheck_" + std::to_string(::getpid()));
        fs::create_directories(dir);
        std::ostringstream good;
        BesselZeroTable::build(2, 8).write_csv(good);
        std::string text = good.str();
        const auto pos = text.find("\n1,3,");
        text.replace(pos + 5, 3, "9.1");
        const std::string path = (dir / "corrupt_zeros.csv").string();
        std::ofstream(path, std::ios::binary) << text;
        bool detected = false;
        try {
            (void)BesselZeroTable::load(path);
        } catch (const ValidationError&) {
            detected = true;
        }
        report.add({"zeros.corrupt_cache_rejected", CheckKind::invariant, detected, detected ? 1.0 : 0.0, 1.0, {}});
        fs::remove_all(dir);
    }

    stage("orthogonality");
    {
        const auto table = BesselZeroTable::build(5, 10);
        const QuadratureSettings q;
        double worst = 0.0;
        int count = 0;
        for (int l = 0; l <= 5; ++l)
            for (int n = 1; n <= 10; ++n)
                for (int m = 1; m <= 5; ++m) {
                    const complex v = mode_overlap_integral({l, n, m, 0.0}, q, table);
                    const double expected = n == m ? 0.5 * std::pow(table.j_next_at_zero(l, n), 2) : 0.0;
                    worst = std::max(worst, std::abs(v - expected));
                    ++count;
                }
        report.add(at_most("oscint.orthogonality", CheckKind::invariant, worst, 1e-10,
                           std::to_string(count) + " triples"));
    }

    stage("oscillatory integrals against the Riemann oracle");
    {
        const auto table = BesselZeroTable::build(4, 12);
        const QuadratureSettings q;
        const OverlapRequest cases[] = {{0, 1, 1, 0.0},   {0, 1, 2, 3.0},   {1, 1, 1, -2.0}, {1, 1, 2, -2.0},
                                        {1, 2, 5, -10.0}, {2, 3, 3, 7.5},   {0, 4, 9, 40.0}, {3, 2, 6, -25.0},
                                        {4, 12, 11, 60.0}, {1, 10, 10, -60.0}, {2, 1, 12, 0.5}, {0, 12, 12, 100.0}};
        std::vector<double> gaps(std::size(cases));
        parallel_for(gaps.size(), exec, [&](std::size_t i) {
            const auto& c = cases[i];
            const double k1 = table.zero(c.l, c.n_row), k2 = table.zero(c.l, c.n_col);
            const complex r = riemann_oracle(
                [&](double s) {
                    return s * s * std::polar(1.0, -c.beta * s * s) * sph_bessel_j(c.l, k1 * s) *
                           sph_bessel_j(c.l, k2 * s);
                },
                1'000'000);
            gaps[i] = std::abs(mode_overlap_integral(c, q, table) - r);
        });
        report.add(at_most("oscint.riemann_oracle_agreement", CheckKind::invariant,
                           *std::max_element(gaps.begin(), gaps.end()), 1e-8, "1e6-point midpoint sums"));
    }

    stage("exact modes solve the Schroedinger equation");
    {
        const auto table = BesselZeroTable::build(3, 6);
        const std::pair<int, int> modes[] = {{0, 1}, {0, 4}, {1, 2}, {1, 5}, {2, 3}, {3, 2}};
        double worst = 0.0;
        for (double alpha : {-1.0, 0.3, 2.0})
            for (auto [l, n] : modes) {
                const TrapGeometry g(alpha);
                const double order = std::log2(verify::max_pde_residual(g, table, l, n, 5e-4) /
                                               verify::max_pde_residual(g, table, l, n, 2.5e-4));
                worst = std::max(worst, std::abs(order - 2.0));
            }
        report.add(at_most("dynamics.pde_residual_second_order", CheckKind::invariant, worst, 0.2,
                           "largest |order - 2| over 6 modes x 3 speeds"));
    }

    stage("spectral identity and unitarity");
    {
        const auto table = BesselZeroTable::build(1, 240);
        const auto s = project_eigenstate_initial(TrapGeometry(-2.0), table, {1, 1, 0}, 240);
        const auto b = instantaneous_coeffs(s, table, 0.0);
        double worst = std::abs(b.b[0] - 1.0);
        for (std::size_t k = 1; k < 15; ++k)
            worst = std::max(worst, std::abs(b.b[k]));
        report.add(at_most("dynamics.identity_at_t0", CheckKind::invariant, worst, 1e-8, "alpha=-2, N=240, n'<=15"));

        double drift = 0.0;
        for (auto [alpha, xi] : {std::pair{-1.0, 0.5}, {-1.0, 0.8}, {1.0, 1.5}}) {
            const TrapGeometry g(alpha);
            const auto st = project_eigenstate_initial(g, table, {1, 1, 0}, 40);
            drift = std::max(drift, std::abs(instantaneous_coeffs(st, table, g.time_at_xi(xi)).captured_norm() - 1.0));
        }
        report.add(at_most("dynamics.unitarity_slow_wall", CheckKind::invariant, drift, 1e-8, "|alpha|<=1, N=40"));
    }

    stage("propagator");
    for (double alpha : {-2.0, 0.0, 1.0})
        for (auto& c : propagator_checks(alpha, 60, exec)) {
            c.name = "propagator." + c.name;
            report.add(std::move(c));
        }

    stage("serial and parallel runs are byte-identical");
    {
        const fs::path dir = fs::temp_directory_path() / ("sphtrap_determinism_" + std::to_string(::getpid()));
        RunConfig run = default_config(Command::transitions);
        run.alpha = {-2.0, -6.0};
        run.xi = {0.5, 1.0, 11};
        run.zero_cache.clear();
        std::ostringstream sink;
        bool identical = true;
        std::vector<std::string> names;
        for (const char* sub : {"a", "b", "c"}) {
            run.output_dir = (dir / sub).string();
            run.serial = std::string(sub) != "c";
            const auto r = run_command(run, sink);
            names.clear();
            for (const auto& f : r.files)
                names.push_back(fs::path(f).filename().string());
        }
        for (const auto& name : names)
            for (const char* sub : {"b", "c"})
                identical = identical && same_bytes((dir / "a" / name).string(), (dir / sub / name).string());
        report.add({"cli.byte_identical_reruns", CheckKind::invariant, identical, identical ? 1.0 : 0.0, 1.0,
                    std::to_string(names.size()) + " files, two serial runs and one parallel run"});
        fs::remove_all(dir);
    }

    emit_json(report, cfg, "selfcheck.json", log);
    return report;
}

} // namespace

BesselZeroTable obtain_zero_table(const RunConfig& cfg, int l_max, int n_max, std::ostream& log)
{
    if (cfg.zero_cache.empty())
        return BesselZeroTable::build(l_max, n_max);
    if (fs::exists(cfg.zero_cache)) {
        auto cached = BesselZeroTable::load(cfg.zero_cache);
        if (cached.l_max() >= l_max && cached.n_max() >= n_max) {
            log << "zero table: revalidated cache " << cfg.zero_cache << '\n';
            return cached;
        }
        l_max = std::max(l_max, cached.l_max());
        n_max = std::max(n_max, cached.n_max());
    }
    auto table = BesselZeroTable::build(l_max, n_max);
    table.save(cfg.zero_cache);
    log << "zero table: wrote cache " << cfg.zero_cache << " (l<=" << l_max << ", n<=" << n_max << ")\n";
    return table;
}

CommandReport run_command(const RunConfig& config, std::ostream& log)
{
    config.validate();
    CommandReport report;
    switch (config.command) {
    case Command::zeros:
        report = cmd_zeros(config, log);
        break;
    case Command::transitions:
        report = cmd_transitions(config, log);
        break;
    case Command::energy:
        report = cmd_energy(config, log);
        break;
    case Command::density_r:
        report = cmd_density_r(config, log);
        break;
    case Command::density_t:
        report = cmd_density_t(config, log);
        break;
    case Command::propagator_check:
        report = cmd_propagator_check(config, log);
        break;
    case Command::selfcheck:
        report = cmd_selfcheck(config, log);
        break;
    }
    log_checks(report, log);
    return report;
}

CommandReport rerun_from_csv(const std::string& csv_path, const std::string& output_dir, bool serial,
                             std::ostream& log)
{
    FigureSeries header;
    try {
        header = load_series(csv_path);
    } catch (const std::exception& e) {
        throw ConfigError("cannot rerun from " + csv_path + ": " + e.what());
    }
    const std::string command = header.meta("command");
    if (command.empty())
        throw ConfigError(csv_path + " has no recorded command");
    RunConfig cfg = default_config(parse_command(command));
    for (const auto& [k, v] : header.metadata)
        if (k.rfind("config.", 0) == 0)
            cfg.set(k.substr(7), v);
    cfg.output_dir = output_dir;
    cfg.serial = serial;
    log << "rerunning " << command << " from " << csv_path << '\n';
    return run_command(cfg, log);
}

} // namespace sphtrap::cli
