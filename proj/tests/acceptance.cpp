// Acceptance gate: one PASS/FAIL line per criterion, nonzero exit if any fails.
#include "commands.hpp"
#include "config.hpp"
#include "pde_residual.hpp"
#include "series.hpp"

#include "sphtrap/dynamics.hpp"
#include "sphtrap/numfmt.hpp"
#include "sphtrap/oscint.hpp"
#include "sphtrap/propagator.hpp"
#include "sphtrap/specfun.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numbers>
#include <sstream>

using namespace sphtrap;
using namespace sphtrap::cli;
namespace fs = std::filesystem;
using std::numbers::pi;
using clock_type = std::chrono::steady_clock;

namespace {

int failures = 0;

void verdict(int id, bool ok, const std::string& text)
{
    std::cout << (ok ? "PASS " : "FAIL ") << id << " " << text << '\n';
    if (!ok)
        ++failures;
}

std::string g(double v)
{
    std::ostringstream s;
    s.precision(3);
    s << v;
    return s.str();
}

double seconds_since(clock_type::time_point t0)
{
    return std::chrono::duration<double>(clock_type::now() - t0).count();
}

fs::path workdir()
{
    const fs::path p = fs::temp_directory_path() / "sphtrap_acceptance";
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

// ---------------------------------------------------------------------------

void zero_table()
{
    const auto t0 = clock_type::now();
    const auto table = BesselZeroTable::build(50, 100);
    const double elapsed = seconds_since(t0);
    double worst = 0.0;
    for (int n = 1; n <= 100; ++n)
        worst = std::max(worst, std::abs(table.zero(0, n) - n * pi));
    bool interlaced = true;
    for (int l = 0; l < 50; ++l)
        for (int n = 1; n < 100; ++n)
            interlaced = interlaced && table.zero(l, n) < table.zero(l + 1, n) &&
                         table.zero(l + 1, n) < table.zero(l, n + 1);
    verdict(1, worst <= 1e-12 && interlaced && elapsed < 5.0,
            "zero table: max|x_0n - n pi| = " + g(worst) + " (tol 1e-12), interlacing l<=50 n<=100 " +
                (interlaced ? "holds" : "BROKEN") + ", build " + g(elapsed) + " s (limit 5 s)");
}

void orthogonality()
{
    const auto table = BesselZeroTable::build(5, 10);
    const QuadratureSettings q;
    double worst = 0.0;
    int count = 0;
    for (int l = 0; l <= 5; ++l)
        for (int n = 1; n <= 10; ++n)
            for (int m = 1; m <= 5; ++m) {
                const complex v = mode_overlap_integral({l, n, m, 0.0}, q, table);
                const double jn = std::sph_bessel(l + 1, table.zero(l, n));
                worst = std::max(worst, std::abs(v - (n == m ? 0.5 * jn * jn : 0.0)));
                ++count;
            }
    verdict(2, count == 300 && worst <= 1e-10,
            "orthogonality: " + std::to_string(count) + " triples, max abs error " + g(worst) + " (tol 1e-10)");
}

/// Worst |sum|b|^2 - 1| and worst change under N -> 2N of the plotted values.
struct TruncationAudit {
    double norm = 0.0;
    double doubling = 0.0;
};

TruncationAudit audit_transitions(const BesselZeroTable& table)
{
    const RunConfig cfg = default_config(Command::transitions);
    TruncationAudit a;
    for (double alpha : cfg.alpha) {
        const TrapGeometry geom(alpha);
        ProjectionOptions loose;
        loose.max_norm_deficit = 1.0;
        const auto s = project_eigenstate_initial(geom, table, cfg.modes.front(), cfg.n_trunc, loose);
        const auto w = project_eigenstate_initial(geom, table, cfg.modes.front(), 2 * cfg.n_trunc, loose);
        for (double xi : cfg.xi.points()) {
            const double t = xi == 1.0 ? 0.0 : geom.time_at_xi(xi);
            const auto b = instantaneous_coeffs(s, table, t);
            const auto b2 = instantaneous_coeffs(w, table, t);
            a.norm = std::max(a.norm, std::abs(b.captured_norm() - 1.0));
            for (int k = 1; k <= cfg.columns; ++k)
                a.doubling = std::max(a.doubling, std::abs(b.probability(k) - b2.probability(k)));
        }
    }
    return a;
}

TruncationAudit audit_energy(const BesselZeroTable& table)
{
    const RunConfig cfg = default_config(Command::energy);
    TruncationAudit a;
    for (double alpha : cfg.alpha) {
        const TrapGeometry geom(alpha);
        ProjectionOptions loose;
        loose.max_norm_deficit = 1.0;
        const auto s = project_eigenstate_initial(geom, table, cfg.modes.front(), cfg.n_trunc, loose);
        const auto w = project_eigenstate_initial(geom, table, cfg.modes.front(), 2 * cfg.n_trunc, loose);
        for (double xi : cfg.xi.points()) {
            const double t = xi == 1.0 ? 0.0 : geom.time_at_xi(xi);
            const auto e = energy_expectation(s, table, t);
            a.norm = std::max(a.norm, std::abs(e.captured_norm - 1.0));
            a.doubling = std::max(a.doubling, std::abs(e.ratio - energy_expectation(w, table, t).ratio));
        }
    }
    return a;
}

void convergence_claims()
{
    const auto table = BesselZeroTable::build(1, 30);
    const auto tr = audit_transitions(table);
    const auto en = audit_energy(table);
    const bool ok = tr.norm <= 1e-3 && tr.doubling < 1e-3 && en.norm <= 1e-3 && en.doubling < 1e-3;
    verdict(3, ok,
            "stated truncations: transitions N=10 max|sum|b|^2-1| = " + g(tr.norm) + ", N->2N change " +
                g(tr.doubling) + "; energy N=15 max|sum|b|^2-1| = " + g(en.norm) + ", N->2N change " +
                g(en.doubling) + " (tol 1e-3 each)");
}

void unitarity_identity()
{
    // b(0) = delta on the leading coefficients; the last few coefficients of a
    // truncated double sum carry the truncation error and are reported apart.
    const auto table = BesselZeroTable::build(2, 240);
    double leading = 0.0, edge = 0.0;
    for (double alpha : {-10.0, -2.0, 1.0, 10.0})
        for (const ModeIndex mode : {ModeIndex(1, 1, 0), ModeIndex(0, 3, 0), ModeIndex(2, 2, 1)}) {
            const auto s = project_eigenstate_initial(TrapGeometry(alpha), table, mode, 240);
            const auto b = instantaneous_coeffs(s, table, 0.0);
            for (std::size_t k = 0; k < b.b.size(); ++k) {
                const double err = std::abs(b.b[k] - (int(k) + 1 == mode.n ? 1.0 : 0.0));
                (k < 15 ? leading : edge) = std::max(k < 15 ? leading : edge, err);
            }
        }

    double drift = 0.0;
    std::string where;
    for (double alpha : {-10.0, -6.0, -4.0, -2.0, -1.0, -0.5, 0.5, 1.0, 2.0, 4.0, 6.0, 10.0}) {
        const TrapGeometry geom(alpha);
        const auto s = project_eigenstate_initial(geom, table, {1, 1, 0}, 40, {1.0, {}});
        for (int i = 0; i <= 14; ++i) {
            const double xi = alpha < 0 ? 1.0 - 0.05 * i : 1.0 + (2.0 / 14.0) * i;
            const double d = std::abs(instantaneous_coeffs(s, table, geom.time_at_xi(xi)).captured_norm() - 1.0);
            if (d > drift) {
                drift = d;
                where = "alpha=" + format_shortest(alpha) + ", xi=" + g(xi);
            }
        }
    }
    verdict(4, leading <= 1e-8 && drift <= 1e-8,
            "b(0)=delta: max error over n'<=15 at N=240 = " + g(leading) + " (tol 1e-8; n'>15 reach " + g(edge) +
                "); N=40 unitarity over |alpha|<=10, 0.3<=xi<=3: max|sum|b|^2-1| = " + g(drift) + " at " + where +
                " (tol 1e-8)");
}

void pde_residual()
{
    const auto table = BesselZeroTable::build(3, 6);
    const std::pair<int, int> modes[] = {{0, 1}, {0, 4}, {1, 2}, {1, 5}, {2, 3}, {3, 2}};
    double worst = 0.0;
    int cases = 0;
    for (double alpha : {-1.0, 0.3, 2.0})
        for (auto [l, n] : modes) {
            const double order = verify::pde_residual_order(TrapGeometry(alpha), table, l, n, 5e-4);
            worst = std::max(worst, std::abs(order - 2.0));
            ++cases;
        }
    verdict(5, cases == 18 && worst <= 0.2,
            "finite-difference residual of exact modes: " + std::to_string(cases) +
                " cases, max |observed order - 2| = " + g(worst) + " (tol 0.2, h = 5e-4 -> 2.5e-4)");
}

void propagator()
{
    const int N = kDefaultKernelModes;
    const auto table = BesselZeroTable::build(2, N);
    double pointwise = 0.0, relative = 0.0;
    for (double alpha : {-2.0, 0.0, 0.5, 4.0}) {
        const TrapGeometry geom(alpha);
        const double t = alpha < 0 ? geom.time_at_xi(0.55) : alpha > 0 ? geom.time_at_xi(2.0) : 0.5;
        const double tp = alpha < 0 ? geom.time_at_xi(0.8) : alpha > 0 ? geom.time_at_xi(1.4) : 0.2;
        for (double fx : {0.05, 0.3, 0.5, 0.71, 0.97})
            for (double fy : {0.05, 0.3, 0.5, 0.71, 0.97}) {
                const double x = fx * geom.radius(t), xp = fy * geom.radius(tp);
                const complex one_d = kernel_1d(geom, x, t, xp, tp, N);
                const complex three_d =
                    4.0 * pi * x * xp * full_kernel(geom, table, {x, 1.1, 2.0, t}, {xp, 1.1, 2.0, tp}, 0, N).value;
                pointwise = std::max(pointwise, std::abs(one_d - three_d));
                relative = std::max(relative, std::abs(one_d - three_d) / std::abs(one_d));
            }
    }
    double fidelity = 0.0;
    for (double alpha : {-10.0, -2.0, 0.5, 4.0})
        for (const auto& c : propagator_checks(alpha, 40, Execution::parallel))
            if (c.name.rfind("mode_fidelity", 0) == 0)
                fidelity = std::max(fidelity, c.measured);
    verdict(6, pointwise <= 1e-10 && fidelity <= 1e-6,
            "l=0 kernel vs 1D kernel at N=200: max abs difference " + g(pointwise) +
                " (tol 1e-10; relative to |K| " + g(relative) + "); mode fidelity l<=2, n<=5: max 1-|overlap| = " + g(fidelity) + " (tol 1e-6)");
}

// ---------------------------------------------------------------------------
// Claims about the figures, read back from the emitted files.

std::vector<double> column(const FigureSeries& s, const std::string& name)
{
    const auto it = std::find(s.columns.begin(), s.columns.end(), name);
    if (it == s.columns.end())
        throw std::runtime_error("missing column " + name);
    const auto j = std::size_t(it - s.columns.begin());
    std::vector<double> v;
    for (const auto& row : s.rows)
        v.push_back(row[j]);
    return v;
}

double simpson(const std::vector<double>& y, double h)
{
    double s = y.front() + y.back();
    for (std::size_t i = 1; i + 1 < y.size(); ++i)
        s += (i % 2 ? 4.0 : 2.0) * y[i];
    return s * h / 3.0;
}

double bhattacharyya(const std::vector<double>& a, const std::vector<double>& b, double h)
{
    std::vector<double> y(a.size());
    for (std::size_t i = 0; i < a.size(); ++i)
        y[i] = std::sqrt(std::max(0.0, a[i]) * std::max(0.0, b[i]));
    return simpson(y, h);
}

double first_peak(const std::vector<double>& rho)
{
    std::size_t i = 0;
    while (i < rho.size() && rho[i] == 0.0)
        ++i;
    while (i + 1 < rho.size() && rho[i + 1] >= rho[i])
        ++i;
    return i < rho.size() ? rho[i] : 0.0;
}

RunConfig figure_config(Command c, const fs::path& dir)
{
    RunConfig cfg = default_config(c);
    cfg.output_dir = dir.string();
    cfg.assert_claims = false;
    return cfg;
}

void figure_claims(const fs::path& dir)
{
    std::ostringstream log;
    std::vector<std::string> parts;
    bool ok = true;
    auto note = [&](bool pass, const std::string& text) {
        ok = ok && pass;
        parts.push_back(std::string(pass ? "ok " : "VIOLATED ") + text);
    };

    {
        const auto cfg = figure_config(Command::transitions, dir / "transitions");
        const auto report = run_command(cfg, log);
        std::vector<double> mixing;
        for (const auto& f : report.files) {
            const auto s = load_series(f);
            const auto xi = column(s, "xi");
            const auto p1 = column(s, "prob_n1");
            const auto at = std::min_element(xi.begin(), xi.end(), [](double a, double b) {
                return std::abs(a - 0.5) < std::abs(b - 0.5);
            });
            mixing.push_back(1.0 - p1[std::size_t(at - xi.begin())]);
        }
        bool inc = mixing.size() == 4;
        for (std::size_t i = 1; i < mixing.size(); ++i)
            inc = inc && mixing[i] > mixing[i - 1];
        std::string vals;
        for (double m : mixing)
            vals += (vals.empty() ? "" : ", ") + g(m);
        note(inc, "mixing at xi=0.5 for alpha -2,-4,-6,-10: " + vals);
    }
    {
        const auto cfg = figure_config(Command::energy, dir / "energy");
        const auto s = load_series(run_command(cfg, log).files.front());
        double min_ratio = INFINITY, drop = 0.0;
        std::string where;
        for (double alpha : cfg.alpha) {
            const auto r = column(s, "ratio_alpha_" + format_shortest(alpha));
            const auto xi = column(s, "xi");
            for (std::size_t i = 0; i < r.size(); ++i) {
                min_ratio = std::min(min_ratio, r[i]);
                if (i > 0 && r[i - 1] - r[i] > drop) {
                    drop = r[i - 1] - r[i];
                    where = "alpha=" + format_shortest(alpha) + " near xi=" + g(xi[i]);
                }
            }
        }
        note(min_ratio >= 1.0 - 1e-12, "energy ratio >= 1 (min " + g(min_ratio) + ")");
        note(drop <= 0.0, "energy ratio increases as xi decreases (largest drop " + g(drop) +
                              (where.empty() ? std::string() : " at " + where) + ")");
    }
    {
        const auto cfg = figure_config(Command::density_r, dir / "density_r");
        const auto s = load_series(run_command(cfg, log).files.front());
        const ModeIndex mode = cfg.modes.front();
        const auto table = BesselZeroTable::build(mode.l, mode.n);
        const double lambda = std::stod(s.meta("lambda"));
        const double alpha_ln = std::stod(s.meta("alpha_ln"));
        const auto eta = column(s, "eta");
        const double h = eta[1] - eta[0];

        const TrapGeometry slow(0.01 * alpha_ln);
        const double t_slow = (cfg.r0 - 1.0) / slow.wall_velocity();
        std::vector<double> adiabatic(eta.size(), 0.0), initial(eta.size(), 0.0);
        for (std::size_t i = 0; i < eta.size(); ++i) {
            const double r = lambda * eta[i];
            if (r <= slow.radius(t_slow)) {
                const double u = instantaneous_radial(slow, table, mode.l, mode.n, r, t_slow);
                adiabatic[i] = std::pow(lambda, 3) * eta[i] * eta[i] * u * u;
            }
            if (r <= 1.0) {
                const double u = instantaneous_radial(TrapGeometry(0.0), table, mode.l, mode.n, r, 0.0);
                initial[i] = std::pow(lambda, 3) * eta[i] * eta[i] * u * u;
            }
        }
        const double ad = bhattacharyya(column(s, "rho_mult_0.01"), adiabatic, h);
        const double su = bhattacharyya(column(s, "rho_mult_20"), initial, h);
        note(ad > 0.99, "adiabatic overlap " + format_shortest(ad) + " > 0.99");
        note(su > 0.95, "sudden overlap " + format_shortest(su) + " > 0.95");
    }
    {
        const auto cfg = figure_config(Command::density_t, dir / "density_t");
        const auto report = run_command(cfg, log);
        bool decreasing = true, causal = true;
        std::string peaks;
        for (const auto& f : report.files) {
            const auto s = load_series(f);
            const auto T = column(s, "T");
            const double nu = std::stod(s.meta("nu"));
            const double alpha_ln = std::stod(s.meta("alpha_ln"));
            double prev = INFINITY;
            for (double m : cfg.alpha_multipliers) {
                const auto rho = column(s, "rho_mult_" + format_shortest(m));
                const double peak = first_peak(rho);
                decreasing = decreasing && peak < prev;
                prev = peak;
                peaks += (peaks.empty() ? "" : ", ") + g(peak);
                const double arrival = nu * (cfg.r0 - 1.0) / (2.0 * m * alpha_ln);
                for (std::size_t i = 0; i < T.size(); ++i)
                    if (T[i] < arrival * (1.0 - 1e-12) && rho[i] != 0.0)
                        causal = false;
            }
        }
        note(decreasing, "first peaks decrease with speed (" + peaks + ")");
        note(causal, "density is zero before the wall reaches r0");
    }
    std::string text = "figure claims:";
    for (const auto& p : parts)
        text += " [" + p + "]";
    verdict(7, ok, text);
}

void oracle_and_selfcheck(const fs::path& dir)
{
    std::ifstream in(std::string(SPHTRAP_TEST_DATA_DIR) + "/overlap_golden.csv");
    std::string line;
    std::getline(in, line);
    const auto table = BesselZeroTable::build(10, 40);
    double worst = 0.0;
    int cases = 0;
    while (std::getline(in, line)) {
        std::stringstream ss(line);
        std::string f[6];
        for (auto& cell : f)
            std::getline(ss, cell, ',');
        const OverlapRequest req{parse_int(f[0]), parse_int(f[1]), parse_int(f[2]), parse_double(f[3])};
        const complex golden(parse_double(f[4]), parse_double(f[5]));
        const double k1 = table.zero(req.l, req.n_row), k2 = table.zero(req.l, req.n_col);
        const complex oracle = riemann_oracle(
            [&](double s) {
                return s * s * std::polar(1.0, -req.beta * s * s) * sph_bessel_j(req.l, k1 * s) *
                       sph_bessel_j(req.l, k2 * s);
            },
            1'000'000);
        const complex gauss = mode_overlap_integral(req, QuadratureSettings{}, table);
        worst = std::max({worst, std::abs(oracle - golden), std::abs(gauss - oracle)});
        ++cases;
    }

    const auto t0 = clock_type::now();
    auto cfg = default_config(Command::selfcheck);
    cfg.output_dir = (dir / "selfcheck").string();
    std::ostringstream log;
    const auto report = run_command(cfg, log);
    const double elapsed = seconds_since(t0);
    verdict(8, cases > 0 && worst <= 1e-8 && report.exit_code() == 0 && elapsed < 300.0,
            "oracle: " + std::to_string(cases) + " golden integrals, max |oracle - golden|, |gauss - oracle| = " +
                g(worst) + " (tol 1e-8); selfcheck " + (report.exit_code() == 0 ? "passed" : "FAILED") + " in " +
                g(elapsed) + " s (limit 300 s)");
}

} // namespace

int main()
{
    const fs::path dir = workdir();
    const auto t0 = clock_type::now();
    try {
        zero_table();
        orthogonality();
        convergence_claims();
        unitarity_identity();
        pde_residual();
        propagator();
        figure_claims(dir);
        oracle_and_selfcheck(dir);
    } catch (const std::exception& e) {
        std::cout << "FAIL acceptance aborted: " << e.what() << '\n';
        return 2;
    }
    std::cout << (failures == 0 ? "all criteria met" : std::to_string(failures) + " criteria failed") << " in "
              << g(seconds_since(t0)) << " s\n";
    fs::remove_all(dir);
    return failures == 0 ? 0 : 1;
}
