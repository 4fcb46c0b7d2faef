#include "sphtrap/oscint.hpp"

#include "sphtrap/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace sphtrap {

void QuadratureSettings::validate() const
{
    if (points_per_panel < 4)
        throw DomainError("quadrature needs at least 4 Gauss points per panel");
    if (!(refinement_tolerance > 0.0))
        throw DomainError("quadrature refinement tolerance must be positive");
    if (min_panels < 1 || max_refinements < 1)
        throw DomainError("quadrature needs min_panels >= 1 and max_refinements >= 1");
}

GaussLegendreRule gauss_legendre(int points)
{
    if (points < 1)
        throw DomainError("Gauss-Legendre rule needs at least one point");
    GaussLegendreRule rule;
    rule.nodes.resize(points);
    rule.weights.resize(points);
    const int half = (points + 1) / 2;
    for (int i = 0; i < half; ++i) {
        double z = std::cos(std::numbers::pi * (i + 0.75) / (points + 0.5));
        double dp = 0.0;
        for (int iter = 0; iter < 100; ++iter) {
            double p1 = 1.0;
            double p2 = 0.0;
            for (int j = 0; j < points; ++j) {
                const double p3 = p2;
                p2 = p1;
                p1 = ((2.0 * j + 1.0) * z * p2 - j * p3) / (j + 1.0);
            }
            dp = points * (z * p1 - p2) / (z * z - 1.0);
            const double dz = p1 / dp;
            z -= dz;
            if (std::abs(dz) < 1e-15)
                break;
        }
        // Recompute the derivative at the converged node for the weight.
        double p1 = 1.0;
        double p2 = 0.0;
        for (int j = 0; j < points; ++j) {
            const double p3 = p2;
            p2 = p1;
            p1 = ((2.0 * j + 1.0) * z * p2 - j * p3) / (j + 1.0);
        }
        dp = points * (z * p1 - p2) / (z * z - 1.0);
        const double w = 2.0 / ((1.0 - z * z) * dp * dp);
        rule.nodes[i] = -z;
        rule.nodes[points - 1 - i] = z;
        rule.weights[i] = w;
        rule.weights[points - 1 - i] = w;
    }
    if (points % 2 == 1)
        rule.nodes[points / 2] = 0.0;
    return rule;
}

complex composite_gauss(int panel_count, int points_per_panel, const Integrand& integrand)
{
    if (panel_count < 1)
        throw DomainError("composite_gauss needs panel_count >= 1");
    return composite_gauss(panel_count, gauss_legendre(points_per_panel), integrand);
}

complex riemann_oracle(const Integrand& integrand, long point_count)
{
    if (point_count < 1)
        throw DomainError("riemann_oracle needs point_count >= 1");
    const long double h = 1.0L / point_count;
    long double re = 0.0L;
    long double im = 0.0L;
    for (long i = 0; i < point_count; ++i) {
        const complex v = integrand(static_cast<double>((i + 0.5L) * h));
        re += v.real();
        im += v.imag();
    }
    return {static_cast<double>(re * h), static_cast<double>(im * h)};
}

int overlap_panel_count(double wavenumber, const QuadratureSettings& settings)
{
    const double by_frequency = std::ceil(std::abs(wavenumber) / std::numbers::pi);
    return std::max(settings.min_panels, static_cast<int>(by_frequency));
}

namespace {

// Runs `evaluate(panels)` (returning a vector of estimates) with doubling
// until successive estimates agree elementwise to the tolerance.
template <class Evaluate>
std::vector<complex> refine_by_doubling(int panels, const QuadratureSettings& settings, Evaluate&& evaluate,
                                        const char* what)
{
    std::vector<complex> previous = evaluate(panels);
    for (int r = 0; r < settings.max_refinements; ++r) {
        panels *= 2;
        std::vector<complex> current = evaluate(panels);
        double diff = 0.0;
        std::size_t worst = 0;
        for (std::size_t i = 0; i < current.size(); ++i) {
            const double d = std::abs(current[i] - previous[i]);
            if (d > diff) {
                diff = d;
                worst = i;
            }
        }
        if (diff <= settings.refinement_tolerance)
            return current;
        if (r + 1 == settings.max_refinements) {
            std::ostringstream msg;
            msg.precision(17);
            msg << what << " did not converge after " << settings.max_refinements
                << " panel doublings; last two estimates " << previous[worst] << " and " << current[worst];
            throw ConvergenceError(msg.str(), std::abs(previous[worst]), std::abs(current[worst]));
        }
        previous = std::move(current);
    }
    return previous;
}

void check_request(int l, int n, const BesselZeroTable& table)
{
    if (!table.contains(l, n))
        throw DomainError("overlap integral index (l=" + std::to_string(l) + ", n=" + std::to_string(n) +
                          ") not in zero table");
}

} // namespace

complex mode_overlap_integral(const OverlapRequest& req, const QuadratureSettings& settings,
                              const BesselZeroTable& table)
{
    settings.validate();
    check_request(req.l, req.n_row, table);
    check_request(req.l, req.n_col, table);
    if (!std::isfinite(req.beta))
        throw DomainError("overlap integral needs a finite beta");

    const double k1 = table.zero(req.l, req.n_row);
    const double k2 = table.zero(req.l, req.n_col);
    const auto rule = gauss_legendre(settings.points_per_panel);
    const int l = req.l;
    const double beta = req.beta;
    auto integrand = [&](double s) {
        return s * s * std::polar(1.0, -beta * s * s) * (sph_bessel_j(l, k1 * s) * sph_bessel_j(l, k2 * s));
    };
    auto evaluate = [&](int panels) { return std::vector<complex>{composite_gauss(panels, rule, integrand)}; };
    const int panels = overlap_panel_count(k1 + k2 + std::abs(beta), settings);
    return refine_by_doubling(panels, settings, evaluate, "overlap integral").front();
}

std::vector<complex> overlap_row(int l, int n_row, int count, double beta, const QuadratureSettings& settings,
                                 const BesselZeroTable& table)
{
    settings.validate();
    check_request(l, n_row, table);
    check_request(l, count, table);
    if (!std::isfinite(beta))
        throw DomainError("overlap integral needs a finite beta");

    const auto rule = gauss_legendre(settings.points_per_panel);
    const double k_row = table.zero(l, n_row);
    std::vector<double> k(count);
    for (int n = 1; n <= count; ++n)
        k[n - 1] = table.zero(l, n);

    auto evaluate = [&](int panels) {
        std::vector<complex> acc(count, 0.0);
        const double width = 1.0 / panels;
        for (int p = 0; p < panels; ++p) {
            const double mid = (p + 0.5) * width;
            for (std::size_t q = 0; q < rule.size(); ++q) {
                const double s = mid + 0.5 * width * rule.nodes[q];
                const complex w =
                    0.5 * width * rule.weights[q] * s * s * std::polar(1.0, -beta * s * s) * sph_bessel_j(l, k_row * s);
                for (int n = 0; n < count; ++n)
                    acc[n] += w * sph_bessel_j(l, k[n] * s);
            }
        }
        return acc;
    };
    const int panels = overlap_panel_count(k_row + k.back() + std::abs(beta), settings);
    return refine_by_doubling(panels, settings, evaluate, "overlap row");
}

OverlapMatrix overlap_matrix(int l, int count, double beta, const QuadratureSettings& settings,
                             const BesselZeroTable& table)
{
    settings.validate();
    check_request(l, count, table);
    if (!std::isfinite(beta))
        throw DomainError("overlap integral needs a finite beta");

    const auto rule = gauss_legendre(settings.points_per_panel);
    std::vector<double> k(count);
    for (int n = 1; n <= count; ++n)
        k[n - 1] = table.zero(l, n);
    const auto cnt = static_cast<std::size_t>(count);

    auto evaluate = [&](int panels) {
        std::vector<complex> upper(cnt * (cnt + 1) / 2, 0.0);
        std::vector<double> jl(cnt);
        const double width = 1.0 / panels;
        for (int p = 0; p < panels; ++p) {
            const double mid = (p + 0.5) * width;
            for (std::size_t q = 0; q < rule.size(); ++q) {
                const double s = mid + 0.5 * width * rule.nodes[q];
                const complex w = 0.5 * width * rule.weights[q] * s * s * std::polar(1.0, -beta * s * s);
                for (std::size_t n = 0; n < cnt; ++n)
                    jl[n] = sph_bessel_j(l, k[n] * s);
                std::size_t idx = 0;
                for (std::size_t i = 0; i < cnt; ++i) {
                    const complex wi = w * jl[i];
                    for (std::size_t j = i; j < cnt; ++j)
                        upper[idx++] += wi * jl[j];
                }
            }
        }
        return upper;
    };
    const int panels = overlap_panel_count(2.0 * k.back() + std::abs(beta), settings);
    const auto upper = refine_by_doubling(panels, settings, evaluate, "overlap matrix");

    std::vector<complex> full(cnt * cnt);
    std::size_t idx = 0;
    for (std::size_t i = 0; i < cnt; ++i)
        for (std::size_t j = i; j < cnt; ++j) {
            full[i * cnt + j] = upper[idx];
            full[j * cnt + i] = upper[idx];
            ++idx;
        }
    return OverlapMatrix(count, std::move(full));
}

} // namespace sphtrap
