#pragma once

#include "sphtrap/specfun.hpp"

#include <complex>
#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace sphtrap {

using complex = std::complex<double>;

/// Composite Gauss-Legendre settings for the overlap integrals.
struct QuadratureSettings {
    int points_per_panel = 16;
    int min_panels = 8;
    double refinement_tolerance = 1e-11;
    int max_refinements = 12;

    /// Throws DomainError if points_per_panel < 4 or the tolerance is not positive.
    void validate() const;
};

/// One overlap integral
///   I = int_0^1 s^2 exp(-i beta s^2) j_l(x_{l,n_row} s) j_l(x_{l,n_col} s) ds.
/// beta is the product alpha * xi(t); the integrand depends on nothing else.
struct OverlapRequest {
    int l = 0;
    int n_row = 1;
    int n_col = 1;
    double beta = 0.0;
};

/// Gauss-Legendre nodes and weights on [-1, 1].
struct GaussLegendreRule {
    std::vector<double> nodes;
    std::vector<double> weights;

    std::size_t size() const noexcept { return nodes.size(); }
};

/// Nodes by Newton iteration on P_n from the Chebyshev-like initial guesses.
GaussLegendreRule gauss_legendre(int points);

/// Fixed rule applied on `panel_count` equal panels of [a, b] and summed.
template <class F>
complex composite_gauss(int panel_count, const GaussLegendreRule& rule, F&& integrand, double a = 0.0,
                        double b = 1.0)
{
    const double width = (b - a) / panel_count;
    const double half = 0.5 * width;
    complex total = 0.0;
    for (int p = 0; p < panel_count; ++p) {
        const double mid = a + (p + 0.5) * width;
        complex panel = 0.0;
        for (std::size_t k = 0; k < rule.size(); ++k)
            panel += rule.weights[k] * complex(integrand(mid + half * rule.nodes[k]));
        total += half * panel;
    }
    return total;
}

using Integrand = std::function<complex(double)>;

/// composite_gauss on [0, 1] with a freshly built `points_per_panel` rule.
/// Throws DomainError if panel_count < 1 or points_per_panel < 1.
complex composite_gauss(int panel_count, int points_per_panel, const Integrand& integrand);

/// Midpoint rule on [0, 1]. Deliberately naive; an independent check on the
/// Gauss engine, never used on a production path.
complex riemann_oracle(const Integrand& integrand, long point_count);

/// Panels for an integrand whose fastest factor has wavenumber `wavenumber`:
/// max(min_panels, ceil(wavenumber / pi)).
int overlap_panel_count(double wavenumber, const QuadratureSettings& settings);

/// I for one request, refined by panel doubling until two successive
/// estimates agree to the tolerance. Throws ConvergenceError otherwise.
complex mode_overlap_integral(const OverlapRequest& req, const QuadratureSettings& settings,
                              const BesselZeroTable& table);

/// I_{l, n_row, n} for n = 1..count, sharing one set of nodes.
std::vector<complex> overlap_row(int l, int n_row, int count, double beta, const QuadratureSettings& settings,
                                 const BesselZeroTable& table);

/// Dense symmetric matrix of overlap integrals I_{l, i, j}, 1 <= i, j <= count.
class OverlapMatrix {
  public:
    OverlapMatrix(int count, std::vector<complex> values) : count_(count), values_(std::move(values)) {}

    int count() const noexcept { return count_; }
    /// 1-based indices, as for radial quantum numbers.
    complex operator()(int n_row, int n_col) const
    {
        return values_[static_cast<std::size_t>(n_row - 1) * count_ + (n_col - 1)];
    }

  private:
    int count_;
    std::vector<complex> values_;
};

OverlapMatrix overlap_matrix(int l, int count, double beta, const QuadratureSettings& settings,
                             const BesselZeroTable& table);

} // namespace sphtrap
