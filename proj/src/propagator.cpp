#include "sphtrap/propagator.hpp"

#include "sphtrap/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace sphtrap {

namespace {

constexpr double kPi = std::numbers::pi;

void check_modes(const BesselZeroTable& table, int l, int n_max)
{
    if (n_max < 1)
        throw DomainError("kernel truncation n_max must be >= 1");
    if (!table.contains(l, n_max))
        throw DomainError("zero table does not cover l=" + std::to_string(l) + ", n=" + std::to_string(n_max));
}

/// sum_m Y_lm(a) Y*_lm(b) by explicit summation.
complex angular_explicit(int l, const SpacetimePoint& a, const SpacetimePoint& b)
{
    complex sum = 0.0;
    for (int m = -l; m <= l; ++m)
        sum += sph_harmonic(l, m, a.theta, a.phi) * std::conj(sph_harmonic(l, m, b.theta, b.phi));
    return sum;
}

/// (2l + 1) P_l(cos gamma) / (4 pi).
double angular_addition(int l, const SpacetimePoint& a, const SpacetimePoint& b)
{
    double c = std::cos(a.theta) * std::cos(b.theta) + std::sin(a.theta) * std::sin(b.theta) * std::cos(a.phi - b.phi);
    c = std::clamp(c, -1.0, 1.0);
    return (2 * l + 1) * std::legendre(static_cast<unsigned>(l), c) / (4.0 * kPi);
}

} // namespace

KernelSample radial_kernel(const TrapGeometry& geom, const BesselZeroTable& table, int l, double r, double t,
                           double r_prime, double t_prime, int n_max)
{
    check_modes(table, l, n_max);
    // Psi(t) Psi*(t') with the common factors pulled out. The mode phases
    // reach ~1e5 rad at n ~ 200, so their difference x^2 (t - t') / (2 L L')
    // is formed directly rather than by subtracting two rounded phases.
    const double L = geom.radius(t);
    const double Lp = geom.radius(t_prime);
    const double dtau = (t - t_prime) / (2.0 * L * Lp);
    complex sum = 0.0;
    for (int n = 1; n <= n_max; ++n) {
        const double x = table.zero(l, n);
        sum += std::polar(instantaneous_radial(geom, table, l, n, r, t) *
                              instantaneous_radial(geom, table, l, n, r_prime, t_prime),
                          -x * x * dtau);
    }
    const complex chirp = std::polar(1.0, geom.alpha() * (r * r / L - r_prime * r_prime / Lp));
    return {chirp * sum, l, n_max, r, t, r_prime, t_prime};
}

KernelSample full_kernel(const TrapGeometry& geom, const BesselZeroTable& table, const SpacetimePoint& x,
                         const SpacetimePoint& x_prime, int l_max, int n_max, AngularSum angular)
{
    if (l_max < 0)
        throw DomainError("l_max must be >= 0");
    complex sum = 0.0;
    for (int l = 0; l <= l_max; ++l) {
        const complex radial = radial_kernel(geom, table, l, x.r, x.t, x_prime.r, x_prime.t, n_max).value;
        const complex ang = angular == AngularSum::explicit_m ? angular_explicit(l, x, x_prime)
                                                              : complex(angular_addition(l, x, x_prime));
        sum += radial * ang;
    }
    return {sum, l_max, n_max, x.r, x.t, x_prime.r, x_prime.t};
}

complex kernel_1d(const TrapGeometry& geom, double x, double t, double x_prime, double t_prime, int n_max)
{
    if (n_max < 1)
        throw DomainError("kernel truncation n_max must be >= 1");
    const double L = geom.radius(t);
    const double Lp = geom.radius(t_prime);
    if (!(x >= 0.0) || x > L || !(x_prime >= 0.0) || x_prime > Lp)
        throw DomainError("kernel_1d: points must lie inside the well at their times");

    const double alpha = geom.alpha();
    const double u = geom.wall_velocity();
    const complex chirp = std::polar(1.0, alpha * (x * x / L - x_prime * x_prime / Lp));
    complex sum = 0.0;
    for (int n = 1; n <= n_max; ++n) {
        const double k2 = n * n * kPi * kPi;
        const double phase = alpha == 0.0 ? -k2 * (t - t_prime) / 2.0 : k2 / (2.0 * u) * (1.0 / L - 1.0 / Lp);
        sum += std::polar(1.0, phase) * (std::sin(n * kPi * x / L) * std::sin(n * kPi * x_prime / Lp));
    }
    return 2.0 / std::sqrt(L * Lp) * chirp * sum;
}

RadialQuadrature propagation_quadrature(const TrapGeometry& geom, double t_prime, int n_max)
{
    if (n_max < 1)
        throw DomainError("kernel truncation n_max must be >= 1");
    constexpr int kPoints = 16;
    const int total = std::max(64, 4 * n_max);
    const int panels = (total + kPoints - 1) / kPoints;
    const double L = geom.radius(t_prime);
    const auto rule = gauss_legendre(kPoints);

    RadialQuadrature q;
    q.nodes.reserve(static_cast<std::size_t>(panels * kPoints));
    q.weights.reserve(q.nodes.capacity());
    for (int k = 0; k < panels; ++k) {
        const double a = L * std::sin(kPi * k / (2.0 * panels));
        const double b = k + 1 == panels ? L : L * std::sin(kPi * (k + 1) / (2.0 * panels));
        const double half = 0.5 * (b - a);
        const double mid = 0.5 * (a + b);
        for (std::size_t i = 0; i < rule.size(); ++i) {
            q.nodes.push_back(mid + half * rule.nodes[i]);
            q.weights.push_back(half * rule.weights[i]);
        }
    }
    return q;
}

PropagatedState::PropagatedState(TrapGeometry geometry, int l, int m, double t_prime, double t,
                                 std::vector<complex> amplitudes, double input_norm)
    : geometry_(geometry), l_(l), m_(m), t_prime_(t_prime), t_(t), amplitudes_(std::move(amplitudes)),
      input_norm_(input_norm), captured_norm_(0.0)
{
    if (l < 0 || m < -l || m > l)
        throw DomainError("propagated state needs |m| <= l");
    if (amplitudes_.empty())
        throw DomainError("propagated state needs at least one amplitude");
    geometry_.check_time(t);
    for (const auto& a : amplitudes_)
        captured_norm_ += std::norm(a);
}

SpectralState PropagatedState::as_spectral_state() const
{
    return SpectralState(geometry_, l_, m_, amplitudes_, input_norm_);
}

complex PropagatedState::evaluate(const BesselZeroTable& table, double r) const
{
    return as_spectral_state().radial_value(table, r, t_);
}

std::vector<complex> PropagatedState::values(const BesselZeroTable& table, std::span<const double> r,
                                             Execution exec) const
{
    const SpectralState state = as_spectral_state();
    std::vector<complex> out(r.size());
    parallel_for(r.size(), exec, [&](std::size_t i) { out[i] = state.radial_value(table, r[i], t_); });
    return out;
}

PropagatedState propagate(const TrapGeometry& geom, const BesselZeroTable& table, int l, int m,
                          std::span<const complex> samples, const RadialQuadrature& quadrature, double t_prime,
                          double t, int n_max)
{
    check_modes(table, l, n_max);
    geom.check_time(t_prime);
    geom.check_time(t);
    if (samples.size() != quadrature.nodes.size() || quadrature.weights.size() != quadrature.nodes.size())
        throw DomainError("propagate: samples must match the quadrature nodes");
    const double Lp = geom.radius(t_prime);

    double input_norm = 0.0;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const double r = quadrature.nodes[i];
        if (!(r >= 0.0) || r > Lp)
            throw DomainError("propagate: quadrature node outside the sphere at t'");
        input_norm += quadrature.weights[i] * r * r * std::norm(samples[i]);
    }

    // The kernel factorises over modes, so its action is the projection onto
    // each exact mode at t' followed by that mode's evolution to t.
    std::vector<complex> amplitudes(static_cast<std::size_t>(n_max), 0.0);
    for (int n = 1; n <= n_max; ++n) {
        complex acc = 0.0;
        for (std::size_t i = 0; i < samples.size(); ++i) {
            const double r = quadrature.nodes[i];
            acc += quadrature.weights[i] * r * r * std::conj(exact_radial(geom, table, l, n, r, t_prime)) * samples[i];
        }
        amplitudes[static_cast<std::size_t>(n - 1)] = acc;
    }
    return PropagatedState(geom, l, m, t_prime, t, std::move(amplitudes), input_norm);
}

PropagatedState propagate(const TrapGeometry& geom, const BesselZeroTable& table, int l, int m,
                          const std::function<complex(double)>& radial, double t_prime, double t, int n_max)
{
    const auto q = propagation_quadrature(geom, t_prime, n_max);
    std::vector<complex> samples(q.nodes.size());
    for (std::size_t i = 0; i < samples.size(); ++i)
        samples[i] = radial(q.nodes[i]);
    return propagate(geom, table, l, m, samples, q, t_prime, t, n_max);
}

} // namespace sphtrap
