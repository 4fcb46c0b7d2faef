#include "sphtrap/dynamics.hpp"

#include "sphtrap/errors.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

namespace sphtrap {

using std::numbers::pi;

// ---------------------------------------------------------------------------
// TrapGeometry

TrapGeometry::TrapGeometry(double alpha) : alpha_(alpha)
{
    if (!std::isfinite(alpha))
        throw DomainError("wall velocity parameter alpha must be finite");
}

bool TrapGeometry::valid_time(double t) const noexcept
{
    return std::isfinite(t) && 1.0 + 2.0 * alpha_ * t > kMinWallRatio;
}

void TrapGeometry::check_time(double t) const
{
    if (!valid_time(t)) {
        std::ostringstream msg;
        msg.precision(17);
        msg << "time t=" << t << " gives wall radius " << 1.0 + 2.0 * alpha_ * t << " <= " << kMinWallRatio
            << " (alpha=" << alpha_ << ")";
        throw DomainError(msg.str());
    }
}

double TrapGeometry::radius(double t) const
{
    check_time(t);
    return 1.0 + 2.0 * alpha_ * t;
}

double TrapGeometry::tau(double t) const
{
    return t / radius(t);
}

double TrapGeometry::time_at_xi(double xi) const
{
    if (xi == 1.0)
        return 0.0;
    if (alpha_ == 0.0)
        throw DomainError("a static wall never changes its radius");
    if (!(xi > kMinWallRatio) || !std::isfinite(xi))
        throw DomainError("wall radius must exceed " + std::to_string(kMinWallRatio));
    return (xi - 1.0) / (2.0 * alpha_);
}

// ---------------------------------------------------------------------------
// Modes

double mode_phase(const TrapGeometry& geom, double zero, double t)
{
    return zero * zero * t / (2.0 * geom.radius(t));
}

namespace {

double checked_scaled_radius(const TrapGeometry& geom, double r, double t, double& L)
{
    L = geom.radius(t);
    if (!(r >= 0.0) || r > L)
        throw DomainError("radius r=" + std::to_string(r) + " outside the sphere of radius " + std::to_string(L));
    return r / L;
}

} // namespace

double instantaneous_radial(const TrapGeometry& geom, const BesselZeroTable& table, int l, int n, double r, double t)
{
    double L = 0.0;
    const double s = checked_scaled_radius(geom, r, t, L);
    return std::sqrt(2.0 / (L * L * L)) * table.inverse_norm(l, n) * sph_bessel_j(l, table.zero(l, n) * s);
}

complex instantaneous_mode(const TrapGeometry& geom, const BesselZeroTable& table, const ModeIndex& mode, double r,
                           double theta, double phi, double t)
{
    return instantaneous_radial(geom, table, mode.l, mode.n, r, t) * sph_harmonic(mode.l, mode.m, theta, phi);
}

double instantaneous_energy(const TrapGeometry& geom, const BesselZeroTable& table, int l, int n, double t)
{
    const double x = table.zero(l, n);
    const double xi = geom.xi(t);
    return x * x / (2.0 * xi * xi);
}

complex exact_radial(const TrapGeometry& geom, const BesselZeroTable& table, int l, int n, double r, double t)
{
    const double u = instantaneous_radial(geom, table, l, n, r, t);
    const double L = geom.radius(t);
    const double s = r / L;
    const double phase = geom.alpha() * L * s * s - mode_phase(geom, table.zero(l, n), t);
    return u * std::polar(1.0, phase);
}

complex exact_mode(const TrapGeometry& geom, const BesselZeroTable& table, const ModeIndex& mode, double r,
                   double theta, double phi, double t)
{
    return exact_radial(geom, table, mode.l, mode.n, r, t) * sph_harmonic(mode.l, mode.m, theta, phi);
}

// ---------------------------------------------------------------------------
// SpectralState

SpectralState::SpectralState(TrapGeometry geometry, int l, int m, std::vector<complex> coeffs, double input_norm)
    : geometry_(geometry), l_(l), m_(m), coeffs_(std::move(coeffs)), norm_(0.0), input_norm_(input_norm)
{
    if (l < 0 || m < -l || m > l)
        throw DomainError("spectral state needs |m| <= l");
    if (coeffs_.empty())
        throw DomainError("spectral state needs at least one coefficient");
    for (const auto& c : coeffs_)
        norm_ += std::norm(c);
}

complex SpectralState::radial_value(const BesselZeroTable& table, double r, double t) const
{
    double L = 0.0;
    const double s = checked_scaled_radius(geometry_, r, t, L);
    complex sum = 0.0;
    for (int n = 1; n <= n_trunc(); ++n) {
        const double x = table.zero(l_, n);
        sum += coeffs_[n - 1] * (table.inverse_norm(l_, n) * sph_bessel_j(l_, x * s)) *
               std::polar(1.0, -mode_phase(geometry_, x, t));
    }
    return std::sqrt(2.0 / (L * L * L)) * std::polar(1.0, geometry_.alpha() * L * s * s) * sum;
}

// ---------------------------------------------------------------------------
// Projections

namespace {

void check_deficit(const SpectralState& state, double max_deficit)
{
    if (state.norm_deficit() > max_deficit) {
        std::ostringstream msg;
        msg << "spectral truncation at N=" << state.n_trunc() << " keeps norm " << state.norm()
            << " (deficit " << state.norm_deficit() << " > " << max_deficit << "); raise N_trunc";
        throw TruncationError(msg.str(), state.norm_deficit());
    }
}

void check_table(const BesselZeroTable& table, int l, int n_trunc)
{
    if (n_trunc < 1)
        throw DomainError("N_trunc must be at least 1");
    if (!table.contains(l, n_trunc))
        throw DomainError("zero table too small for l=" + std::to_string(l) + ", N_trunc=" + std::to_string(n_trunc));
}

} // namespace

SpectralState project_eigenstate_initial(const TrapGeometry& geom, const BesselZeroTable& table,
                                         const ModeIndex& init, int n_trunc, const ProjectionOptions& options)
{
    check_table(table, init.l, n_trunc);
    if (n_trunc < init.n)
        throw DomainError("N_trunc must include the initial radial quantum number");
    const auto row = overlap_row(init.l, init.n, n_trunc, geom.alpha(), options.quadrature, table);
    std::vector<complex> c(n_trunc);
    const double inv_init = table.inverse_norm(init.l, init.n);
    for (int k = 1; k <= n_trunc; ++k)
        c[k - 1] = 2.0 * inv_init * table.inverse_norm(init.l, k) * row[k - 1];
    SpectralState state(geom, init.l, init.m, std::move(c));
    check_deficit(state, options.max_norm_deficit);
    return state;
}

int truncation_estimate(const TrapGeometry& geom, double init_zero)
{
    return static_cast<int>(std::ceil((init_zero + 2.0 * std::abs(geom.alpha())) / pi)) + 20;
}

SpectralState project_eigenstate_converged(const TrapGeometry& geom, const BesselZeroTable& table,
                                           const ModeIndex& init, double target_deficit,
                                           const QuadratureSettings& quadrature)
{
    ProjectionOptions options;
    options.max_norm_deficit = std::numeric_limits<double>::infinity();
    options.quadrature = quadrature;
    int n = std::min(table.n_max(), std::max(init.n, truncation_estimate(geom, table.zero(init.l, init.n))));
    for (;;) {
        auto state = project_eigenstate_initial(geom, table, init, n, options);
        if (state.norm_deficit() <= target_deficit)
            return state;
        if (n == table.n_max()) {
            std::ostringstream msg;
            msg << "zero table (n_max=" << table.n_max() << ") too small to reach norm deficit " << target_deficit
                << " (got " << state.norm_deficit() << ")";
            throw TruncationError(msg.str(), state.norm_deficit());
        }
        n = std::min(table.n_max(), 2 * n);
    }
}

SpectralState project_general_initial(const TrapGeometry& geom, const BesselZeroTable& table, int l, int m,
                                      const std::function<complex(double)>& radial, int n_trunc,
                                      const ProjectionOptions& options)
{
    check_table(table, l, n_trunc);
    const auto rule = gauss_legendre(options.quadrature.points_per_panel);
    const int panels = 2 * overlap_panel_count(2.0 * table.zero(l, n_trunc) + std::abs(geom.alpha()), options.quadrature);

    double norm = 0.0;
    std::vector<complex> c(n_trunc, 0.0);
    const double width = 1.0 / panels;
    for (int p = 0; p < panels; ++p) {
        const double mid = (p + 0.5) * width;
        for (std::size_t q = 0; q < rule.size(); ++q) {
            const double r = mid + 0.5 * width * rule.nodes[q];
            const double w = 0.5 * width * rule.weights[q] * r * r;
            const complex psi = radial(r);
            norm += w * std::norm(psi);
            for (int k = 1; k <= n_trunc; ++k)
                c[k - 1] += w * std::conj(exact_radial(geom, table, l, k, r, 0.0)) * psi;
        }
    }
    if (std::abs(norm - 1.0) > 1e-6)
        throw DomainError("initial radial data has norm " + std::to_string(norm) + ", expected 1 within 1e-6");
    SpectralState state(geom, l, m, std::move(c), norm);
    check_deficit(state, options.max_norm_deficit);
    return state;
}

SpectralState project_general_initial(const TrapGeometry& geom, const BesselZeroTable& table, int l, int m,
                                      std::span<const complex> radial_samples, int n_trunc,
                                      const ProjectionOptions& options)
{
    check_table(table, l, n_trunc);
    const std::size_t size = radial_samples.size();
    if (size < 3 || size % 2 == 0)
        throw DomainError("Simpson projection needs an odd number (>= 3) of radial samples");
    const double h = 1.0 / static_cast<double>(size - 1);

    double norm = 0.0;
    std::vector<complex> c(n_trunc, 0.0);
    for (std::size_t k = 0; k < size; ++k) {
        const double r = static_cast<double>(k) * h;
        const double simpson = (k == 0 || k == size - 1) ? 1.0 : (k % 2 ? 4.0 : 2.0);
        const double w = simpson * h / 3.0 * r * r;
        const complex psi = radial_samples[k];
        norm += w * std::norm(psi);
        if (w == 0.0)
            continue;
        for (int n = 1; n <= n_trunc; ++n)
            c[n - 1] += w * std::conj(exact_radial(geom, table, l, n, r, 0.0)) * psi;
    }
    if (std::abs(norm - 1.0) > 1e-6)
        throw DomainError("initial radial data has norm " + std::to_string(norm) + ", expected 1 within 1e-6");
    SpectralState state(geom, l, m, std::move(c), norm);
    check_deficit(state, options.max_norm_deficit);
    return state;
}

// ---------------------------------------------------------------------------
// Instantaneous coefficients and energy

double InstantCoeffs::captured_norm() const noexcept
{
    double s = 0.0;
    for (const auto& v : b)
        s += std::norm(v);
    return s;
}

InstantCoeffs instantaneous_coeffs(const SpectralState& state, const BesselZeroTable& table, double t,
                                   const QuadratureSettings& quadrature)
{
    const auto& geom = state.geometry();
    const int l = state.l();
    const int n = state.n_trunc();
    const double beta = geom.alpha() * geom.xi(t);
    const auto overlap = overlap_matrix(l, n, beta, quadrature, table);

    std::vector<complex> weighted(n);
    for (int k = 1; k <= n; ++k)
        weighted[k - 1] = state.coeff(k) * table.inverse_norm(l, k) *
                          std::polar(1.0, -mode_phase(geom, table.zero(l, k), t));

    InstantCoeffs out;
    out.t = t;
    out.b.resize(n);
    for (int row = 1; row <= n; ++row) {
        complex acc = 0.0;
        for (int k = 1; k <= n; ++k)
            acc += weighted[k - 1] * std::conj(overlap(row, k));
        out.b[row - 1] = 2.0 * table.inverse_norm(l, row) * acc;
    }
    out.truncation_tail = std::norm(out.b.back());
    return out;
}

InstantCoeffs reproject_coeffs(const SpectralState& state, const BesselZeroTable& table, double t,
                               int panels_per_mode)
{
    const auto& geom = state.geometry();
    const int l = state.l();
    const int n = state.n_trunc();
    const double L = geom.radius(t);
    const QuadratureSettings q;
    const auto rule = gauss_legendre(q.points_per_panel);
    const int panels =
        std::max(1, panels_per_mode) * overlap_panel_count(2.0 * table.zero(l, n) + std::abs(geom.alpha() * L), q);

    InstantCoeffs out;
    out.t = t;
    out.b.assign(n, 0.0);
    const double width = L / panels;
    for (int p = 0; p < panels; ++p) {
        const double mid = (p + 0.5) * width;
        for (std::size_t k = 0; k < rule.size(); ++k) {
            const double r = mid + 0.5 * width * rule.nodes[k];
            const complex psi = state.radial_value(table, r, t);
            const double w = 0.5 * width * rule.weights[k] * r * r;
            for (int row = 1; row <= n; ++row)
                out.b[row - 1] += w * instantaneous_radial(geom, table, l, row, r, t) * psi;
        }
    }
    out.truncation_tail = std::norm(out.b.back());
    return out;
}

EnergyExpectation energy_from_coeffs(const InstantCoeffs& coeffs, const SpectralState& state,
                                     const BesselZeroTable& table)
{
    const int l = state.l();
    const double x1 = table.zero(l, 1);
    double weight = 0.0;
    double ratio = 0.0;
    for (std::size_t k = 0; k < coeffs.b.size(); ++k) {
        const double p = std::norm(coeffs.b[k]);
        const double x = table.zero(l, static_cast<int>(k) + 1);
        weight += p;
        ratio += p * (x / x1) * (x / x1);
    }
    EnergyExpectation e;
    e.captured_norm = weight;
    e.ratio = ratio / weight;
    e.energy = e.ratio * instantaneous_energy(state.geometry(), table, l, 1, coeffs.t);
    return e;
}

EnergyExpectation energy_expectation(const SpectralState& state, const BesselZeroTable& table, double t,
                                     const QuadratureSettings& quadrature)
{
    return energy_from_coeffs(instantaneous_coeffs(state, table, t, quadrature), state, table);
}

// ---------------------------------------------------------------------------
// Observation frame and densities

ObservationFrame observation_frame(const TrapGeometry& geom, const BesselZeroTable& table, const ModeIndex& mode,
                                   double r0)
{
    if (!(r0 > 0.0) || !std::isfinite(r0))
        throw DomainError("observation radius must be positive");
    const double x = table.zero(mode.l, mode.n);
    ObservationFrame f;
    f.mode = mode;
    f.lambda = 2.0 * pi / x;
    f.nu = x * x / (4.0 * pi);
    f.alpha_ln = 0.5 * x;
    f.v_ln = x;
    f.r0 = r0;
    f.eta0 = r0 / f.lambda;
    f.T1 = f.nu * (r0 - 1.0) / f.v_ln;
    f.T2 = f.nu * (r0 + 1.0) / f.v_ln;
    const double u = geom.wall_velocity();
    f.t_e = u == 0.0 ? std::numeric_limits<double>::infinity() : 1.0 / u;
    f.t_i = 1.0 / f.v_ln;
    f.t_obs = u == 0.0 ? std::numeric_limits<double>::infinity() : (r0 - 1.0) / u;
    return f;
}

std::vector<double> radial_density_profile(const SpectralState& state, const BesselZeroTable& table,
                                           const ObservationFrame& frame, double t, std::span<const double> eta,
                                           Execution exec)
{
    const double L = state.geometry().radius(t);
    for (double e : eta)
        if (!(e >= 0.0) || frame.lambda * e > L * (1.0 + 1e-12))
            throw DomainError("density grid point eta=" + std::to_string(e) + " lies outside the wall");
    const double lambda3 = frame.lambda * frame.lambda * frame.lambda;
    std::vector<double> rho(eta.size());
    parallel_for(eta.size(), exec, [&](std::size_t i) {
        const double r = std::min(frame.lambda * eta[i], L);
        rho[i] = lambda3 * eta[i] * eta[i] * std::norm(state.radial_value(table, r, t));
    });
    return rho;
}

std::vector<double> radial_density_history(const SpectralState& state, const BesselZeroTable& table,
                                           const ObservationFrame& frame, std::span<const double> T,
                                           Execution exec)
{
    const auto& geom = state.geometry();
    for (double v : T)
        geom.check_time(v / frame.nu);
    const double lambda3 = frame.lambda * frame.lambda * frame.lambda;
    std::vector<double> rho(T.size());
    parallel_for(T.size(), exec, [&](std::size_t i) {
        const double t = T[i] / frame.nu;
        if (geom.radius(t) <= frame.r0) {
            rho[i] = 0.0;
            return;
        }
        rho[i] = lambda3 * frame.eta0 * frame.eta0 * std::norm(state.radial_value(table, frame.r0, t));
    });
    return rho;
}

} // namespace sphtrap
