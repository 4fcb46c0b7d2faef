#pragma once

#include "sphtrap/execution.hpp"
#include "sphtrap/oscint.hpp"
#include "sphtrap/specfun.hpp"

#include <functional>
#include <span>
#include <vector>

// Natural units throughout: hbar = mu = a = 1. Lengths are in units of the
// initial radius, times in mu a^2 / hbar, energies in hbar^2 / (mu a^2), and the
// wall moves with velocity u = 2 alpha.

namespace sphtrap {

/// Queries with xi(t) <= this value are rejected (energies grow as 1/xi^2).
inline constexpr double kMinWallRatio = 0.05;

/// Hard sphere whose radius changes uniformly, L(t) = 1 + 2 alpha t.
class TrapGeometry {
  public:
    explicit TrapGeometry(double alpha);

    double alpha() const noexcept { return alpha_; }
    double wall_velocity() const noexcept { return 2.0 * alpha_; }

    bool valid_time(double t) const noexcept;
    /// Throws DomainError unless xi(t) > kMinWallRatio.
    void check_time(double t) const;

    /// L(t); equal to xi(t) because a = 1.
    double radius(double t) const;
    double xi(double t) const { return radius(t); }
    /// tau(t) = int_0^t dt'/L^2(t') = t / xi(t).
    double tau(double t) const;
    /// Time at which the radius equals `xi`; DomainError for a static wall or
    /// an unreachable radius.
    double time_at_xi(double xi) const;

  private:
    double alpha_;
};

/// Dynamical phase theta(t) = x^2 t / (2 xi(t)) of the mode with zero x.
/// Equal to x^2 (1 - 1/xi) / (4 alpha) but finite at alpha = 0.
double mode_phase(const TrapGeometry& geom, double zero, double t);

/// Radial part sqrt(2/L^3) j_l(x r/L) / |j_{l+1}(x)| of the instantaneous
/// eigenfunction. DomainError for r outside [0, L(t)].
double instantaneous_radial(const TrapGeometry& geom, const BesselZeroTable& table, int l, int n, double r, double t);

/// u_{lnm}(r, theta, phi, t).
complex instantaneous_mode(const TrapGeometry& geom, const BesselZeroTable& table, const ModeIndex& mode, double r,
                           double theta, double phi, double t);

/// E_{ln}(t) = x_{ln}^2 / (2 xi(t)^2).
double instantaneous_energy(const TrapGeometry& geom, const BesselZeroTable& table, int l, int n, double t);

/// Radial part of the exact moving-wall solution,
/// exp[i alpha xi (r/L)^2 - i theta_{ln}(t)] times instantaneous_radial.
complex exact_radial(const TrapGeometry& geom, const BesselZeroTable& table, int l, int n, double r, double t);

/// Psi_{lnm}(r, theta, phi, t).
complex exact_mode(const TrapGeometry& geom, const BesselZeroTable& table, const ModeIndex& mode, double r,
                   double theta, double phi, double t);

/// Time-independent expansion of a state over the exact moving-wall modes of
/// one (l, m) channel. Immutable.
class SpectralState {
  public:
    SpectralState(TrapGeometry geometry, int l, int m, std::vector<complex> coeffs, double input_norm = 1.0);

    const TrapGeometry& geometry() const noexcept { return geometry_; }
    int l() const noexcept { return l_; }
    int m() const noexcept { return m_; }
    int n_trunc() const noexcept { return static_cast<int>(coeffs_.size()); }
    /// c_{l n m} for n = 1..n_trunc (stored 0-based).
    std::span<const complex> coeffs() const noexcept { return coeffs_; }
    complex coeff(int n) const { return coeffs_.at(static_cast<std::size_t>(n - 1)); }

    /// Sum of |c_n|^2 over the retained modes.
    double norm() const noexcept { return norm_; }
    /// input_norm - norm: weight lost to the truncation.
    double norm_deficit() const noexcept { return input_norm_ - norm_; }
    /// Norm of the data the state was projected from (1 for eigenstates).
    double input_norm() const noexcept { return input_norm_; }

    /// R(r, t) = sum_n c_n Psi_n(r, t) (radial factor only).
    complex radial_value(const BesselZeroTable& table, double r, double t) const;

  private:
    TrapGeometry geometry_;
    int l_;
    int m_;
    std::vector<complex> coeffs_;
    double norm_;
    double input_norm_;
};

struct ProjectionOptions {
    /// Largest tolerated 1 - sum |c|^2 before TruncationError.
    double max_norm_deficit = 1e-4;
    QuadratureSettings quadrature{};
};

/// Default truncation for general use; the figure commands pass 10 or 15.
inline constexpr int kDefaultTruncation = 40;

/// c_{n'} = 2 I_{l n n'}(alpha) / (|j_{l+1}(x_{ln})| |j_{l+1}(x_{ln'})|) for an
/// initial eigenstate u_{lnm}(r, 0). TruncationError if the retained norm
/// falls short of 1 by more than options.max_norm_deficit.
SpectralState project_eigenstate_initial(const TrapGeometry& geom, const BesselZeroTable& table,
                                         const ModeIndex& init, int n_trunc, const ProjectionOptions& options = {});

/// Smallest truncation (searched by doubling from a bandwidth estimate) whose
/// norm deficit is at most `target_deficit`. The table must hold enough zeros.
SpectralState project_eigenstate_converged(const TrapGeometry& geom, const BesselZeroTable& table,
                                           const ModeIndex& init, double target_deficit,
                                           const QuadratureSettings& quadrature = {});

/// Bandwidth-based first guess for the truncation of an eigenstate projection.
int truncation_estimate(const TrapGeometry& geom, double init_zero);

/// c_{n'} = int_0^1 r^2 Psi*_{n'}(r, 0) psi(r) dr for radial data psi given
/// as a function on [0, 1]. DomainError if |norm - 1| > 1e-6.
SpectralState project_general_initial(const TrapGeometry& geom, const BesselZeroTable& table, int l, int m,
                                      const std::function<complex(double)>& radial, int n_trunc,
                                      const ProjectionOptions& options = {});

/// Same, for samples on the uniform grid r_k = k / (size - 1), k = 0..size-1,
/// integrated by composite Simpson (size must be odd and >= 3).
SpectralState project_general_initial(const TrapGeometry& geom, const BesselZeroTable& table, int l, int m,
                                      std::span<const complex> radial_samples, int n_trunc,
                                      const ProjectionOptions& options = {});

/// Coefficients b_{n'}(t) over the instantaneous eigenfunctions.
struct InstantCoeffs {
    std::vector<complex> b;
    double t = 0.0;
    /// |b_N|^2 of the last retained coefficient, a proxy for the first omitted one.
    double truncation_tail = 0.0;

    double captured_norm() const noexcept;
    double probability(int n) const { return std::norm(b.at(static_cast<std::size_t>(n - 1))); }
};

/// b_{n'}(t) = 2/|j_{l+1}(x_{n'})| sum_{n''} c_{n''} e^{-i theta_{n''}(t)} I*_{n' n''}(alpha xi(t)) / |j_{l+1}(x_{n''})|.
InstantCoeffs instantaneous_coeffs(const SpectralState& state, const BesselZeroTable& table, double t,
                                   const QuadratureSettings& quadrature = {});

/// b_{n'}(t) by direct radial quadrature of u*_{n'}(r, t) Psi(r, t) with the
/// assembled wavefunction; independent of the overlap-integral route.
InstantCoeffs reproject_coeffs(const SpectralState& state, const BesselZeroTable& table, double t,
                               int panels_per_mode = 2);

struct EnergyExpectation {
    /// <E(t)> = sum |b|^2 E_{l n'}(t) / sum |b|^2.
    double energy = 0.0;
    /// <E(t)> / E_{l 1}(t) = sum |b|^2 (x_{l n'} / x_{l 1})^2 / sum |b|^2.
    double ratio = 0.0;
    double captured_norm = 0.0;
};

EnergyExpectation energy_from_coeffs(const InstantCoeffs& coeffs, const SpectralState& state,
                                     const BesselZeroTable& table);
EnergyExpectation energy_expectation(const SpectralState& state, const BesselZeroTable& table, double t,
                                     const QuadratureSettings& quadrature = {});

/// Dimensionless scalings used when presenting a mode's dynamics.
struct ObservationFrame {
    ModeIndex mode;
    double lambda = 0.0;   ///< 2 pi / x_{ln}
    double nu = 0.0;       ///< E_{ln}(0) / 2 pi = x_{ln}^2 / (4 pi)
    double alpha_ln = 0.0; ///< x_{ln} / 2
    double v_ln = 0.0;     ///< classical speed x_{ln}
    double r0 = 0.0;       ///< observation radius
    double eta0 = 0.0;     ///< r0 / lambda
    double T1 = 0.0;       ///< nu (r0 - 1) / v_ln: flight time from the near edge
    double T2 = 0.0;       ///< nu (r0 + 1) / v_ln: flight time from the far edge
    double t_e = 0.0;      ///< 1 / u (infinite for a static wall)
    double t_i = 0.0;      ///< 1 / v_ln
    double t_obs = 0.0;    ///< (r0 - 1) / u, when the wall reaches r0
};

ObservationFrame observation_frame(const TrapGeometry& geom, const BesselZeroTable& table, const ModeIndex& mode,
                                   double r0);

/// rho = lambda^3 eta^2 |R(lambda eta, t)|^2 on an eta grid at time t.
/// DomainError for grid points outside the wall.
std::vector<double> radial_density_profile(const SpectralState& state, const BesselZeroTable& table,
                                           const ObservationFrame& frame, double t, std::span<const double> eta,
                                           Execution exec = Execution::serial);

/// rho at eta0 against T = nu t. Exactly 0 while the wall has not passed r0.
std::vector<double> radial_density_history(const SpectralState& state, const BesselZeroTable& table,
                                           const ObservationFrame& frame, std::span<const double> T,
                                           Execution exec = Execution::serial);

} // namespace sphtrap
