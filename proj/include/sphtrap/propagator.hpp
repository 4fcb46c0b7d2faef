#pragma once

#include "sphtrap/dynamics.hpp"
#include "sphtrap/execution.hpp"

#include <functional>
#include <span>
#include <vector>

namespace sphtrap {

/// Default number of radial modes kept in kernel sums.
inline constexpr int kDefaultKernelModes = 200;

/// One truncated kernel value K(r, t; r', t').
struct KernelSample {
    complex value;
    int l_max = 0;
    int n_max = 0;
    double r = 0.0;
    double t = 0.0;
    double r_prime = 0.0;
    double t_prime = 0.0;
};

/// sum_{n <= n_max} R_{ln}(r, t) R*_{ln}(r', t') over the exact radial modes.
KernelSample radial_kernel(const TrapGeometry& geom, const BesselZeroTable& table, int l, double r, double t,
                           double r_prime, double t_prime, int n_max = kDefaultKernelModes);

enum class AngularSum { explicit_m, addition_theorem };

/// Point on the sphere with its time.
struct SpacetimePoint {
    double r = 0.0;
    double theta = 0.0;
    double phi = 0.0;
    double t = 0.0;
};

/// sum_{l <= l_max} radial_kernel_l * sum_m Y_lm(x) Y*_lm(x').
KernelSample full_kernel(const TrapGeometry& geom, const BesselZeroTable& table, const SpacetimePoint& x,
                         const SpacetimePoint& x_prime, int l_max, int n_max = kDefaultKernelModes,
                         AngularSum angular = AngularSum::addition_theorem);

/// Closed-form sine series of the one-dimensional moving-wall propagator,
/// evaluated directly. Equals x x' radial_kernel(l = 0) at equal truncation.
complex kernel_1d(const TrapGeometry& geom, double x, double t, double x_prime, double t_prime,
                  int n_max = kDefaultKernelModes);

/// Quadrature on [0, L(t')] for the kernel integral: 16-point Gauss panels
/// whose edges r_k = L sin(pi k / 2P) cluster towards the wall, with at least
/// max(64, 4 n_max) nodes in total.
struct RadialQuadrature {
    std::vector<double> nodes;
    std::vector<double> weights;
};

RadialQuadrature propagation_quadrature(const TrapGeometry& geom, double t_prime, int n_max);

/// Data of one (l, m) channel carried from t' to t by the truncated kernel.
class PropagatedState {
  public:
    PropagatedState(TrapGeometry geometry, int l, int m, double t_prime, double t, std::vector<complex> amplitudes,
                    double input_norm);

    const TrapGeometry& geometry() const noexcept { return geometry_; }
    int l() const noexcept { return l_; }
    int m() const noexcept { return m_; }
    double t() const noexcept { return t_; }
    double t_prime() const noexcept { return t_prime_; }
    int n_max() const noexcept { return static_cast<int>(amplitudes_.size()); }
    /// a_n = int r'^2 R*_{ln}(r', t') psi(r') dr'.
    std::span<const complex> amplitudes() const noexcept { return amplitudes_; }

    double input_norm() const noexcept { return input_norm_; }
    double captured_norm() const noexcept { return captured_norm_; }
    double norm_deficit() const noexcept { return input_norm_ - captured_norm_; }
    /// True when more than 1e-4 of the input lies above mode n_max.
    bool truncation_warning() const noexcept { return norm_deficit() > kTruncationWarning; }

    /// Propagated radial data at r in [0, L(t)].
    complex evaluate(const BesselZeroTable& table, double r) const;
    std::vector<complex> values(const BesselZeroTable& table, std::span<const double> r,
                                Execution exec = Execution::serial) const;

    /// The same amplitudes viewed as a spectral expansion (valid for any time).
    SpectralState as_spectral_state() const;

    static constexpr double kTruncationWarning = 1e-4;

  private:
    TrapGeometry geometry_;
    int l_;
    int m_;
    double t_prime_;
    double t_;
    std::vector<complex> amplitudes_;
    double input_norm_;
    double captured_norm_;
};

/// Kernel action on radial data sampled at the nodes of `quadrature`
/// (support [0, L(t')]).
PropagatedState propagate(const TrapGeometry& geom, const BesselZeroTable& table, int l, int m,
                          std::span<const complex> samples, const RadialQuadrature& quadrature, double t_prime,
                          double t, int n_max = kDefaultKernelModes);

/// Same, for data given as a function of r on [0, L(t')], sampled on
/// propagation_quadrature(geom, t', n_max).
PropagatedState propagate(const TrapGeometry& geom, const BesselZeroTable& table, int l, int m,
                          const std::function<complex(double)>& radial, double t_prime, double t,
                          int n_max = kDefaultKernelModes);

} // namespace sphtrap
