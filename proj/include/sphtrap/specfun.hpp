#pragma once

#include <complex>
#include <iosfwd>
#include <string>
#include <vector>

namespace sphtrap {

/// Largest spherical Bessel order accepted by the public evaluators.
inline constexpr int kMaxBesselOrder = 256;

/// Quantum numbers (l, n, m) of a mode in the spherical box; n is 1-based.
struct ModeIndex {
    int l = 0;
    int n = 1;
    int m = 0;

    constexpr ModeIndex() = default;
    /// Throws DomainError unless l >= 0, n >= 1 and |m| <= l.
    ModeIndex(int l_, int n_, int m_);

    friend bool operator==(const ModeIndex&, const ModeIndex&) = default;
};

std::string to_string(const ModeIndex& mode);

/// Spherical Bessel function of the first kind j_l(x), x >= 0.
///
/// Small arguments (x < 1) use the power series, x >= l uses upward
/// recurrence from the closed forms of j_0 and j_1, and everything else
/// uses Miller's downward recurrence normalised against j_0 and j_1.
double sph_bessel_j(int l, double x);

/// dj_l/dx, finite at the origin (1/3 for l = 1, 0 otherwise).
double sph_bessel_j_prime(int l, double x);

/// Orthonormal spherical harmonic Y_lm(theta, phi) with the Condon-Shortley
/// phase, so Y_00 = 1/sqrt(4 pi) and Y_{l,-m} = (-1)^m conj(Y_lm).
std::complex<double> sph_harmonic(int l, int m, double theta, double phi);

/// Positive zeros x_{l n} of j_l for 0 <= l <= l_max, 1 <= n <= n_max,
/// together with the normalisation values j_{l+1}(x_{l n}).
///
/// Immutable after construction; safe to share between threads.
class BesselZeroTable {
  public:
    /// Builds the table by interlacing: each x_{l n} is isolated in
    /// (x_{l-1,n}, x_{l-1,n+1}) starting from x_{0 n} = n pi, then refined by
    /// safeguarded Newton until the step drops below 1e-13.
    static BesselZeroTable build(int l_max, int n_max);

    /// Reads the `l,n,zero` CSV cache and revalidates every invariant.
    /// Throws ValidationError on malformed or inconsistent content.
    static BesselZeroTable read_csv(std::istream& in);
    static BesselZeroTable load(const std::string& path);

    void write_csv(std::ostream& out) const;
    void save(const std::string& path) const;

    int l_max() const noexcept { return l_max_; }
    int n_max() const noexcept { return n_max_; }
    bool contains(int l, int n) const noexcept
    {
        return l >= 0 && l <= l_max_ && n >= 1 && n <= n_max_;
    }

    /// x_{l n}; throws DomainError when (l, n) is not stored.
    double zero(int l, int n) const;
    /// j_{l+1}(x_{l n}).
    double j_next_at_zero(int l, int n) const;
    /// 1 / |j_{l+1}(x_{l n})|, the radial normalisation of mode (l, n).
    double inverse_norm(int l, int n) const;

    /// Re-checks monotonicity, interlacing and |j_l(x_{l n})| < 1e-12.
    /// Throws ValidationError naming the first violation.
    void validate() const;

  private:
    BesselZeroTable(int l_max, int n_max, std::vector<double> zeros);

    std::size_t index(int l, int n) const;

    int l_max_ = 0;
    int n_max_ = 0;
    std::vector<double> zeros_;
    std::vector<double> j_next_;
};

} // namespace sphtrap
