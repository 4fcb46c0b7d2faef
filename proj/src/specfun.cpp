#include "sphtrap/specfun.hpp"

#include "sphtrap/errors.hpp"
#include "sphtrap/numfmt.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

namespace sphtrap {

ModeIndex::ModeIndex(int l_, int n_, int m_) : l(l_), n(n_), m(m_)
{
    if (l < 0 || n < 1 || m < -l || m > l)
        throw DomainError("invalid mode index " + to_string(*this));
}

std::string to_string(const ModeIndex& mode)
{
    return "(" + std::to_string(mode.l) + "," + std::to_string(mode.n) + "," + std::to_string(mode.m) + ")";
}

namespace {

// Power series in x^2; every term after the first shrinks by at least a
// factor 6 for x < 1, so there is no cancellation.
double bessel_series(int l, double x)
{
    double prefactor = 1.0;
    for (int k = 1; k <= l; ++k)
        prefactor *= x / (2 * k + 1);
    if (prefactor == 0.0)
        return 0.0;
    const double y = -0.5 * x * x;
    double term = 1.0;
    double sum = 1.0;
    for (int k = 1; k < 60; ++k) {
        term *= y / (k * (2.0 * l + 2.0 * k + 1.0));
        sum += term;
        if (std::abs(term) < 1e-17 * std::abs(sum))
            break;
    }
    return prefactor * sum;
}

// Miller's algorithm. The start order follows l + 20 + x; at that depth the
// minimal solution dominates the recurrence by many orders of magnitude.
double bessel_downward(int l, double x, double j0, double j1)
{
    constexpr int kShift = 465; // 2^-465 is about 1e-140; keeps f0^2 + f1^2 finite
    const int start = l + 20 + static_cast<int>(x);
    double upper = 0.0;   // f_{k+1}
    double current = 1.0; // f_k
    double at_l = (start == l) ? current : 0.0;
    int at_l_shifts = 0;  // rescalings applied after f_l was recorded
    double f1 = 0.0;
    for (int k = start; k >= 1; --k) {
        const double lower = (2.0 * k + 1.0) / x * current - upper;
        upper = current;
        current = lower;
        if (k - 1 == l)
            at_l = current;
        if (k - 1 == 1)
            f1 = current;
        if (std::abs(current) > 1e140) {
            current = std::ldexp(current, -kShift);
            upper = std::ldexp(upper, -kShift);
            f1 = std::ldexp(f1, -kShift);
            if (k - 1 < l)
                ++at_l_shifts;
        }
    }
    const double f0 = current;
    const double scale = (j0 * f0 + j1 * f1) / (f0 * f0 + f1 * f1);
    return std::ldexp(at_l * scale, -kShift * at_l_shifts);
}

double bessel_unchecked(int l, double x)
{
    if (x == 0.0)
        return l == 0 ? 1.0 : 0.0;
    if (x < 1.0)
        return bessel_series(l, x);
    const double s = std::sin(x);
    const double c = std::cos(x);
    const double j0 = s / x;
    if (l == 0)
        return j0;
    const double j1 = (j0 - c) / x;
    if (l == 1)
        return j1;
    if (x >= l) {
        double prev = j0;
        double cur = j1;
        for (int k = 1; k < l; ++k) {
            const double next = (2.0 * k + 1.0) / x * cur - prev;
            prev = cur;
            cur = next;
        }
        return cur;
    }
    return bessel_downward(l, x, j0, j1);
}

void check_bessel_args(int l, double x)
{
    if (l < 0 || l > kMaxBesselOrder)
        throw DomainError("spherical Bessel order " + std::to_string(l) + " outside [0, 256]");
    if (!std::isfinite(x) || x < 0.0)
        throw DomainError("spherical Bessel argument must be finite and non-negative");
}

} // namespace

double sph_bessel_j(int l, double x)
{
    check_bessel_args(l, x);
    return bessel_unchecked(l, x);
}

double sph_bessel_j_prime(int l, double x)
{
    check_bessel_args(l, x);
    if (l == 0)
        return -bessel_unchecked(1, x);
    return (l * bessel_unchecked(l - 1, x) - (l + 1) * bessel_unchecked(l + 1, x)) / (2.0 * l + 1.0);
}

std::complex<double> sph_harmonic(int l, int m, double theta, double phi)
{
    if (l < 0 || std::abs(m) > l)
        throw DomainError("spherical harmonic needs |m| <= l");
    if (!(theta >= 0.0 && theta <= std::numbers::pi) || !std::isfinite(phi))
        throw DomainError("spherical harmonic needs 0 <= theta <= pi");

    const int am = std::abs(m);
    const double x = std::cos(theta);
    const double one_minus_x2 = (1.0 - x) * (1.0 + x);

    // Normalised associated Legendre recurrence in l at fixed m.
    double pmm = 1.0;
    double fact = 1.0;
    for (int i = 1; i <= am; ++i) {
        pmm *= one_minus_x2 * fact / (fact + 1.0);
        fact += 2.0;
    }
    pmm = std::sqrt((2 * am + 1) * pmm / (4.0 * std::numbers::pi));
    if (am & 1)
        pmm = -pmm;

    double plm = pmm;
    if (l > am) {
        double pmmp1 = x * std::sqrt(2.0 * am + 3.0) * pmm;
        double old_fact = std::sqrt(2.0 * am + 3.0);
        for (int ll = am + 2; ll <= l; ++ll) {
            const double f = std::sqrt((4.0 * ll * ll - 1.0) / (double(ll) * ll - double(am) * am));
            const double pll = (x * pmmp1 - pmm / old_fact) * f;
            old_fact = f;
            pmm = pmmp1;
            pmmp1 = pll;
        }
        plm = pmmp1;
    }

    const std::complex<double> y = plm * std::polar(1.0, am * phi);
    if (m >= 0)
        return y;
    return (am & 1) ? -std::conj(y) : std::conj(y);
}

// ---------------------------------------------------------------------------
// BesselZeroTable

namespace {

// Safeguarded Newton on a bracket known to hold exactly one sign change.
double refine_zero(int l, double lo, double hi)
{
    double f_lo = bessel_unchecked(l, lo);
    const double f_hi = bessel_unchecked(l, hi);
    if (!(f_lo * f_hi < 0.0)) {
        std::ostringstream msg;
        msg.precision(17);
        msg << "zero bracket for l=" << l << " on [" << lo << ", " << hi
            << "] has no sign change (j_l = " << f_lo << ", " << f_hi << ")";
        throw ValidationError(msg.str());
    }
    double x = 0.5 * (lo + hi);
    for (int iter = 0; iter < 200; ++iter) {
        const double f = bessel_unchecked(l, x);
        if (f == 0.0)
            return x;
        if ((f < 0.0) == (f_lo < 0.0)) {
            lo = x;
            f_lo = f;
        } else {
            hi = x;
        }
        const double df = (l == 0) ? -bessel_unchecked(1, x)
                                   : (l * bessel_unchecked(l - 1, x) - (l + 1) * bessel_unchecked(l + 1, x)) /
                                         (2.0 * l + 1.0);
        double next = x - f / df;
        if (!(next > lo && next < hi))
            next = 0.5 * (lo + hi);
        const double step = std::abs(next - x);
        x = next;
        if (step < 1e-13 || hi - lo < 1e-13)
            return x;
    }
    throw ConvergenceError("Newton refinement of a Bessel zero did not converge", lo, hi);
}

} // namespace

BesselZeroTable::BesselZeroTable(int l_max, int n_max, std::vector<double> zeros)
    : l_max_(l_max), n_max_(n_max), zeros_(std::move(zeros)), j_next_(zeros_.size())
{
    for (int l = 0; l <= l_max_; ++l)
        for (int n = 1; n <= n_max_; ++n)
            j_next_[index(l, n)] = bessel_unchecked(l + 1, zeros_[index(l, n)]);
}

BesselZeroTable BesselZeroTable::build(int l_max, int n_max)
{
    if (l_max < 0 || l_max > kMaxBesselOrder || n_max < 1)
        throw DomainError("zero table needs 0 <= l_max <= 256 and n_max >= 1");

    // Level l needs n_max + (l_max - l) zeros so that every bracket of the
    // next level is available.
    const int base_count = n_max + l_max;
    std::vector<double> level(base_count);
    for (int k = 0; k < base_count; ++k)
        level[k] = (k + 1) * std::numbers::pi;

    std::vector<double> zeros(static_cast<std::size_t>(l_max + 1) * n_max);
    std::copy_n(level.begin(), n_max, zeros.begin());
    for (int l = 1; l <= l_max; ++l) {
        const int count = n_max + l_max - l;
        std::vector<double> next(count);
        for (int k = 0; k < count; ++k)
            next[k] = refine_zero(l, level[k], level[k + 1]);
        std::copy_n(next.begin(), n_max, zeros.begin() + static_cast<std::ptrdiff_t>(l) * n_max);
        level = std::move(next);
    }
    return BesselZeroTable(l_max, n_max, std::move(zeros));
}

std::size_t BesselZeroTable::index(int l, int n) const
{
    return static_cast<std::size_t>(l) * n_max_ + static_cast<std::size_t>(n - 1);
}

double BesselZeroTable::zero(int l, int n) const
{
    if (!contains(l, n))
        throw DomainError("zero table has no entry for l=" + std::to_string(l) + ", n=" + std::to_string(n));
    return zeros_[index(l, n)];
}

double BesselZeroTable::j_next_at_zero(int l, int n) const
{
    if (!contains(l, n))
        throw DomainError("zero table has no entry for l=" + std::to_string(l) + ", n=" + std::to_string(n));
    return j_next_[index(l, n)];
}

double BesselZeroTable::inverse_norm(int l, int n) const
{
    return 1.0 / std::abs(j_next_at_zero(l, n));
}

void BesselZeroTable::validate() const
{
    auto fail = [](int l, int n, const std::string& what) {
        throw ValidationError("zero table entry l=" + std::to_string(l) + ", n=" + std::to_string(n) + ": " + what);
    };
    for (int l = 0; l <= l_max_; ++l) {
        for (int n = 1; n <= n_max_; ++n) {
            const double x = zeros_[index(l, n)];
            if (!std::isfinite(x) || !(x > 0.0))
                fail(l, n, "not a positive finite number");
            if (!(std::abs(bessel_unchecked(l, x)) < 1e-12))
                fail(l, n, "|j_l(x)| >= 1e-12");
            if (n > 1 && !(zeros_[index(l, n - 1)] < x))
                fail(l, n, "zeros not strictly increasing");
            if (l < l_max_) {
                const double above = zeros_[index(l + 1, n)];
                if (!(x < above))
                    fail(l, n, "interlacing x[l][n] < x[l+1][n] violated");
                if (n < n_max_ && !(above < zeros_[index(l, n + 1)]))
                    fail(l, n, "interlacing x[l+1][n] < x[l][n+1] violated");
            }
        }
    }
}

void BesselZeroTable::write_csv(std::ostream& out) const
{
    out << "l,n,zero\n";
    for (int l = 0; l <= l_max_; ++l)
        for (int n = 1; n <= n_max_; ++n)
            out << l << ',' << n << ',' << format_double(zeros_[index(l, n)]) << '\n';
}

void BesselZeroTable::save(const std::string& path) const
{
    std::ofstream out(path);
    if (!out)
        throw std::runtime_error("cannot write zero table to " + path);
    write_csv(out);
}

BesselZeroTable BesselZeroTable::read_csv(std::istream& in)
{
    std::string line;
    if (!std::getline(in, line) || (line != "l,n,zero" && line != "l,n,zero\r"))
        throw ValidationError("zero table cache: missing 'l,n,zero' header");

    struct Row {
        int l;
        int n;
        double x;
    };
    std::vector<Row> rows;
    int l_max = -1;
    int n_max = 0;
    int line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r")
            continue;
        const auto c1 = line.find(',');
        const auto c2 = line.find(',', c1 == std::string::npos ? c1 : c1 + 1);
        if (c1 == std::string::npos || c2 == std::string::npos)
            throw ValidationError("zero table cache: malformed line " + std::to_string(line_no));
        try {
            Row r{parse_int(std::string_view(line).substr(0, c1)),
                  parse_int(std::string_view(line).substr(c1 + 1, c2 - c1 - 1)),
                  parse_double(std::string_view(line).substr(c2 + 1))};
            l_max = std::max(l_max, r.l);
            n_max = std::max(n_max, r.n);
            rows.push_back(r);
        } catch (const std::invalid_argument& e) {
            throw ValidationError("zero table cache: line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    if (l_max < 0 || n_max < 1 || l_max > kMaxBesselOrder)
        throw ValidationError("zero table cache: empty or out-of-range table");
    const std::size_t expected = static_cast<std::size_t>(l_max + 1) * n_max;
    if (rows.size() != expected)
        throw ValidationError("zero table cache: expected " + std::to_string(expected) + " rows, found " +
                              std::to_string(rows.size()));

    std::vector<double> zeros(expected, std::numeric_limits<double>::quiet_NaN());
    std::vector<bool> seen(expected, false);
    for (const auto& r : rows) {
        if (r.l < 0 || r.n < 1)
            throw ValidationError("zero table cache: negative index");
        const std::size_t i = static_cast<std::size_t>(r.l) * n_max + (r.n - 1);
        if (seen[i])
            throw ValidationError("zero table cache: duplicate entry");
        seen[i] = true;
        zeros[i] = r.x;
    }
    BesselZeroTable table(l_max, n_max, std::move(zeros));
    table.validate();
    return table;
}

BesselZeroTable BesselZeroTable::load(const std::string& path)
{
    std::ifstream in(path);
    if (!in)
        throw ValidationError("cannot open zero table cache " + path);
    return read_csv(in);
}

} // namespace sphtrap
