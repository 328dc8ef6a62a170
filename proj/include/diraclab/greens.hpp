#pragma once

// Resolvent quantities of the truncated lattice operator at z = E + i/T:
// the two-component Green's function G = (H - z)^{-1} delta_1^+, its
// transfer-matrix propagation, the Borel transform F(z) = G+(z, 1), smoothed
// spectral mass, and Abel moments through the energy integral
//   A(T, q) = 1/(pi T) sum_n n^q int (|G+(E + i/T, n)|^2 + |G-(E + i/T, n)|^2) dE.

#include <cmath>
#include <complex>
#include <algorithm>
#include <numbers>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "diraclab/lattice.hpp"
#include "diraclab/parallel.hpp"
#include "diraclab/transfer.hpp"

namespace diraclab {

/// Solves the tridiagonal system with subdiagonal dl, diagonal d and
/// superdiagonal du (Gaussian elimination with partial pivoting, as in
/// LAPACK gtsv). Arguments are taken by value and overwritten internally.
inline std::vector<cplx> solve_tridiagonal(std::vector<cplx> dl, std::vector<cplx> d, std::vector<cplx> du,
                                           std::vector<cplx> b) {
    const std::size_t n = d.size();
    if (n == 0 || b.size() != n || (n > 1 && (dl.size() != n - 1 || du.size() != n - 1)))
        throw std::invalid_argument("solve_tridiagonal: inconsistent sizes");
    const auto abs1 = [](cplx v) { return std::abs(v.real()) + std::abs(v.imag()); };
    const auto singular = [](std::size_t k) {
        return NumericalGuardError("solve_tridiagonal: exactly singular at row " + std::to_string(k));
    };
    for (std::size_t k = 0; k + 1 < n; ++k) {
        if (dl[k] == cplx{}) {
            if (d[k] == cplx{}) throw singular(k);
        } else if (abs1(d[k]) >= abs1(dl[k])) {
            const cplx mult = dl[k] / d[k];
            d[k + 1] -= mult * du[k];
            b[k + 1] -= mult * b[k];
            if (k + 2 < n) dl[k] = 0.0;
        } else {
            const cplx mult = d[k] / dl[k];
            d[k] = dl[k];
            const cplx temp = d[k + 1];
            d[k + 1] = du[k] - mult * temp;
            if (k + 2 < n) {
                dl[k] = du[k + 1];
                du[k + 1] = -mult * dl[k];
            }
            du[k] = temp;
            const cplx tb = b[k];
            b[k] = b[k + 1];
            b[k + 1] = tb - mult * b[k + 1];
        }
    }
    if (d[n - 1] == cplx{}) throw singular(n - 1);
    b[n - 1] /= d[n - 1];
    if (n > 1) b[n - 2] = (b[n - 2] - du[n - 2] * b[n - 1]) / d[n - 2];
    for (std::size_t k = n < 2 ? 0 : n - 2; k-- > 0;) b[k] = (b[k] - du[k] * b[k + 1] - dl[k] * b[k + 2]) / d[k];
    return b;
}

struct GreenPair {
    cplx z;
    std::vector<cplx> g_plus;   ///< sites 1..L
    std::vector<cplx> g_minus;  ///< sites 1..L
    cplx g_minus_0{};           ///< Dirichlet boundary value, always 0
    double residual = 0.0;      ///< ||(H - z) G - delta_1^+|| / max(1, ||G||)
    bool near_singular = false; ///< Im z below 1e-12

    std::size_t size() const { return g_plus.size(); }
    cplx plus(std::size_t n) const { return n == size() + 1 ? cplx{} : g_plus.at(n - 1); }
    cplx minus(std::size_t n) const { return n == 0 ? g_minus_0 : g_minus.at(n - 1); }
};

inline constexpr double kGreenResidualLimit = 1e-9;

namespace detail {

inline std::vector<cplx> resolvent_column(const LatticeOperator& op, cplx z) {
    const std::size_t n = op.dim();
    std::vector<cplx> dl(op.offdiag.begin(), op.offdiag.end());
    std::vector<cplx> du = dl;
    std::vector<cplx> d(n), b(n);
    for (std::size_t i = 0; i < n; ++i) d[i] = op.diagonal[i] - z;
    b[0] = 1.0;
    return solve_tridiagonal(std::move(dl), std::move(d), std::move(du), std::move(b));
}

}  // namespace detail

inline GreenPair green_pair(const LatticeOperator& op, cplx z) {
    if (!(z.imag() > 0)) throw std::invalid_argument("green_pair: requires Im z > 0");
    const auto x = detail::resolvent_column(op, z);
    GreenPair g;
    g.z = z;
    g.near_singular = z.imag() < 1e-12;
    g.g_plus.resize(op.L);
    g.g_minus.resize(op.L);
    double norm2 = 0;
    for (std::size_t n = 0; n < op.L; ++n) {
        g.g_plus[n] = x[2 * n];
        g.g_minus[n] = x[2 * n + 1];
        norm2 += std::norm(x[2 * n]) + std::norm(x[2 * n + 1]);
    }
    auto r = op.apply(x);
    double res2 = 0;
    for (std::size_t i = 0; i < r.size(); ++i) {
        r[i] -= z * x[i];
        if (i == 0) r[i] -= 1.0;
        res2 += std::norm(r[i]);
    }
    g.residual = std::sqrt(res2) / std::max(1.0, std::sqrt(norm2));
    if (!(g.residual <= kGreenResidualLimit))
        throw NumericalGuardError("green_pair: defining-equation residual " + std::to_string(g.residual) +
                                  " above limit");
    return g;
}

struct MatrGreenCheck {
    double residual = 0.0;  ///< |lhs - Phi seed| / (||Phi|| |seed|)
    double phi_norm = 1.0;
    cplx lhs_plus, lhs_minus, rhs_plus, rhs_minus;
};

inline constexpr double kConditioningLimit = 1e12;

/// Checks (G+(z, n+1), G-(z, n)) = Phi(z, n, 1) (G+(z, 2), G-(z, 1)) for
/// 1 <= n <= L, with G+(z, L+1) = 0. Site 1 carries the source, so the
/// propagation starts from the data at sites (2, 1).
inline MatrGreenCheck matr_green_check(const LatticeOperator& op, const GreenPair& g, std::size_t n) {
    if (n < 1 || n > op.L) throw std::out_of_range("matr_green_check: n must lie in 1..L");
    if (op.L < 2) throw std::invalid_argument("matr_green_check: needs L >= 2");
    const Mat2 phi = cocycle(op.params, g.z, op.potential, n, 1);
    MatrGreenCheck out;
    out.phi_norm = operator_norm(phi);
    if (out.phi_norm > kConditioningLimit)
        throw NumericalGuardError("matr_green_check: ||Phi|| = " + std::to_string(out.phi_norm) +
                                  " exceeds conditioning limit");
    const cplx s0 = g.plus(2), s1 = g.minus(1);
    out.lhs_plus = g.plus(n + 1);
    out.lhs_minus = g.minus(n);
    out.rhs_plus = phi.a11 * s0 + phi.a12 * s1;
    out.rhs_minus = phi.a21 * s0 + phi.a22 * s1;
    const double diff = std::hypot(std::abs(out.lhs_plus - out.rhs_plus), std::abs(out.lhs_minus - out.rhs_minus));
    const double scale = out.phi_norm * std::hypot(std::abs(s0), std::abs(s1));
    out.residual = scale > 0 ? diff / scale : diff;
    return out;
}

inline MatrGreenCheck matr_green_check(const LatticeOperator& op, cplx z, std::size_t n) {
    return matr_green_check(op, green_pair(op, z), n);
}

/// F(z) = <delta_1^+, (H - z)^{-1} delta_1^+>, by the continued fraction of
/// the tridiagonal matrix evaluated from the far end.
inline cplx borel_transform(const LatticeOperator& op, cplx z) {
    if (!(z.imag() > 0)) throw std::invalid_argument("borel_transform: requires Im z > 0");
    const std::size_t n = op.dim();
    cplx r = op.diagonal[n - 1] - z;
    for (std::size_t i = n - 1; i-- > 0;) r = op.diagonal[i] - z - op.offdiag[i] * op.offdiag[i] / r;
    return 1.0 / r;
}

/// Interval [-G - W, G + W], G the Gershgorin bound, W = max(2, 100 eps).
/// The Lorentzian tails left outside carry at most 2 eps / (pi W) <= 0.0064.
inline std::pair<double, double> full_spectral_window(const LatticeOperator& op, double eps) {
    const double w = std::max(2.0, 100.0 * eps);
    const double g = op.gershgorin_bound();
    return {-g - w, g + w};
}

/// (1/pi) int_a^b Im F(E + i eps) dE, composite Simpson with step <= eps/5.
inline double measure_estimate(const LatticeOperator& op, double a, double b, double eps, unsigned threads = 1) {
    if (!(eps > 0)) throw std::invalid_argument("measure_estimate: eps must be positive");
    if (!(b > a)) throw std::invalid_argument("measure_estimate: empty interval");
    auto n = std::size_t(std::ceil((b - a) / (eps / 5.0)));
    if (n % 2) ++n;
    n = std::max<std::size_t>(n, 2);
    const double h = (b - a) / double(n);
    std::vector<double> f(n + 1);
    parallel_for(n + 1, threads, [&](std::size_t k) {
        f[k] = borel_transform(op, cplx(a + double(k) * h, eps)).imag();
    });
    double s = f[0] + f[n];
    for (std::size_t k = 1; k < n; ++k) s += (k % 2 ? 4.0 : 2.0) * f[k];
    return s * h / 3.0 / std::numbers::pi;
}

struct GreenMomentResult {
    double T = 0.0;
    double q = 0.0;
    double value = 0.0;
    double tail_fraction = 0.0;  ///< share of the integral from |E - center| > R
    double center = 0.0;
    double half_width = 0.0;     ///< R
    std::size_t points = 0;
};

struct GreenMomentOptions {
    unsigned threads = 0;
    /// Resolution inside the window, in units of 1/T.
    double step_per_width = 0.2;
};

/// Energy integral over all of R via E = center + R tan(theta), midpoint
/// rule in theta. R is the Gershgorin half-width plus W = 20/T + 2; the step
/// in E stays <= step_per_width / T for |E - center| <= R.
inline GreenMomentResult abel_moment_green(const LatticeOperator& op, double T, double q,
                                           const GreenMomentOptions& opt = {}) {
    if (!(T > 0)) throw std::invalid_argument("abel_moment_green: T must be positive");
    if (!(q >= 0)) throw std::invalid_argument("abel_moment_green: q must be nonnegative");
    GreenMomentResult r;
    r.T = T;
    r.q = q;
    r.center = 0.0;
    r.half_width = op.gershgorin_bound() + 20.0 / T + 2.0;
    const double R = r.half_width;
    const double dtheta = opt.step_per_width / (2.0 * R * T);
    const auto npts = std::size_t(std::ceil(std::numbers::pi / dtheta));
    const double h = std::numbers::pi / double(npts);
    r.points = npts;

    std::vector<double> weight(op.dim());
    for (std::size_t i = 0; i < weight.size(); ++i)
        weight[i] = q == 0.0 ? 1.0 : std::pow(double(LatticeOperator::site_of(i)), q);

    std::vector<double> contrib(npts);
    parallel_for(npts, opt.threads, [&](std::size_t k) {
        const double theta = -std::numbers::pi / 2 + (double(k) + 0.5) * h;
        const double t = std::tan(theta);
        const double E = r.center + R * t;
        const auto x = detail::resolvent_column(op, cplx(E, 1.0 / T));
        double s = 0;
        for (std::size_t i = 0; i < x.size(); ++i) s += weight[i] * std::norm(x[i]);
        contrib[k] = s * R * (1.0 + t * t);
    });
    double total = 0, tail = 0;
    for (std::size_t k = 0; k < npts; ++k) {
        const double theta = -std::numbers::pi / 2 + (double(k) + 0.5) * h;
        total += contrib[k];
        if (std::abs(theta) > std::numbers::pi / 4) tail += contrib[k];
    }
    r.value = total * h / (std::numbers::pi * T);
    r.tail_fraction = total > 0 ? tail / total : 0.0;
    return r;
}

}  // namespace diraclab
