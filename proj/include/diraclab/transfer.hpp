#pragma once

// Discrete transfer-matrix cocycle of the lattice Dirac operator.
//
// The single-step matrix at site k maps (u+(k), u-(k-1)) to (u+(k+1), u-(k))
// for solutions of D u = E u, and Phi(E, x, y) = T(V(x)) ... T(V(y+1)) maps
// (u+(y+1), u-(y)) to (u+(x+1), u-(x)). Conventions: Phi(E, y, y) = I and
// Phi(E, x, y) = Phi(E, y, x)^{-1} for x < y.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "diraclab/algebra.hpp"
#include "diraclab/fit.hpp"
#include "diraclab/parallel.hpp"
#include "diraclab/potentials.hpp"

namespace diraclab {

struct DiracParams {
    double mass = 0.0;
    double light_speed = 1.0;

    DiracParams() = default;
    DiracParams(double m, double c) : mass(m), light_speed(c) { validate(); }

    void validate() const {
        if (!(mass >= 0.0) || !std::isfinite(mass))
            throw std::invalid_argument("DiracParams: mass must be finite and >= 0");
        if (!(light_speed > 0.0) || !std::isfinite(light_speed))
            throw std::invalid_argument("DiracParams: light speed must be finite and > 0");
    }
    /// Rest energy m c^2.
    double rest_energy() const { return mass * light_speed * light_speed; }
};

/// One transfer step at energy E over a site with potential v.
template <class T>
BasicMat2<T> step_matrix_as(const DiracParams& p, T E, double v) {
    const double c = p.light_speed;
    const double mc2 = p.rest_energy();
    const T e = E - v;
    const T up = (T(mc2) + e) / c;    // (mc^2 + E - v) / c
    const T down = (T(mc2) - e) / c;  // (mc^2 - E + v) / c
    return {T(1) + up * down, up, down, T(1)};
}

inline Mat2 step_matrix(const DiracParams& p, cplx E, double v) { return step_matrix_as<cplx>(p, E, v); }

namespace detail {

/// log of the spectral norm, safe for entries near the overflow threshold.
template <class T>
double log_operator_norm(const BasicMat2<T>& m) {
    const double s = m.max_abs();
    if (!(s > 0)) return -std::numeric_limits<double>::infinity();
    return std::log(s) + std::log(operator_norm(T(1.0 / s) * m));
}

inline void check_sites(const PotentialSeq& V, std::size_t x, std::size_t y) {
    if (x > V.size() || y > V.size())
        throw std::out_of_range("cocycle: site index beyond potential length " +
                                std::to_string(V.size()));
}

/// Matrix with a separately tracked log scale: value = exp(log_scale) * m.
template <class T>
struct Scaled {
    BasicMat2<T> m = BasicMat2<T>::identity();
    double log_scale = 0.0;

    static constexpr double kRescaleAbove = 1e150;

    void left_multiply(const BasicMat2<T>& step) {
        m = step * m;
        const double big = std::max({std::abs(m.a11), std::abs(m.a12), std::abs(m.a21), std::abs(m.a22)});
        if (big > kRescaleAbove) {
            m *= T(1.0 / big);
            log_scale += std::log(big);
        }
    }
    double log_norm() const { return log_operator_norm(m) + log_scale; }
};

template <class T>
std::vector<BasicMat2<T>> site_steps(const DiracParams& p, T E, const PotentialSeq& V, std::size_t n) {
    std::vector<BasicMat2<T>> steps(n);
    for (std::size_t k = 1; k <= n; ++k) steps[k - 1] = step_matrix_as<T>(p, E, V(k));
    return steps;
}

/// colmax[x] = max over 0 <= y < x of log ||steps[x-1] ... steps[y]||, for
/// x = 0..n (colmax[0] = 0, the identity). Each start y is accumulated
/// forward, so no product is ever formed from an inverse. With a finite
/// `stop_log` the scan returns as soon as any pair exceeds it (flag set).
template <class T>
std::vector<double> column_log_sup(std::span<const BasicMat2<T>> steps, std::size_t n,
                                   double stop_log = std::numeric_limits<double>::infinity(),
                                   bool* stopped = nullptr) {
    std::vector<double> colmax(n + 1, 0.0);
    if (stopped) *stopped = false;
    for (std::size_t y = 0; y < n; ++y) {
        Scaled<T> acc;
        for (std::size_t x = y + 1; x <= n; ++x) {
            acc.left_multiply(steps[x - 1]);
            const double ln = acc.log_norm();
            if (ln > colmax[x]) colmax[x] = ln;
            if (ln > stop_log) {
                if (stopped) *stopped = true;
                return colmax;
            }
        }
    }
    return colmax;
}

/// Upper bound log ||P(x)|| + log ||P(y)|| for every pair, from prefix
/// products P(k) = Phi(k, 0) and ||P(y)^{-1}|| = ||P(y)|| (unimodular).
template <class T>
std::vector<double> prefix_log_norms(std::span<const BasicMat2<T>> steps, std::size_t n) {
    std::vector<double> out(n + 1, 0.0);
    Scaled<T> acc;
    for (std::size_t x = 1; x <= n; ++x) {
        acc.left_multiply(steps[x - 1]);
        out[x] = acc.log_norm();
    }
    return out;
}

}  // namespace detail

/// Phi(E, x, y) over the potential V (sites 1..V.size()).
inline Mat2 cocycle(const DiracParams& p, cplx E, const PotentialSeq& V, std::size_t x, std::size_t y) {
    detail::check_sites(V, x, y);
    if (x < y) return cocycle(p, E, V, y, x).inverse();
    Mat2 m = Mat2::identity();
    for (std::size_t k = y + 1; k <= x; ++k) m = step_matrix(p, E, V(k)) * m;
    return m;
}

/// Phi(E, x, y) with overflow-safe log scaling (x >= y).
struct ScaledCocycle {
    Mat2 matrix;
    double log_scale = 0.0;
    double log_norm() const { return detail::log_operator_norm(matrix) + log_scale; }
};

inline ScaledCocycle cocycle_scaled(const DiracParams& p, cplx E, const PotentialSeq& V,
                                    std::size_t x, std::size_t y) {
    detail::check_sites(V, x, y);
    if (x < y) throw std::invalid_argument("cocycle_scaled: requires x >= y");
    detail::Scaled<cplx> acc;
    for (std::size_t k = y + 1; k <= x; ++k) acc.left_multiply(step_matrix(p, E, V(k)));
    return {acc.m, acc.log_scale};
}

/// N -> L_m(N) = sup_{0 <= x, y <= N} ||Phi(E, x, y)||, stored as logs so
/// hyperbolic energies do not overflow.
struct WindowNormTable {
    cplx energy;
    DiracParams params;
    std::string provenance;
    std::vector<std::size_t> N;
    std::vector<double> log_norm;
    /// false when the table came from the prefix-product upper bound.
    bool exact = true;

    std::size_t size() const { return N.size(); }
    double norm(std::size_t i) const { return std::exp(log_norm.at(i)); }
};

struct WindowOptions {
    /// Largest N evaluated by exhaustive pair enumeration; above this the
    /// prefix upper bound ||P(x)|| ||P(y)|| is used and the table is marked
    /// inexact.
    std::size_t exact_limit = 16384;
};

namespace detail {

template <class T>
WindowNormTable window_table_impl(const DiracParams& p, T E, const PotentialSeq& V,
                                  std::vector<std::size_t> Ns, const WindowOptions& opt) {
    std::sort(Ns.begin(), Ns.end());
    Ns.erase(std::unique(Ns.begin(), Ns.end()), Ns.end());
    if (Ns.empty()) throw std::invalid_argument("window_norm: empty N list");
    const std::size_t n_max = Ns.back();
    if (n_max > V.size()) throw std::out_of_range("window_norm: N exceeds potential length");

    const auto steps = site_steps<T>(p, E, V, n_max);
    WindowNormTable table{cplx(E), p, V.provenance, Ns, {}, n_max <= opt.exact_limit};
    table.log_norm.reserve(Ns.size());
    if (table.exact) {
        const auto colmax = column_log_sup<T>(steps, n_max);
        double running = 0.0;
        std::size_t x = 0;
        for (std::size_t N : Ns) {
            for (; x <= N; ++x) running = std::max(running, colmax[x]);
            table.log_norm.push_back(running);
        }
    } else {
        const auto pre = prefix_log_norms<T>(steps, n_max);
        double running = 0.0;
        std::size_t x = 0;
        for (std::size_t N : Ns) {
            for (; x <= N; ++x) running = std::max(running, pre[x]);
            table.log_norm.push_back(2.0 * running);
        }
    }
    return table;
}

}  // namespace detail

inline WindowNormTable window_norm_table(const DiracParams& p, cplx E, const PotentialSeq& V,
                                         std::vector<std::size_t> Ns, const WindowOptions& opt = {}) {
    if (E.imag() == 0.0) return detail::window_table_impl<double>(p, E.real(), V, std::move(Ns), opt);
    return detail::window_table_impl<cplx>(p, E, V, std::move(Ns), opt);
}

/// L_m(N). Returns +inf when the norm overflows a double; use
/// window_norm_table for the log.
inline double window_norm(const DiracParams& p, cplx E, const PotentialSeq& V, std::size_t N,
                          const WindowOptions& opt = {}) {
    return window_norm_table(p, E, V, {N}, opt).norm(0);
}

/// E in P_m(alpha, C, N): L_m(N) <= C N^alpha.
inline bool membership(const DiracParams& p, cplx E, const PotentialSeq& V, double alpha, double C,
                       std::size_t N, const WindowOptions& opt = {}) {
    if (alpha < 0 || !(C > 0)) throw std::invalid_argument("membership: need alpha >= 0, C > 0");
    const auto t = window_norm_table(p, E, V, {N}, opt);
    return t.log_norm[0] <= std::log(C) + alpha * std::log(double(N));
}

// ---------------------------------------------------------------------------
// Energy perturbation.
//
// With B_delta(E, k) = (delta/c^2) [[1,0],[0,0]] + (1/c) [[2(E - V(k))/c, -1], [1, 0]],
// so that T(E + delta, V(k)) = T(E, V(k)) - delta B_delta(E, k), telescoping gives
//
//   Phi(E+delta, x, y) = Phi(E, x, y)
//       - delta * sum_{j=y}^{x-1} Phi(E+delta, x, j+1) B_delta(E, j+1) Phi(E, j, y).
//
// Note the potential inside B is read at the site of the step being
// replaced (j + 1).

inline Mat2 perturbation_kernel(const DiracParams& p, cplx E, cplx delta, double v) {
    const double c = p.light_speed;
    return Mat2{delta / (c * c) + 2.0 * (E - v) / (c * c), -1.0 / c, 1.0 / c, 0.0};
}

struct PerturbationCheck {
    Mat2 perturbed;  ///< Phi(E + delta, x, y), multiplied out directly
    Mat2 expansion;  ///< right-hand side of the identity
    /// max-entry |perturbed - expansion| divided by the magnitude of the
    /// largest quantity entering the sum (at least 1).
    double residual = 0.0;
};

inline PerturbationCheck perturbed_product(const DiracParams& p, cplx E, cplx delta,
                                           const PotentialSeq& V, std::size_t x, std::size_t y) {
    detail::check_sites(V, x, y);
    if (x < y) throw std::invalid_argument("perturbed_product: requires x >= y");
    const std::size_t len = x - y;
    const cplx Ed = E + delta;

    // forward[i] = Phi(E, y + i, y), i = 0..len
    std::vector<Mat2> forward(len + 1);
    forward[0] = Mat2::identity();
    for (std::size_t i = 1; i <= len; ++i) forward[i] = step_matrix(p, E, V(y + i)) * forward[i - 1];

    // tail[i] = Phi(E + delta, x, y + i), i = 0..len
    std::vector<Mat2> tail(len + 1);
    tail[len] = Mat2::identity();
    for (std::size_t i = len; i-- > 0;) tail[i] = tail[i + 1] * step_matrix(p, Ed, V(y + i + 1));

    Mat2 sum{};
    double scale = std::max({1.0, forward[len].max_abs(), tail[0].max_abs()});
    for (std::size_t j = y; j < x; ++j) {
        const std::size_t i = j - y;
        const Mat2 term = tail[i + 1] * perturbation_kernel(p, E, delta, V(j + 1)) * forward[i];
        scale = std::max(scale, std::abs(delta) * term.max_abs());
        sum = sum + term;
    }
    PerturbationCheck out;
    out.perturbed = Mat2::identity();
    for (std::size_t k = y + 1; k <= x; ++k) out.perturbed = step_matrix(p, Ed, V(k)) * out.perturbed;
    out.expansion = forward[len] - delta * sum;
    out.residual = max_entry_distance(out.perturbed, out.expansion) / scale;
    return out;
}

/// Right-hand side of the perturbation estimate
///   ||Phi(E+delta, x, y)|| <= L exp[(|delta|/c)(|delta|/c + C1) L |x - y|]
/// with L = L_m(N) and C1 = sup_{1<=k<=N} ||[[2(E - V(k))/c, -1], [1, 0]]||.
struct PerturbationBound {
    double window_norm = 1.0;  ///< L_m(N)
    double c1 = 0.0;
    double rate = 0.0;         ///< (|delta|/c)(|delta|/c + C1) L
    std::size_t N = 0;

    double at_distance(std::size_t d) const { return window_norm * std::exp(rate * double(d)); }
    double value() const { return at_distance(N); }
};

inline PerturbationBound perturbation_bound(const DiracParams& p, cplx E, cplx delta,
                                            const PotentialSeq& V, std::size_t N,
                                            const WindowOptions& opt = {}) {
    if (N > V.size()) throw std::out_of_range("perturbation_bound: N exceeds potential length");
    const double c = p.light_speed;
    PerturbationBound b;
    b.N = N;
    b.window_norm = window_norm(p, E, V, N, opt);
    for (std::size_t k = 1; k <= N; ++k) {
        const Mat2 K{2.0 * (E - V(k)) / c, -1.0, 1.0, 0.0};
        b.c1 = std::max(b.c1, operator_norm(K));
    }
    const double d = std::abs(delta) / c;
    b.rate = d * (d + b.c1) * b.window_norm;
    return b;
}

// ---------------------------------------------------------------------------
// Growth exponents.

enum class GrowthKind { bounded, power_law, exponential };

constexpr const char* to_string(GrowthKind k) {
    switch (k) {
        case GrowthKind::bounded: return "bounded";
        case GrowthKind::power_law: return "power_law";
        case GrowthKind::exponential: return "exponential";
    }
    return "?";
}

struct GrowthFit {
    double alpha = 0.0;         ///< slope of log L vs log N
    double alpha_band = 0.0;    ///< two standard errors
    double residual = 0.0;      ///< rms residual of the power-law fit (log units)
    double exp_rate = 0.0;      ///< slope of log L vs N
    double exp_residual = 0.0;  ///< rms residual of the log-linear fit
    bool degenerate = false;    ///< L constant over the list
    GrowthKind kind = GrowthKind::bounded;

    /// false when the data are better described by exponential growth.
    bool power_law_ok() const { return kind != GrowthKind::exponential; }
};

inline constexpr double kBoundedAlpha = 0.05;

inline GrowthFit fit_growth(const WindowNormTable& t) {
    if (t.size() < 4) throw std::invalid_argument("growth_exponent: need at least 4 window sizes");
    std::vector<double> logN, N, logL(t.log_norm);
    for (std::size_t n : t.N) {
        logN.push_back(std::log(double(n)));
        N.push_back(double(n));
    }
    GrowthFit g;
    const auto [lo, hi] = std::minmax_element(logL.begin(), logL.end());
    if (*hi - *lo <= 1e-12 * std::max(1.0, std::abs(*hi))) {
        g.degenerate = true;
        return g;
    }
    const LineFit pw = fit_line(logN, logL);
    const LineFit ex = fit_line(N, logL);
    g.alpha = pw.slope;
    g.alpha_band = 2.0 * pw.slope_stderr;
    g.residual = pw.rms_residual;
    g.exp_rate = ex.slope;
    g.exp_residual = ex.rms_residual;
    const double span = N.back() - N.front();
    if (ex.slope > 0 && ex.slope * span > 2.0 && ex.rms_residual < pw.rms_residual) {
        g.kind = GrowthKind::exponential;
    } else if (g.alpha < kBoundedAlpha) {
        g.kind = GrowthKind::bounded;
    } else {
        g.kind = GrowthKind::power_law;
    }
    return g;
}

inline GrowthFit growth_exponent(const DiracParams& p, cplx E, const PotentialSeq& V,
                                 std::vector<std::size_t> Ns, const WindowOptions& opt = {}) {
    return fit_growth(window_norm_table(p, E, V, std::move(Ns), opt));
}

/// Geometric window list lo, 2 lo, 4 lo, ... <= hi.
inline std::vector<std::size_t> geometric_sizes(std::size_t lo, std::size_t hi) {
    std::vector<std::size_t> out;
    for (std::size_t n = lo; n <= hi; n *= 2) out.push_back(n);
    return out;
}

}  // namespace diraclab
