#pragma once

// Transport-exponent estimation, critical-energy scans for the two-cell
// continuum model, bounded-energy scans for discrete potentials and the
// Monte-Carlo estimate of large-norm probabilities near a critical energy.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "diraclab/algebra.hpp"
#include "diraclab/continuum.hpp"
#include "diraclab/fit.hpp"
#include "diraclab/lattice.hpp"
#include "diraclab/parallel.hpp"
#include "diraclab/potentials.hpp"
#include "diraclab/rng.hpp"
#include "diraclab/transfer.hpp"

namespace diraclab {

// ---------------------------------------------------------------------------
// Growth exponent of A(T, q).

struct MomentCurve {
    double q = 0.0;
    std::vector<double> T;
    std::vector<double> A;
    std::string provenance;

    std::size_t size() const { return T.size(); }

    void validate() const {
        if (T.size() != A.size()) throw std::invalid_argument("MomentCurve: T and A lengths differ");
        for (std::size_t i = 0; i < T.size(); ++i) {
            if (!(T[i] > 0)) throw std::invalid_argument("MomentCurve: T must be positive");
            if (i > 0 && !(T[i] > T[i - 1])) throw std::invalid_argument("MomentCurve: T must increase strictly");
            if (!(A[i] > 0)) throw std::invalid_argument("MomentCurve: A must be positive");
        }
    }
};

struct BetaEstimate {
    double beta_hat = 0.0;  ///< minimum windowed slope (liminf proxy)
    double residual = 0.0;  ///< rms residual of the minimizing window fit
    std::size_t window_start = 0;
    std::vector<double> slopes;
    static constexpr const char* kLabel = "liminf proxy: minimum windowed log-log slope";
};

/// Least-squares slopes of log A against log T over sliding windows; the
/// smallest one stands in for the liminf of log A / log T.
inline BetaEstimate beta_estimate(const MomentCurve& curve, std::size_t window = 4) {
    curve.validate();
    const std::size_t n = curve.size();
    if (n < 6) throw std::invalid_argument("beta_estimate: need at least 6 samples");
    if (window < 2 || window > n) throw std::invalid_argument("beta_estimate: bad window");
    const double ratio = curve.T[1] / curve.T[0];
    for (std::size_t i = 1; i + 1 < n; ++i)
        if (std::abs(curve.T[i + 1] / curve.T[i] - ratio) > 1e-6 * ratio)
            throw std::invalid_argument("beta_estimate: T grid is not geometric");
    std::vector<double> lt(n), la(n);
    for (std::size_t i = 0; i < n; ++i) {
        lt[i] = std::log(curve.T[i]);
        la[i] = std::log(curve.A[i]);
    }
    BetaEstimate b;
    b.beta_hat = std::numeric_limits<double>::infinity();
    for (std::size_t s = 0; s + window <= n; ++s) {
        const LineFit f = fit_line(std::span(lt).subspan(s, window), std::span(la).subspan(s, window));
        b.slopes.push_back(f.slope);
        if (f.slope < b.beta_hat) {
            b.beta_hat = f.slope;
            b.residual = f.rms_residual;
            b.window_start = s;
        }
    }
    return b;
}

/// T0, T0 r, T0 r^2, ... (count values).
inline std::vector<double> geometric_grid(double T0, double ratio, std::size_t count) {
    if (!(T0 > 0) || !(ratio > 1) || count == 0) throw std::invalid_argument("geometric_grid: bad arguments");
    std::vector<double> out(count);
    for (std::size_t i = 0; i < count; ++i) out[i] = T0 * std::pow(ratio, double(i));
    return out;
}

/// A(T, q) from the eigenbasis route, one curve per q.
inline MomentCurve moment_curve_direct(SpectralMoments& sm, std::span<const double> Ts, double q,
                                       BoundaryPolicy policy = BoundaryPolicy::abort,
                                       std::vector<MomentSample>* samples = nullptr) {
    MomentCurve c;
    c.q = q;
    c.provenance = sm.op().potential.provenance + ",route=direct";
    for (double T : Ts) {
        const auto s = sm.moment(T, q, policy);
        c.T.push_back(T);
        c.A.push_back(s.value);
        if (samples) samples->push_back(s);
    }
    return c;
}

// ---------------------------------------------------------------------------
// Critical energies of the two-cell continuum model.

struct CriticalEnergyRecord {
    double E0 = 0.0;
    MatClass class0 = MatClass::indeterminate;
    MatClass class1 = MatClass::indeterminate;
    double eta0 = 0.0;
    double eta1 = 0.0;
    double commutator_norm = 0.0;  ///< Frobenius norm of [T0, T1]
    bool eta_gap_ok = false;       ///< eta0 - eta1 not a multiple of pi
    double identity_distance = 0.0;
    int identity_cell = 0;         ///< which cell matrix sits at +-I
};

struct CriticalScanOptions {
    double coarse_threshold = 0.1;  ///< candidate minima of the +-I distance
    double accept = 1e-8;           ///< refined distance and commutator limit
    double class_tol = kDefaultClassTol;
    double eta_tol = 1e-8;
    double dedup = 1e-7;
    unsigned threads = 1;
};

struct CriticalScanResult {
    std::vector<CriticalEnergyRecord> records;
    /// Share of grid energies where both cells are rotation-like and commute.
    double commuting_fraction = 0.0;
};

inline std::vector<double> linear_grid(double lo, double hi, double step) {
    if (!(hi >= lo) || !(step > 0)) throw std::invalid_argument("linear_grid: bad range");
    const auto n = std::size_t(std::floor((hi - lo) / step + 1e-9));
    std::vector<double> g(n + 1);
    for (std::size_t i = 0; i <= n; ++i) g[i] = lo + double(i) * step;
    return g;
}

namespace detail {

/// Golden-section minimum of f on [a, b].
template <class F>
double golden_min(F&& f, double a, double b, double tol) {
    const double r = (std::sqrt(5.0) - 1.0) / 2.0;
    double c = b - r * (b - a), d = a + r * (b - a);
    double fc = f(c), fd = f(d);
    for (int it = 0; it < 200 && (b - a) > tol; ++it) {
        if (fc <= fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
    }
    return fc <= fd ? c : d;
}

inline bool rotation_like_or_false(const Mat2& m, double tol) {
    try {
        return is_rotation_like(classify(m, tol));
    } catch (const std::domain_error&) {
        return false;
    }
}

inline bool eta_gap_nontrivial(double eta0, double eta1, double tol) {
    const double gap = std::abs(eta0 - eta1);
    const double r = std::fmod(gap, std::numbers::pi);
    return std::min(r, std::numbers::pi - r) > tol;
}

}  // namespace detail

/// Cell matrices T0(E) = free_cell_matrix(E, 0), T1(E) = free_cell_matrix(E, coupling).
/// Candidates are local minima of the distance of T0 or T1 to +-I on the
/// grid, refined by golden-section search; a refined point is recorded when
/// that distance is below `accept`, both cells are elliptic or +-I, and the
/// commutator is below `accept`.
inline CriticalScanResult critical_scan(const DiracParams& p, double coupling, std::span<const double> grid,
                                        const CriticalScanOptions& opt = {}) {
    if (grid.size() < 3) throw std::invalid_argument("critical_scan: grid needs at least 3 points");
    for (std::size_t i = 1; i < grid.size(); ++i)
        if (!(grid[i] > grid[i - 1]) || grid[i] - grid[i - 1] > 1e-3 * (1 + 1e-9))
            throw std::invalid_argument("critical_scan: grid must increase with spacing <= 1e-3");

    const std::size_t n = grid.size();
    std::vector<double> d0(n), d1(n);
    std::vector<unsigned char> commuting(n);
    parallel_for(n, opt.threads, [&](std::size_t i) {
        const Mat2 t0 = free_cell_matrix(p, grid[i], 0.0);
        const Mat2 t1 = free_cell_matrix(p, grid[i], coupling);
        d0[i] = distance_to_pm_identity(t0);
        d1[i] = distance_to_pm_identity(t1);
        const bool rot = detail::rotation_like_or_false(t0, opt.class_tol) &&
                         detail::rotation_like_or_false(t1, opt.class_tol);
        commuting[i] = rot && commutator(t0, t1).frobenius() <= opt.accept;
    });

    CriticalScanResult out;
    std::size_t count = 0;
    for (auto c : commuting) count += c;
    out.commuting_fraction = double(count) / double(n);

    struct Candidate {
        std::size_t i;
        int cell;
    };
    std::vector<Candidate> cand;
    for (int cell = 0; cell < 2; ++cell) {
        const auto& d = cell == 0 ? d0 : d1;
        for (std::size_t i = 1; i + 1 < n; ++i)
            if (d[i] < opt.coarse_threshold && d[i] <= d[i - 1] && d[i] <= d[i + 1]) cand.push_back({i, cell});
    }

    std::vector<CriticalEnergyRecord> recs(cand.size());
    std::vector<unsigned char> keep(cand.size(), 0);
    parallel_for(cand.size(), opt.threads, [&](std::size_t k) {
        const auto [i, cell] = cand[k];
        const double level = cell == 0 ? 0.0 : coupling;
        const auto dist = [&](double E) { return distance_to_pm_identity(free_cell_matrix(p, E, level)); };
        const double tol = 1e-14 * std::max(1.0, std::abs(grid[i]));
        const double E = detail::golden_min(dist, grid[i - 1], grid[i + 1], tol);
        const double dmin = dist(E);
        if (!(dmin <= opt.accept)) return;
        const Mat2 t0 = free_cell_matrix(p, E, 0.0);
        const Mat2 t1 = free_cell_matrix(p, E, coupling);
        const double ctol = std::max(opt.class_tol, 2.0 * dmin);
        CriticalEnergyRecord r;
        r.E0 = E;
        r.identity_cell = cell;
        r.identity_distance = dmin;
        r.class0 = classify(t0, ctol);
        r.class1 = classify(t1, ctol);
        r.commutator_norm = commutator(t0, t1).frobenius();
        if (!is_rotation_like(r.class0) || !is_rotation_like(r.class1) || r.commutator_norm > opt.accept) return;
        r.eta0 = rotation_angle(t0, ctol);
        r.eta1 = rotation_angle(t1, ctol);
        r.eta_gap_ok = detail::eta_gap_nontrivial(r.eta0, r.eta1, opt.eta_tol);
        recs[k] = r;
        keep[k] = 1;
    });
    for (std::size_t k = 0; k < recs.size(); ++k)
        if (keep[k]) out.records.push_back(recs[k]);
    std::sort(out.records.begin(), out.records.end(),
              [](const auto& a, const auto& b) { return a.E0 < b.E0; });
    std::vector<CriticalEnergyRecord> unique;
    for (const auto& r : out.records) {
        if (!unique.empty() && std::abs(r.E0 - unique.back().E0) <= opt.dedup) {
            if (r.identity_distance < unique.back().identity_distance) unique.back() = r;
            continue;
        }
        unique.push_back(r);
    }
    out.records = std::move(unique);
    return out;
}

/// Closed-form family +-sqrt(m^2c^4 + n^2 pi^2 c^2) and coupling +- the same,
/// n = 1..n_max, restricted to [lo, hi].
inline std::vector<double> critical_family(const DiracParams& p, double coupling, int n_max, double lo, double hi) {
    std::vector<double> out;
    const double mc2 = p.rest_energy(), c = p.light_speed;
    for (int n = 1; n <= n_max; ++n) {
        const double r = std::sqrt(mc2 * mc2 + double(n * n) * std::numbers::pi * std::numbers::pi * c * c);
        for (double e : {-r, r, coupling - r, coupling + r})
            if (e >= lo && e <= hi) out.push_back(e);
    }
    std::sort(out.begin(), out.end());
    return out;
}

struct Interval {
    double lo = 0.0;
    double hi = 0.0;
    bool contains(double x) const { return x > lo && x < hi; }
};

struct LambdaWindow {
    Interval lower;  ///< (0, r - mc^2)
    Interval upper;  ///< (r + mc^2, inf)
    bool contains(double lambda) const { return lower.contains(lambda) || upper.contains(lambda); }
};

/// Couplings for which the n-th family member of one cell is +-I while the
/// other cell is elliptic; r = sqrt(m^2c^4 + n^2 pi^2 c^2).
inline LambdaWindow lambda_window(const DiracParams& p, int n) {
    if (n < 1) throw std::invalid_argument("lambda_window: n must be >= 1");
    const double mc2 = p.rest_energy(), c = p.light_speed;
    const double r = std::sqrt(mc2 * mc2 + double(n) * double(n) * std::numbers::pi * std::numbers::pi * c * c);
    return {{0.0, r - mc2}, {r + mc2, std::numeric_limits<double>::infinity()}};
}

// ---------------------------------------------------------------------------
// Bounded-energy scans of discrete potentials.

struct EnergyScanRow {
    double E = 0.0;
    WindowNormTable table;
    GrowthFit fit;
};

struct EnergyScan {
    std::vector<EnergyScanRow> rows;

    std::vector<double> candidates(GrowthKind kind = GrowthKind::bounded) const {
        std::vector<double> out;
        for (const auto& r : rows)
            if (r.fit.kind == kind) out.push_back(r.E);
        return out;
    }
};

inline EnergyScan bounded_energy_scan(const DiracParams& p, const PotentialSeq& V, std::span<const double> E_grid,
                                      const std::vector<std::size_t>& N_list, unsigned threads = 1,
                                      const WindowOptions& wopt = {}) {
    EnergyScan scan;
    scan.rows.resize(E_grid.size());
    parallel_for(E_grid.size(), threads, [&](std::size_t i) {
        auto& row = scan.rows[i];
        row.E = E_grid[i];
        row.table = window_norm_table(p, E_grid[i], V, N_list, wopt);
        row.fit = fit_growth(row.table);
    });
    return scan;
}

// ---------------------------------------------------------------------------
// Bernoulli continuum words near a critical energy.

struct ProportionCI {
    double low = 0.0;
    double high = 1.0;
};

/// Wilson score interval.
inline ProportionCI wilson_interval(std::size_t successes, std::size_t n, double z = 1.959963984540054) {
    if (successes > n) throw std::invalid_argument("wilson_interval: more successes than trials");
    if (n == 0) return {0.0, 1.0};
    const double nn = double(n), ph = double(successes) / nn, z2 = z * z;
    const double denom = 1.0 + z2 / nn;
    const double center = (ph + z2 / (2 * nn)) / denom;
    const double half = z * std::sqrt(ph * (1 - ph) / nn + z2 / (4 * nn * nn)) / denom;
    const double low = successes == 0 ? 0.0 : std::max(0.0, center - half);
    const double high = successes == n ? 1.0 : std::min(1.0, center + half);
    return {low, high};
}

/// One-sided two-proportion z statistic for p_later > p_earlier.
inline double increase_z(std::size_t x1, std::size_t n1, std::size_t x2, std::size_t n2) {
    const double p1 = double(x1) / double(n1), p2 = double(x2) / double(n2);
    const double pooled = double(x1 + x2) / double(n1 + n2);
    const double var = pooled * (1 - pooled) * (1.0 / double(n1) + 1.0 / double(n2));
    if (var <= 0) return 0.0;
    return (p2 - p1) / std::sqrt(var);
}

struct BernoulliRow {
    std::size_t N = 0;
    std::size_t failures = 0;
    std::size_t trials = 0;
    double failure_fraction = 0.0;
    double ci_low = 0.0;
    double ci_high = 0.0;
    double window_half_width = 0.0;  ///< N^{-s-1/2}
};

struct TrendViolation {
    std::size_t N_earlier = 0;
    std::size_t N_later = 0;
    double z = 0.0;
};

struct BernoulliExperiment {
    std::vector<BernoulliRow> rows;
    double C_test = 0.0;
    bool calibrated = false;
    bool trend_ok = true;
    std::vector<TrendViolation> violations;
};

struct BernoulliOptions {
    double p = 0.5;
    std::size_t energy_points = 5;
    /// Used when C_test is not given: quantile of the sup norms at the
    /// smallest N.
    double calibration_quantile = 0.99;
    double calibration_slack = 1e-9;
    double trend_z = 1.6448536269514722;
    unsigned threads = 0;
};

namespace detail {

/// sup over 0 <= x, y <= N (cell boundaries) and the energy subgrid of the
/// log norm of the word product; returns early once `stop_log` is exceeded.
inline double bernoulli_sup_log(const DiracParams& p, const CellWord& w, std::span<const double> energies,
                                double stop_log) {
    double best = 0.0;
    std::vector<Mat2> steps(w.size());
    for (double E : energies) {
        const Mat2 t0 = free_cell_matrix(p, E, w.level0);
        const Mat2 t1 = free_cell_matrix(p, E, w.level1);
        for (std::size_t k = 0; k < w.size(); ++k) steps[k] = w.word[k] ? t1 : t0;
        bool stopped = false;
        const auto col = column_log_sup<cplx>(steps, w.size(), stop_log, &stopped);
        for (double v : col) best = std::max(best, v);
        if (stopped) return best;
    }
    return best;
}

}  // namespace detail

inline std::uint64_t trial_stream(std::uint64_t seed, std::size_t n_index, std::size_t trial) {
    return RandomStream(seed).split((std::uint64_t(n_index) << 32) | std::uint64_t(trial)).stream();
}

/// For each N: `trials` Bernoulli words with levels (0, coupling), the sup of
/// ||Phi(E, x, y)|| over cell boundaries and K energies spread over
/// [E0 - N^{-s-1/2}, E0 + N^{-s-1/2}], and the fraction exceeding C_test.
inline BernoulliExperiment bernoulli_bound_experiment(const DiracParams& p, double coupling, double E0, double s,
                                                      std::vector<std::size_t> N_list, std::size_t trials,
                                                      std::uint64_t seed, std::optional<double> C_test = std::nullopt,
                                                      const BernoulliOptions& opt = {}) {
    if (!(s > 0)) throw std::invalid_argument("bernoulli_bound_experiment: window exponent must be positive");
    if (N_list.empty() || trials == 0) throw std::invalid_argument("bernoulli_bound_experiment: empty run");
    if (opt.energy_points == 0) throw std::invalid_argument("bernoulli_bound_experiment: need energy points");
    std::sort(N_list.begin(), N_list.end());
    BernoulliExperiment out;

    const auto energies_for = [&](std::size_t N) {
        const double half = std::pow(double(N), -s - 0.5);
        std::vector<double> e(opt.energy_points);
        if (opt.energy_points == 1) {
            e[0] = E0;
        } else {
            for (std::size_t k = 0; k < e.size(); ++k)
                e[k] = E0 - half + 2.0 * half * double(k) / double(opt.energy_points - 1);
        }
        return e;
    };
    const auto sup_logs = [&](std::size_t idx, double stop_log) {
        const std::size_t N = N_list[idx];
        const auto energies = energies_for(N);
        std::vector<double> v(trials);
        parallel_for(trials, opt.threads, [&](std::size_t t) {
            const auto w = bernoulli_word(opt.p, seed, N, 0.0, coupling, trial_stream(seed, idx, t));
            v[t] = detail::bernoulli_sup_log(p, w, energies, stop_log);
        });
        return v;
    };

    std::optional<std::vector<double>> first;
    if (C_test) {
        if (!(*C_test > 0)) throw std::invalid_argument("bernoulli_bound_experiment: C_test must be positive");
        out.C_test = *C_test;
    } else {
        first = sup_logs(0, std::numeric_limits<double>::infinity());
        auto sorted = *first;
        std::sort(sorted.begin(), sorted.end());
        const auto k = std::size_t(std::ceil(opt.calibration_quantile * double(trials))) - 1;
        out.C_test = std::exp(sorted[std::min(k, trials - 1)]) * (1.0 + opt.calibration_slack);
        out.calibrated = true;
    }
    const double stop = std::log(out.C_test);

    for (std::size_t i = 0; i < N_list.size(); ++i) {
        const auto v = (i == 0 && first) ? *first : sup_logs(i, stop);
        BernoulliRow row;
        row.N = N_list[i];
        row.trials = trials;
        row.window_half_width = std::pow(double(row.N), -s - 0.5);
        for (double x : v) row.failures += x > stop ? 1 : 0;
        row.failure_fraction = double(row.failures) / double(trials);
        const auto ci = wilson_interval(row.failures, trials);
        row.ci_low = ci.low;
        row.ci_high = ci.high;
        out.rows.push_back(row);
    }
    for (std::size_t i = 0; i < out.rows.size(); ++i)
        for (std::size_t j = i + 1; j < out.rows.size(); ++j) {
            const double z = increase_z(out.rows[i].failures, trials, out.rows[j].failures, trials);
            if (z > opt.trend_z) {
                out.trend_ok = false;
                out.violations.push_back({out.rows[i].N, out.rows[j].N, z});
            }
        }
    return out;
}

}  // namespace diraclab
