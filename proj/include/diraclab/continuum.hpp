#pragma once

// Continuum Dirac operator with a constant potential on each unit cell:
// closed-form cell matrices, free fundamental solutions, the pairing [g, f]
// and the admissibility test for compactly supported initial states.

#include <algorithm>
#include <cmath>
#include <complex>
#include <fstream>
#include <functional>
#include <iomanip>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "diraclab/algebra.hpp"
#include "diraclab/potentials.hpp"
#include "diraclab/transfer.hpp"

namespace diraclab {

/// xi_E = sqrt(E^2 - m^2 c^4) / c, principal branch (positive imaginary in
/// the gap).
inline cplx xi(const DiracParams& p, double E) {
    const double mc2 = p.rest_energy();
    return std::sqrt(cplx((E - mc2) * (E + mc2), 0.0)) / p.light_speed;
}

namespace detail {

inline constexpr double kSeriesBelow = 1e-4;

/// sin(z)/z, with a Taylor branch near 0.
inline cplx sinc(cplx z) {
    if (std::abs(z) < kSeriesBelow) {
        const cplx z2 = z * z;
        return 1.0 - z2 / 6.0 + z2 * z2 / 120.0;
    }
    return std::sin(z) / z;
}

}  // namespace detail

/// Transfer matrix over one unit cell with constant potential v, mapping
/// (u+(0), u-(0)) to (u+(1), u-(1)):
///   [[cos xi, i (E' + mc^2)/c * sin(xi)/xi], [-i (mc^2 - E')/c * sin(xi)/xi, cos xi]],
/// E' = E - v. The entries are entire in E', so the gap and its edges need
/// no special casing beyond the sinc series.
inline Mat2 free_cell_matrix(const DiracParams& p, double E, double v) {
    const double c = p.light_speed;
    const double mc2 = p.rest_energy();
    const double e = E - v;
    const cplx k = xi(p, e);
    const cplx C = std::cos(k);
    const cplx S = detail::sinc(k);
    const cplx I(0.0, 1.0);
    return {C, I * ((e + mc2) / c) * S, -I * ((mc2 - e) / c) * S, C};
}

/// Product of cell matrices over cells y..x-1 (cell n carries the level of
/// word[n]); later cells multiply on the left. x < y gives the inverse.
inline Mat2 word_product(const DiracParams& p, double E, const CellWord& w, std::size_t x_cells,
                         std::size_t y_cells) {
    if (x_cells > w.size() || y_cells > w.size())
        throw std::out_of_range("word_product: cell index beyond word length");
    if (x_cells < y_cells) return word_product(p, E, w, y_cells, x_cells).inverse();
    const Mat2 t0 = free_cell_matrix(p, E, w.level0);
    const Mat2 t1 = free_cell_matrix(p, E, w.level1);
    Mat2 m = Mat2::identity();
    for (std::size_t n = y_cells; n < x_cells; ++n) m = (w.word[n] ? t1 : t0) * m;
    return m;
}

/// Two-component function sampled on the grid x.
struct SpinorSamples {
    std::vector<double> x;
    std::vector<cplx> plus;
    std::vector<cplx> minus;

    std::size_t size() const { return x.size(); }
};

struct FreeSolutions {
    cplx xi;
    SpinorSamples neumann;    ///< u^N, u^N(0) = (1, 0)
    SpinorSamples dirichlet;  ///< u^D, u^D(0) = (0, 1)
};

/// Fundamental solutions of the free equation at energy E relative to the
/// constant level v (i.e. at E' = E - v):
///   u^N = (cos(xi x), -i (mc^2 - E')/(c xi) sin(xi x))
///   u^D = (-i c xi/(mc^2 - E') sin(xi x), cos(xi x))
inline FreeSolutions free_solutions(const DiracParams& p, double E, std::span<const double> x_grid,
                                    double v = 0.0) {
    const double c = p.light_speed;
    const double mc2 = p.rest_energy();
    const double e = E - v;
    if (!(e * e > mc2 * mc2))
        throw std::domain_error("free_solutions: energy lies in the gap (E'^2 <= m^2 c^4)");
    const cplx k = xi(p, e);
    const cplx I(0.0, 1.0);
    FreeSolutions out{k, {}, {}};
    const std::size_t n = x_grid.size();
    out.neumann.x.assign(x_grid.begin(), x_grid.end());
    out.dirichlet.x = out.neumann.x;
    out.neumann.plus.resize(n);
    out.neumann.minus.resize(n);
    out.dirichlet.plus.resize(n);
    out.dirichlet.minus.resize(n);
    for (std::size_t j = 0; j < n; ++j) {
        const double t = x_grid[j];
        const cplx C = std::cos(k * t);
        const cplx tS = t * detail::sinc(k * t);  // sin(xi t)/xi
        out.neumann.plus[j] = C;
        out.neumann.minus[j] = -I * ((mc2 - e) / c) * tS;
        out.dirichlet.plus[j] = I * ((e + mc2) / c) * tS;
        out.dirichlet.minus[j] = C;
    }
    return out;
}

/// Compactly supported state sampled on the uniform grid k*h, k = 0..s/h.
struct CompactState {
    double support_end = 1.0;
    double grid_step = 1.0 / 256.0;
    std::vector<cplx> plus;
    std::vector<cplx> minus;

    static constexpr double kDefaultStep = 1.0 / 256.0;

    std::size_t intervals() const { return plus.empty() ? 0 : plus.size() - 1; }
    double x(std::size_t k) const { return double(k) * grid_step; }
    std::vector<double> grid() const {
        std::vector<double> g(plus.size());
        for (std::size_t k = 0; k < g.size(); ++k) g[k] = x(k);
        return g;
    }

    void validate() const {
        if (!(support_end > 0) || !(grid_step > 0))
            throw std::invalid_argument("CompactState: support_end and grid_step must be positive");
        const double r = support_end / grid_step;
        const double n = std::round(r);
        if (std::abs(r - n) > 1e-9 * std::max(1.0, r) || n < 1)
            throw std::invalid_argument("CompactState: support_end must be a multiple of grid_step");
        if (plus.size() != std::size_t(n) + 1 || minus.size() != plus.size())
            throw std::invalid_argument("CompactState: expected " + std::to_string(std::size_t(n) + 1) +
                                        " samples per component");
        for (std::size_t k = 0; k < plus.size(); ++k)
            if (!std::isfinite(std::abs(plus[k])) || !std::isfinite(std::abs(minus[k])))
                throw std::invalid_argument("CompactState: non-finite sample");
    }

    static CompactState sample(double s, double h, const std::function<cplx(double)>& f_plus,
                               const std::function<cplx(double)>& f_minus) {
        CompactState st;
        st.support_end = s;
        st.grid_step = h;
        const auto n = std::size_t(std::llround(s / h));
        st.plus.resize(n + 1);
        st.minus.resize(n + 1);
        for (std::size_t k = 0; k <= n; ++k) {
            const double t = double(k) * h;
            st.plus[k] = f_plus ? f_plus(t) : cplx{};
            st.minus[k] = f_minus ? f_minus(t) : cplx{};
        }
        st.validate();
        return st;
    }
};

namespace detail {

/// Composite Simpson weights for n intervals of width h; an odd interval
/// count closes with the 3/8 rule on the last three intervals.
inline std::vector<double> simpson_weights(std::size_t n, double h) {
    if (n == 0) throw std::invalid_argument("quadrature: need at least one interval");
    std::vector<double> w(n + 1, 0.0);
    if (n == 1) {
        w[0] = w[1] = h / 2;
        return w;
    }
    const std::size_t simpson_end = (n % 2 == 0) ? n : n - 3;
    for (std::size_t k = 0; k + 2 <= simpson_end; k += 2) {
        w[k] += h / 3;
        w[k + 1] += 4 * h / 3;
        w[k + 2] += h / 3;
    }
    if (simpson_end != n) {
        const std::size_t k = simpson_end;
        w[k] += 3 * h / 8;
        w[k + 1] += 9 * h / 8;
        w[k + 2] += 9 * h / 8;
        w[k + 3] += 3 * h / 8;
    }
    return w;
}

inline void check_grid(std::span<const double> x, const CompactState& f) {
    if (x.size() != f.plus.size())
        throw std::invalid_argument("bracket: grid mismatch (" + std::to_string(x.size()) + " vs " +
                                    std::to_string(f.plus.size()) + " samples)");
    for (std::size_t k = 0; k < x.size(); ++k)
        if (std::abs(x[k] - f.x(k)) > 1e-12 * std::max(1.0, f.support_end))
            throw std::invalid_argument("bracket: grid mismatch at sample " + std::to_string(k));
}

}  // namespace detail

/// [g, f] = int_0^s (conj(g+) f+ + conj(g-) f-) dt.
inline cplx bracket(const SpinorSamples& g, const CompactState& f) {
    f.validate();
    detail::check_grid(g.x, f);
    const auto w = detail::simpson_weights(f.intervals(), f.grid_step);
    cplx acc{};
    for (std::size_t k = 0; k < w.size(); ++k)
        acc += w[k] * (std::conj(g.plus[k]) * f.plus[k] + std::conj(g.minus[k]) * f.minus[k]);
    return acc;
}

inline SpinorSamples as_samples(const CompactState& f) { return {f.grid(), f.plus, f.minus}; }

inline cplx bracket(const CompactState& g, const CompactState& f) { return bracket(as_samples(g), f); }

inline SpinorSamples conj(const SpinorSamples& g) {
    SpinorSamples out = g;
    for (auto& v : out.plus) v = std::conj(v);
    for (auto& v : out.minus) v = std::conj(v);
    return out;
}

inline double l2_norm(const CompactState& f) { return std::sqrt(std::max(0.0, bracket(f, f).real())); }

// CompactState text format:
//   support_end <s>
//   grid_step <h>
//   (re,im) (re,im)        one row per grid point k*h, k = 0..s/h, for (f+, f-)

inline CompactState read_compact_state(std::istream& in, const std::string& name = "stream") {
    CompactState st;
    bool have_s = false, have_h = false;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos || line[first] == '#') continue;
        std::istringstream ls(line);
        const auto where = [&] { return name + ":" + std::to_string(lineno) + ": "; };
        if (line[first] != '(') {
            std::string key;
            double v = 0;
            if (!(ls >> key >> v)) throw std::runtime_error(where() + "bad header line");
            if (key == "support_end") {
                st.support_end = v;
                have_s = true;
            } else if (key == "grid_step") {
                st.grid_step = v;
                have_h = true;
            } else {
                throw std::runtime_error(where() + "unknown header '" + key + "'");
            }
            continue;
        }
        cplx a, b;
        if (!(ls >> a >> b)) throw std::runtime_error(where() + "expected two complex values");
        st.plus.push_back(a);
        st.minus.push_back(b);
    }
    if (!have_s || !have_h) throw std::runtime_error(name + ": missing support_end or grid_step header");
    try {
        st.validate();
    } catch (const std::invalid_argument& e) {
        throw std::runtime_error(name + ": " + e.what());
    }
    return st;
}

inline CompactState load_compact_state(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open state file: " + path);
    return read_compact_state(in, path);
}

inline void write_compact_state(std::ostream& out, const CompactState& st) {
    out << std::setprecision(17) << "support_end " << st.support_end << "\ngrid_step " << st.grid_step << '\n';
    for (std::size_t k = 0; k < st.plus.size(); ++k) out << st.plus[k] << ' ' << st.minus[k] << '\n';
}

// ---------------------------------------------------------------------------
// Admissibility.

enum class AdmissibilityCase { plus_only, minus_only, both_components };

constexpr const char* to_string(AdmissibilityCase c) {
    switch (c) {
        case AdmissibilityCase::plus_only: return "plus_only";
        case AdmissibilityCase::minus_only: return "minus_only";
        case AdmissibilityCase::both_components: return "both_components";
    }
    return "?";
}

struct AdmissibilityReport {
    AdmissibilityCase case_tag = AdmissibilityCase::both_components;
    cplx pairing_w;  ///< [conj(w_E), f]
    cplx pairing_v;  ///< [conj(v_E), f]
    cplx pairing_n;  ///< [conj(u^N), f] restricted to the nonzero component
    cplx pairing_d;  ///< [conj(u^D), f] restricted to the nonzero component
    bool admissible = false;
    double energy = 0.0;
    double threshold = 0.0;  ///< rel_tol * ||f||
};

struct AdmissibilityOptions {
    double rel_tol = 1e-9;
    double level = 0.0;  ///< constant potential on the support
};

/// Decides membership of f in H_E. Single-component states are tested
/// against both fundamental solutions; two-component states use
///   w_E = u+^N(0) (-u+^D, u-^D) + u+^D(0) (u+^N, -u-^N)
///   v_E = u-^N(0) (-u+^D, u-^D) + u-^D(0) (u+^N, -u-^N).
inline AdmissibilityReport admissibility(const DiracParams& p, double E, const CompactState& f,
                                         const AdmissibilityOptions& opt = {}) {
    f.validate();
    const double norm = l2_norm(f);
    if (!(norm > 0)) throw std::invalid_argument("admissibility: zero state");
    const auto grid = f.grid();
    const auto sol = free_solutions(p, E, grid, opt.level);
    const auto& uN = sol.neumann;
    const auto& uD = sol.dirichlet;

    AdmissibilityReport r;
    r.energy = E;
    r.threshold = opt.rel_tol * norm;

    CompactState fp = f, fm = f;
    std::fill(fp.minus.begin(), fp.minus.end(), cplx{});
    std::fill(fm.plus.begin(), fm.plus.end(), cplx{});
    const bool has_plus = l2_norm(fp) > r.threshold;
    const bool has_minus = l2_norm(fm) > r.threshold;

    // w_E and v_E, with the pinned values u^N(0) = (1, 0), u^D(0) = (0, 1)
    // read from the samples.
    const std::size_t n = grid.size();
    SpinorSamples w{grid, std::vector<cplx>(n), std::vector<cplx>(n)};
    SpinorSamples v = w;
    const cplx nP0 = uN.plus[0], nM0 = uN.minus[0], dP0 = uD.plus[0], dM0 = uD.minus[0];
    for (std::size_t k = 0; k < n; ++k) {
        w.plus[k] = nP0 * -uD.plus[k] + dP0 * uN.plus[k];
        w.minus[k] = nP0 * uD.minus[k] - dP0 * uN.minus[k];
        v.plus[k] = nM0 * -uD.plus[k] + dM0 * uN.plus[k];
        v.minus[k] = nM0 * uD.minus[k] - dM0 * uN.minus[k];
    }
    r.pairing_w = bracket(conj(w), f);
    r.pairing_v = bracket(conj(v), f);

    if (has_plus && !has_minus) {
        r.case_tag = AdmissibilityCase::plus_only;
        r.pairing_n = bracket(conj(uN), fp);
        r.pairing_d = bracket(conj(uD), fp);
        r.admissible = std::max(std::abs(r.pairing_n), std::abs(r.pairing_d)) > r.threshold;
    } else if (!has_plus && has_minus) {
        r.case_tag = AdmissibilityCase::minus_only;
        r.pairing_n = bracket(conj(uN), fm);
        r.pairing_d = bracket(conj(uD), fm);
        r.admissible = std::max(std::abs(r.pairing_n), std::abs(r.pairing_d)) > r.threshold;
    } else {
        r.case_tag = AdmissibilityCase::both_components;
        r.pairing_n = bracket(conj(uN), f);
        r.pairing_d = bracket(conj(uD), f);
        r.admissible = std::max(std::abs(r.pairing_w), std::abs(r.pairing_v)) > r.threshold;
    }
    return r;
}

}  // namespace diraclab
