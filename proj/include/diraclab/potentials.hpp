#pragma once

// Potential families: two-valued, Bernoulli, Thue-Morse, Sturmian and
// file-loaded site potentials, plus Bernoulli cell words for the continuum
// model.

#include <bit>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <limits>
#include <optional>
#include <sstream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "diraclab/rng.hpp"

namespace diraclab {

/// Site potential V(n), n = 1..size(). `sup_norm` bounds |V| and is attained
/// for the built-in families.
struct PotentialSeq {
    std::vector<double> values;
    double sup_norm = 0.0;
    std::string provenance;

    std::size_t size() const { return values.size(); }
    /// 1-based site access.
    double operator()(std::size_t n) const { return values.at(n - 1); }

    /// First L sites.
    PotentialSeq truncated(std::size_t L) const {
        if (L > size()) throw std::out_of_range("PotentialSeq::truncated: L exceeds length");
        PotentialSeq out{{values.begin(), values.begin() + std::ptrdiff_t(L)}, 0.0, provenance};
        for (double v : out.values) out.sup_norm = std::max(out.sup_norm, std::abs(v));
        return out;
    }
};

/// Binary cell word omega_0..omega_{N-1} with the constant potential level
/// carried by each cell type.
struct CellWord {
    std::vector<std::uint8_t> word;
    double level0 = 0.0;
    double level1 = 0.0;
    std::optional<double> bernoulli_p;

    std::size_t size() const { return word.size(); }
    double level(std::size_t n) const { return word.at(n) ? level1 : level0; }
};

namespace detail {

inline double sup_of(std::span<const double> v) {
    double s = 0.0;
    for (double x : v) s = std::max(s, std::abs(x));
    return s;
}

inline std::string fmt_real(double v) {
    std::ostringstream os;
    os << std::setprecision(17) << v;
    return os.str();
}

/// frac(n * rho + theta) with the product n*rho carried as an exact
/// double-double (two-product via fma).
inline double rotation_frac(std::uint64_t n, double rho, double theta) {
    const double x = double(n);
    const double hi = x * rho;
    const double lo = std::fma(x, rho, -hi);
    const double hi_frac = hi - std::floor(hi);
    double t = hi_frac + theta;
    t += lo;
    t -= std::floor(t);
    if (t >= 1.0) t = 0.0;
    return t;
}

}  // namespace detail

inline PotentialSeq two_valued(double a, double b, std::span<const std::uint8_t> pattern) {
    if (pattern.empty()) throw std::invalid_argument("two_valued: empty pattern");
    PotentialSeq out;
    out.values.reserve(pattern.size());
    for (auto bit : pattern) {
        if (bit > 1) throw std::invalid_argument("two_valued: pattern must be binary");
        out.values.push_back(bit ? b : a);
    }
    out.sup_norm = detail::sup_of(out.values);
    out.provenance = "two_valued(a=" + detail::fmt_real(a) + ",b=" + detail::fmt_real(b) + ")";
    return out;
}

inline PotentialSeq constant_potential(double v, std::size_t L) {
    if (L == 0) throw std::invalid_argument("constant_potential: L must be positive");
    return {std::vector<double>(L, v), std::abs(v), "constant(" + detail::fmt_real(v) + ")"};
}

/// i.i.d. bits with P(0) = p drawn from the counter stream (seed, stream).
inline std::vector<std::uint8_t> bernoulli_bits(double p, std::uint64_t seed, std::size_t N,
                                                std::uint64_t stream = 0) {
    if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("bernoulli: p must lie in (0, 1)");
    const RandomStream rng(seed, stream);
    std::vector<std::uint8_t> bits(N);
    for (std::size_t n = 0; n < N; ++n) bits[n] = rng.uniform(n) < p ? 0 : 1;
    return bits;
}

inline CellWord bernoulli_word(double p, std::uint64_t seed, std::size_t N, double level0 = 0.0,
                               double level1 = 1.0, std::uint64_t stream = 0) {
    return {bernoulli_bits(p, seed, N, stream), level0, level1, p};
}

/// Two-valued site potential with a Bernoulli pattern (P(V = a) = p).
inline PotentialSeq bernoulli_potential(double a, double b, double p, std::uint64_t seed,
                                        std::size_t L, std::uint64_t stream = 0) {
    auto out = two_valued(a, b, bernoulli_bits(p, seed, L, stream));
    out.provenance = "bernoulli(a=" + detail::fmt_real(a) + ",b=" + detail::fmt_real(b) +
                     ",p=" + detail::fmt_real(p) + ",seed=" + std::to_string(seed) +
                     ",stream=" + std::to_string(stream) + ")";
    return out;
}

/// Letter n (0-indexed) of the Thue-Morse fixed point a -> ab, b -> ba.
constexpr std::uint8_t thue_morse_letter(std::uint64_t n) {
    return std::uint8_t(std::popcount(n) & 1u);
}

inline PotentialSeq thue_morse(double a, double b, std::size_t L) {
    if (L == 0) throw std::invalid_argument("thue_morse: L must be positive");
    std::vector<std::uint8_t> pattern(L);
    for (std::size_t n = 0; n < L; ++n) pattern[n] = thue_morse_letter(n);
    auto out = two_valued(a, b, pattern);
    out.provenance = "thue_morse(a=" + detail::fmt_real(a) + ",b=" + detail::fmt_real(b) + ")";
    return out;
}

/// V(n) = coupling if frac(n*rho + theta) lies in [1 - rho, 1), else 0.
inline PotentialSeq sturmian(double coupling, double rho, double theta, std::size_t L) {
    if (coupling == 0.0) throw std::invalid_argument("sturmian: coupling must be nonzero");
    if (!(rho > 0.0 && rho < 1.0)) throw std::invalid_argument("sturmian: rho must lie in (0, 1)");
    if (!(theta >= 0.0 && theta < 1.0))
        throw std::invalid_argument("sturmian: theta must lie in [0, 1)");
    // Rational rotation numbers with small denominators give periodic words.
    for (int q = 1; q <= 64; ++q) {
        const double pq = std::round(rho * q);
        if (std::abs(rho * q - pq) < 1e-12 * q)
            throw std::invalid_argument("sturmian: rho is a small-denominator rational");
    }
    if (L == 0) throw std::invalid_argument("sturmian: L must be positive");
    PotentialSeq out;
    out.values.resize(L);
    const double lower = 1.0 - rho;
    for (std::size_t n = 1; n <= L; ++n) {
        out.values[n - 1] = detail::rotation_frac(n, rho, theta) >= lower ? coupling : 0.0;
    }
    out.sup_norm = detail::sup_of(out.values);
    out.provenance = "sturmian(lambda=" + detail::fmt_real(coupling) +
                     ",rho=" + detail::fmt_real(rho) + ",theta=" + detail::fmt_real(theta) + ")";
    return out;
}

inline double golden_mean_rotation() { return (std::sqrt(5.0) - 1.0) / 2.0; }

// Text format: optional header line `sup_norm <value>`, then one real per
// line in site order. Blank lines and lines starting with '#' are skipped.

inline PotentialSeq read_potential(std::istream& in, const std::string& name = "stream") {
    PotentialSeq out;
    std::optional<double> declared;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos || line[first] == '#') continue;
        std::istringstream ls(line);
        if (line.compare(first, 8, "sup_norm") == 0) {
            if (!out.values.empty() || declared)
                throw std::runtime_error(name + ":" + std::to_string(lineno) +
                                         ": sup_norm header must come first");
            std::string key;
            double v = 0;
            if (!(ls >> key >> v) || v < 0)
                throw std::runtime_error(name + ":" + std::to_string(lineno) + ": bad sup_norm");
            declared = v;
            continue;
        }
        double v = 0;
        std::string rest;
        if (!(ls >> v) || (ls >> rest) || !std::isfinite(v))
            throw std::runtime_error(name + ":" + std::to_string(lineno) + ": expected one real");
        out.values.push_back(v);
    }
    if (out.values.empty()) throw std::runtime_error(name + ": no potential values");
    const double actual = detail::sup_of(out.values);
    if (declared) {
        if (actual > *declared)
            throw std::runtime_error(name + ": values exceed declared sup_norm");
        out.sup_norm = *declared;
    } else {
        out.sup_norm = actual;
    }
    out.provenance = "file(" + name + ")";
    return out;
}

inline PotentialSeq load_potential(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open potential file: " + path);
    return read_potential(in, path);
}

inline void write_potential(std::ostream& out, const PotentialSeq& v) {
    out << "sup_norm " << std::setprecision(17) << v.sup_norm << '\n';
    for (double x : v.values) out << x << '\n';
}

}  // namespace diraclab
