#pragma once

// 2x2 matrix arithmetic for transfer-matrix cocycles.

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <ostream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <type_traits>

namespace diraclab {

/// Raised when a conditioning or boundary guard trips.
struct NumericalGuardError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

using cplx = std::complex<double>;

namespace detail {

template <class T>
struct is_complex : std::false_type {};
template <class T>
struct is_complex<std::complex<T>> : std::true_type {};

template <class T>
constexpr double abs2(const T& v) {
    if constexpr (is_complex<T>::value) {
        return std::norm(v);
    } else {
        return v * v;
    }
}

}  // namespace detail

/// Row-major 2x2 matrix over `T` (double or std::complex<double>).
template <class T>
struct BasicMat2 {
    T a11{}, a12{}, a21{}, a22{};

    static constexpr BasicMat2 identity() { return {T(1), T(0), T(0), T(1)}; }
    static constexpr BasicMat2 diagonal(T d1, T d2) { return {d1, T(0), T(0), d2}; }

    constexpr T det() const { return a11 * a22 - a12 * a21; }
    constexpr T trace() const { return a11 + a22; }

    /// Inverse via the adjugate. For unimodular input this is exact up to
    /// the rounding in det().
    constexpr BasicMat2 inverse() const {
        const T d = det();
        return {a22 / d, -a12 / d, -a21 / d, a11 / d};
    }

    /// Adjugate; equals the inverse when det == 1.
    constexpr BasicMat2 adjugate() const { return {a22, -a12, -a21, a11}; }

    double max_abs() const {
        return std::max({std::abs(a11), std::abs(a12), std::abs(a21), std::abs(a22)});
    }

    double frobenius() const {
        using detail::abs2;
        return std::sqrt(abs2(a11) + abs2(a12) + abs2(a21) + abs2(a22));
    }

    bool finite() const {
        auto ok = [](const T& v) {
            if constexpr (detail::is_complex<T>::value) {
                return std::isfinite(v.real()) && std::isfinite(v.imag());
            } else {
                return std::isfinite(v);
            }
        };
        return ok(a11) && ok(a12) && ok(a21) && ok(a22);
    }

    constexpr BasicMat2& operator*=(const BasicMat2& o) { return *this = *this * o; }
    constexpr BasicMat2& operator*=(T s) {
        a11 *= s; a12 *= s; a21 *= s; a22 *= s;
        return *this;
    }

    friend constexpr BasicMat2 operator*(const BasicMat2& a, const BasicMat2& b) {
        return {a.a11 * b.a11 + a.a12 * b.a21, a.a11 * b.a12 + a.a12 * b.a22,
                a.a21 * b.a11 + a.a22 * b.a21, a.a21 * b.a12 + a.a22 * b.a22};
    }
    friend constexpr BasicMat2 operator+(const BasicMat2& a, const BasicMat2& b) {
        return {a.a11 + b.a11, a.a12 + b.a12, a.a21 + b.a21, a.a22 + b.a22};
    }
    friend constexpr BasicMat2 operator-(const BasicMat2& a, const BasicMat2& b) {
        return {a.a11 - b.a11, a.a12 - b.a12, a.a21 - b.a21, a.a22 - b.a22};
    }
    friend constexpr BasicMat2 operator*(T s, const BasicMat2& a) {
        return {s * a.a11, s * a.a12, s * a.a21, s * a.a22};
    }
    friend constexpr BasicMat2 operator-(const BasicMat2& a) {
        return {-a.a11, -a.a12, -a.a21, -a.a22};
    }
    friend constexpr bool operator==(const BasicMat2&, const BasicMat2&) = default;

    friend std::ostream& operator<<(std::ostream& os, const BasicMat2& m) {
        return os << "[[" << m.a11 << ", " << m.a12 << "], [" << m.a21 << ", " << m.a22 << "]]";
    }
};

using Mat2 = BasicMat2<cplx>;
using RealMat2 = BasicMat2<double>;

inline Mat2 to_complex(const RealMat2& m) { return {m.a11, m.a12, m.a21, m.a22}; }

template <class T>
constexpr BasicMat2<T> mat_mul(const BasicMat2<T>& a, const BasicMat2<T>& b) {
    return a * b;
}

/// Largest entrywise modulus of a - b.
template <class T>
double max_entry_distance(const BasicMat2<T>& a, const BasicMat2<T>& b) {
    return (a - b).max_abs();
}

/// Distance of m to the nearer of +I and -I (max-entry metric).
template <class T>
double distance_to_pm_identity(const BasicMat2<T>& m) {
    const auto id = BasicMat2<T>::identity();
    return std::min(max_entry_distance(m, id), max_entry_distance(m, -id));
}

/// Spectral norm (largest singular value), from the larger eigenvalue of
/// m^H m written as mean + hypot so nearly equal singular values keep full
/// relative precision.
template <class T>
double operator_norm(const BasicMat2<T>& m) {
    const double h11 = detail::abs2(m.a11) + detail::abs2(m.a21);
    const double h22 = detail::abs2(m.a12) + detail::abs2(m.a22);
    const cplx h12 = std::conj(cplx(m.a11)) * cplx(m.a12) + std::conj(cplx(m.a21)) * cplx(m.a22);
    return std::sqrt(0.5 * (h11 + h22) + std::hypot(0.5 * (h11 - h22), std::abs(h12)));
}

template <class T>
BasicMat2<T> commutator(const BasicMat2<T>& a, const BasicMat2<T>& b) {
    return a * b - b * a;
}

enum class MatClass { elliptic, parabolic, hyperbolic, plus_identity, minus_identity, indeterminate };

constexpr std::string_view to_string(MatClass c) {
    switch (c) {
        case MatClass::elliptic: return "elliptic";
        case MatClass::parabolic: return "parabolic";
        case MatClass::hyperbolic: return "hyperbolic";
        case MatClass::plus_identity: return "plus_identity";
        case MatClass::minus_identity: return "minus_identity";
        case MatClass::indeterminate: return "indeterminate";
    }
    return "indeterminate";
}

inline constexpr double kDefaultClassTol = 1e-9;

/// SL(2) conjugacy class of a unimodular matrix. One band `tol` governs the
/// +-I test, the parabolic trace test and the elliptic imaginary-trace test.
/// Complex-trace inputs that are not hyperbolic come back indeterminate.
template <class T>
MatClass classify(const BasicMat2<T>& m, double tol = kDefaultClassTol) {
    if (!m.finite()) throw std::domain_error("classify: non-finite matrix");
    if (std::abs(m.det() - T(1)) > tol) {
        throw std::domain_error("classify: matrix is not unimodular within tolerance");
    }
    const auto id = BasicMat2<T>::identity();
    if (max_entry_distance(m, id) <= tol) return MatClass::plus_identity;
    if (max_entry_distance(m, -id) <= tol) return MatClass::minus_identity;

    const cplx tr(m.trace());
    const double re = std::abs(tr.real());
    const double im = std::abs(tr.imag());
    if (re > 2.0 + tol) return MatClass::hyperbolic;
    if (im > tol) return MatClass::indeterminate;
    if (re < 2.0 - tol) return MatClass::elliptic;
    return MatClass::parabolic;
}

inline bool is_rotation_like(MatClass c) {
    return c == MatClass::elliptic || c == MatClass::plus_identity || c == MatClass::minus_identity;
}

/// Rotation angle eta in [0, pi] with 2 cos(eta) = Re trace. The conjugator
/// to the rotation form is never built; only the trace is used.
template <class T>
double rotation_angle(const BasicMat2<T>& m, double tol = kDefaultClassTol) {
    const MatClass c = classify(m, tol);
    switch (c) {
        case MatClass::plus_identity: return 0.0;
        case MatClass::minus_identity: return std::numbers::pi;
        case MatClass::elliptic: {
            const double half = std::clamp(cplx(m.trace()).real() / 2.0, -1.0, 1.0);
            return std::acos(half);
        }
        default:
            throw std::domain_error("rotation_angle: matrix is " + std::string(to_string(c)));
    }
}

}  // namespace diraclab
