#pragma once

// Dirichlet truncation of the discrete Dirac operator on sites 1..L.
//
// Basis index (n, +) = 2(n - 1), (n, -) = 2(n - 1) + 1. The matrix is real
// symmetric tridiagonal: site blocks [[mc^2 + V(n), -c], [-c, -mc^2 + V(n)]]
// and coupling +c between (n, -) and (n + 1, +). Boundary values
// u-(0) = 0 and u+(L + 1) = 0.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "diraclab/parallel.hpp"
#include "diraclab/potentials.hpp"
#include "diraclab/transfer.hpp"

namespace diraclab {

struct LatticeOperator {
    DiracParams params;
    PotentialSeq potential;  ///< truncated to L sites
    std::size_t L = 0;
    std::vector<double> diagonal;  ///< length 2L
    std::vector<double> offdiag;   ///< length 2L - 1, entry i couples i and i + 1

    std::size_t dim() const { return 2 * L; }

    /// Eigenvalues lie in [-bound, bound].
    double gershgorin_bound() const {
        return params.rest_energy() + potential.sup_norm + 2.0 * params.light_speed;
    }

    Eigen::MatrixXd dense() const {
        const auto n = Eigen::Index(dim());
        Eigen::MatrixXd H = Eigen::MatrixXd::Zero(n, n);
        for (Eigen::Index i = 0; i < n; ++i) H(i, i) = diagonal[std::size_t(i)];
        for (Eigen::Index i = 0; i + 1 < n; ++i) H(i, i + 1) = H(i + 1, i) = offdiag[std::size_t(i)];
        return H;
    }

    /// y = H x.
    template <class T>
    std::vector<T> apply(const std::vector<T>& x) const {
        if (x.size() != dim()) throw std::invalid_argument("LatticeOperator::apply: size mismatch");
        std::vector<T> y(x.size());
        for (std::size_t i = 0; i < x.size(); ++i) {
            T s = diagonal[i] * x[i];
            if (i > 0) s += offdiag[i - 1] * x[i - 1];
            if (i + 1 < x.size()) s += offdiag[i] * x[i + 1];
            y[i] = s;
        }
        return y;
    }

    /// Site n (1-based) of basis index i.
    static std::size_t site_of(std::size_t i) { return i / 2 + 1; }
};

inline LatticeOperator build_operator(const DiracParams& p, const PotentialSeq& V, std::size_t L) {
    p.validate();
    if (L == 0) throw std::invalid_argument("build_operator: L must be positive");
    if (L > V.size()) throw std::out_of_range("build_operator: L exceeds potential length");
    LatticeOperator op;
    op.params = p;
    op.potential = V.truncated(L);
    op.L = L;
    const double mc2 = p.rest_energy();
    const double c = p.light_speed;
    op.diagonal.resize(2 * L);
    op.offdiag.resize(2 * L - 1);
    for (std::size_t n = 1; n <= L; ++n) {
        op.diagonal[2 * (n - 1)] = mc2 + V(n);
        op.diagonal[2 * (n - 1) + 1] = -mc2 + V(n);
    }
    for (std::size_t i = 0; i + 1 < 2 * L; ++i) op.offdiag[i] = (i % 2 == 0) ? -c : c;
    return op;
}

struct Eigensystem {
    Eigen::VectorXd values;   ///< ascending
    Eigen::MatrixXd vectors;  ///< orthonormal columns
};

inline constexpr std::size_t kDenseLimit = 4096;

inline Eigensystem eigensystem(const LatticeOperator& op) {
    if (op.L > kDenseLimit) throw std::invalid_argument("eigensystem: L above dense limit 4096");
    const auto n = Eigen::Index(op.dim());
    Eigen::VectorXd d = Eigen::Map<const Eigen::VectorXd>(op.diagonal.data(), n);
    Eigen::VectorXd e = Eigen::Map<const Eigen::VectorXd>(op.offdiag.data(), n - 1);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver;
    solver.computeFromTridiagonal(d, e, Eigen::ComputeEigenvectors);
    if (solver.info() != Eigen::Success) throw std::runtime_error("eigensystem: solver did not converge");
    return {solver.eigenvalues(), solver.eigenvectors()};
}

/// Spinor on sites 1..L.
struct SpinorLattice {
    std::vector<cplx> psi_plus;
    std::vector<cplx> psi_minus;

    std::size_t size() const { return psi_plus.size(); }

    static SpinorLattice delta_plus(std::size_t L, std::size_t site = 1) {
        if (site < 1 || site > L) throw std::out_of_range("delta_plus: site out of range");
        SpinorLattice s{std::vector<cplx>(L), std::vector<cplx>(L)};
        s.psi_plus[site - 1] = 1.0;
        return s;
    }

    std::vector<cplx> interleaved() const {
        std::vector<cplx> v(2 * size());
        for (std::size_t n = 0; n < size(); ++n) {
            v[2 * n] = psi_plus[n];
            v[2 * n + 1] = psi_minus[n];
        }
        return v;
    }

    static SpinorLattice from_interleaved(const std::vector<cplx>& v) {
        SpinorLattice s{std::vector<cplx>(v.size() / 2), std::vector<cplx>(v.size() / 2)};
        for (std::size_t n = 0; n < s.size(); ++n) {
            s.psi_plus[n] = v[2 * n];
            s.psi_minus[n] = v[2 * n + 1];
        }
        return s;
    }

    double norm() const {
        double s = 0;
        for (std::size_t n = 0; n < size(); ++n) s += std::norm(psi_plus[n]) + std::norm(psi_minus[n]);
        return std::sqrt(s);
    }
};

namespace detail {

inline Eigen::VectorXcd coefficients(const Eigensystem& es, const SpinorLattice& psi) {
    const auto v = psi.interleaved();
    if (Eigen::Index(v.size()) != es.values.size())
        throw std::invalid_argument("spinor size does not match operator");
    const Eigen::Map<const Eigen::VectorXcd> x(v.data(), Eigen::Index(v.size()));
    return es.vectors.transpose().cast<cplx>() * x;
}

}  // namespace detail

/// psi(t) = sum_j exp(-i E_j t) <phi_j, psi0> phi_j.
inline SpinorLattice evolve(const Eigensystem& es, const SpinorLattice& psi0, double t) {
    Eigen::VectorXcd c = detail::coefficients(es, psi0);
    for (Eigen::Index j = 0; j < c.size(); ++j) c[j] *= std::exp(cplx(0.0, -es.values[j] * t));
    const Eigen::VectorXcd out = es.vectors.cast<cplx>() * c;
    return SpinorLattice::from_interleaved(std::vector<cplx>(out.data(), out.data() + out.size()));
}

inline SpinorLattice evolve(const LatticeOperator& op, const SpinorLattice& psi0, double t) {
    return evolve(eigensystem(op), psi0, t);
}

// ---------------------------------------------------------------------------
// Abel-averaged moments
//   A(T, q) = (2/T) int_0^inf exp(-2t/T) sum_n n^q |psi(t, n)|^2 dt
// evaluated exactly in the eigenbasis:
//   A = sum_{j,k} conj(c_j) c_k M^q_{jk} (2/T) / (2/T - i (E_j - E_k)),
//   M^q_{jk} = sum_n n^q (phi_j phi_k)(n), both components.

enum class BoundaryPolicy { abort, warn, ignore };

struct BoundaryContamination : NumericalGuardError {
    using NumericalGuardError::NumericalGuardError;
};

struct MomentSample {
    double T = 0.0;
    double q = 0.0;
    double value = 0.0;
    double imag_part = 0.0;   ///< discarded imaginary part of the assembled sum
    double tail_mass = 0.0;   ///< Abel-averaged probability beyond the safety margin
    bool boundary_ok = true;
};

class SpectralMoments {
public:
    static constexpr std::size_t kMargin = 10;
    static constexpr double kTailLimit = 1e-8;
    static constexpr double kImagLimit = 1e-8;

    SpectralMoments(const LatticeOperator& op, const SpinorLattice& psi0, unsigned threads = 0)
        : op_(op), es_(eigensystem(op)), threads_(threads) {
        if (psi0.size() != op.L) throw std::invalid_argument("SpectralMoments: psi0 length != L");
        const double nrm = psi0.norm();
        if (!(nrm > 0)) throw std::invalid_argument("SpectralMoments: zero initial state");
        coeff_ = detail::coefficients(es_, psi0);
    }

    const Eigensystem& eigen() const { return es_; }
    const LatticeOperator& op() const { return op_; }

    MomentSample moment(double T, double q, BoundaryPolicy policy = BoundaryPolicy::abort) {
        if (!(T > 0)) throw std::invalid_argument("abel moment: T must be positive");
        if (!(q >= 0)) throw std::invalid_argument("abel moment: q must be nonnegative");
        MomentSample s;
        s.T = T;
        s.q = q;
        const cplx a = assemble(position_matrix(q), T);
        s.value = a.real();
        s.imag_part = a.imag();
        if (std::abs(a.imag()) > kImagLimit * std::max(1.0, std::abs(a.real())))
            throw std::runtime_error("abel moment: imaginary residue " + std::to_string(a.imag()) +
                                     " exceeds tolerance");
        if (policy != BoundaryPolicy::ignore) {
            s.tail_mass = tail_mass(T);
            s.boundary_ok = s.tail_mass < kTailLimit;
            if (!s.boundary_ok && policy == BoundaryPolicy::abort) {
                std::ostringstream os;
                os << "boundary contamination: Abel-averaged mass beyond site " << op_.L - kMargin
                   << " is " << s.tail_mass << " (limit " << kTailLimit << ") at T=" << T << ", L=" << op_.L
                   << "; increase L (suggested: " << std::max(recommended_size(op_.params, T), 2 * op_.L) << ")";
                throw BoundaryContamination(os.str());
            }
        }
        return s;
    }

    /// Abel-averaged probability on sites n > L - kMargin.
    double tail_mass(double T) {
        if (!tail_) {
            std::vector<double> w(op_.dim(), 0.0);
            for (std::size_t i = 0; i < w.size(); ++i)
                if (LatticeOperator::site_of(i) + kMargin > op_.L) w[i] = 1.0;
            tail_ = weighted_gram(w);
        }
        return std::max(0.0, assemble(*tail_, T).real());
    }

    /// ceil(7 c T) + 50. Fronts move at speed <= c and the Abel weight past
    /// time t is exp(-2t/T); 7cT keeps the tail under the limit on the
    /// disordered models tested.
    static std::size_t recommended_size(const DiracParams& p, double T) {
        return std::size_t(std::ceil(7.0 * p.light_speed * T)) + 50;
    }

private:
    const Eigen::MatrixXd& position_matrix(double q) {
        auto it = moments_.find(q);
        if (it != moments_.end()) return it->second;
        std::vector<double> w(op_.dim());
        for (std::size_t i = 0; i < w.size(); ++i)
            w[i] = q == 0.0 ? 1.0 : std::pow(double(LatticeOperator::site_of(i)), q);
        return moments_.emplace(q, weighted_gram(w)).first->second;
    }

    Eigen::MatrixXd weighted_gram(const std::vector<double>& w) const {
        const Eigen::Map<const Eigen::VectorXd> wv(w.data(), Eigen::Index(w.size()));
        Eigen::MatrixXd M;
        M.noalias() = es_.vectors.transpose() * (wv.asDiagonal() * es_.vectors);
        return M;
    }

    cplx assemble(const Eigen::MatrixXd& M, double T) const {
        const Eigen::Index n = M.rows();
        const double g = 2.0 / T;
        std::vector<cplx> rows(std::size_t(n), cplx{});
        parallel_for(std::size_t(n), threads_, [&](std::size_t jj) {
            const auto j = Eigen::Index(jj);
            const cplx cj = std::conj(coeff_[j]);
            if (cj == cplx{}) return;
            cplx acc{};
            for (Eigen::Index k = 0; k < n; ++k) {
                const double dE = es_.values[j] - es_.values[k];
                acc += coeff_[k] * M(j, k) * (g / cplx(g, -dE));
            }
            rows[jj] = cj * acc;
        });
        cplx total{};
        for (const auto& r : rows) total += r;
        return total;
    }

    LatticeOperator op_;
    Eigensystem es_;
    unsigned threads_;
    Eigen::VectorXcd coeff_;
    std::map<double, Eigen::MatrixXd> moments_;
    std::optional<Eigen::MatrixXd> tail_;
};

inline double abel_moment_direct(const LatticeOperator& op, const SpinorLattice& psi0, double T, double q,
                                 BoundaryPolicy policy = BoundaryPolicy::abort) {
    SpectralMoments sm(op, psi0);
    return sm.moment(T, q, policy).value;
}

}  // namespace diraclab
