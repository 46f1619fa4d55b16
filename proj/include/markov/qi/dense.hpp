#pragma once

// Dense states and channels on small qubit registers.
//
// Qubit 0 is the most significant bit of a basis index, so a register
// (q0, q1, ..., q_{n-1}) is ordered like the Kronecker product q0 ⊗ q1 ⊗ ...
// Superoperators act on column-stacked matrices: vec(X)[i + d*j] = X(i, j),
// and vec(K X K^†) = (conj(K) ⊗ K) vec(X).

#include <algorithm>
#include <bit>
#include <cmath>
#include <complex>
#include <cstdint>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <unsupported/Eigen/KroneckerProduct>
#include <unsupported/Eigen/MatrixFunctions>

namespace markov::qi {

using cplx = std::complex<double>;
using CMat = Eigen::MatrixXcd;
using CVec = Eigen::VectorXcd;

inline constexpr int kMaxQubits = 12;
inline constexpr int kMaxChannelQubits = 6;  // dense superoperators: 4^6 x 4^6

inline void check_register(int n, int limit = kMaxQubits) {
    if (n < 0 || n > limit)
        throw std::invalid_argument("register of " + std::to_string(n) + " qubits exceeds the dense limit of " + std::to_string(limit));
}

inline int qubits_of_dim(Eigen::Index d) {
    int n = 0;
    while ((Eigen::Index{1} << n) < d) ++n;
    if ((Eigen::Index{1} << n) != d) throw std::invalid_argument("dimension " + std::to_string(d) + " is not a power of two");
    return n;
}

inline CMat pauli(char which) {
    CMat m(2, 2);
    switch (which) {
        case 'I': m << 1, 0, 0, 1; break;
        case 'X': m << 0, 1, 1, 0; break;
        case 'Y': m << 0, cplx(0, -1), cplx(0, 1), 0; break;
        case 'Z': m << 1, 0, 0, -1; break;
        default: throw std::invalid_argument(std::string("unknown Pauli ") + which);
    }
    return m;
}

inline CMat kron(const CMat& a, const CMat& b) { return Eigen::kroneckerProduct(a, b).eval(); }

/// Index bookkeeping for a subset of an n-qubit register: every basis index
/// splits into a sub-index over `sites` (in the given order) and a rest index
/// over the remaining qubits (in register order).
struct Split {
    int n = 0;
    std::vector<int> sites, rest_sites;
    std::vector<std::uint32_t> sub, rest;

    Split(int n_qubits, const std::vector<int>& s) : n(n_qubits), sites(s) {
        check_register(n);
        std::vector<char> used(static_cast<std::size_t>(n), 0);
        for (int q : sites) {
            if (q < 0 || q >= n) throw std::invalid_argument("qubit " + std::to_string(q) + " outside a register of " + std::to_string(n));
            if (used[static_cast<std::size_t>(q)]) throw std::invalid_argument("qubit " + std::to_string(q) + " listed twice");
            used[static_cast<std::size_t>(q)] = 1;
        }
        for (int q = 0; q < n; ++q)
            if (!used[static_cast<std::size_t>(q)]) rest_sites.push_back(q);
        const std::size_t D = std::size_t{1} << n;
        sub.resize(D);
        rest.resize(D);
        for (std::size_t i = 0; i < D; ++i) {
            std::uint32_t a = 0, b = 0;
            for (int q : sites) a = (a << 1) | ((i >> (n - 1 - q)) & 1);
            for (int q : rest_sites) b = (b << 1) | ((i >> (n - 1 - q)) & 1);
            sub[i] = a;
            rest[i] = b;
        }
    }
    Eigen::Index dim() const { return Eigen::Index{1} << n; }
    Eigen::Index sub_dim() const { return Eigen::Index{1} << sites.size(); }
    Eigen::Index rest_dim() const { return Eigen::Index{1} << rest_sites.size(); }
};

/// Operator on `sites` (ordered) tensored with the identity elsewhere.
inline CMat embed(const CMat& op, const std::vector<int>& sites, int n) {
    Split s(n, sites);
    if (op.rows() != s.sub_dim() || op.cols() != s.sub_dim()) throw std::invalid_argument("embed: operator does not match its sites");
    CMat out = CMat::Zero(s.dim(), s.dim());
    for (Eigen::Index i = 0; i < s.dim(); ++i)
        for (Eigen::Index j = 0; j < s.dim(); ++j)
            if (s.rest[i] == s.rest[j]) out(i, j) = op(s.sub[i], s.sub[j]);
    return out;
}

inline CMat partial_trace(const CMat& rho, int n, const std::vector<int>& keep) {
    Split s(n, keep);
    CMat out = CMat::Zero(s.sub_dim(), s.sub_dim());
    for (Eigen::Index i = 0; i < s.dim(); ++i)
        for (Eigen::Index j = 0; j < s.dim(); ++j)
            if (s.rest[i] == s.rest[j]) out(s.sub[i], s.sub[j]) += rho(i, j);
    return out;
}

inline bool is_hermitian(const CMat& m, double tol = 1e-12) { return (m - m.adjoint()).cwiseAbs().maxCoeff() <= tol; }

/// Eigenvalues of the Hermitian part.
inline Eigen::VectorXd hermitian_eigenvalues(const CMat& m) {
    Eigen::SelfAdjointEigenSolver<CMat> es(0.5 * (m + m.adjoint()), Eigen::EigenvaluesOnly);
    return es.eigenvalues();
}

inline double trace_norm(const CMat& m) {
    if (is_hermitian(m, 1e-13 * std::max(1.0, m.cwiseAbs().maxCoeff()))) return hermitian_eigenvalues(m).cwiseAbs().sum();
    Eigen::BDCSVD<CMat> svd(m);
    return svd.singularValues().sum();
}

/// A density matrix with its register size.
class DensityMatrix {
public:
    DensityMatrix() = default;
    explicit DensityMatrix(CMat m, double tol = 1e-12) : m_(std::move(m)) {
        n_ = qubits_of_dim(m_.rows());
        check_register(n_);
        if (m_.rows() != m_.cols()) throw std::invalid_argument("density matrix must be square");
        validate(tol);
    }

    static DensityMatrix pure(const CVec& psi) {
        CVec v = psi / psi.norm();
        return DensityMatrix(v * v.adjoint());
    }
    static DensityMatrix maximally_mixed(int n) {
        check_register(n);
        const Eigen::Index d = Eigen::Index{1} << n;
        return DensityMatrix(CMat::Identity(d, d) / static_cast<double>(d));
    }

    const CMat& matrix() const { return m_; }
    int num_qubits() const { return n_; }
    Eigen::Index dim() const { return m_.rows(); }

    /// Hermitian to tol, unit trace to tol, eigenvalues >= -1e-10.
    void validate(double tol = 1e-12) const {
        if (!is_hermitian(m_, tol)) throw std::invalid_argument("density matrix is not Hermitian");
        if (std::abs(m_.trace() - cplx(1.0)) > tol) throw std::invalid_argument("density matrix trace differs from 1");
        if (hermitian_eigenvalues(m_).minCoeff() < -1e-10) throw std::invalid_argument("density matrix is not positive semidefinite");
    }

    DensityMatrix reduced(const std::vector<int>& keep) const { return DensityMatrix(partial_trace(m_, n_, keep), 1e-10); }

private:
    CMat m_;
    int n_ = 0;
};

/// Von Neumann entropy in bits.
inline double entropy_bits(const CMat& rho) {
    auto ev = hermitian_eigenvalues(rho);
    if (ev.minCoeff() < -1e-10) throw std::invalid_argument("entropy: matrix is not positive semidefinite");
    double s = 0.0;
    for (double l : ev)
        if (l > 1e-15) s -= l * std::log2(l);
    return s;
}

inline double entropy_bits(const DensityMatrix& rho) { return entropy_bits(rho.matrix()); }

struct CmiReport {
    double S_AB, S_B, S_BC, S_ABC, cmi;
};

/// S(AB) + S(BC) - S(B) - S(ABC) in bits for disjoint qubit lists A, B, C.
inline CmiReport entropies(const DensityMatrix& rho, const std::vector<int>& A, const std::vector<int>& B,
                           const std::vector<int>& C) {
    auto cat = [](std::vector<int> a, const std::vector<int>& b) {
        a.insert(a.end(), b.begin(), b.end());
        return a;
    };
    const int n = rho.num_qubits();
    auto S = [&](const std::vector<int>& keep) { return keep.empty() ? 0.0 : entropy_bits(partial_trace(rho.matrix(), n, keep)); };
    CmiReport r;
    r.S_AB = S(cat(A, B));
    r.S_B = S(B);
    r.S_BC = S(cat(B, C));
    r.S_ABC = S(cat(cat(A, B), C));
    r.cmi = r.S_AB + r.S_BC - r.S_B - r.S_ABC;
    return r;
}

/// (1 - p) rho + p Z rho Z on each listed qubit. Z conjugation multiplies an
/// entry by -1 when row and column differ in that bit, so the product channel
/// scales entry (i, j) by (1 - 2p)^(number of listed bits where i, j differ).
inline DensityMatrix dephase(const DensityMatrix& rho, double p, const std::vector<int>& sites) {
    if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("dephase: p must lie in [0, 1]");
    const int n = rho.num_qubits();
    std::uint64_t mask = 0;
    for (int q : sites) {
        if (q < 0 || q >= n) throw std::invalid_argument("dephase: invalid site " + std::to_string(q));
        mask |= std::uint64_t{1} << (n - 1 - q);
    }
    CMat m = rho.matrix();
    const double f = 1.0 - 2.0 * p;
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            const int k = std::popcount((static_cast<std::uint64_t>(i) ^ static_cast<std::uint64_t>(j)) & mask);
            if (k) m(i, j) *= std::pow(f, k);
        }
    return DensityMatrix(std::move(m), 1e-10);
}

// ---------------------------------------------------------------------------
// Channels

struct LindbladGenerator {
    CMat hamiltonian;            // may be empty
    std::vector<CMat> jumps;
    double time = 0.0;
};

/// Superoperator of -i[H, .] + sum_k (L . L^† - {L^† L, .}/2).
inline CMat lindblad_superoperator(const LindbladGenerator& g, Eigen::Index d) {
    const CMat I = CMat::Identity(d, d);
    CMat S = CMat::Zero(d * d, d * d);
    if (g.hamiltonian.size()) S += cplx(0, -1) * (kron(I, g.hamiltonian) - kron(g.hamiltonian.transpose(), I));
    for (const auto& L : g.jumps) {
        const CMat LdL = L.adjoint() * L;
        S += kron(L.conjugate(), L) - 0.5 * kron(I, LdL) - 0.5 * kron(LdL.transpose(), I);
    }
    return S;
}

struct CptpReport {
    double trace_error = 0.0;    // max |tr Phi(|i><j|) - delta_ij|, equivalently |sum K^†K - I|
    double choi_min_eig = 0.0;
    bool ok(double tp_tol = 1e-12, double psd_tol = 1e-10) const { return trace_error <= tp_tol && choi_min_eig >= -psd_tol; }
};

/// A channel on an ordered list of qubits of some register, stored as its
/// superoperator on those qubits.
class QuantumChannel {
public:
    QuantumChannel() = default;
    QuantumChannel(std::vector<int> support, CMat superop) : support_(std::move(support)), S_(std::move(superop)) {
        if (static_cast<int>(support_.size()) > kMaxChannelQubits)
            throw std::invalid_argument("channel on " + std::to_string(support_.size()) + " qubits exceeds the superoperator limit");
        const Eigen::Index d = Eigen::Index{1} << support_.size();
        if (S_.rows() != d * d || S_.cols() != d * d) throw std::invalid_argument("superoperator size does not match support");
    }

    static QuantumChannel from_kraus(std::vector<int> support, const std::vector<CMat>& kraus) {
        const Eigen::Index d = Eigen::Index{1} << support.size();
        CMat S = CMat::Zero(d * d, d * d);
        for (const auto& K : kraus) {
            if (K.rows() != d || K.cols() != d) throw std::invalid_argument("Kraus operator does not match support");
            S += kron(K.conjugate(), K);
        }
        QuantumChannel c(std::move(support), std::move(S));
        c.kraus_ = kraus;
        return c;
    }

    static QuantumChannel identity(std::vector<int> support) {
        const Eigen::Index d = Eigen::Index{1} << support.size();
        return from_kraus(std::move(support), {CMat::Identity(d, d)});
    }

    static QuantumChannel unitary(std::vector<int> support, const CMat& U) { return from_kraus(std::move(support), {U}); }

    /// (1 - p) rho + p Z rho Z on one qubit.
    static QuantumChannel dephasing(int qubit, double p) {
        if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("dephasing channel: p must lie in [0, 1]");
        return from_kraus({qubit}, {std::sqrt(1.0 - p) * pauli('I'), std::sqrt(p) * pauli('Z')});
    }

    /// exp(t L) for a local Lindbladian.
    static QuantumChannel lindblad(std::vector<int> support, LindbladGenerator g) {
        const Eigen::Index d = Eigen::Index{1} << support.size();
        CMat S = (g.time * lindblad_superoperator(g, d)).exp();
        QuantumChannel c(std::move(support), std::move(S));
        c.generator_ = std::move(g);
        return c;
    }

    const std::vector<int>& support() const { return support_; }
    int num_qubits() const { return static_cast<int>(support_.size()); }
    Eigen::Index dim() const { return Eigen::Index{1} << support_.size(); }
    const CMat& superoperator() const { return S_; }
    const std::optional<LindbladGenerator>& generator() const { return generator_; }

    /// Choi matrix sum_ij |i><j| ⊗ Phi(|i><j|), input factor first.
    CMat choi() const {
        const Eigen::Index d = dim();
        CMat J(d * d, d * d);
        for (Eigen::Index i = 0; i < d; ++i)
            for (Eigen::Index j = 0; j < d; ++j)
                for (Eigen::Index k = 0; k < d; ++k)
                    for (Eigen::Index l = 0; l < d; ++l) J(i * d + k, j * d + l) = S_(k + d * l, i + d * j);
        return J;
    }

    /// Kraus operators: the stored ones, or from the Choi eigendecomposition.
    std::vector<CMat> kraus(double tol = 1e-14) const {
        if (!kraus_.empty()) return kraus_;
        const Eigen::Index d = dim();
        Eigen::SelfAdjointEigenSolver<CMat> es(choi());
        std::vector<CMat> out;
        for (Eigen::Index k = 0; k < es.eigenvalues().size(); ++k) {
            const double l = es.eigenvalues()(k);
            if (l <= tol) continue;
            CMat K(d, d);
            for (Eigen::Index i = 0; i < d; ++i)
                for (Eigen::Index a = 0; a < d; ++a) K(a, i) = std::sqrt(l) * es.eigenvectors()(i * d + a, k);
            out.push_back(std::move(K));
        }
        return out;
    }

    CptpReport check_cptp() const {
        const Eigen::Index d = dim();
        CptpReport r;
        for (Eigen::Index i = 0; i < d; ++i)
            for (Eigen::Index j = 0; j < d; ++j) {
                cplx tr = 0.0;
                for (Eigen::Index k = 0; k < d; ++k) tr += S_(k + d * k, i + d * j);
                r.trace_error = std::max(r.trace_error, std::abs(tr - cplx(i == j ? 1.0 : 0.0)));
            }
        r.choi_min_eig = hermitian_eigenvalues(choi()).minCoeff();
        return r;
    }

    /// Apply on the matching qubits of an operator on an n-qubit register.
    CMat apply(const CMat& X, int n) const {
        Split s(n, support_);
        const Eigen::Index ds = s.sub_dim(), dr = s.rest_dim(), D = s.dim();
        CMat M(ds * ds, dr * dr);
        for (Eigen::Index i = 0; i < D; ++i)
            for (Eigen::Index j = 0; j < D; ++j) M(s.sub[i] + ds * s.sub[j], s.rest[i] + dr * s.rest[j]) = X(i, j);
        CMat out_blocks = S_ * M;
        CMat out(D, D);
        for (Eigen::Index i = 0; i < D; ++i)
            for (Eigen::Index j = 0; j < D; ++j) out(i, j) = out_blocks(s.sub[i] + ds * s.sub[j], s.rest[i] + dr * s.rest[j]);
        return out;
    }

    DensityMatrix apply(const DensityMatrix& rho) const { return DensityMatrix(apply(rho.matrix(), rho.num_qubits()), 1e-9); }

    /// Heisenberg picture: tr(adjoint(X) Y) = tr(X apply(Y)).
    QuantumChannel adjoint_map() const { return QuantumChannel(support_, S_.adjoint()); }

    /// The same channel written on a larger ordered support (identity elsewhere).
    QuantumChannel extended_to(const std::vector<int>& support) const {
        std::vector<int> pos;
        for (int q : support_) {
            auto it = std::find(support.begin(), support.end(), q);
            if (it == support.end()) throw std::invalid_argument("extended_to: channel qubit " + std::to_string(q) + " is not in the new support");
            pos.push_back(static_cast<int>(it - support.begin()));
        }
        const int m = static_cast<int>(support.size());
        std::vector<CMat> ks;
        for (const auto& K : kraus()) ks.push_back(embed(K, pos, m));
        return from_kraus(support, ks);
    }

private:
    std::vector<int> support_;
    CMat S_;
    std::vector<CMat> kraus_;
    std::optional<LindbladGenerator> generator_;
};

/// Second channel after the first; both must share the same support.
inline QuantumChannel compose(const QuantumChannel& second, const QuantumChannel& first) {
    if (second.support() != first.support()) throw std::invalid_argument("compose: supports differ");
    return QuantumChannel(first.support(), second.superoperator() * first.superoperator());
}

// ---------------------------------------------------------------------------
// Random instances for property tests

inline CMat ginibre(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& gen) {
    std::normal_distribution<double> nd;
    CMat g(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i)
        for (Eigen::Index j = 0; j < cols; ++j) g(i, j) = cplx(nd(gen), nd(gen));
    return g;
}

/// Random state of the given rank (full rank by default).
inline DensityMatrix random_state(int n, std::mt19937_64& gen, int rank = 0) {
    const Eigen::Index d = Eigen::Index{1} << n;
    CMat g = ginibre(d, rank > 0 ? rank : d, gen);
    CMat rho = g * g.adjoint();
    rho /= rho.trace();
    return DensityMatrix(0.5 * (rho + rho.adjoint()));
}

inline CMat random_unitary(Eigen::Index d, std::mt19937_64& gen) {
    Eigen::HouseholderQR<CMat> qr(ginibre(d, d, gen));
    CMat Q = qr.householderQ();
    CMat R = qr.matrixQR().triangularView<Eigen::Upper>();
    for (Eigen::Index k = 0; k < d; ++k) Q.col(k) *= std::polar(1.0, std::arg(R(k, k)));
    return Q;
}

/// Random channel with `n_kraus` Kraus operators from a random isometry.
inline QuantumChannel random_channel(std::vector<int> support, int n_kraus, std::mt19937_64& gen) {
    const Eigen::Index d = Eigen::Index{1} << support.size();
    Eigen::HouseholderQR<CMat> qr(ginibre(d * n_kraus, d, gen));
    CMat V = qr.householderQ() * CMat::Identity(d * n_kraus, d);
    std::vector<CMat> ks;
    for (int k = 0; k < n_kraus; ++k) ks.push_back(V.block(k * d, 0, d, d));
    return QuantumChannel::from_kraus(std::move(support), ks);
}

}  // namespace markov::qi
