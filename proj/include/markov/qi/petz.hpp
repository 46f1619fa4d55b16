#pragma once

// Twirled Petz recovery and the single-step recovery bound.
//
// P[X] = ∫ f(τ) σ^{(1-iτ)/2} E†( E(σ)^{(-1+iτ)/2} X E(σ)^{(-1-iτ)/2} ) σ^{(1+iτ)/2} dτ
// with f(τ) = π / (2 (cosh πτ + 1)). In the eigenbases σ = Σ s_c |v_c><v_c| and
// E(σ) = Σ w_a |w_a><w_a| every rotation is a phase, so the τ integral reduces to
// g(Ω) = ∫ f(τ) cos(τ Ω / 2) dτ with Ω = ln(w_a/w_b) - ln(s_c/s_d).

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include <gsl/gsl_integration.h>

#include "dense.hpp"

namespace markov::qi {

struct QuadratureError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

inline double petz_weight(double tau) {
    return std::numbers::pi / (2.0 * (std::cosh(std::numbers::pi * tau) + 1.0));
}

/// Mass of f outside [-T, T].
inline double petz_tail(double T) { return 1.0 - std::tanh(std::numbers::pi * T / 2.0); }

/// Nodes and weights on [0, T] for g(Ω) = 2 ∫_0^T f(τ) cos(τΩ/2) dτ, with the
/// weights rescaled so that g(0) = 1 exactly (the tail mass is folded in).
struct PetzQuadrature {
    double T = 0.0;
    int panels = 0;
    int order = 0;
    double tail = 0.0;
    std::vector<double> nodes, weights;

    double g(double omega) const {
        double s = 0.0;
        for (std::size_t j = 0; j < nodes.size(); ++j) s += weights[j] * std::cos(nodes[j] * omega / 2.0);
        return s;
    }
};

namespace detail {

inline PetzQuadrature gauss_legendre_panels(double T, int panels, int order) {
    gsl_integration_glfixed_table* tab = gsl_integration_glfixed_table_alloc(static_cast<std::size_t>(order));
    if (!tab) throw std::runtime_error("gsl_integration_glfixed_table_alloc failed");
    PetzQuadrature q;
    q.T = T;
    q.panels = panels;
    q.order = order;
    q.tail = petz_tail(T);
    const double h = T / panels;
    double total = 0.0;
    for (int k = 0; k < panels; ++k) {
        for (int i = 0; i < order; ++i) {
            double x, w;
            gsl_integration_glfixed_point(k * h, (k + 1) * h, static_cast<std::size_t>(i), &x, &w, tab);
            q.nodes.push_back(x);
            q.weights.push_back(2.0 * w * petz_weight(x));
            total += q.weights.back();
        }
    }
    gsl_integration_glfixed_table_free(tab);
    for (double& w : q.weights) w /= total;
    return q;
}

}  // namespace detail

/// Quadrature accurate to `tol` for every |Ω| <= omega_max. T is set by the
/// analytic tail; the panel count doubles until two successive rules agree on
/// a set of probe frequencies.
inline PetzQuadrature petz_quadrature(double omega_max, double tol = 1e-13, int order = 16, int max_panels = 1 << 14) {
    if (!(omega_max >= 0.0) || !std::isfinite(omega_max)) throw QuadratureError("petz_quadrature: invalid frequency bound");
    const double T = 2.0 / std::numbers::pi * std::atanh(1.0 - 0.1 * tol);
    if (petz_tail(T) > tol) throw QuadratureError("petz_quadrature: tail mass above tolerance");
    // One Gauss-Legendre panel of order 16 resolves a few oscillations.
    int panels = std::max(8, static_cast<int>(std::ceil(T * (omega_max / 2.0 + 1.0) / 4.0)));
    std::vector<double> probes;
    for (int k = 0; k <= 8; ++k) probes.push_back(omega_max * k / 8.0);
    PetzQuadrature prev = detail::gauss_legendre_panels(T, panels, order);
    while (true) {
        if (2 * panels > max_panels)
            throw QuadratureError("petz_quadrature: no convergence within " + std::to_string(max_panels) + " panels at Omega=" +
                                  std::to_string(omega_max));
        PetzQuadrature next = detail::gauss_legendre_panels(T, 2 * panels, order);
        double diff = 0.0;
        for (double w : probes) diff = std::max(diff, std::abs(next.g(w) - prev.g(w)));
        if (diff <= tol) return prev;
        prev = std::move(next);
        panels *= 2;
    }
}

struct PetzOptions {
    double support_tol = 1e-12;  // relative to the largest eigenvalue
    double quadrature_tol = 1e-13;
};

namespace detail {

/// Each column of M, read as a d x d column-stacked matrix X, becomes L X R.
inline CMat transform_columns(const CMat& M, const CMat& L, const CMat& R) {
    const Eigen::Index d = L.rows();
    CMat out(M.rows(), M.cols());
    for (Eigen::Index j = 0; j < M.cols(); ++j) {
        Eigen::Map<const CMat> X(M.col(j).data(), d, d);
        CMat Y = L * X * R;
        out.col(j) = Eigen::Map<const CVec>(Y.data(), d * d);
    }
    return out;
}

inline std::vector<int> positions_in(const std::vector<int>& labels, const std::vector<int>& region) {
    std::vector<int> pos;
    for (int q : labels) {
        auto it = std::find(region.begin(), region.end(), q);
        if (it == region.end()) throw std::invalid_argument("channel qubit " + std::to_string(q) + " lies outside the reference region");
        pos.push_back(static_cast<int>(it - region.begin()));
    }
    return pos;
}

}  // namespace detail

/// Twirled Petz map of E with reference σ. `region` lists the qubit labels of
/// σ's register in order; E's support must lie inside it, and the returned
/// channel acts on `region`.
///
/// On the complement of supp E(σ) the map is completed by X ↦ tr(Π⊥ X) σ, so
/// the result is trace preserving on every input. On supp E(σ) it is the
/// integral above with inverse powers taken on the support.
inline QuantumChannel twirled_petz(const QuantumChannel& E, const DensityMatrix& sigma, const std::vector<int>& region,
                                   const PetzOptions& opt = {}) {
    const int m = sigma.num_qubits();
    if (static_cast<int>(region.size()) != m) throw std::invalid_argument("twirled_petz: region size differs from the reference register");
    if (m > kMaxChannelQubits) throw std::invalid_argument("twirled_petz: region exceeds the superoperator limit");
    const auto pos = detail::positions_in(E.support(), region);
    const Eigen::Index D = sigma.dim();

    std::vector<CMat> K;
    for (const auto& k : E.kraus()) K.push_back(embed(k, pos, m));

    Eigen::SelfAdjointEigenSolver<CMat> es_s(sigma.matrix());
    CMat image = CMat::Zero(D, D);
    for (const auto& k : K) image += k * sigma.matrix() * k.adjoint();
    Eigen::SelfAdjointEigenSolver<CMat> es_w(0.5 * (image + image.adjoint()));
    const Eigen::VectorXd& s = es_s.eigenvalues();
    const Eigen::VectorXd& w = es_w.eigenvalues();
    const CMat& V = es_s.eigenvectors();
    const CMat& W = es_w.eigenvectors();

    std::vector<Eigen::Index> supp_s, supp_w, null_w;
    for (Eigen::Index c = 0; c < D; ++c)
        if (s(c) > opt.support_tol * s.maxCoeff()) supp_s.push_back(c);
    for (Eigen::Index a = 0; a < D; ++a) (w(a) > opt.support_tol * w.maxCoeff() ? supp_w : null_w).push_back(a);

    // Log-ratio frequencies on each side.
    const Eigen::Index ns = static_cast<Eigen::Index>(supp_s.size()), nw = static_cast<Eigen::Index>(supp_w.size());
    Eigen::VectorXd alpha(nw * nw), beta(ns * ns);
    for (Eigen::Index i = 0; i < nw; ++i)
        for (Eigen::Index j = 0; j < nw; ++j) alpha(i + nw * j) = std::log(w(supp_w[i])) - std::log(w(supp_w[j]));
    for (Eigen::Index i = 0; i < ns; ++i)
        for (Eigen::Index j = 0; j < ns; ++j) beta(i + ns * j) = std::log(s(supp_s[i])) - std::log(s(supp_s[j]));
    const double omega_max = alpha.cwiseAbs().maxCoeff() + beta.cwiseAbs().maxCoeff();
    const PetzQuadrature quad = petz_quadrature(omega_max, opt.quadrature_tol);

    // g(α - β) = Σ_j w_j [cos(τ_j α/2) cos(τ_j β/2) + sin(τ_j α/2) sin(τ_j β/2)]
    const Eigen::Index nq = static_cast<Eigen::Index>(quad.nodes.size());
    Eigen::MatrixXd Ca(nw * nw, nq), Sa(nw * nw, nq), Cb(ns * ns, nq), Sb(ns * ns, nq);
    for (Eigen::Index j = 0; j < nq; ++j) {
        const double t = quad.nodes[j] / 2.0, sw = std::sqrt(quad.weights[j]);
        for (Eigen::Index i = 0; i < nw * nw; ++i) {
            Ca(i, j) = sw * std::cos(t * alpha(i));
            Sa(i, j) = sw * std::sin(t * alpha(i));
        }
        for (Eigen::Index i = 0; i < ns * ns; ++i) {
            Cb(i, j) = sw * std::cos(t * beta(i));
            Sb(i, j) = sw * std::sin(t * beta(i));
        }
    }
    const Eigen::MatrixXd G = Ca * Cb.transpose() + Sa * Sb.transpose();

    // E† in the eigenbases: E†[Y]_{cd} = Σ_k Σ_ab conj(A_k(a,c)) A_k(b,d) Y_ab.
    std::vector<CMat> A;
    for (const auto& k : K) A.push_back(W.adjoint() * k * V);

    CMat P = CMat::Zero(D * D, D * D);
    for (Eigen::Index ia = 0; ia < nw; ++ia)
        for (Eigen::Index ib = 0; ib < nw; ++ib) {
            const Eigen::Index a = supp_w[ia], b = supp_w[ib];
            const double inv = 1.0 / std::sqrt(w(a) * w(b));
            for (Eigen::Index ic = 0; ic < ns; ++ic)
                for (Eigen::Index id = 0; id < ns; ++id) {
                    const Eigen::Index c = supp_s[ic], d = supp_s[id];
                    cplx m_el = 0.0;
                    for (const auto& Ak : A) m_el += std::conj(Ak(a, c)) * Ak(b, d);
                    P(c + D * d, a + D * b) = std::sqrt(s(c) * s(d)) * inv * G(ia + nw * ib, ic + ns * id) * m_el;
                }
        }
    for (Eigen::Index a : null_w)
        for (Eigen::Index c : supp_s) P(c + D * c, a + D * a) += s(c);

    // Back to the computational basis: Y = V Y' V†, X' = W† X W.
    CMat out = detail::transform_columns(P, V, V.adjoint());
    CMat rows = detail::transform_columns(out.transpose(), W.conjugate(), W.transpose());
    return QuantumChannel(region, rows.transpose());
}

struct RecoveryBound {
    double trace_distance = 0.0;  // |P∘E[ρ] - ρ|_1
    double lhs = 0.0;             // trace_distance² / (2 ln 2)
    double cmi_before = 0.0;
    double cmi_after = 0.0;
    double rhs = 0.0;             // cmi_before - cmi_after
    double rhs_data_processing = 0.0;

    bool holds(double tol = 1e-8) const { return lhs <= rhs + tol && rhs <= rhs_data_processing + tol; }
};

/// Apply E (supported in A), recover with the twirled Petz map referenced to
/// ρ_AB on A ∪ B, and compare the recovery error with the CMI drop.
inline RecoveryBound recovery_bound_check(const DensityMatrix& rho, const QuantumChannel& E, const std::vector<int>& A,
                                          const std::vector<int>& B, const std::vector<int>& C) {
    for (int q : E.support())
        if (std::find(A.begin(), A.end(), q) == A.end()) throw std::invalid_argument("recovery_bound_check: channel must act inside A");
    std::vector<int> AB = A;
    AB.insert(AB.end(), B.begin(), B.end());
    const int n = rho.num_qubits();
    const DensityMatrix sigma(partial_trace(rho.matrix(), n, AB), 1e-10);
    const QuantumChannel P = twirled_petz(E, sigma, AB);
    const CMat after = E.apply(rho.matrix(), n);
    const CMat recovered = P.apply(after, n);

    RecoveryBound r;
    r.trace_distance = trace_norm(recovered - rho.matrix());
    r.lhs = r.trace_distance * r.trace_distance / (2.0 * std::numbers::ln2);
    r.cmi_before = entropies(rho, A, B, C).cmi;
    r.cmi_after = entropies(DensityMatrix(after, 1e-9), A, B, C).cmi;
    r.rhs = r.cmi_before - r.cmi_after;
    r.rhs_data_processing = r.cmi_before;
    return r;
}

}  // namespace markov::qi
