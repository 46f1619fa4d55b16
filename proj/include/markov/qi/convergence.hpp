#pragma once

// Buffer width from the Markov length, and how fast a local dephasing
// Lindbladian approaches complete dephasing.

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "dense.hpp"

namespace markov::qi {

/// Smallest integer r >= 1 with r >= ξ log2(poly(L) / (ε δt)), where
/// poly(L) = Σ_k coeffs[k] L^k.
inline int buffer_width(double xi, double eps, double dt, double L, const std::vector<double>& coeffs) {
    if (!(xi > 0.0 && eps > 0.0 && dt > 0.0 && L > 0.0)) throw std::invalid_argument("buffer_width: arguments must be positive");
    double poly = 0.0;
    for (std::size_t k = coeffs.size(); k-- > 0;) poly = poly * L + coeffs[k];
    if (!(poly > 0.0)) throw std::invalid_argument("buffer_width: poly(L) must be positive");
    const double need = xi * std::log2(poly / (eps * dt));
    return std::max(1, static_cast<int>(std::ceil(need - 1e-9)));
}

/// Single-qubit generator (Z . Z - .)/2: coherences decay as e^{-t}.
inline QuantumChannel dephasing_lindblad(int qubit, double t) {
    return QuantumChannel::lindblad({qubit}, {CMat(), {std::sqrt(0.5) * pauli('Z')}, t});
}

inline QuantumChannel complete_dephasing(int qubit) { return QuantumChannel::dephasing(qubit, 0.5); }

struct DephasingConvergence {
    double lambda = 2.0;        // max_ρ |ZρZ - ρ|_1
    double single_qubit = 0.0;  // |p_t - 1/2| λ = e^{-t}/2 · λ
    double bound = 0.0;         // n/2 · e^{-t} · λ
};

/// Diamond distance of e^{tL} from complete dephasing on n qubits (bound via
/// the triangle inequality over sites).
inline DephasingConvergence dephasing_convergence(double t, int n_qubits) {
    if (!(t >= 0.0)) throw std::invalid_argument("dephasing_convergence: t must be >= 0");
    DephasingConvergence d;
    d.single_qubit = 0.5 * std::exp(-t) * d.lambda;
    d.bound = 0.5 * n_qubits * std::exp(-t) * d.lambda;
    return d;
}

/// Smallest t for which the n-qubit bound is at most eps.
inline double dephasing_time_for(double eps, int n_qubits) {
    if (!(eps > 0.0) || n_qubits < 1) throw std::invalid_argument("dephasing_time_for: need eps > 0 and n >= 1");
    return std::max(0.0, std::log(n_qubits / eps));
}

/// Pauli weights (p_I, p_X, p_Y, p_Z) of a single-qubit Pauli channel read off
/// its superoperator: Φ(ρ) = Σ p_P P ρ P.
inline std::array<double, 4> pauli_weights(const QuantumChannel& c) {
    if (c.num_qubits() != 1) throw std::invalid_argument("pauli_weights: single-qubit channel required");
    const char names[4] = {'I', 'X', 'Y', 'Z'};
    std::array<double, 4> p{};
    // The Choi matrix of P ρ P is the projector onto vec(P); weights are
    // the overlaps <vec P| J |vec P> / 4.
    const CMat J = c.choi();
    for (int k = 0; k < 4; ++k) {
        const CMat P = pauli(names[k]);
        CVec v(4);
        for (int i = 0; i < 2; ++i)
            for (int a = 0; a < 2; ++a) v(i * 2 + a) = P(a, i);
        p[static_cast<std::size_t>(k)] = (v.adjoint() * J * v)(0, 0).real() / 4.0;
    }
    return p;
}

}  // namespace markov::qi
