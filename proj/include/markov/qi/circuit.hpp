#pragma once

// Trotterized local Lindbladian circuits on a chain or ring, their
// reorganization into well separated layers, and the Petz reversal circuit.

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "dense.hpp"
#include "petz.hpp"

namespace markov::qi {

/// Sites 0..n-1 on a line, optionally closed into a ring.
struct ChainMetric {
    int n = 0;
    bool periodic = true;

    int distance(int a, int b) const {
        int d = std::abs(a - b);
        return periodic ? std::min(d, n - d) : d;
    }
    int distance(const std::vector<int>& a, const std::vector<int>& b) const {
        int best = n;
        for (int x : a)
            for (int y : b) best = std::min(best, distance(x, y));
        return best;
    }
    /// Sites within distance r of the set, sorted.
    std::vector<int> ball(const std::vector<int>& s, int r) const {
        std::vector<int> out;
        for (int q = 0; q < n; ++q)
            if (distance({q}, s) <= r) out.push_back(q);
        return out;
    }
};

struct LocalGenerator {
    std::vector<int> support;
    CMat hamiltonian;  // may be empty
    std::vector<CMat> jumps;
};

struct TrotterCircuit {
    int n_qubits = 0;
    double dt = 0.0;
    std::vector<std::vector<QuantumChannel>> layers;

    std::size_t num_gates() const {
        std::size_t k = 0;
        for (const auto& l : layers) k += l.size();
        return k;
    }

    /// Smallest distance between two gates sharing a layer (n if none do).
    int min_separation(const ChainMetric& metric) const {
        int best = metric.n;
        for (const auto& l : layers)
            for (std::size_t i = 0; i < l.size(); ++i)
                for (std::size_t j = i + 1; j < l.size(); ++j) best = std::min(best, metric.distance(l[i].support(), l[j].support()));
        return best;
    }

    void validate() const {
        for (std::size_t k = 0; k < layers.size(); ++k) {
            std::set<int> used;
            for (const auto& g : layers[k])
                for (int q : g.support())
                    if (q < 0 || q >= n_qubits || !used.insert(q).second)
                        throw std::invalid_argument("layer " + std::to_string(k) + ": overlapping or invalid gate support at qubit " +
                                                    std::to_string(q));
        }
    }

    DensityMatrix apply(const DensityMatrix& rho) const {
        CMat m = rho.matrix();
        for (const auto& l : layers)
            for (const auto& g : l) m = g.apply(m, n_qubits);
        return DensityMatrix(std::move(m), 1e-9);
    }
};

/// Number of Trotter steps 1/dt; rejects non-integer values.
inline int trotter_steps(double dt) {
    if (!(dt > 0.0 && dt <= 1.0)) throw std::invalid_argument("dt must lie in (0, 1]");
    const double k = 1.0 / dt;
    const double kr = std::round(k);
    if (std::abs(k - kr) > 1e-9 * k) throw std::invalid_argument("1/dt = " + std::to_string(k) + " is not an integer");
    return static_cast<int>(kr);
}

/// e^{dt L} for every generator, repeated for 1/dt steps. Each inner vector of
/// `pattern` is one layer of disjoint gates; a step applies the layers in order.
inline TrotterCircuit build_forward(int n_qubits, double dt, const std::vector<std::vector<LocalGenerator>>& pattern) {
    check_register(n_qubits, 10);
    const int steps = trotter_steps(dt);
    std::vector<std::vector<QuantumChannel>> step;
    for (const auto& group : pattern) {
        std::vector<QuantumChannel> layer;
        for (const auto& g : group) layer.push_back(QuantumChannel::lindblad(g.support, {g.hamiltonian, g.jumps, dt}));
        step.push_back(std::move(layer));
    }
    TrotterCircuit c;
    c.n_qubits = n_qubits;
    c.dt = dt;
    for (int s = 0; s < steps; ++s) c.layers.insert(c.layers.end(), step.begin(), step.end());
    c.validate();
    return c;
}

/// Split each layer greedily so gates sharing a layer are at distance
/// >= 2r + 1; the widened supports A ∪ B of the reversal gates are then
/// disjoint. Gates keep their relative order.
inline TrotterCircuit reorganize(const TrotterCircuit& circuit, const ChainMetric& metric, int r) {
    if (r < 0) throw std::invalid_argument("reorganize: r must be >= 0");
    const int sep = 2 * r + 1;
    TrotterCircuit out;
    out.n_qubits = circuit.n_qubits;
    out.dt = circuit.dt;
    for (const auto& layer : circuit.layers) {
        std::vector<std::vector<QuantumChannel>> sub;
        for (const auto& g : layer) {
            auto fits = [&](const std::vector<QuantumChannel>& s) {
                return std::all_of(s.begin(), s.end(), [&](const QuantumChannel& h) { return metric.distance(g.support(), h.support()) >= sep; });
            };
            auto it = std::find_if(sub.begin(), sub.end(), fits);
            if (it == sub.end()) sub.push_back({g});
            else it->push_back(g);
        }
        out.layers.insert(out.layers.end(), sub.begin(), sub.end());
    }
    return out;
}

/// Reversal circuit: layers in reverse order, each gate replaced by its
/// twirled Petz map on the gate support plus a width-r buffer, referenced to
/// the forward state just before that layer. The circuit must already be
/// separated by 2r + 1 (see reorganize).
inline TrotterCircuit build_reversal(const TrotterCircuit& circuit, const ChainMetric& metric, const DensityMatrix& rho0, int r) {
    if (rho0.num_qubits() != circuit.n_qubits) throw std::invalid_argument("build_reversal: state does not match the circuit");
    if (circuit.min_separation(metric) < 2 * r + 1)
        throw std::invalid_argument("build_reversal: gates in a layer are closer than 2r+1; reorganize first");
    TrotterCircuit rev;
    rev.n_qubits = circuit.n_qubits;
    rev.dt = circuit.dt;
    CMat rho = rho0.matrix();
    for (const auto& layer : circuit.layers) {
        std::vector<QuantumChannel> back;
        for (const auto& g : layer) {
            const auto region = metric.ball(g.support(), r);
            const DensityMatrix sigma(partial_trace(rho, circuit.n_qubits, region), 1e-9);
            back.push_back(twirled_petz(g, sigma, region));
        }
        for (const auto& g : layer) rho = g.apply(rho, circuit.n_qubits);
        rev.layers.push_back(std::move(back));
    }
    std::reverse(rev.layers.begin(), rev.layers.end());
    return rev;
}

struct CumulativeError {
    double epsilon = 0.0;         // |G̃∘G[ρ0] - ρ0|_1
    double bound = 0.0;           // Σ |Ẽ∘E[ρ_{ℓ-1}] - ρ_{ℓ-1}|_1
    std::vector<double> per_gate;

    bool holds(double tol = 1e-9) const { return epsilon <= bound + tol; }
};

/// `reversal` must come from build_reversal on the same circuit: its layer k
/// mirrors forward layer N-1-k gate by gate.
inline CumulativeError cumulative_error_check(const TrotterCircuit& circuit, const TrotterCircuit& reversal, const DensityMatrix& rho0) {
    const std::size_t N = circuit.layers.size();
    if (reversal.layers.size() != N) throw std::invalid_argument("cumulative_error_check: layer counts differ");
    const int n = circuit.n_qubits;
    CumulativeError out;
    CMat rho = rho0.matrix();
    for (std::size_t l = 0; l < N; ++l) {
        const auto& fwd = circuit.layers[l];
        const auto& bwd = reversal.layers[N - 1 - l];
        if (fwd.size() != bwd.size()) throw std::invalid_argument("cumulative_error_check: gate counts differ in a layer");
        for (std::size_t x = 0; x < fwd.size(); ++x) {
            const double e = trace_norm(bwd[x].apply(fwd[x].apply(rho, n), n) - rho);
            out.per_gate.push_back(e);
            out.bound += e;
        }
        for (const auto& g : fwd) rho = g.apply(rho, n);
    }
    for (const auto& layer : reversal.layers)
        for (const auto& g : layer) rho = g.apply(rho, n);
    out.epsilon = trace_norm(rho - rho0.matrix());
    return out;
}

/// Ground state of -Σ Z_i Z_{i+1} - g Σ X_i on a ring of n sites.
inline DensityMatrix tfim_ground_state(int n, double g) {
    check_register(n);
    const Eigen::Index D = Eigen::Index{1} << n;
    CMat H = CMat::Zero(D, D);
    for (int i = 0; i < n; ++i) {
        H -= embed(kron(pauli('Z'), pauli('Z')), {i, (i + 1) % n}, n);
        H -= g * embed(pauli('X'), {i}, n);
    }
    Eigen::SelfAdjointEigenSolver<CMat> es(H);
    return DensityMatrix::pure(es.eigenvectors().col(0));
}

}  // namespace markov::qi
