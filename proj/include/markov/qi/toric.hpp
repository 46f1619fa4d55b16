#pragma once

// Toric code ground state as a dense vector. Qubit q is edge q of the lattice.
// Z errors are detected by the X-type plaquette stabilizers, matching the
// syndrome convention of the sampling code.

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "../lattice.hpp"
#include "dense.hpp"

namespace markov::qi {

inline std::uint64_t edge_mask_bits(const Lattice& lat, const std::vector<int>& edges) {
    const int n = lat.num_edges();
    std::uint64_t m = 0;
    for (int e : edges) m ^= std::uint64_t{1} << (n - 1 - e);
    return m;
}

/// Π_□ (1 + X_□)/2 |0...0>, normalized. Every vertex Z stabilizer is +1 on the
/// reference state and commutes with the projectors.
inline DensityMatrix toric_ground_state(int L) {
    Lattice lat(L);
    const int n = lat.num_edges();
    if (n > kMaxQubits) throw std::invalid_argument("toric_ground_state: " + std::to_string(n) + " qubits exceed the dense limit");
    const std::size_t D = std::size_t{1} << n;
    CVec psi = CVec::Zero(static_cast<Eigen::Index>(D));
    psi(0) = 1.0;
    for (int pq = 0; pq < lat.num_plaquettes(); ++pq) {
        auto es = lat.plaquette_edges(pq);
        const std::uint64_t m = edge_mask_bits(lat, {es.begin(), es.end()});
        CVec next(psi.size());
        for (std::size_t i = 0; i < D; ++i) next(static_cast<Eigen::Index>(i)) = 0.5 * (psi(static_cast<Eigen::Index>(i)) + psi(static_cast<Eigen::Index>(i ^ m)));
        psi = next;
    }
    return DensityMatrix::pure(psi);
}

/// tr(ρ X_mask) for a product of X on the masked qubits.
inline double x_expectation(const DensityMatrix& rho, std::uint64_t mask) {
    cplx s = 0.0;
    for (Eigen::Index i = 0; i < rho.dim(); ++i) s += rho.matrix()(i, static_cast<Eigen::Index>(static_cast<std::uint64_t>(i) ^ mask));
    return s.real();
}

/// tr(ρ Z_mask) for a product of Z on the masked qubits.
inline double z_expectation(const DensityMatrix& rho, std::uint64_t mask) {
    double s = 0.0;
    for (Eigen::Index i = 0; i < rho.dim(); ++i)
        s += (std::popcount(static_cast<std::uint64_t>(i) & mask) & 1 ? -1.0 : 1.0) * rho.matrix()(i, i).real();
    return s;
}

struct StabilizerValues {
    std::vector<double> plaquette;  // X type
    std::vector<double> vertex;     // Z type
};

inline StabilizerValues toric_stabilizers(const DensityMatrix& rho, const Lattice& lat) {
    if (rho.num_qubits() != lat.num_edges()) throw std::invalid_argument("toric_stabilizers: register does not match the lattice");
    StabilizerValues out;
    for (int pq = 0; pq < lat.num_plaquettes(); ++pq) {
        auto es = lat.plaquette_edges(pq);
        out.plaquette.push_back(x_expectation(rho, edge_mask_bits(lat, {es.begin(), es.end()})));
    }
    for (int vx = 0; vx < lat.num_vertices(); ++vx) {
        auto es = lat.vertex_edges(vx);
        out.vertex.push_back(z_expectation(rho, edge_mask_bits(lat, {es.begin(), es.end()})));
    }
    return out;
}

/// S(ρ_{Q,p}) - S(ρ_{Q,0}) in bits for the exact dephased ground state.
inline double dephased_entropy_shift(int L, const std::vector<int>& region_edges, double p) {
    Lattice lat(L);
    const auto rho0 = toric_ground_state(L);
    std::vector<int> all(static_cast<std::size_t>(lat.num_edges()));
    for (int e = 0; e < lat.num_edges(); ++e) all[static_cast<std::size_t>(e)] = e;
    const auto rhop = dephase(rho0, p, all);
    return entropy_bits(partial_trace(rhop.matrix(), rhop.num_qubits(), region_edges)) -
           entropy_bits(partial_trace(rho0.matrix(), rho0.num_qubits(), region_edges));
}

}  // namespace markov::qi
