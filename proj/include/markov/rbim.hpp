#pragma once

// Random-bond Ising model on the Nishimori line.
//
// For a region Q, write each error as e' = e + c where c flips no observable
// of Q. Such c are exactly the coboundaries of Ising spins on the vertices
// touched by Q (c on edge ij is 1 iff sigma_i != sigma_j), so
//
//   Pr(m) = 1/2 [p(1-p)]^{|Q|/2} sum_sigma exp(J sum_ij eta_ij sigma_i sigma_j)
//         = exp(-F - c1 |Q| - c2),
//
// with eta = 2e - 1, J = ln(p/(1-p)) / 2, c1 = -ln(p(1-p)) / 2, c2 = ln 2.
// Everything here is in nats.

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "cmi.hpp"
#include "lattice.hpp"
#include "noise.hpp"

namespace markov {

inline double nishimori_coupling(double p) {
    if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("nishimori_coupling: p must lie in (0, 1)");
    return 0.5 * std::log(p / (1.0 - p));
}

struct RbimConstants {
    double c1, c2;
};

inline RbimConstants rbim_constants(double p) {
    if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("rbim_constants: p must lie in (0, 1)");
    return {-0.5 * std::log(p * (1.0 - p)), std::log(2.0)};
}

/// Spins on the vertices touched by a set of edges, one bond per edge.
/// Coordinates are unwrapped into a rectangle for the transfer engine.
struct RbimGraph {
    std::vector<int> vertices;                 // lattice vertex ids
    std::vector<std::array<int, 2>> coords;    // unwrapped (x, y) per spin
    std::vector<int> edges;                    // lattice edge per bond
    std::vector<std::array<int, 2>> bonds;     // spin indices per bond
    int width = 0, height = 0;                 // vertex rectangle

    int num_spins() const { return static_cast<int>(vertices.size()); }

    bool connected() const {
        if (vertices.empty()) return true;
        std::vector<int> parent(vertices.size());
        for (std::size_t i = 0; i < parent.size(); ++i) parent[i] = static_cast<int>(i);
        auto find = [&](int a) {
            while (parent[a] != a) a = parent[a] = parent[parent[a]];
            return a;
        };
        int comps = num_spins();
        for (auto [a, b] : bonds) {
            int ra = find(a), rb = find(b);
            if (ra != rb) {
                parent[ra] = rb;
                --comps;
            }
        }
        return comps == 1;
    }
};

namespace detail {

/// Shift that unwraps occupied torus coordinates into [0, span): start just
/// after the largest cyclic gap.
inline int unwrap_offset(int L, const std::vector<int>& occupied) {
    std::vector<char> occ(static_cast<std::size_t>(L), 0);
    for (int c : occupied) occ[static_cast<std::size_t>(c)] = 1;
    if (std::all_of(occ.begin(), occ.end(), [](char o) { return o != 0; }))
        throw std::invalid_argument("rbim: region wraps around the torus");
    int best_start = 0, best_len = -1;
    for (int s = 0; s < L; ++s) {
        if (occ[static_cast<std::size_t>(s)]) continue;
        if (!occ[static_cast<std::size_t>((s - 1 + L) % L)]) continue;  // not the start of a gap
        int len = 0;
        while (len < L && !occ[static_cast<std::size_t>((s + len) % L)]) ++len;
        if (len > best_len) {
            best_len = len;
            best_start = s;
        }
    }
    return (best_start + best_len) % L;
}

}  // namespace detail

inline RbimGraph rbim_graph(const Lattice& lat, std::vector<int> edges) {
    std::sort(edges.begin(), edges.end());
    edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
    RbimGraph g;
    std::map<int, int> index;
    for (int e : edges)
        for (int vx : lat.edge_vertices(e)) index.emplace(vx, 0);
    const int L = lat.size();
    std::vector<int> xs, ys;
    for (const auto& [vx, _] : index) {
        xs.push_back(vx % L);
        ys.push_back(vx / L);
    }
    if (index.empty()) return g;
    const int ox = detail::unwrap_offset(L, xs), oy = detail::unwrap_offset(L, ys);
    for (auto& [vx, idx] : index) {
        idx = static_cast<int>(g.vertices.size());
        g.vertices.push_back(vx);
        const int x = (vx % L - ox + L) % L, y = (vx / L - oy + L) % L;
        g.coords.push_back({x, y});
        g.width = std::max(g.width, x + 1);
        g.height = std::max(g.height, y + 1);
    }
    for (int e : edges) {
        auto [a, b] = lat.edge_vertices(e);
        g.edges.push_back(e);
        g.bonds.push_back({index.at(a), index.at(b)});
    }
    return g;
}

/// Couplings eta_b in {-1, +1} and strength J for one disorder realization.
struct RbimInstance {
    const RbimGraph* graph = nullptr;
    std::vector<int> eta;
    double J = 0.0;
};

/// eta = 2e - 1 on each bond's edge.
inline RbimInstance rbim_instance(const RbimGraph& g, const ErrorConfig& e, double J) {
    RbimInstance inst{&g, {}, J};
    inst.eta.reserve(g.edges.size());
    for (int edge : g.edges) inst.eta.push_back(2 * e.bits.at(static_cast<std::size_t>(edge)) - 1);
    return inst;
}

enum class RbimEngine { Enumerate, Transfer };

inline RbimEngine rbim_engine_from_string(const std::string& s) {
    if (s == "enumerate") return RbimEngine::Enumerate;
    if (s == "transfer") return RbimEngine::Transfer;
    throw std::invalid_argument("unknown RBIM engine '" + s + "'");
}

inline constexpr int kMaxEnumerateSpins = 24;
inline constexpr int kMaxTransferWidth = 12;

/// F = -ln sum_sigma exp(J sum_b eta_b sigma_i sigma_j) by walking all spin
/// states in Gray-code order with the first spin fixed.
inline double free_energy_enumerate(const RbimInstance& inst) {
    const RbimGraph& g = *inst.graph;
    const int n = g.num_spins();
    if (n == 0) return 0.0;
    if (n > kMaxEnumerateSpins)
        throw std::invalid_argument("free_energy_enumerate: " + std::to_string(n) + " spins exceeds " +
                                    std::to_string(kMaxEnumerateSpins));
    std::vector<std::vector<std::pair<int, double>>> adj(static_cast<std::size_t>(n));
    for (std::size_t b = 0; b < g.bonds.size(); ++b) {
        const double K = inst.J * inst.eta[b];
        adj[static_cast<std::size_t>(g.bonds[b][0])].push_back({g.bonds[b][1], K});
        adj[static_cast<std::size_t>(g.bonds[b][1])].push_back({g.bonds[b][0], K});
    }
    std::vector<int> s(static_cast<std::size_t>(n), 1);
    double E = 0.0;
    for (std::size_t b = 0; b < g.bonds.size(); ++b) E += inst.J * inst.eta[b];
    // Streaming log-sum-exp.
    double shift = E, sum = 1.0;
    const std::uint64_t count = std::uint64_t{1} << (n - 1);
    for (std::uint64_t k = 1; k < count; ++k) {
        const int i = 1 + std::countr_zero(k);  // spin 0 stays fixed
        double local = 0.0;
        for (auto [j, K] : adj[static_cast<std::size_t>(i)]) local += K * s[static_cast<std::size_t>(j)];
        E -= 2.0 * s[static_cast<std::size_t>(i)] * local;
        s[static_cast<std::size_t>(i)] = -s[static_cast<std::size_t>(i)];
        if (E > shift) {
            sum = sum * std::exp(shift - E) + 1.0;
            shift = E;
        } else {
            sum += std::exp(E - shift);
        }
    }
    return -(shift + std::log(sum) + std::log(2.0));
}

/// Row-to-row transfer matrix on the vertex rectangle. Grid sites that carry
/// no spin of the graph are free and their factor 2 is divided out.
inline double free_energy_transfer(const RbimInstance& inst) {
    const RbimGraph& g = *inst.graph;
    const int W = g.width, H = g.height;
    if (g.num_spins() == 0) return 0.0;
    if (W > kMaxTransferWidth)
        throw std::invalid_argument("free_energy_transfer: strip width " + std::to_string(W) + " exceeds " +
                                    std::to_string(kMaxTransferWidth));
    std::vector<double> Kh(static_cast<std::size_t>(W * H), 0.0), Kv(static_cast<std::size_t>(W * H), 0.0);
    for (std::size_t b = 0; b < g.bonds.size(); ++b) {
        auto pa = g.coords[static_cast<std::size_t>(g.bonds[b][0])], pb = g.coords[static_cast<std::size_t>(g.bonds[b][1])];
        if (pa[1] == pb[1]) {
            if (pb[0] < pa[0]) std::swap(pa, pb);
            if (pb[0] != pa[0] + 1) throw std::invalid_argument("free_energy_transfer: bond is not a lattice edge");
            Kh[static_cast<std::size_t>(pa[1] * W + pa[0])] += inst.J * inst.eta[b];
        } else {
            if (pb[1] < pa[1]) std::swap(pa, pb);
            if (pb[1] != pa[1] + 1 || pa[0] != pb[0]) throw std::invalid_argument("free_energy_transfer: bond is not a lattice edge");
            Kv[static_cast<std::size_t>(pa[1] * W + pa[0])] += inst.J * inst.eta[b];
        }
    }
    const std::size_t S = std::size_t{1} << W;
    auto spin = [](std::size_t s, int x) { return ((s >> x) & 1) ? -1.0 : 1.0; };
    std::vector<double> v(S), w(S);
    double log_scale = 0.0;
    auto apply_row_bonds = [&](int y) {
        for (std::size_t s = 0; s < S; ++s) {
            double E = 0.0;
            for (int x = 0; x + 1 < W; ++x) E += Kh[static_cast<std::size_t>(y * W + x)] * spin(s, x) * spin(s, x + 1);
            v[s] *= std::exp(E);
        }
        const double mx = *std::max_element(v.begin(), v.end());
        for (auto& t : v) t /= mx;
        log_scale += std::log(mx);
    };
    std::fill(v.begin(), v.end(), 1.0);
    apply_row_bonds(0);
    for (int y = 1; y < H; ++y) {
        for (int x = 0; x < W; ++x) {
            const double K = Kv[static_cast<std::size_t>((y - 1) * W + x)];
            const double same = std::exp(K), diff = std::exp(-K);
            const std::size_t bit = std::size_t{1} << x;
            for (std::size_t s = 0; s < S; ++s) {
                if (s & bit) continue;
                const double a = v[s], b = v[s | bit];
                w[s] = same * a + diff * b;
                w[s | bit] = diff * a + same * b;
            }
            std::swap(v, w);
        }
        apply_row_bonds(y);
    }
    double Z = 0.0;
    for (double t : v) Z += t;
    const int empty = W * H - g.num_spins();
    return -(log_scale + std::log(Z)) + empty * std::log(2.0);
}

inline double free_energy_exact(const RbimInstance& inst, RbimEngine engine = RbimEngine::Enumerate) {
    return engine == RbimEngine::Enumerate ? free_energy_enumerate(inst) : free_energy_transfer(inst);
}

/// The spin representation covers every constraint of Q only when the
/// independent cycles of the bond graph match Q's observables (interior
/// plaquettes plus the hole parity).
inline void check_rbim_region(const Lattice& lat, const Region& q, const RbimGraph& g) {
    if (!g.connected()) throw std::invalid_argument("rbim: region's bond graph is not connected");
    const int cycles = static_cast<int>(g.edges.size()) - g.num_spins() + 1;
    if (cycles != q.num_observables())
        throw std::invalid_argument("rbim: region has " + std::to_string(cycles) + " independent cycles but " +
                                    std::to_string(q.num_observables()) +
                                    " observables; an enclosed face is neither an interior plaquette nor the hole");
    (void)lat;
}

struct EntropyFreeEnergyCheck {
    double entropy_nats;   // H(m_Q) * ln 2
    double free_energy;    // disorder average of F
    double rhs;            // free_energy + c1 |Q| + c2
    double abs_diff() const { return std::abs(entropy_nats - rhs); }
};

/// Both sides exactly: H by enumerating syndromes, the disorder average by
/// enumerating every error on Q.
inline EntropyFreeEnergyCheck entropy_freeenergy_check(const Lattice& lat, const Region& q, double p,
                                                      RbimEngine engine = RbimEngine::Enumerate) {
    const int n = static_cast<int>(q.edges.size());
    if (n > 14) throw std::invalid_argument("entropy_freeenergy_check: region has " + std::to_string(n) + " edges, limit 14");
    auto g = rbim_graph(lat, q.edges);
    check_rbim_region(lat, q, g);
    const double J = p < 0.5 ? nishimori_coupling(p) : 0.0;
    if (p >= 0.5 && p != 0.5) throw std::invalid_argument("entropy_freeenergy_check: p must lie in (0, 0.5]");
    ErrorConfig e(lat.num_edges());
    double Fbar = 0.0;
    for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << n); ++mask) {
        int w = 0;
        for (int k = 0; k < n; ++k) {
            const std::uint8_t b = (mask >> k) & 1;
            e.bits[static_cast<std::size_t>(q.edges[static_cast<std::size_t>(k)])] = b;
            w += b;
        }
        const double pr = std::pow(p, w) * std::pow(1.0 - p, n - w);
        Fbar += pr * free_energy_exact(rbim_instance(g, e, J), engine);
    }
    const auto c = rbim_constants(p);
    EntropyFreeEnergyCheck out;
    out.entropy_nats = exact_entropy_bits(lat, q, p) * std::log(2.0);
    out.free_energy = Fbar;
    out.rhs = Fbar + c.c1 * n + c.c2;
    return out;
}

struct DefectFreeEnergy {
    int x = 0;
    double p = 0.0;
    double mean = 0.0;     // nats
    double stderr_ = 0.0;
    long n_disorder = 0;
    RbimEngine engine = RbimEngine::Transfer;
    std::uint64_t seed = 0;
};

/// Edges of the x-by-x plaquette block and of its centre plaquette, on a
/// torus large enough that the block does not wrap.
struct DefectGeometry {
    Lattice lat;
    std::vector<int> full, without_centre;
};

inline DefectGeometry defect_geometry(int x) {
    if (x < 3 || x % 2 == 0) throw std::invalid_argument("defect_free_energy: x must be odd and >= 3");
    Lattice lat(x + 3);
    const int c = lat.size() / 2;
    auto full = edges_of_plaquettes(lat, plaquette_block(lat, c, c, (x - 1) / 2));
    auto centre = edges_of_plaquettes(lat, plaquette_block(lat, c, c, 0));
    std::vector<int> rest;
    std::set_difference(full.begin(), full.end(), centre.begin(), centre.end(), std::back_inserter(rest));
    return {lat, full, rest};
}

/// Disorder average of F(block without the centre bonds) - F(block), the
/// free-energy cost of merging the centre into one defect site. The two free
/// energies of a realization share its couplings.
inline DefectFreeEnergy defect_free_energy(int x, double p, long n_disorder, std::uint64_t seed,
                                           RbimEngine engine = RbimEngine::Transfer, int threads = 1) {
    if (n_disorder < 2) throw std::invalid_argument("defect_free_energy: need >= 2 disorder samples");
    if (!(p > 0.0 && p <= 0.5)) throw std::invalid_argument("defect_free_energy: p must lie in (0, 0.5]");
    auto geo = defect_geometry(x);
    auto g_full = rbim_graph(geo.lat, geo.full);
    auto g_def = rbim_graph(geo.lat, geo.without_centre);
    if (engine == RbimEngine::Enumerate && g_full.num_spins() > kMaxEnumerateSpins)
        throw std::invalid_argument("defect_free_energy: x=" + std::to_string(x) + " has " + std::to_string(g_full.num_spins()) +
                                    " spins, too many to enumerate");
    if (engine == RbimEngine::Transfer && g_full.width > kMaxTransferWidth)
        throw std::invalid_argument("defect_free_energy: x=" + std::to_string(x) + " exceeds the transfer strip width");
    const double J = nishimori_coupling(p);
    SampleStream stream(geo.lat, p, seed);
    std::vector<double> d(static_cast<std::size_t>(n_disorder));
    detail::parallel_for(n_disorder, threads, [&](long k) {
        auto e = stream.at(static_cast<std::uint64_t>(k));
        d[static_cast<std::size_t>(k)] =
            free_energy_exact(rbim_instance(g_def, e, J), engine) - free_energy_exact(rbim_instance(g_full, e, J), engine);
    });
    auto [mean, se] = jackknife_mean(d);
    return {x, p, mean, se, n_disorder, engine, seed};
}

}  // namespace markov
