#pragma once

// Torus square lattice with qubits on edges, anyons on plaquettes.
//
// Coordinates: vertex (x, y) sits at integer position; h(x, y) joins vertex
// (x, y) to (x+1, y); v(x, y) joins (x, y) to (x, y+1); plaquette (x, y) is
// the face with lower-left corner (x, y). Everything wraps modulo L.
//
//        h(x,y+1)
//     +-----------+
//     |           |
//  v(x,y)  (x,y)  v(x+1,y)
//     |           |
//     +-----------+
//   (x,y)  h(x,y)

#include <algorithm>
#include <array>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

namespace markov {

enum class EdgeKind { Horizontal, Vertical };

class Lattice {
public:
    explicit Lattice(int L) : L_(L) {
        if (L < 2) throw std::invalid_argument("Lattice: L must be >= 2, got " + std::to_string(L));
    }

    int size() const { return L_; }
    int num_edges() const { return 2 * L_ * L_; }
    int num_plaquettes() const { return L_ * L_; }
    int num_vertices() const { return L_ * L_; }

    int wrap(int c) const { return ((c % L_) + L_) % L_; }

    int h(int x, int y) const { return 2 * (wrap(y) * L_ + wrap(x)); }
    int v(int x, int y) const { return 2 * (wrap(y) * L_ + wrap(x)) + 1; }
    int plaquette(int x, int y) const { return wrap(y) * L_ + wrap(x); }
    int vertex(int x, int y) const { return wrap(y) * L_ + wrap(x); }

    EdgeKind edge_kind(int e) const { return (e % 2 == 0) ? EdgeKind::Horizontal : EdgeKind::Vertical; }
    std::array<int, 2> edge_coords(int e) const {
        const int site = e / 2;
        return {site % L_, site / L_};
    }
    std::array<int, 2> plaquette_coords(int pq) const { return {pq % L_, pq / L_}; }

    std::array<int, 2> edge_plaquettes(int e) const {
        auto [x, y] = edge_coords(e);
        if (edge_kind(e) == EdgeKind::Horizontal) return {plaquette(x, y), plaquette(x, y - 1)};
        return {plaquette(x, y), plaquette(x - 1, y)};
    }

    std::array<int, 2> edge_vertices(int e) const {
        auto [x, y] = edge_coords(e);
        if (edge_kind(e) == EdgeKind::Horizontal) return {vertex(x, y), vertex(x + 1, y)};
        return {vertex(x, y), vertex(x, y + 1)};
    }

    /// Bottom, top, left, right.
    std::array<int, 4> plaquette_edges(int pq) const {
        auto [x, y] = plaquette_coords(pq);
        return {h(x, y), h(x, y + 1), v(x, y), v(x + 1, y)};
    }

    std::array<int, 4> vertex_edges(int vx) const {
        const int x = vx % L_, y = vx / L_;
        return {h(x, y), h(x - 1, y), v(x, y), v(x, y - 1)};
    }

    /// Chebyshev distance between plaquettes on the dual torus.
    int plaquette_distance(int a, int b) const {
        auto [ax, ay] = plaquette_coords(a);
        auto [bx, by] = plaquette_coords(b);
        int dx = std::abs(ax - bx), dy = std::abs(ay - by);
        dx = std::min(dx, L_ - dx);
        dy = std::min(dy, L_ - dy);
        return std::max(dx, dy);
    }

private:
    int L_;
};

inline Lattice build_torus(int L) { return Lattice(L); }

/// Binary vector over all edges; 1 = edge acted on by Z.
struct ErrorConfig {
    std::vector<std::uint8_t> bits;

    ErrorConfig() = default;
    explicit ErrorConfig(int n) : bits(static_cast<std::size_t>(n), 0) {}
    int weight() const { return static_cast<int>(std::count(bits.begin(), bits.end(), 1)); }
    std::size_t size() const { return bits.size(); }
};

/// Anyon bits over a list of plaquettes, plus the parity of a hole when the
/// owning region is not simply connected.
struct AnyonConfig {
    std::vector<std::uint8_t> bits;
    std::optional<std::uint8_t> hole_parity;

    int parity() const {
        int s = 0;
        for (auto b : bits) s ^= b;
        return s;
    }
    bool operator==(const AnyonConfig&) const = default;
};

/// m = ∂e over every plaquette of the torus.
inline AnyonConfig syndrome(const Lattice& lat, const ErrorConfig& e) {
    if (static_cast<int>(e.size()) != lat.num_edges())
        throw std::invalid_argument("syndrome: error config has " + std::to_string(e.size()) + " bits, lattice has " +
                                    std::to_string(lat.num_edges()) + " edges");
    AnyonConfig m;
    m.bits.assign(static_cast<std::size_t>(lat.num_plaquettes()), 0);
    for (int i = 0; i < lat.num_edges(); ++i) {
        if (!e.bits[static_cast<std::size_t>(i)]) continue;
        for (int pq : lat.edge_plaquettes(i)) m.bits[static_cast<std::size_t>(pq)] ^= 1;
    }
    return m;
}

/// A set of edges together with the anyon observables it carries: interior
/// plaquettes (all four edges inside) and, for a region with a hole, the set
/// of hole plaquettes whose joint parity is tracked.
struct Region {
    std::vector<int> edges;
    std::vector<int> plaquettes;
    std::vector<int> hole;

    bool has_hole() const { return !hole.empty(); }
    int num_observables() const { return static_cast<int>(plaquettes.size()) + (has_hole() ? 1 : 0); }
};

inline std::vector<std::uint8_t> edge_mask(const Lattice& lat, const std::vector<int>& edges) {
    std::vector<std::uint8_t> mask(static_cast<std::size_t>(lat.num_edges()), 0);
    for (int e : edges) mask.at(static_cast<std::size_t>(e)) = 1;
    return mask;
}

/// Plaquettes whose four edges all lie in the edge set.
inline std::vector<int> interior_plaquettes(const Lattice& lat, const std::vector<int>& edges) {
    auto mask = edge_mask(lat, edges);
    std::vector<int> out;
    for (int pq = 0; pq < lat.num_plaquettes(); ++pq) {
        auto es = lat.plaquette_edges(pq);
        if (std::all_of(es.begin(), es.end(), [&](int e) { return mask[static_cast<std::size_t>(e)] != 0; }))
            out.push_back(pq);
    }
    return out;
}

inline Region make_region(const Lattice& lat, std::vector<int> edges, std::vector<int> hole = {}) {
    std::sort(edges.begin(), edges.end());
    edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
    std::sort(hole.begin(), hole.end());
    Region q;
    q.plaquettes = interior_plaquettes(lat, edges);
    q.edges = std::move(edges);
    q.hole = std::move(hole);
    return q;
}

/// Restrict a full-torus anyon configuration to a region's observables.
inline AnyonConfig restrict_to(const Region& q, const AnyonConfig& m_full) {
    AnyonConfig m;
    m.bits.reserve(q.plaquettes.size());
    for (int pq : q.plaquettes) m.bits.push_back(m_full.bits.at(static_cast<std::size_t>(pq)));
    if (q.has_hole()) {
        std::uint8_t par = 0;
        for (int pq : q.hole) par ^= m_full.bits.at(static_cast<std::size_t>(pq));
        m.hole_parity = par;
    }
    return m;
}

/// Edges are connected when they share a vertex.
inline bool edges_connected(const Lattice& lat, const std::vector<int>& edges) {
    if (edges.empty()) return true;
    auto mask = edge_mask(lat, edges);
    std::vector<std::uint8_t> seen(mask.size(), 0);
    std::vector<int> stack{edges.front()};
    seen[static_cast<std::size_t>(edges.front())] = 1;
    std::size_t count = 1;
    while (!stack.empty()) {
        int e = stack.back();
        stack.pop_back();
        for (int vx : lat.edge_vertices(e))
            for (int f : lat.vertex_edges(vx)) {
                auto fi = static_cast<std::size_t>(f);
                if (mask[fi] && !seen[fi]) {
                    seen[fi] = 1;
                    ++count;
                    stack.push_back(f);
                }
            }
    }
    return count == edges.size();
}

enum class RegionId { A, B, C, AB, BC, ABC };

inline std::string to_string(RegionId id) {
    switch (id) {
        case RegionId::A: return "A";
        case RegionId::B: return "B";
        case RegionId::C: return "C";
        case RegionId::AB: return "AB";
        case RegionId::BC: return "BC";
        case RegionId::ABC: return "ABC";
    }
    return "?";
}

inline RegionId region_id_from_string(const std::string& s) {
    if (s == "A") return RegionId::A;
    if (s == "B") return RegionId::B;
    if (s == "C") return RegionId::C;
    if (s == "AB") return RegionId::AB;
    if (s == "BC") return RegionId::BC;
    if (s == "ABC") return RegionId::ABC;
    throw std::invalid_argument("unknown region id '" + s + "'");
}

enum class EdgeLabel : std::uint8_t { Outside = 0, A = 1, B = 2, C = 3 };

/// A/B/C tripartition of a patch of the torus. A is simply connected, B is an
/// annulus around it, C is the rest of the patch; edges beyond the patch are
/// labelled Outside and traced out.
class RegionPartition {
public:
    RegionPartition(const Lattice& lat, std::vector<EdgeLabel> labels, int r) : lat_(lat), labels_(std::move(labels)), r_(r) {
        if (static_cast<int>(labels_.size()) != lat.num_edges())
            throw std::invalid_argument("RegionPartition: label vector does not match the lattice");
        for (int e = 0; e < lat.num_edges(); ++e) {
            switch (labels_[static_cast<std::size_t>(e)]) {
                case EdgeLabel::A: a_.push_back(e); break;
                case EdgeLabel::B: b_.push_back(e); break;
                case EdgeLabel::C: c_.push_back(e); break;
                case EdgeLabel::Outside: break;
            }
        }
        if (a_.empty() || b_.empty() || c_.empty()) throw std::invalid_argument("RegionPartition: A, B and C must be nonempty");
        auto amask = edge_mask(lat, a_);
        for (int pq = 0; pq < lat.num_plaquettes(); ++pq) {
            auto es = lat.plaquette_edges(pq);
            if (std::any_of(es.begin(), es.end(), [&](int e) { return amask[static_cast<std::size_t>(e)] != 0; }))
                hole_.push_back(pq);
        }
        validate();
    }

    const Lattice& lattice() const { return lat_; }
    int r() const { return r_; }
    EdgeLabel label(int e) const { return labels_.at(static_cast<std::size_t>(e)); }
    const std::vector<EdgeLabel>& labels() const { return labels_; }
    const std::vector<int>& edges_A() const { return a_; }
    const std::vector<int>& edges_B() const { return b_; }
    const std::vector<int>& edges_C() const { return c_; }

    /// Plaquettes touching A: the hole of B and of BC.
    const std::vector<int>& hole() const { return hole_; }

    std::vector<int> edges(RegionId id) const {
        std::vector<int> out;
        auto add = [&](const std::vector<int>& s) { out.insert(out.end(), s.begin(), s.end()); };
        switch (id) {
            case RegionId::A: add(a_); break;
            case RegionId::B: add(b_); break;
            case RegionId::C: add(c_); break;
            case RegionId::AB: add(a_); add(b_); break;
            case RegionId::BC: add(b_); add(c_); break;
            case RegionId::ABC: add(a_); add(b_); add(c_); break;
        }
        std::sort(out.begin(), out.end());
        return out;
    }

    /// Region with its anyon observables. B and BC carry the hole parity π(m_A).
    Region region(RegionId id) const {
        const bool annulus = (id == RegionId::B || id == RegionId::BC);
        return make_region(lat_, edges(id), annulus ? hole_ : std::vector<int>{});
    }

    /// Plaquettes whose anyon parity region_parity reports. For A this is the
    /// hole set, matching π(m_A).
    std::vector<int> parity_plaquettes(RegionId id) const {
        if (id == RegionId::A) return hole_;
        return interior_plaquettes(lat_, edges(id));
    }

    /// Smallest Chebyshev distance between a plaquette touching A and one touching C.
    int distance_AC() const {
        auto touching = [&](const std::vector<int>& es) {
            std::vector<int> out;
            for (int e : es)
                for (int pq : lat_.edge_plaquettes(e)) out.push_back(pq);
            std::sort(out.begin(), out.end());
            out.erase(std::unique(out.begin(), out.end()), out.end());
            return out;
        };
        auto pa = touching(a_), pc = touching(c_);
        int best = lat_.size();
        for (int x : pa)
            for (int y : pc) best = std::min(best, lat_.plaquette_distance(x, y));
        return best;
    }

    nlohmann::json to_json() const {
        nlohmann::json j;
        j["L"] = lat_.size();
        j["r"] = r_;
        auto& arr = j["edges"] = nlohmann::json::array();
        static const char* names[] = {"outside", "A", "B", "C"};
        for (int e = 0; e < lat_.num_edges(); ++e) {
            auto [x, y] = lat_.edge_coords(e);
            arr.push_back({{"id", e},
                           {"kind", lat_.edge_kind(e) == EdgeKind::Horizontal ? "h" : "v"},
                           {"x", x},
                           {"y", y},
                           {"region", names[static_cast<int>(labels_[static_cast<std::size_t>(e)])]}});
        }
        j["hole"] = hole_;
        return j;
    }

private:
    void validate() const {
        if (!edges_connected(lat_, a_)) throw std::invalid_argument("RegionPartition: A is not connected");
        // No plaquette may touch both A and C, otherwise B does not separate them.
        if (distance_AC() < 1) throw std::invalid_argument("RegionPartition: A and C touch");
        // B must enclose the hole: every edge on the hole boundary lies in B.
        std::vector<std::uint8_t> in_hole(static_cast<std::size_t>(lat_.num_plaquettes()), 0);
        for (int pq : hole_) in_hole[static_cast<std::size_t>(pq)] = 1;
        for (int e = 0; e < lat_.num_edges(); ++e) {
            auto [p0, p1] = lat_.edge_plaquettes(e);
            if (in_hole[static_cast<std::size_t>(p0)] != in_hole[static_cast<std::size_t>(p1)] && label(e) != EdgeLabel::B)
                throw std::invalid_argument("RegionPartition: B does not enclose A (hole boundary edge " + std::to_string(e) +
                                            " outside B)");
        }
    }

    Lattice lat_;
    std::vector<EdgeLabel> labels_;
    int r_;
    std::vector<int> a_, b_, c_, hole_;
};

/// Edges of every plaquette in the set.
inline std::vector<int> edges_of_plaquettes(const Lattice& lat, const std::vector<int>& plaqs) {
    std::vector<int> out;
    for (int pq : plaqs)
        for (int e : lat.plaquette_edges(pq)) out.push_back(e);
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

/// Chebyshev ball of plaquettes around (cx, cy).
inline std::vector<int> plaquette_block(const Lattice& lat, int cx, int cy, int radius) {
    std::vector<int> out;
    for (int dy = -radius; dy <= radius; ++dy)
        for (int dx = -radius; dx <= radius; ++dx) out.push_back(lat.plaquette(cx + dx, cy + dy));
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

/// Build a partition from nested plaquette sets core ⊂ ab ⊂ abc:
/// A = edges(core), B = edges(ab) \ A, C = edges(abc) \ edges(ab).
inline RegionPartition nested_partition(const Lattice& lat, const std::vector<int>& core, const std::vector<int>& ab,
                                        const std::vector<int>& abc, int r) {
    std::vector<EdgeLabel> labels(static_cast<std::size_t>(lat.num_edges()), EdgeLabel::Outside);
    for (int e : edges_of_plaquettes(lat, abc)) labels[static_cast<std::size_t>(e)] = EdgeLabel::C;
    for (int e : edges_of_plaquettes(lat, ab)) labels[static_cast<std::size_t>(e)] = EdgeLabel::B;
    for (int e : edges_of_plaquettes(lat, core)) labels[static_cast<std::size_t>(e)] = EdgeLabel::A;
    return RegionPartition(lat, std::move(labels), r);
}

/// The annulus geometry used for the Markov-length measurement.
///
/// A is the four edges of the centre plaquette and stays fixed. B holds the
/// remaining edges of the (2r+1)x(2r+1) plaquette block, C the remaining
/// edges of the (4r+1)x(4r+1) block, so B and C both have width r. Sketch
/// for r = 1 (plaquettes, A = centre):
///
///     C C C C C
///     C B B B C
///     C B A B C
///     C B B B C
///     C C C C C
///
/// The hole of B is the plus-shaped set of five plaquettes touching A.
inline RegionPartition annulus_partition(const Lattice& lat, int r) {
    if (r < 1) throw std::invalid_argument("annulus_partition: r must be >= 1");
    if (lat.size() < 4 * r + 2)
        throw std::invalid_argument("annulus_partition: r=" + std::to_string(r) + " needs L >= " + std::to_string(4 * r + 2) +
                                    ", got L=" + std::to_string(lat.size()));
    const int c = lat.size() / 2;
    return nested_partition(lat, plaquette_block(lat, c, c, 0), plaquette_block(lat, c, c, r), plaquette_block(lat, c, c, 2 * r), r);
}

inline int region_parity(const RegionPartition& part, const AnyonConfig& m_full, RegionId id) {
    if (static_cast<int>(m_full.bits.size()) != part.lattice().num_plaquettes())
        throw std::invalid_argument("region_parity: anyon config is not defined on the full torus");
    int s = 0;
    for (int pq : part.parity_plaquettes(id)) s ^= m_full.bits[static_cast<std::size_t>(pq)];
    return s;
}

}  // namespace markov
