#include <gtest/gtest.h>

#include <random>
#include <set>

#include <markov/lattice.hpp>
#include <markov/noise.hpp>

using namespace markov;

TEST(Lattice, Counts) {
    for (auto [L, edges, plaqs] : {std::tuple{2, 8, 4}, std::tuple{3, 18, 9}, std::tuple{24, 1152, 576}}) {
        Lattice lat = build_torus(L);
        EXPECT_EQ(lat.num_edges(), edges);
        EXPECT_EQ(lat.num_plaquettes(), plaqs);
        EXPECT_EQ(lat.num_vertices(), plaqs);
    }
    EXPECT_THROW(build_torus(1), std::invalid_argument);
}

TEST(Lattice, IncidenceIsConsistent) {
    for (int L : {2, 3, 5}) {
        Lattice lat(L);
        std::vector<int> in_plaq(static_cast<std::size_t>(lat.num_edges()), 0), in_vert(in_plaq.size(), 0);
        for (int pq = 0; pq < lat.num_plaquettes(); ++pq) {
            auto es = lat.plaquette_edges(pq);
            EXPECT_EQ(std::set<int>(es.begin(), es.end()).size(), 4u);
            for (int e : es) {
                ++in_plaq[static_cast<std::size_t>(e)];
                auto ps = lat.edge_plaquettes(e);
                EXPECT_TRUE(ps[0] == pq || ps[1] == pq);
            }
        }
        for (int v = 0; v < lat.num_vertices(); ++v) {
            auto es = lat.vertex_edges(v);
            EXPECT_EQ(std::set<int>(es.begin(), es.end()).size(), 4u);
            for (int e : es) {
                ++in_vert[static_cast<std::size_t>(e)];
                auto vs = lat.edge_vertices(e);
                EXPECT_TRUE(vs[0] == v || vs[1] == v);
            }
        }
        for (int e = 0; e < lat.num_edges(); ++e) {
            EXPECT_EQ(in_plaq[static_cast<std::size_t>(e)], 2);
            EXPECT_EQ(in_vert[static_cast<std::size_t>(e)], 2);
            auto ps = lat.edge_plaquettes(e);
            auto vs = lat.edge_vertices(e);
            EXPECT_NE(ps[0], ps[1]);
            EXPECT_NE(vs[0], vs[1]);
        }
    }
}

TEST(Syndrome, StarsAreSilent) {
    for (int L : {2, 3, 6}) {
        Lattice lat(L);
        for (int v = 0; v < lat.num_vertices(); ++v) {
            ErrorConfig e(lat.num_edges());
            for (int k : lat.vertex_edges(v)) e.bits[static_cast<std::size_t>(k)] ^= 1;
            auto m = syndrome(lat, e);
            EXPECT_EQ(std::count(m.bits.begin(), m.bits.end(), 1), 0);
        }
    }
}

TEST(Syndrome, Examples) {
    Lattice lat(5);
    ErrorConfig e(lat.num_edges());
    auto m0 = syndrome(lat, e);
    EXPECT_EQ(std::count(m0.bits.begin(), m0.bits.end(), 1), 0);

    const int edge = lat.v(2, 3);
    e.bits[static_cast<std::size_t>(edge)] = 1;
    auto m1 = syndrome(lat, e);
    EXPECT_EQ(std::count(m1.bits.begin(), m1.bits.end(), 1), 2);
    for (int pq : lat.edge_plaquettes(edge)) EXPECT_EQ(m1.bits[static_cast<std::size_t>(pq)], 1);

    ErrorConfig loop(lat.num_edges());
    for (int k : lat.plaquette_edges(lat.plaquette(1, 1))) loop.bits[static_cast<std::size_t>(k)] = 1;
    auto ml = syndrome(lat, loop);
    // A plaquette boundary flips itself four times and each neighbour once.
    EXPECT_EQ(std::count(ml.bits.begin(), ml.bits.end(), 1), 4);
    EXPECT_EQ(ml.bits[static_cast<std::size_t>(lat.plaquette(1, 1))], 0);
    for (int pq : {lat.plaquette(0, 1), lat.plaquette(2, 1), lat.plaquette(1, 0), lat.plaquette(1, 2)})
        EXPECT_EQ(ml.bits[static_cast<std::size_t>(pq)], 1);

    EXPECT_THROW(syndrome(lat, ErrorConfig(7)), std::invalid_argument);
}

TEST(Syndrome, TotalParityVanishesAndIsLinear) {
    for (int L : {3, 4, 7}) {
        Lattice lat(L);
        SampleStream s(lat, 0.3, 100 + L);
        for (std::uint64_t k = 0; k < 10000; ++k) {
            auto e1 = s.at(k), e2 = s.at(k + 20000);
            auto m1 = syndrome(lat, e1), m2 = syndrome(lat, e2);
            ASSERT_EQ(m1.parity(), 0);
            if (k % 10 == 0) {
                ErrorConfig sum(lat.num_edges());
                for (std::size_t i = 0; i < sum.bits.size(); ++i) sum.bits[i] = e1.bits[i] ^ e2.bits[i];
                auto ms = syndrome(lat, sum);
                for (std::size_t i = 0; i < ms.bits.size(); ++i) ASSERT_EQ(ms.bits[i], m1.bits[i] ^ m2.bits[i]);
            }
        }
    }
}

namespace {

// Plaquettes on either side of an edge.
int edge_distance(const Lattice& lat, int a, int c) {
    int best = lat.size();
    for (int pa : lat.edge_plaquettes(a))
        for (int pc : lat.edge_plaquettes(c)) best = std::min(best, lat.plaquette_distance(pa, pc));
    return best;
}

}  // namespace

TEST(AnnulusPartition, DisjointCoverOfPatchForAllValidSizes) {
    for (int L = 2; L <= 12; ++L) {
        Lattice lat(L);
        for (int r = 1; 4 * r + 2 <= L; ++r) {
            auto part = annulus_partition(lat, r);
            const int c = L / 2;
            auto patch = edges_of_plaquettes(lat, plaquette_block(lat, c, c, 2 * r));
            std::set<int> seen;
            for (const auto* s : {&part.edges_A(), &part.edges_B(), &part.edges_C()})
                for (int e : *s) EXPECT_TRUE(seen.insert(e).second) << "edge " << e << " in two regions";
            EXPECT_EQ(seen, std::set<int>(patch.begin(), patch.end()));
            EXPECT_EQ(part.edges_A().size(), 4u);
            int dmin = L;
            for (int a : part.edges_A())
                for (int e : part.edges_C()) dmin = std::min(dmin, edge_distance(lat, a, e));
            EXPECT_GE(dmin, r) << "L=" << L << " r=" << r;
            EXPECT_EQ(part.hole().size(), 5u);
        }
        if (L < 6) {
            EXPECT_THROW(annulus_partition(lat, 1), std::invalid_argument);
        }
    }
}

TEST(AnnulusPartition, SizesAtR2) {
    Lattice lat(24);
    auto part = annulus_partition(lat, 2);
    EXPECT_EQ(part.edges_A().size(), 4u);
    EXPECT_EQ(part.edges_B().size(), 60u - 4u);    // 5x5 block has 2*5*6 edges
    EXPECT_EQ(part.edges_C().size(), 180u - 60u);  // 9x9 block has 2*9*10
    EXPECT_TRUE(part.region(RegionId::B).has_hole());
    EXPECT_TRUE(part.region(RegionId::BC).has_hole());
    EXPECT_FALSE(part.region(RegionId::AB).has_hole());
    auto j = part.to_json();
    EXPECT_EQ(j["hole"].size(), 5u);
}

TEST(AnnulusPartition, MinimumLatticeStillHasC) {
    for (int r : {1, 2, 3}) {
        Lattice lat(4 * r + 2);
        auto part = annulus_partition(lat, r);
        EXPECT_FALSE(part.edges_C().empty());
        EXPECT_THROW(annulus_partition(Lattice(4 * r + 1), r), std::invalid_argument);
    }
    EXPECT_THROW(annulus_partition(Lattice(10), 0), std::invalid_argument);
}

TEST(RegionParity, Examples) {
    Lattice lat(8);
    auto part = annulus_partition(lat, 1);
    const int c = 4;
    ErrorConfig e(lat.num_edges());
    EXPECT_EQ(region_parity(part, syndrome(lat, e), RegionId::A), 0);

    // Edge of A: both anyons land inside the plus-shaped hole.
    e.bits[static_cast<std::size_t>(lat.v(c, c))] = 1;
    EXPECT_EQ(region_parity(part, syndrome(lat, e), RegionId::A), 0);

    // Edge between a hole plaquette and a B plaquette: one anyon each side.
    ErrorConfig f(lat.num_edges());
    f.bits[static_cast<std::size_t>(lat.v(c + 2, c))] = 1;
    EXPECT_EQ(region_parity(part, syndrome(lat, f), RegionId::A), 1);

    EXPECT_THROW(region_parity(part, AnyonConfig{}, RegionId::A), std::invalid_argument);
    EXPECT_THROW(region_id_from_string("D"), std::invalid_argument);
    EXPECT_EQ(region_id_from_string("BC"), RegionId::BC);
}
