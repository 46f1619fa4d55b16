#include <gtest/gtest.h>

#include <cmath>

#include <markov/lattice.hpp>
#include <markov/noise.hpp>
#include <markov/tensor_network.hpp>

using namespace markov;

namespace {

Region block(const Lattice& lat, int cx, int cy, int radius) {
    return make_region(lat, edges_of_plaquettes(lat, plaquette_block(lat, cx, cy, radius)));
}

// Perimeter of the plus-shaped hole around (cx, cy).
Region plus_perimeter(const Lattice& lat, int cx, int cy) {
    std::vector<int> hole = {lat.plaquette(cx, cy), lat.plaquette(cx + 1, cy), lat.plaquette(cx - 1, cy),
                             lat.plaquette(cx, cy + 1), lat.plaquette(cx, cy - 1)};
    std::vector<int> perimeter;
    for (int e : edges_of_plaquettes(lat, hole)) {
        auto [a, b] = lat.edge_plaquettes(e);
        if ((std::count(hole.begin(), hole.end(), a) > 0) != (std::count(hole.begin(), hole.end(), b) > 0)) perimeter.push_back(e);
    }
    return make_region(lat, perimeter, hole);
}

// Direct sum of the weight of every error on the region with matching
// observables, observables recomputed from the full-torus syndrome.
double direct_probability(const Lattice& lat, const Region& q, const AnyonConfig& m, double p) {
    const std::size_t n = q.edges.size();
    double total = 0.0;
    for (std::uint64_t s = 0; s < (std::uint64_t{1} << n); ++s) {
        ErrorConfig e(lat.num_edges());
        for (std::size_t t = 0; t < n; ++t) e.bits[static_cast<std::size_t>(q.edges[t])] = (s >> t) & 1;
        if (restrict_to(q, syndrome(lat, e)) == m) {
            const int w = std::popcount(s);
            total += std::pow(p, w) * std::pow(1 - p, static_cast<double>(n) - w);
        }
    }
    return total;
}

std::vector<Region> small_regions(const Lattice& lat) {
    std::vector<Region> out = {block(lat, 3, 3, 0), block(lat, 3, 3, 1) /* 24 edges */, plus_perimeter(lat, 4, 4)};
    // 2x2 block, 12 edges.
    out.push_back(make_region(lat, edges_of_plaquettes(lat, {lat.plaquette(2, 2), lat.plaquette(3, 2), lat.plaquette(2, 3), lat.plaquette(3, 3)})));
    // L-shaped strip of 4 plaquettes, 13 edges.
    out.push_back(make_region(lat, edges_of_plaquettes(lat, {lat.plaquette(1, 1), lat.plaquette(2, 1), lat.plaquette(3, 1), lat.plaquette(3, 2)})));
    // Open string of edges, no interior plaquette.
    out.push_back(make_region(lat, {lat.h(1, 5), lat.h(2, 5), lat.v(3, 5), lat.v(3, 6)}));
    return out;
}

}  // namespace

TEST(Grid, SinglePlaquetteClosedForm) {
    Lattice lat(5);
    auto q = block(lat, 2, 2, 0);
    for (double p : {0.0, 0.05, 0.11, 0.3, 0.5}) {
        const double even = 0.5 * (1 + std::pow(1 - 2 * p, 4));
        for (int bit : {0, 1}) {
            AnyonConfig m;
            m.bits = {static_cast<std::uint8_t>(bit)};
            auto g = build_grid(lat, q, m, p);
            const double expect = bit ? 1 - even : even;
            EXPECT_NEAR(contract_exact(g), expect, 1e-15);
            EXPECT_NEAR(contract_bmps(g).value(), expect, 1e-14);
        }
    }
}

TEST(Grid, ZeroNoise) {
    Lattice lat(8);
    for (const auto& q : small_regions(lat)) {
        AnyonConfig zero = anyon_config_from_mask(q, 0);
        EXPECT_NEAR(contract_bmps(build_grid(lat, q, zero, 0.0)).value(), 1.0, 1e-14);
        const int n_obs = q.num_observables();
        for (std::uint64_t mask = 1; mask < (std::uint64_t{1} << std::min(n_obs, 6)); ++mask) {
            auto g = build_grid(lat, q, anyon_config_from_mask(q, mask), 0.0);
            EXPECT_EQ(contract_bmps(g).value(), 0.0);
            if (q.edges.size() <= 20) {
                EXPECT_EQ(contract_exact(g), 0.0);
            }
        }
    }
}

TEST(Grid, ExactMatchesDirectEnumeration) {
    Lattice lat(8);
    auto q = make_region(lat, edges_of_plaquettes(lat, {lat.plaquette(2, 2), lat.plaquette(3, 2), lat.plaquette(2, 3), lat.plaquette(3, 3)}));
    ASSERT_EQ(q.edges.size(), 12u);
    for (std::uint64_t mask = 0; mask < 16; ++mask) {
        auto m = anyon_config_from_mask(q, mask);
        EXPECT_NEAR(contract_exact(build_grid(lat, q, m, 0.1)), direct_probability(lat, q, m, 0.1), 1e-15);
    }
    auto ann = plus_perimeter(lat, 4, 4);
    for (std::uint64_t mask = 0; mask < 2; ++mask) {
        auto m = anyon_config_from_mask(ann, mask);
        EXPECT_NEAR(contract_exact(build_grid(lat, ann, m, 0.2)), direct_probability(lat, ann, m, 0.2), 1e-15);
    }
}

TEST(Grid, RejectsBadInput) {
    Lattice lat(8);
    auto q = block(lat, 3, 3, 0);
    AnyonConfig wrong;
    wrong.bits = {0, 1};
    EXPECT_THROW(build_grid(lat, q, wrong, 0.1), std::invalid_argument);
    auto big = block(lat, 3, 3, 1);
    EXPECT_THROW(contract_exact(build_grid(lat, big, anyon_config_from_mask(big, 0), 0.1)), std::invalid_argument);
    auto scattered = make_region(lat, {lat.h(0, 0), lat.h(4, 4)});
    EXPECT_THROW(build_grid(lat, scattered, anyon_config_from_mask(scattered, 0), 0.1), std::invalid_argument);
    EXPECT_THROW(contract_bmps(build_grid(lat, q, anyon_config_from_mask(q, 0), 0.1), 0), std::invalid_argument);
}

TEST(Bmps, AgreesWithExactOnAllSyndromes) {
    Lattice lat(8);
    for (const auto& q : small_regions(lat)) {
        if (q.edges.size() > 20) continue;
        for (double p : {0.05, 0.11, 0.15, 0.3, 0.5}) {
            for (const auto& [mask, w] : syndrome_distribution_exact(lat, q, p)) {
                auto g = build_grid(lat, q, anyon_config_from_mask(q, mask), p);
                const double ex = contract_exact(g);
                EXPECT_NEAR(ex, w, 1e-13 * w);
                EXPECT_NEAR(contract_bmps(g, 64).value(), ex, 1e-10 * ex) << "edges=" << q.edges.size() << " p=" << p;
            }
        }
    }
}

TEST(Bmps, NormalizationAndFeasibility) {
    Lattice lat(8);
    for (const auto& q : small_regions(lat)) {
        const int n_obs = q.num_observables();
        ASSERT_LE(n_obs, 10);
        for (double p : {0.11, 0.3}) {
            auto exact = syndrome_distribution_exact(lat, q, p);
            std::set<std::uint64_t> support;
            for (const auto& kv : exact) support.insert(kv.first);
            auto net = std::make_shared<const RegionNetwork>(lat, q);
            double total = 0.0;
            for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << n_obs); ++mask) {
                auto m = anyon_config_from_mask(q, mask);
                const double v = contract_bmps(build_grid(net, m, p)).value();
                total += v;
                EXPECT_EQ(v == 0.0, support.count(mask) == 0);
                EXPECT_EQ(net->feasible(m), support.count(mask) == 1);
            }
            EXPECT_NEAR(total, 1.0, 1e-9) << "edges=" << q.edges.size() << " p=" << p;
        }
    }
}

TEST(Bmps, DisjointPlaquettesAreExactAtBondOne) {
    Lattice lat(10);
    auto q = make_region(lat, edges_of_plaquettes(lat, {lat.plaquette(2, 2), lat.plaquette(5, 2), lat.plaquette(8, 2)}));
    auto net = std::make_shared<const RegionNetwork>(lat, q);
    for (std::uint64_t mask = 0; mask < 8; ++mask) {
        auto g = build_grid(net, anyon_config_from_mask(q, mask), 0.17);
        EXPECT_NEAR(contract_bmps(g, 1).value(), contract_exact(g), 1e-14);
    }
}

TEST(Bmps, HoleParityDistributionSumsToOne) {
    Lattice lat(8);
    auto part = annulus_partition(lat, 1);
    auto q = part.region(RegionId::B);
    ASSERT_TRUE(q.has_hole());
    ASSERT_EQ(q.edges.size(), 20u);
    auto net = std::make_shared<const RegionNetwork>(lat, q);
    double total = 0.0;
    for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << q.num_observables()); ++mask) {
        auto g = build_grid(net, anyon_config_from_mask(q, mask), 0.11);
        const double v = contract_bmps(g).value();
        EXPECT_NEAR(v, contract_exact(g), 1e-10 * std::max(v, 1e-300));
        total += v;
    }
    EXPECT_NEAR(total, 1.0, 1e-12);
}

TEST(Bmps, ConvergesWithBondDimension) {
    Lattice lat(12);
    auto part = annulus_partition(lat, 2);
    auto q = part.region(RegionId::AB);
    auto net = std::make_shared<const RegionNetwork>(lat, q);
    SampleStream s(lat, 0.11, 77);
    for (std::uint64_t k = 0; k < 5; ++k) {
        auto g = build_grid(net, restrict_to(q, syndrome(lat, s.at(k))), 0.11);
        const double ref = contract_dense_log(g);
        double prev = std::numeric_limits<double>::infinity();
        for (int chi : {2, 4, 8, 16, 32}) {
            const double err = std::abs(contract_bmps(g, chi).log_value() - ref);
            EXPECT_LE(err, prev + 1e-12) << "chi=" << chi;
            prev = err;
        }
        EXPECT_LT(prev, 1e-10);
    }
}

TEST(Bmps, SelfConvergenceAtDeskScale) {
    Lattice lat(24);
    auto part = annulus_partition(lat, 2);
    auto q = part.region(RegionId::BC);
    auto net = std::make_shared<const RegionNetwork>(lat, q);
    SampleStream s(lat, 0.11, 2024);
    for (std::uint64_t k = 0; k < 4; ++k) {
        auto g = build_grid(net, restrict_to(q, syndrome(lat, s.at(k))), 0.11);
        auto a = contract_bmps(g, 32), b = contract_bmps(g, 64);
        EXPECT_LT(std::abs(std::expm1(a.log_value() - b.log_value())), 1e-6);
        EXPECT_LE(b.max_bond, 64);
    }
}
