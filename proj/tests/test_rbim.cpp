#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include <markov/cmi.hpp>
#include <markov/rbim.hpp>

using namespace markov;

namespace {

// Direct partition sum over every spin configuration, energies from scratch.
double brute_force_F(const RbimInstance& inst) {
    const auto& g = *inst.graph;
    const int n = g.num_spins();
    long double Z = 0.0L;
    for (std::uint64_t s = 0; s < (std::uint64_t{1} << n); ++s) {
        double E = 0.0;
        for (std::size_t b = 0; b < g.bonds.size(); ++b) {
            int si = (s >> g.bonds[b][0]) & 1 ? -1 : 1, sj = (s >> g.bonds[b][1]) & 1 ? -1 : 1;
            E += inst.J * inst.eta[b] * si * sj;
        }
        Z += std::exp(static_cast<long double>(E));
    }
    return -static_cast<double>(std::log(Z));
}

ErrorConfig random_error(const Lattice& lat, double p, std::uint64_t seed) {
    return SampleStream(lat, p, seed).at(0);
}

Region block_region(const Lattice& lat, int cx, int cy, int radius) {
    return make_region(lat, edges_of_plaquettes(lat, plaquette_block(lat, cx, cy, radius)));
}

// Perimeter of the plus-shaped hole around one plaquette: 12 edges, no
// interior plaquette, hole parity over the five plaquettes.
Region plus_annulus(const Lattice& lat, int cx, int cy) {
    std::vector<int> hole = {lat.plaquette(cx, cy), lat.plaquette(cx + 1, cy), lat.plaquette(cx - 1, cy),
                             lat.plaquette(cx, cy + 1), lat.plaquette(cx, cy - 1)};
    std::vector<int> inner = edges_of_plaquettes(lat, hole), perimeter;
    for (int e : inner) {
        auto [a, b] = lat.edge_plaquettes(e);
        bool ia = std::count(hole.begin(), hole.end(), a) > 0, ib = std::count(hole.begin(), hole.end(), b) > 0;
        if (ia != ib) perimeter.push_back(e);
    }
    return make_region(lat, perimeter, hole);
}

}  // namespace

TEST(Nishimori, Coupling) {
    EXPECT_EQ(nishimori_coupling(0.5), 0.0);
    EXPECT_NEAR(nishimori_coupling(0.1), 0.5 * std::log(1.0 / 9.0), 1e-15);
    EXPECT_NEAR(nishimori_coupling(0.1), -1.0986122886681098, 1e-12);
    for (double p : {0.03, 0.2, 0.37}) EXPECT_NEAR(nishimori_coupling(p), -nishimori_coupling(1 - p), 1e-15);
    EXPECT_THROW(nishimori_coupling(0.0), std::invalid_argument);
    EXPECT_THROW(nishimori_coupling(1.0), std::invalid_argument);
}

TEST(FreeEnergy, FreeSpinsAndSingleBond) {
    Lattice lat(6);
    auto g = rbim_graph(lat, edges_of_plaquettes(lat, {lat.plaquette(2, 2)}));
    ErrorConfig e(lat.num_edges());
    for (auto& b : e.bits) b = 1;  // eta = +1
    auto inst = rbim_instance(g, e, 0.0);
    EXPECT_NEAR(free_energy_enumerate(inst), -4 * std::log(2.0), 1e-13);
    EXPECT_NEAR(free_energy_transfer(inst), -4 * std::log(2.0), 1e-13);

    auto g1 = rbim_graph(lat, {lat.h(1, 1)});
    const double J = 0.37;
    auto one = rbim_instance(g1, e, J);
    const double expect = -std::log(2 * std::exp(J) + 2 * std::exp(-J));
    EXPECT_NEAR(free_energy_enumerate(one), expect, 1e-14);
    EXPECT_NEAR(free_energy_transfer(one), expect, 1e-14);
}

TEST(FreeEnergy, EnginesMatchBruteForce) {
    Lattice lat(8);
    for (int radius : {0, 1}) {
        auto g = rbim_graph(lat, edges_of_plaquettes(lat, plaquette_block(lat, 4, 4, radius)));
        for (double p : {0.05, 0.11, 0.3}) {
            for (std::uint64_t seed = 1; seed <= 3; ++seed) {
                auto inst = rbim_instance(g, random_error(lat, p, seed), nishimori_coupling(p));
                const double ref = brute_force_F(inst);
                EXPECT_NEAR(free_energy_enumerate(inst), ref, 1e-11 * std::max(1.0, std::abs(ref)));
                EXPECT_NEAR(free_energy_transfer(inst), ref, 1e-11 * std::max(1.0, std::abs(ref)));
            }
        }
    }
}

TEST(FreeEnergy, TransferHandlesHolesAndEmptySites) {
    Lattice lat(10);
    auto geo = defect_geometry(3);
    auto g = rbim_graph(geo.lat, geo.without_centre);
    auto inst = rbim_instance(g, random_error(geo.lat, 0.2, 9), nishimori_coupling(0.2));
    EXPECT_NEAR(free_energy_transfer(inst), brute_force_F(inst), 1e-11);
    // An L-shaped edge set leaves grid sites without spins.
    std::vector<int> edges = {lat.h(2, 2), lat.h(3, 2), lat.v(4, 2), lat.v(4, 3), lat.v(4, 4)};
    auto gl = rbim_graph(lat, edges);
    EXPECT_LT(gl.num_spins(), gl.width * gl.height);
    auto il = rbim_instance(gl, random_error(lat, 0.3, 4), 0.8);
    EXPECT_NEAR(free_energy_transfer(il), brute_force_F(il), 1e-12);
}

TEST(FreeEnergy, GaugeInvariance) {
    Lattice lat(8);
    auto g = rbim_graph(lat, edges_of_plaquettes(lat, plaquette_block(lat, 4, 4, 1)));
    auto inst = rbim_instance(g, random_error(lat, 0.15, 21), nishimori_coupling(0.15));
    const double F0 = free_energy_enumerate(inst);
    for (int spin : {0, 5, 10, 15}) {
        auto flipped = inst;
        for (std::size_t b = 0; b < g.bonds.size(); ++b)
            if (g.bonds[b][0] == spin || g.bonds[b][1] == spin) flipped.eta[b] = -flipped.eta[b];
        EXPECT_NEAR(free_energy_enumerate(flipped), F0, 1e-12);
        EXPECT_NEAR(free_energy_transfer(flipped), F0, 1e-12);
    }
}

TEST(FreeEnergy, DisorderAverageDecreasesWithCouplingStrength) {
    // Exact average over the Nishimori eta distribution at p, with |J| scaled up.
    Lattice lat(6);
    const double p = 0.15;
    auto q = block_region(lat, 2, 2, 0);
    auto g = rbim_graph(lat, q.edges);
    const int n = static_cast<int>(q.edges.size());
    double prev = std::numeric_limits<double>::infinity();
    for (double scale : {0.5, 1.0, 1.5, 2.0}) {
        const double J = scale * nishimori_coupling(p);
        double Fbar = 0.0;
        ErrorConfig e(lat.num_edges());
        for (int mask = 0; mask < (1 << n); ++mask) {
            int w = 0;
            for (int k = 0; k < n; ++k) w += e.bits[q.edges[k]] = (mask >> k) & 1;
            Fbar += std::pow(p, w) * std::pow(1 - p, n - w) * free_energy_enumerate(rbim_instance(g, e, J));
        }
        EXPECT_LT(Fbar, prev);
        prev = Fbar;
    }
}

TEST(EntropyMapping, SinglePlaquette) {
    Lattice lat(6);
    auto q = block_region(lat, 2, 2, 0);
    auto c = entropy_freeenergy_check(lat, q, 0.2);
    EXPECT_NEAR(c.entropy_nats, c.rhs, 1e-10);
    // Closed form: the plaquette parity is odd with probability (1 - (1-2p)^4) / 2.
    const double q1 = 0.5 * (1 - std::pow(0.6, 4));
    EXPECT_NEAR(c.entropy_nats, -(q1 * std::log(q1) + (1 - q1) * std::log(1 - q1)), 1e-12);
}

TEST(EntropyMapping, BlockAndAnnulus) {
    Lattice lat(8);
    auto block = make_region(lat, edges_of_plaquettes(lat, {lat.plaquette(3, 3), lat.plaquette(4, 3), lat.plaquette(3, 4),
                                                             lat.plaquette(4, 4)}));
    ASSERT_EQ(block.edges.size(), 12u);
    auto ann = plus_annulus(lat, 4, 4);
    ASSERT_EQ(ann.edges.size(), 12u);
    ASSERT_TRUE(ann.has_hole());
    for (double p : {0.05, 0.11, 0.3, 0.5}) {
        for (const auto& q : {block, ann}) {
            auto c = entropy_freeenergy_check(lat, q, p);
            EXPECT_NEAR(c.entropy_nats, c.rhs, 1e-8) << "p=" << p << " edges=" << q.edges.size();
            auto t = entropy_freeenergy_check(lat, q, p, RbimEngine::Transfer);
            EXPECT_NEAR(t.rhs, c.rhs, 1e-10);
        }
    }
}

TEST(EntropyMapping, RejectsRegionWithUndeclaredHole) {
    Lattice lat(8);
    auto ann = plus_annulus(lat, 4, 4);
    auto no_hole = make_region(lat, ann.edges);
    EXPECT_THROW(entropy_freeenergy_check(lat, no_hole, 0.1), std::invalid_argument);
}

TEST(DefectFreeEnergy, VanishesAtHalf) {
    auto d = defect_free_energy(3, 0.5, 200, 5);
    EXPECT_NEAR(d.mean, 0.0, 1e-12);
    EXPECT_NEAR(d.stderr_, 0.0, 1e-12);
}

TEST(DefectFreeEnergy, EnginesAgree) {
    auto a = defect_free_energy(3, 0.11, 300, 8, RbimEngine::Enumerate);
    auto b = defect_free_energy(3, 0.11, 300, 8, RbimEngine::Transfer);
    EXPECT_NEAR(a.mean, b.mean, 1e-10);
}

TEST(DefectFreeEnergy, IncreasesAndSaturatesAtLowNoise) {
    const double p = 0.03;
    auto f3 = defect_free_energy(3, p, 2000, 1), f5 = defect_free_energy(5, p, 2000, 1), f7 = defect_free_energy(7, p, 2000, 1);
    EXPECT_GT(f5.mean, f3.mean);
    EXPECT_GT(f7.mean, f5.mean - 3 * f7.stderr_);
    EXPECT_LT(f7.mean - f5.mean, f5.mean - f3.mean);
}

TEST(DefectFreeEnergy, DifferenceMatchesCmi) {
    const double p = 0.11;
    const long n = 6000;
    auto f3 = defect_free_energy(3, p, n, 31), f5 = defect_free_energy(5, p, n, 32);
    const double rbim_bits = (f5.mean - f3.mean) / std::log(2.0);
    const double rbim_se = std::hypot(f5.stderr_, f3.stderr_) / std::log(2.0);
    Lattice lat(8);
    auto pt = estimate_cmi(annulus_partition(lat, 1), p, n, 33);
    EXPECT_NEAR(rbim_bits, pt.value, 4 * std::hypot(rbim_se, pt.stderr_))
        << "rbim " << rbim_bits << " +- " << rbim_se << " cmi " << pt.value << " +- " << pt.stderr_;
}
