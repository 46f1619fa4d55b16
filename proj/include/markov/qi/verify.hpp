#pragma once

// The exact small-system checks behind `markov exact-verify`: every
// inequality and identity that can be evaluated with dense matrices, each
// reported with its worst case.

#include <algorithm>
#include <cmath>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "../cmi.hpp"
#include "circuit.hpp"
#include "convergence.hpp"
#include "petz.hpp"
#include "toric.hpp"

namespace markov::qi {

using json = nlohmann::json;

/// One layer of single-site dephasing generators sqrt(gamma) Z on a ring.
inline std::vector<std::vector<LocalGenerator>> dephasing_ring_pattern(int n, double gamma) {
    std::vector<LocalGenerator> layer;
    for (int i = 0; i < n; ++i) layer.push_back({{i}, CMat(), {std::sqrt(gamma) * pauli('Z')}});
    return {layer};
}

/// Even and odd bonds of a ring under XX + YY + 0.4 ZI.
inline std::vector<std::vector<LocalGenerator>> brickwork_ring_pattern(int n) {
    const CMat H = kron(pauli('X'), pauli('X')) + kron(pauli('Y'), pauli('Y')) + 0.4 * kron(pauli('Z'), pauli('I'));
    std::vector<LocalGenerator> even, odd;
    for (int i = 0; i + 1 < n; i += 2) even.push_back({{i, i + 1}, H, {}});
    for (int i = 1; i < n; i += 2) odd.push_back({{i, (i + 1) % n}, H, {}});
    return {even, odd};
}

struct ReversalDemo {
    TrotterCircuit forward, reversal;
    CumulativeError error;
    int cptp_failures = 0;
};

/// Forward dephasing ring from the transverse-field Ising ground state
/// (g = 0.5), separated into layers and reversed with buffer r.
inline ReversalDemo reversal_demo(int n, double dt, double gamma, int r, bool unitary = false) {
    ChainMetric ring{n, true};
    ReversalDemo d;
    d.forward = reorganize(build_forward(n, dt, unitary ? brickwork_ring_pattern(n) : dephasing_ring_pattern(n, gamma)), ring, r);
    auto rho = tfim_ground_state(n, 0.5);
    d.reversal = build_reversal(d.forward, ring, rho, r);
    for (const auto& layer : d.reversal.layers)
        for (const auto& g : layer) d.cptp_failures += !g.check_cptp().ok();
    d.error = cumulative_error_check(d.forward, d.reversal, rho);
    return d;
}

struct VerifyOptions {
    std::vector<double> p = {0.1, 0.25, 0.4};
    int bound_trials = 200;
    int petz_trials = 100;
    std::uint64_t seed = 1;
};

namespace detail {

struct Section {
    std::string name;
    double tol;
    int trials = 0, passed = 0, cptp_checked = 0, cptp_failed = 0;
    double worst = 0.0;  // largest violation measure; <= tol passes
    json cases = json::array();

    void record(double violation, json info = json::object()) {
        ++trials;
        worst = trials == 1 ? violation : std::max(worst, violation);
        const bool ok = violation <= tol;
        passed += ok;
        if (!ok || cases.size() < 20) {
            info["violation"] = violation;
            info["ok"] = ok;
            cases.push_back(info);
        }
    }
    void cptp(const QuantumChannel& c) {
        ++cptp_checked;
        cptp_failed += !c.check_cptp().ok();
    }
    bool ok() const { return trials > 0 && passed == trials && cptp_failed == 0; }
    json to_json() const {
        return {{"name", name}, {"tolerance", tol}, {"trials", trials}, {"passed", passed}, {"worst", worst},
                {"channels_checked", cptp_checked}, {"channels_not_cptp", cptp_failed}, {"ok", ok()}, {"cases", cases}};
    }
};

inline std::vector<int> range(int n) {
    std::vector<int> v(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) v[static_cast<std::size_t>(i)] = i;
    return v;
}

}  // namespace detail

/// Runs every check; report["ok"] is true only if all of them pass.
inline json exact_verify(const VerifyOptions& opt) {
    using detail::Section;
    std::vector<Section> sections;
    std::mt19937_64 gen(opt.seed);
    Lattice lat(2);

    {
        Section s{"entropy_decomposition", 1e-9};
        auto plaquette = make_region(lat, {lat.h(0, 0), lat.h(0, 1), lat.v(0, 0), lat.v(1, 0)});
        auto annulus = make_region(lat, {lat.h(0, 0), lat.h(1, 0), lat.h(0, 1), lat.h(1, 1)}, {lat.plaquette(0, 0), lat.plaquette(1, 0)});
        for (double p : opt.p)
            for (const auto& [name, q] : {std::pair{"plaquette", plaquette}, std::pair{"annulus", annulus}}) {
                const double quantum = dephased_entropy_shift(2, q.edges, p);
                const double classical = exact_entropy_bits(lat, q, p);
                s.record(std::abs(quantum - classical), {{"region", name}, {"p", p}, {"entropy_shift", quantum}, {"syndrome_entropy", classical}});
            }
        sections.push_back(s);
    }
    {
        Section s{"recovery_bound_random", 1e-8};
        for (int t = 0; t < opt.bound_trials; ++t) {
            auto rho = random_state(4, gen, 1 + t % 16);
            auto E = random_channel({0}, 1 + t % 4, gen);
            s.cptp(E);
            auto r = recovery_bound_check(rho, E, {0}, {1, 2}, {3});
            const double v = std::max({r.lhs - r.rhs, r.rhs - r.rhs_data_processing, -r.rhs});
            s.record(v, {{"trial", t}, {"lhs", r.lhs}, {"cmi_drop", r.rhs}, {"cmi_before", r.rhs_data_processing}});
        }
        sections.push_back(s);
    }
    {
        Section s{"recovery_bound_toric", 1e-8};
        std::vector<int> A = {lat.h(0, 0)}, B = {lat.v(0, 0), lat.h(1, 0), lat.h(0, 1)}, C = {lat.v(1, 0), lat.h(1, 1), lat.v(0, 1), lat.v(1, 1)};
        for (double p : opt.p) {
            auto rho = dephase(toric_ground_state(2), p, detail::range(8));
            for (double q : {0.05, 0.3, 0.5}) {
                auto E = QuantumChannel::dephasing(A[0], q);
                s.cptp(E);
                auto r = recovery_bound_check(rho, E, A, B, C);
                const double v = std::max({r.lhs - r.rhs, r.rhs - r.rhs_data_processing, -r.rhs});
                s.record(v, {{"p", p}, {"q", q}, {"lhs", r.lhs}, {"cmi_drop", r.rhs}, {"cmi_before", r.rhs_data_processing}});
            }
        }
        sections.push_back(s);
    }
    {
        Section s{"petz_fixed_point", 1e-8};
        std::uniform_int_distribution<int> nq(1, 3), nk(1, 4);
        for (int t = 0; t < opt.petz_trials; ++t) {
            const int n = nq(gen);
            const int rank = std::uniform_int_distribution<int>(1, 1 << n)(gen);
            auto sigma = random_state(n, gen, rank);
            auto sup = detail::range(n);
            std::shuffle(sup.begin(), sup.end(), gen);
            sup.resize(static_cast<std::size_t>(std::uniform_int_distribution<int>(1, n)(gen)));
            auto E = random_channel(sup, nk(gen), gen);
            auto P = twirled_petz(E, sigma, detail::range(n));
            s.cptp(E);
            s.cptp(P);
            s.record(trace_norm(P.apply(E.apply(sigma.matrix(), n), n) - sigma.matrix()), {{"trial", t}, {"qubits", n}, {"rank", rank}});
        }
        sections.push_back(s);
    }
    {
        Section s{"petz_symmetry", 1e-8};
        const CMat U = kron(kron(pauli('Z'), pauli('Z')), pauli('Z'));
        auto conj_U = QuantumChannel::unitary({0, 1, 2}, U);
        auto even = [&](const CMat& m) { return CMat(0.5 * (m + U * m * U.adjoint())); };
        for (int t = 0; t < opt.petz_trials; ++t) {
            DensityMatrix sigma(even(random_state(3, gen, 1 + t % 8).matrix()));
            std::vector<CMat> kraus;
            const int m = 1 + t % 3;
            for (int k = 0; k < m; ++k) {
                CMat H = ginibre(8, 8, gen);
                H = even(H + H.adjoint());
                kraus.push_back(CMat((cplx(0, 1) * H).exp()) / std::sqrt(static_cast<double>(m)));
            }
            auto E = QuantumChannel::from_kraus({0, 1, 2}, kraus);
            auto P = twirled_petz(E, sigma, {0, 1, 2});
            s.cptp(E);
            s.cptp(P);
            s.record((compose(P, conj_U).superoperator() - compose(conj_U, P).superoperator()).cwiseAbs().maxCoeff(), {{"trial", t}});
        }
        sections.push_back(s);
    }
    {
        Section s{"cumulative_error", 1e-9};
        auto d = reversal_demo(6, 0.5, 0.2, 1);
        s.cptp_checked += static_cast<int>(d.reversal.num_gates());
        s.cptp_failed += d.cptp_failures;
        s.record(d.error.epsilon - d.error.bound, {{"circuit", "dephasing ring"}, {"epsilon", d.error.epsilon}, {"bound", d.error.bound}});
        auto u = reversal_demo(6, 0.5, 0.0, 1, true);
        s.cptp_checked += static_cast<int>(u.reversal.num_gates());
        s.cptp_failed += u.cptp_failures;
        s.record(u.error.epsilon - u.error.bound, {{"circuit", "unitary brickwork"}, {"epsilon", u.error.epsilon}, {"bound", u.error.bound}});
        // A unitary circuit is inverted exactly.
        s.record(u.error.epsilon < 1e-8 ? 0.0 : u.error.epsilon, {{"circuit", "unitary brickwork"}, {"check", "epsilon < 1e-8"}});
        sections.push_back(s);
    }
    {
        Section s{"dephasing_convergence", 1e-10};
        const auto full = pauli_weights(complete_dephasing(0));
        for (double t : {0.0, 0.5, 1.0, 3.0}) {
            auto w = pauli_weights(dephasing_lindblad(0, t));
            double tv = 0.0;
            for (std::size_t k = 0; k < 4; ++k) tv += std::abs(w[k] - full[k]);
            s.cptp(dephasing_lindblad(0, t));
            s.record(std::abs(tv - dephasing_convergence(t, 1).single_qubit), {{"t", t}, {"distance", tv}, {"exp_minus_t", std::exp(-t)}});
        }
        sections.push_back(s);
    }

    json report = {{"sections", json::array()}};
    bool all = true;
    for (const auto& s : sections) {
        report["sections"].push_back(s.to_json());
        all = all && s.ok();
    }
    report["ok"] = all;
    return report;
}

}  // namespace markov::qi
