#pragma once

// Monte Carlo entropies of anyon distributions and the conditional mutual
// information of an A/B/C partition:
//
//   I(A:C|B) = H(m_BC, pi) - H(m_ABC) - H(m_B, pi) + H(m_AB)      [bits]
//
// where pi is the anyon parity of the hole around A. All four entropies are
// averages of -log2 Pr over the same sampled error configurations.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "lattice.hpp"
#include "noise.hpp"
#include "tensor_network.hpp"

namespace markov {

struct EstimatorOptions {
    int chi = 64;
    double cutoff = 1e-12;
    int threads = 1;
};

struct EntropyEstimate {
    double mean = 0.0;
    double stderr_ = 0.0;
    long n_samples = 0;
    std::string region;
    double p = 0.0;
    int chi = 0;
};

struct CmiPoint {
    int L = 0;
    int r = 0;
    double p = 0.0;
    double value = 0.0;
    double stderr_ = 0.0;
    EntropyEstimate H_AB, H_B_piA, H_ABC, H_BC_piA;
    long n_samples = 0;
    int chi = 0;
    std::uint64_t seed = 0;
    int max_bond = 0;
    double max_discarded = 0.0;
};

/// Mean and delete-one jackknife standard error. For a plain mean the
/// jackknife reduces to the sample standard deviation over sqrt(n).
inline std::pair<double, double> jackknife_mean(const std::vector<double>& x) {
    const std::size_t n = x.size();
    if (n == 0) throw std::invalid_argument("jackknife_mean: empty sample");
    double sum = 0.0;
    for (double v : x) sum += v;
    const double mean = sum / static_cast<double>(n);
    if (n == 1) return {mean, 0.0};
    double ss = 0.0;
    for (double v : x) {
        const double loo = (sum - v) / static_cast<double>(n - 1);
        ss += (loo - mean) * (loo - mean);
    }
    return {mean, std::sqrt(ss * static_cast<double>(n - 1) / static_cast<double>(n))};
}

namespace detail {

/// Run body(k) for k in [0, n) on a fixed number of workers. Each worker takes
/// a contiguous block, so results stored by index do not depend on timing.
inline void parallel_for(long n, int threads, const std::function<void(long)>& body) {
    threads = std::max(1, threads);
    if (threads == 1 || n < 2) {
        for (long k = 0; k < n; ++k) body(k);
        return;
    }
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(threads));
    const long chunk = (n + threads - 1) / threads;
    for (int t = 0; t < threads; ++t) {
        pool.emplace_back([&, t] {
            try {
                for (long k = t * chunk; k < std::min(n, (t + 1) * chunk); ++k) body(k);
            } catch (...) {
                errors[static_cast<std::size_t>(t)] = std::current_exception();
            }
        });
    }
    for (auto& th : pool) th.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

inline void check_samples(long n) {
    if (n < 100) throw std::invalid_argument("at least 100 samples are required, got " + std::to_string(n));
}

inline double to_bits(double log_nat) { return -log_nat / std::log(2.0); }

}  // namespace detail

/// H(m_Q) in bits, including the hole parity when Q is annular.
inline EntropyEstimate estimate_entropy(const Lattice& lat, const Region& q, double p, long n_samples,
                                        std::uint64_t seed, const EstimatorOptions& opt = {}) {
    detail::check_samples(n_samples);
    SampleStream stream(lat, p, seed);
    auto net = std::make_shared<const RegionNetwork>(lat, q);
    std::vector<double> h(static_cast<std::size_t>(n_samples));
    detail::parallel_for(n_samples, opt.threads, [&](long k) {
        auto m = syndrome(lat, stream.at(static_cast<std::uint64_t>(k)));
        try {
            auto res = contract_bmps(build_grid(net, restrict_to(q, m), p), opt.chi, opt.cutoff);
            h[static_cast<std::size_t>(k)] = detail::to_bits(res.log_value());
        } catch (const PrecisionError& e) {
            throw PrecisionError("sample " + std::to_string(k) + ": " + e.what());
        }
    });
    auto [mean, se] = jackknife_mean(h);
    return {mean, se, n_samples, "", p, opt.chi};
}

/// Per-sample terms of the CMI estimator. Exposed so that callers can check
/// the same-stream property and build custom statistics.
struct CmiSamples {
    std::vector<double> h_ab, h_b, h_abc, h_bc;  // -log2 Pr per sample
    int max_bond = 1;
    double max_discarded = 0.0;
};

inline CmiSamples sample_cmi_terms(const RegionPartition& part, double p, long n_samples, std::uint64_t seed,
                                   const EstimatorOptions& opt = {}) {
    const Lattice& lat = part.lattice();
    SampleStream stream(lat, p, seed);
    const Region q_ab = part.region(RegionId::AB), q_b = part.region(RegionId::B);
    const Region q_abc = part.region(RegionId::ABC), q_bc = part.region(RegionId::BC);
    auto n_ab = std::make_shared<const RegionNetwork>(lat, q_ab);
    auto n_b = std::make_shared<const RegionNetwork>(lat, q_b);
    auto n_abc = std::make_shared<const RegionNetwork>(lat, q_abc);
    auto n_bc = std::make_shared<const RegionNetwork>(lat, q_bc);
    const auto N = static_cast<std::size_t>(n_samples);
    CmiSamples out;
    out.h_ab.resize(N);
    out.h_b.resize(N);
    out.h_abc.resize(N);
    out.h_bc.resize(N);
    std::vector<int> bonds(N, 1);
    std::vector<double> disc(N, 0.0);
    detail::parallel_for(n_samples, opt.threads, [&](long k) {
        const auto i = static_cast<std::size_t>(k);
        auto m = syndrome(lat, stream.at(static_cast<std::uint64_t>(k)));
        try {
            auto [abc, bc] = contract_bmps_pair(build_grid(n_abc, restrict_to(q_abc, m), p),
                                                build_grid(n_bc, restrict_to(q_bc, m), p), opt.chi, opt.cutoff);
            auto [ab, b] = contract_bmps_pair(build_grid(n_ab, restrict_to(q_ab, m), p),
                                              build_grid(n_b, restrict_to(q_b, m), p), opt.chi, opt.cutoff);
            out.h_abc[i] = detail::to_bits(abc.log_value());
            out.h_bc[i] = detail::to_bits(bc.log_value());
            out.h_ab[i] = detail::to_bits(ab.log_value());
            out.h_b[i] = detail::to_bits(b.log_value());
            bonds[i] = std::max({abc.max_bond, bc.max_bond, ab.max_bond, b.max_bond});
            disc[i] = std::max({abc.discarded_weight, bc.discarded_weight, ab.discarded_weight, b.discarded_weight});
        } catch (const PrecisionError& e) {
            throw PrecisionError("sample " + std::to_string(k) + ": " + e.what());
        }
        for (double v : {out.h_abc[i], out.h_bc[i], out.h_ab[i], out.h_b[i]})
            if (!std::isfinite(v)) throw PrecisionError("sample " + std::to_string(k) + ": sampled syndrome has zero probability");
    });
    out.max_bond = *std::max_element(bonds.begin(), bonds.end());
    out.max_discarded = *std::max_element(disc.begin(), disc.end());
    return out;
}

inline CmiPoint assemble_cmi(const CmiSamples& s, double p, long n_samples, std::uint64_t seed, int chi) {
    const std::size_t N = s.h_ab.size();
    std::vector<double> d(N);
    for (std::size_t i = 0; i < N; ++i) d[i] = s.h_bc[i] - s.h_abc[i] - s.h_b[i] + s.h_ab[i];
    auto entropy = [&](const std::vector<double>& h, const char* name) {
        auto [mean, se] = jackknife_mean(h);
        return EntropyEstimate{mean, se, n_samples, name, p, chi};
    };
    CmiPoint pt;
    pt.p = p;
    pt.H_AB = entropy(s.h_ab, "AB");
    pt.H_B_piA = entropy(s.h_b, "B,piA");
    pt.H_ABC = entropy(s.h_abc, "ABC");
    pt.H_BC_piA = entropy(s.h_bc, "BC,piA");
    // The value is assembled from the component means; it equals the mean of d.
    pt.value = pt.H_BC_piA.mean - pt.H_ABC.mean - pt.H_B_piA.mean + pt.H_AB.mean;
    pt.stderr_ = jackknife_mean(d).second;
    pt.n_samples = n_samples;
    pt.chi = chi;
    pt.seed = seed;
    pt.max_bond = s.max_bond;
    pt.max_discarded = s.max_discarded;
    return pt;
}

inline CmiPoint estimate_cmi(const RegionPartition& part, double p, long n_samples, std::uint64_t seed,
                             const EstimatorOptions& opt = {}) {
    detail::check_samples(n_samples);
    auto s = sample_cmi_terms(part, p, n_samples, seed, opt);
    CmiPoint pt = assemble_cmi(s, p, n_samples, seed, opt.chi);
    pt.L = part.lattice().size();
    pt.r = part.r();
    return pt;
}

// ---------------------------------------------------------------------------
// Exact references by enumeration of every error on the region (small regions).

inline double exact_entropy_bits(const Lattice& lat, const Region& q, double p) {
    double h = 0.0;
    for (const auto& [key, w] : syndrome_distribution_exact(lat, q, p))
        if (w > 0.0) h -= w * std::log2(w);
    return h;
}

struct ExactCmi {
    double H_AB, H_B_piA, H_ABC, H_BC_piA, value;
};

inline ExactCmi exact_cmi(const RegionPartition& part, double p) {
    const Lattice& lat = part.lattice();
    ExactCmi out{};
    out.H_AB = exact_entropy_bits(lat, part.region(RegionId::AB), p);
    out.H_B_piA = exact_entropy_bits(lat, part.region(RegionId::B), p);
    out.H_ABC = exact_entropy_bits(lat, part.region(RegionId::ABC), p);
    out.H_BC_piA = exact_entropy_bits(lat, part.region(RegionId::BC), p);
    out.value = out.H_BC_piA - out.H_ABC - out.H_B_piA + out.H_AB;
    return out;
}

}  // namespace markov
