#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>

#include "lattice.hpp"

namespace markov {

inline void check_dephasing_probability(double p) {
    if (!(p >= 0.0 && p <= 0.5))
        throw std::invalid_argument("dephasing probability must lie in [0, 0.5], got " + std::to_string(p));
}

/// Lindbladian time reaching dephasing strength p. Infinite at p = 0.5.
inline double dephasing_time(double p) {
    check_dephasing_probability(p);
    if (p == 0.5) return std::numeric_limits<double>::infinity();
    return -std::log1p(-2.0 * p);
}

/// Inverse of dephasing_time.
inline double dephasing_probability(double t) {
    if (!(t >= 0.0)) throw std::invalid_argument("dephasing time must be nonnegative");
    return 0.5 * (1.0 - std::exp(-t));
}

inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Stateless mixing of a seed with a counter; used to derive per-sample streams.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t index) {
    std::uint64_t s = seed ^ (index * 0xd1342543de82ef95ULL + 0x2545f4914f6cdd1dULL);
    splitmix64(s);
    return splitmix64(s);
}

/// Small value-type generator. Sample k of a SampleStream always draws from
/// Rng(mix_seed(seed, k)), so results do not depend on which worker runs it.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}
    std::uint64_t next() { return splitmix64(state_); }
    /// Uniform in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
    double normal() {
        double u1 = uniform(), u2 = uniform();
        if (u1 < 1e-300) u1 = 1e-300;
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
    }

private:
    std::uint64_t state_;
};

class SampleStream {
public:
    SampleStream(const Lattice& lat, double p, std::uint64_t seed) : lat_(lat), p_(p), seed_(seed) {
        check_dephasing_probability(p);
    }

    double p() const { return p_; }
    std::uint64_t seed() const { return seed_; }
    std::uint64_t counter() const { return counter_; }
    const Lattice& lattice() const { return lat_; }

    /// Error configuration of sample k. The uniforms depend only on (seed, k),
    /// so streams at different p share random numbers.
    ErrorConfig at(std::uint64_t k) const {
        Rng rng(mix_seed(seed_, k));
        ErrorConfig e(lat_.num_edges());
        for (auto& b : e.bits) b = rng.uniform() < p_ ? 1 : 0;
        return e;
    }

    ErrorConfig next() { return at(counter_++); }

    /// Sub-stream for a worker: shares seed, starts at `start`.
    SampleStream split(std::uint64_t start) const {
        SampleStream s = *this;
        s.counter_ = start;
        return s;
    }

private:
    Lattice lat_;
    double p_;
    std::uint64_t seed_;
    std::uint64_t counter_ = 0;
};

inline ErrorConfig sample_error(SampleStream& stream) { return stream.next(); }

}  // namespace markov
