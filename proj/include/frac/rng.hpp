#pragma once

#include <cstdint>
#include <cmath>

namespace frac {

// splitmix64; one independent stream per (seed, stream, index) triple so that
// sample i draws the same values no matter which thread evaluates it.
class RngStream {
  public:
    explicit RngStream(std::uint64_t seed) : state_(seed) {
        // warm up so nearby seeds decorrelate
        next();
        next();
    }

    std::uint64_t next() {
        state_ += 0x9E3779B97F4A7C15ull;
        std::uint64_t z = state_;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return z ^ (z >> 31);
    }

    /// Uniform in [0,1).
    double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    double uniform(double a, double b) { return a + (b - a) * uniform(); }

    /// Log-uniform over [a,b], a,b > 0.
    double log_uniform(double a, double b) {
        return std::exp(uniform(std::log(a), std::log(b)));
    }

    double normal() {
        // Box-Muller, no caching so the stream stays stateless per call pair
        double u1 = uniform();
        double u2 = uniform();
        if (u1 < 1e-300) u1 = 1e-300;
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
    }

    int uniform_int(int n) { return static_cast<int>(next() % static_cast<std::uint64_t>(n)); }

  private:
    std::uint64_t state_;
};

inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream, std::uint64_t index = 0) {
    std::uint64_t z = seed ^ (stream * 0x9E3779B97F4A7C15ull) ^ (index * 0xD1B54A32D192ED03ull);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

/// Stream for sample `index` of substream `stream`; identical for any thread layout.
inline RngStream sample_stream(std::uint64_t seed, std::uint64_t stream, std::uint64_t index) {
    return RngStream(mix_seed(seed, stream, index));
}

}  // namespace frac
