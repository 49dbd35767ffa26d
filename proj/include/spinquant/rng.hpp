#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace spinquant {

// Portable, seedable random source used by every stochastic stage, so that
// an output is fully determined by (seed, stream).
//
// Construction: a splitmix64 sequence started at state
//   seed + (stream+1) * 0x9E3779B97F4A7C15
// supplies the four 64-bit words of xoshiro256++ state; xoshiro256++ then
// produces the draws. Uniform doubles take the top 53 bits; Gaussian draws
// use the Box-Muller transform.

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t& state) {
    state += 0x9E3779B97F4A7C15ull;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

inline std::uint64_t rotl64(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
}

} // namespace detail

class Rng {
public:
    explicit Rng(std::uint64_t seed, std::uint64_t stream = 0) {
        std::uint64_t sm = seed + (stream + 1) * 0x9E3779B97F4A7C15ull;
        for (auto& w : s_) w = detail::splitmix64(sm);
        bool all_zero = true;
        for (auto w : s_) all_zero &= (w == 0);
        if (all_zero) s_[0] = 1; // xoshiro state must not be all zeros
    }

    std::uint64_t next_u64() {
        const std::uint64_t result = detail::rotl64(s_[0] + s_[3], 23) + s_[0];
        const std::uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = detail::rotl64(s_[3], 45);
        return result;
    }

    /// Uniform in [0, 1).
    double uniform01() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    /// Uniform in (0, 1]; safe as a log() argument.
    double uniform01_open_low() {
        return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
    }

    /// Standard normal via Box-Muller. Draws two uniforms every other call.
    double gaussian() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        const double u1 = uniform01_open_low();
        const double u2 = uniform01();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 2.0 * std::numbers::pi * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

    /// Rayleigh with scale sigma (mode), mean sigma*sqrt(pi/2).
    double rayleigh(double sigma) {
        return sigma * std::sqrt(-2.0 * std::log(uniform01_open_low()));
    }

private:
    std::uint64_t s_[4] = {};
    double spare_ = 0.0;
    bool have_spare_ = false;
};

} // namespace spinquant
