#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace faim {

// Seeded draw stream used everywhere randomness is needed. std::mt19937_64 has
// a fully specified output sequence, and the uniform/normal transforms below
// are written out explicitly because the std distribution algorithms are
// implementation-defined. This keeps every generated world and every sampled
// loss bit-reproducible across compilers, which the replay oracles rely on.
//
// Stream id: "faim-rng-v1". Changing any transform here is a format break.
class DrawStream {
public:
    explicit DrawStream(std::uint64_t seed) : engine_(seed) {}

    // Uniform in [0, 1) with 53 random bits.
    double uniform() {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    // Standard normal via Box-Muller. Draws two uniforms per pair; the second
    // value is cached so consecutive calls consume the engine at a fixed rate.
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = uniform();
        double u2 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double theta = 2.0 * M_PI * u2;
        spare_ = r * std::sin(theta);
        have_spare_ = true;
        return r * std::cos(theta);
    }

    // Uniform integer in [0, bound) by rejection, bias-free.
    std::uint64_t uniform_index(std::uint64_t bound) {
        if (bound <= 1) return 0;
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
        std::uint64_t x = engine_();
        while (x >= limit) x = engine_();
        return x % bound;
    }

private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

}  // namespace faim
