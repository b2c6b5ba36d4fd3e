#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string>

namespace ids4nr {

// Seeded RNG with transforms we implement ourselves, so that draws are
// reproducible across standard library implementations (std::mt19937_64 is
// fully specified by the standard; the std distributions are not).
class Rng {
public:
    explicit Rng(uint64_t seed) : engine_(seed), seed_(seed) {}

    uint64_t next_u64() { return engine_(); }

    // Uniform integer in [0, n). n must be > 0.
    int uniform_index(int n) {
        // 128-bit multiply-shift; bias is < 2^-32 for any n that fits an int.
        return static_cast<int>(
            (static_cast<unsigned __int128>(engine_()) *
             static_cast<unsigned __int128>(n)) >>
            64);
    }

    // Uniform real in [0, 1).
    double uniform() {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Standard normal via Box-Muller (one draw per call, pair cached).
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = uniform();
        double u2 = uniform();
        while (u1 <= 1e-300) u1 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double t = 2.0 * M_PI * u2;
        spare_ = r * std::sin(t);
        have_spare_ = true;
        return r * std::cos(t);
    }

    // Derive an independent stream (one per epoch, per tensor, ...) as a pure
    // function of the construction seed and the salt.
    Rng fork(uint64_t salt) const {
        uint64_t x = seed_ ^ (salt + 0x9e3779b97f4a7c15ULL);
        x ^= x >> 30;
        x *= 0xbf58476d1ce4e5b9ULL;
        x ^= x >> 27;
        x *= 0x94d049bb133111ebULL;
        x ^= x >> 31;
        return Rng(x);
    }

private:
    std::mt19937_64 engine_;
    uint64_t seed_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

// Stable 64-bit hash for strings, used to salt per-name RNG streams.
inline uint64_t fnv1a(const std::string& s) {
    uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

}  // namespace ids4nr
