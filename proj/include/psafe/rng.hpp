#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <span>

namespace psafe::rng {

// Philox4x32-10 counter-based generator. Every variate is addressed by
// (key, counter) alone, so streams are reproducible and independent of
// scheduling or draw order.
struct Philox4x32 {
    static constexpr uint32_t kMulA = 0xD2511F53u;
    static constexpr uint32_t kMulB = 0xCD9E8D57u;
    static constexpr uint32_t kWeylA = 0x9E3779B9u;
    static constexpr uint32_t kWeylB = 0xBB67AE85u;

    static std::array<uint32_t, 4> block(uint64_t key, uint64_t ctr_hi, uint64_t ctr_lo) {
        uint32_t c0 = static_cast<uint32_t>(ctr_lo);
        uint32_t c1 = static_cast<uint32_t>(ctr_lo >> 32);
        uint32_t c2 = static_cast<uint32_t>(ctr_hi);
        uint32_t c3 = static_cast<uint32_t>(ctr_hi >> 32);
        uint32_t k0 = static_cast<uint32_t>(key);
        uint32_t k1 = static_cast<uint32_t>(key >> 32);
        for (int round = 0; round < 10; ++round) {
            const uint64_t p0 = static_cast<uint64_t>(kMulA) * c0;
            const uint64_t p1 = static_cast<uint64_t>(kMulB) * c2;
            const uint32_t n0 = static_cast<uint32_t>(p1 >> 32) ^ c1 ^ k0;
            const uint32_t n1 = static_cast<uint32_t>(p1);
            const uint32_t n2 = static_cast<uint32_t>(p0 >> 32) ^ c3 ^ k1;
            const uint32_t n3 = static_cast<uint32_t>(p0);
            c0 = n0; c1 = n1; c2 = n2; c3 = n3;
            k0 += kWeylA;
            k1 += kWeylB;
        }
        return {c0, c1, c2, c3};
    }
};

inline uint64_t splitmix64(uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

// Uniform in (0, 1], 53-bit resolution.
inline double u01(uint32_t lo, uint32_t hi) {
    const uint64_t bits = (static_cast<uint64_t>(hi) << 32) | lo;
    return (static_cast<double>(bits >> 11) + 1.0) * 0x1.0p-53;
}

// Indexed stream of standard normals for one simulated path. Variate g is a
// pure function of (seed, path_index, g); consecutive pairs share one Philox
// block through Box-Muller.
class GaussianStream {
public:
    GaussianStream(uint64_t seed, uint64_t path_index)
        : key_(seed), ctr_hi_(path_index) {}

    // z[i] = variate (start + i) of the stream.
    void fill(std::span<double> z, uint64_t start) const {
        uint64_t g = start;
        size_t i = 0;
        while (i < z.size()) {
            double pair[2];
            gaussian_pair(g >> 1, pair);
            if ((g & 1ull) == 0 && i + 1 < z.size()) {
                z[i] = pair[0];
                z[i + 1] = pair[1];
                i += 2;
                g += 2;
            } else {
                z[i] = pair[g & 1ull];
                ++i;
                ++g;
            }
        }
    }

    double at(uint64_t g) const {
        double pair[2];
        gaussian_pair(g >> 1, pair);
        return pair[g & 1ull];
    }

private:
    void gaussian_pair(uint64_t block_index, double out[2]) const {
        const auto b = Philox4x32::block(key_, ctr_hi_, block_index);
        const double u1 = u01(b[0], b[1]);
        const double u2 = u01(b[2], b[3]);
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 2.0 * std::numbers::pi * u2;
        out[0] = r * std::cos(a);
        out[1] = r * std::sin(a);
    }

    uint64_t key_;
    uint64_t ctr_hi_;
};

} // namespace psafe::rng
