#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>

namespace plar {

/// Philox4x32-10 counter-based generator (Salmon, Moro, Dror & Shaw 2011).
///
/// State is (key = 64-bit seed, counter = 128 bits). The high 64 counter
/// bits hold a caller-chosen stream index, the low 64 bits the block
/// counter, so `PhiloxRng(seed, s)` for distinct `s` yields statistically
/// independent, individually replayable streams. Each block produces 128
/// output bits consumed as two 64-bit draws.
class PhiloxRng {
public:
    explicit PhiloxRng(std::uint64_t seed, std::uint64_t stream = 0)
        : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
          stream_(stream) {}

    /// Raw 4x32 block function, exposed for known-answer tests.
    static std::array<std::uint32_t, 4> block(std::array<std::uint32_t, 4> ctr,
                                              std::array<std::uint32_t, 2> key) {
        for (int round = 0; round < 10; ++round) {
            const std::uint64_t p0 = kMul0 * static_cast<std::uint64_t>(ctr[0]);
            const std::uint64_t p1 = kMul1 * static_cast<std::uint64_t>(ctr[2]);
            ctr = {static_cast<std::uint32_t>(p1 >> 32) ^ ctr[1] ^ key[0],
                   static_cast<std::uint32_t>(p1),
                   static_cast<std::uint32_t>(p0 >> 32) ^ ctr[3] ^ key[1],
                   static_cast<std::uint32_t>(p0)};
            key[0] += kWeyl0;
            key[1] += kWeyl1;
        }
        return ctr;
    }

    std::uint64_t next_u64() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        const auto out = block({static_cast<std::uint32_t>(block_index_),
                                static_cast<std::uint32_t>(block_index_ >> 32),
                                static_cast<std::uint32_t>(stream_),
                                static_cast<std::uint32_t>(stream_ >> 32)},
                               key_);
        ++block_index_;
        spare_ = (static_cast<std::uint64_t>(out[3]) << 32) | out[2];
        have_spare_ = true;
        return (static_cast<std::uint64_t>(out[1]) << 32) | out[0];
    }

    /// Uniform on [0, 1) with 53 random bits.
    double next_double() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }

    /// Standard normal via Box-Muller; the paired draw is cached.
    double gaussian() {
        if (have_gauss_) {
            have_gauss_ = false;
            return gauss_;
        }
        const double u1 = 1.0 - next_double();  // (0, 1]
        const double u2 = next_double();
        const double radius = std::sqrt(-2.0 * std::log(u1));
        const double angle = 2.0 * std::numbers::pi * u2;
        gauss_ = radius * std::sin(angle);
        have_gauss_ = true;
        return radius * std::cos(angle);
    }

    /// Standard normal conditioned on |z| <= cut (rejection).
    double truncated_gaussian(double cut) {
        for (;;) {
            const double z = gaussian();
            if (std::abs(z) <= cut) return z;
        }
    }

    std::uint64_t stream() const { return stream_; }

private:
    static constexpr std::uint64_t kMul0 = 0xD2511F53u;
    static constexpr std::uint64_t kMul1 = 0xCD9E8D57u;
    static constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
    static constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

    std::array<std::uint32_t, 2> key_;
    std::uint64_t stream_ = 0;
    std::uint64_t block_index_ = 0;
    std::uint64_t spare_ = 0;
    bool have_spare_ = false;
    double gauss_ = 0.0;
    bool have_gauss_ = false;
};

}  // namespace plar
