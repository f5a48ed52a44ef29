#pragma once

#include "pxspk/types.hpp"

#include <array>
#include <cmath>
#include <cstdint>

namespace pxspk
{

/// Philox4x32-10 counter-based generator (Salmon et al., SC'11).
/// A pure function of (counter, key); no hidden state.
using PhiloxCounter = std::array<std::uint32_t, 4>;
using PhiloxKey = std::array<std::uint32_t, 2>;

constexpr PhiloxCounter philox4x32_10(PhiloxCounter ctr, PhiloxKey key) noexcept
{
    constexpr std::uint32_t kM0 = 0xD2511F53u;
    constexpr std::uint32_t kM1 = 0xCD9E8D57u;
    constexpr std::uint32_t kW0 = 0x9E3779B9u;
    constexpr std::uint32_t kW1 = 0xBB67AE85u;
    for (int round = 0; round < 10; ++round)
    {
        if (round > 0)
        {
            key[0] += kW0;
            key[1] += kW1;
        }
        const std::uint64_t p0 = std::uint64_t(kM0) * ctr[0];
        const std::uint64_t p1 = std::uint64_t(kM1) * ctr[2];
        const auto hi0 = std::uint32_t(p0 >> 32), lo0 = std::uint32_t(p0);
        const auto hi1 = std::uint32_t(p1 >> 32), lo1 = std::uint32_t(p1);
        ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    }
    return ctr;
}

/// Purpose tags separate the random streams drawn for one (realization, block).
enum class StreamPurpose : std::uint32_t
{
    MediumBlock = 1,
    BrownianScreen = 2,
    Synthetic = 3,
    Calibration = 4,
};

/// Address of one independent random stream:
/// (global seed, realization index, block index, purpose tag).
struct SeedPath
{
    std::uint64_t seed = 0;
    std::uint32_t realization = 0;
    std::uint32_t block = 0;
    StreamPurpose purpose = StreamPurpose::Synthetic;

    SeedPath with_block(std::uint32_t b) const
    {
        SeedPath p = *this;
        p.block = b;
        return p;
    }
    SeedPath with_purpose(StreamPurpose tag) const
    {
        SeedPath p = *this;
        p.purpose = tag;
        return p;
    }
    friend bool operator==(const SeedPath&, const SeedPath&) = default;
};

/// Sequential reader over the Philox stream addressed by a SeedPath.
/// Counter word 0 enumerates draws; words 1..3 hold purpose, block, realization.
class CounterStream
{
public:
    explicit CounterStream(const SeedPath& path)
        : key_{std::uint32_t(path.seed), std::uint32_t(path.seed >> 32)},
          ctr_{0u, std::uint32_t(path.purpose), path.block, path.realization}
    {
    }

    std::uint32_t next_u32()
    {
        if (pos_ == 4)
            refill();
        return buf_[pos_++];
    }

    std::uint64_t next_u64()
    {
        const std::uint64_t lo = next_u32();
        const std::uint64_t hi = next_u32();
        return (hi << 32) | lo;
    }

    /// Uniform in (0, 1), 53-bit resolution; never returns 0 or 1.
    Real uniform() { return (Real(next_u64() >> 11) + 0.5) * 0x1.0p-53; }

    /// Standard normal pair by the Marsaglia polar method.
    std::pair<Real, Real> normal_pair()
    {
        for (;;)
        {
            const Real u = 2.0 * uniform() - 1.0;
            const Real v = 2.0 * uniform() - 1.0;
            const Real s = u * u + v * v;
            if (s > 0.0 && s < 1.0)
            {
                const Real f = std::sqrt(-2.0 * std::log(s) / s);
                return {u * f, v * f};
            }
        }
    }

    Real normal()
    {
        if (has_spare_)
        {
            has_spare_ = false;
            return spare_;
        }
        auto [a, b] = normal_pair();
        spare_ = b;
        has_spare_ = true;
        return a;
    }

    /// Circular complex normal with E|w|^2 = 1.
    Complex complex_normal()
    {
        auto [a, b] = normal_pair();
        return {a * M_SQRT1_2, b * M_SQRT1_2};
    }

    Real exponential(Real mean) { return -mean * std::log(uniform()); }

private:
    void refill()
    {
        buf_ = philox4x32_10(ctr_, key_);
        ++ctr_[0];
        pos_ = 0;
    }

    PhiloxKey key_;
    PhiloxCounter ctr_;
    PhiloxCounter buf_{};
    int pos_ = 4;
    Real spare_ = 0.0;
    bool has_spare_ = false;
};

} // namespace pxspk
