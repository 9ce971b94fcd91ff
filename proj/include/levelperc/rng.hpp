#pragma once

#include <array>
#include <cstdint>
#include <initializer_list>
#include <limits>

namespace levelperc {

/// Philox4x32-10 counter-based generator.
///
/// A stream is identified by (seed, stream id); the seed forms the key and the
/// stream id occupies the upper half of the 128-bit counter, so streams never
/// overlap and any stream can be reconstructed without replaying others.
/// Satisfies UniformRandomBitGenerator.
class Rng {
public:
    using result_type = std::uint64_t;

    explicit Rng(std::uint64_t seed, std::uint64_t stream = 0) noexcept;

    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept
    {
        return std::numeric_limits<result_type>::max();
    }

    result_type operator()() noexcept;

    /// Uniform double in [0, 1) with 53 random bits.
    double uniform() noexcept;
    /// Uniform double in (0, 1].
    double uniform_open_low() noexcept { return 1.0 - uniform(); }
    double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }

    /// Independent generator for sub-stream `index` of this stream.
    [[nodiscard]] Rng split(std::uint64_t index) const noexcept;

    std::uint64_t seed() const noexcept { return seed_; }
    std::uint64_t stream() const noexcept { return stream_; }

private:
    void refill() noexcept;

    std::uint64_t seed_;
    std::uint64_t stream_;
    std::uint64_t block_ = 0;
    std::array<std::uint32_t, 4> buffer_{};
    int used_ = 4;
};

/// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept
{
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Stable seed derivation: hash of a base seed and integer task coordinates.
/// The mapping is part of the reproducibility contract and must not change.
constexpr std::uint64_t derive_seed(std::uint64_t base,
                                    std::initializer_list<std::uint64_t> coords) noexcept
{
    std::uint64_t h = mix64(base ^ 0x6c65766c70657263ULL);
    for (auto c : coords) {
        h = mix64(h ^ mix64(c + 0x1234567ULL));
    }
    return h;
}

} // namespace levelperc
