#pragma once

#include <cstdint>

namespace blindq {

namespace detail {

// SplitMix64 output function (Steele, Lea, Flood 2014).
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

}  // namespace detail

// Reserved substream ids.
enum class Substream : std::uint64_t { interarrival = 0, size = 1, policy = 2 };

// Counter-based generator: draw k of stream (seed, substream) is a pure
// function of the triple, so streams can be split, copied and replayed
// without coordination. Every draw advances `counter` by exactly one.
class RandomStream {
public:
    constexpr RandomStream(std::uint64_t seed, std::uint64_t substream) noexcept
        : seed_(seed), substream_(substream),
          key_(detail::mix64(seed ^ detail::mix64(substream + detail::kGolden))) {}

    constexpr std::uint64_t seed() const noexcept { return seed_; }
    constexpr std::uint64_t substream() const noexcept { return substream_; }
    constexpr std::uint64_t counter() const noexcept { return counter_; }

    constexpr std::uint64_t next_u64() noexcept {
        ++counter_;
        return detail::mix64(key_ + counter_ * detail::kGolden);
    }

    // Uniform on [0, 1) with 53 random bits.
    constexpr double uniform() noexcept {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    // Uniform on the open interval (0, 1); safe for log().
    constexpr double uniform_open() noexcept {
        return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
    }

private:
    std::uint64_t seed_;
    std::uint64_t substream_;
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
};

inline RandomStream make_stream(std::uint64_t seed, std::uint64_t substream) noexcept {
    return RandomStream(seed, substream);
}

inline RandomStream make_stream(std::uint64_t seed, Substream substream) noexcept {
    return RandomStream(seed, static_cast<std::uint64_t>(substream));
}

// Seed for sweep point `point` and policy `policy` of a master seed.
constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t point,
                                    std::uint64_t policy) noexcept {
    std::uint64_t h = detail::mix64(master + detail::kGolden);
    h = detail::mix64(h ^ (point + 1) * 0xD6E8FEB86659FD93ULL);
    h = detail::mix64(h ^ (policy + 1) * 0xA0761D6478BD642FULL);
    return h;
}

}  // namespace blindq
