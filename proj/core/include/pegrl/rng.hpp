// Copyright (c) 2026 pegrl authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <initializer_list>

namespace pegrl {

// splitmix64 step (Steele, Lea, Flood 2014). Fully specified arithmetic, so
// streams are identical on every platform regardless of standard library.
inline std::uint64_t splitmix64(std::uint64_t& state) {
    state += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Small deterministic generator. One instance per logical stream; streams are
// obtained with derive_stream rather than by splitting a sequential state.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() { return splitmix64(state_); }

    // Uniform double in [0, 1) with 53 random bits.
    double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // Uniform integer in [0, n). Lemire multiply-shift; bias < 2^-64 is
    // irrelevant here and keeps the draw count deterministic.
    std::uint32_t next_below(std::uint32_t n) {
        const std::uint64_t x = next_u64() >> 32;
        return static_cast<std::uint32_t>((x * static_cast<std::uint64_t>(n)) >> 32);
    }

  private:
    std::uint64_t state_;
};

// Counter-based stream derivation: hashes (seed, words...) into a fresh
// stream key. Trajectory (i, j) always sees the same stream no matter which
// worker samples it or in what order.
inline std::uint64_t derive_stream(std::uint64_t seed, std::initializer_list<std::uint64_t> words) {
    std::uint64_t h = seed ^ 0xd6e8feb86659fd93ULL;
    for (std::uint64_t w : words) {
        h ^= w + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
        std::uint64_t s = h;
        h = splitmix64(s);
    }
    return h;
}

// Tags namespacing the derivation keys used across the library.
namespace stream_tag {
inline constexpr std::uint64_t kDraft = 0x01;
inline constexpr std::uint64_t kEdit = 0x02;
inline constexpr std::uint64_t kStep = 0x03;
inline constexpr std::uint64_t kEval = 0x04;
inline constexpr std::uint64_t kInstance = 0x05;
inline constexpr std::uint64_t kGap = 0x06;
inline constexpr std::uint64_t kScaling = 0x07;
inline constexpr std::uint64_t kStudy = 0x08;
inline constexpr std::uint64_t kSeedSweep = 0x09;
}  // namespace stream_tag

}  // namespace pegrl
