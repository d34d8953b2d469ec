// Copyright 2026 The cachesched Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace cachesched {

using Rng = std::mt19937_64;

/// SplitMix64 finalizer. Bijective on 64-bit words.
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Order-sensitive hash of a tuple of words, used to derive independent
/// sub-stream seeds (e.g. per channel pair and slot).
std::uint64_t mix_seed(std::initializer_list<std::uint64_t> words) noexcept;

/// Uniform double on [0, 1) with 53 random bits.
inline double uniform01(Rng& rng) noexcept {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

/// Uniform double on [0, 1) from a counter-based hash; no generator state.
inline double hashed_uniform01(std::uint64_t key) noexcept {
  return static_cast<double>(splitmix64(key) >> 11) * 0x1.0p-53;
}

/// Stream-name tags used with mix_seed so unrelated consumers never share a stream.
enum class StreamTag : std::uint64_t {
  kTopology = 0x746f706fULL,
  kChannel = 0x6368616eULL,
  kArrivals = 0x61727276ULL,
  kOrder = 0x6f726472ULL,
  kReplicate = 0x7265706cULL,
};

inline std::uint64_t tag(StreamTag t) noexcept { return static_cast<std::uint64_t>(t); }

}  // namespace cachesched
