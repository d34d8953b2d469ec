// Copyright 2026 The cachesched Authors
// SPDX-License-Identifier: Apache-2.0

#include "cachesched/random.hpp"

namespace cachesched {

std::uint64_t mix_seed(std::initializer_list<std::uint64_t> words) noexcept {
  std::uint64_t h = 0x243f6a8885a308d3ULL;
  for (std::uint64_t w : words) {
    h = splitmix64(h ^ splitmix64(w));
  }
  return h;
}

}  // namespace cachesched
