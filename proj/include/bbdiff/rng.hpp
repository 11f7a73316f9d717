// Copyright 2026 The bbdiff Authors. All rights reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef BBDIFF_RNG_HPP
#define BBDIFF_RNG_HPP

#include <cassert>
#include <cstdint>
#include <random>
#include <utility>
#include <vector>

namespace bbdiff {

// Seeded random stream. Wraps std::mt19937_64 but draws bounded integers
// with explicit rejection sampling so that results do not depend on the
// standard library's std::uniform_int_distribution implementation. All
// randomized behavior in the project must flow through this class; that is
// what makes campaign archives reproducible from (config, seed) alone.
class Rng {
public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform draw from [lo, hi], both ends inclusive.
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
    assert(lo <= hi);
    const std::uint64_t span = static_cast<std::uint64_t>(hi - lo) + 1;
    if (span == 0) // full 64-bit range
      return static_cast<std::int64_t>(next_u64());
    // Rejection sampling: draw until the value falls below the largest
    // multiple of `span`, then reduce. Unbiased and portable.
    const std::uint64_t limit = UINT64_MAX - (UINT64_MAX % span + 1) % span;
    std::uint64_t v = next_u64();
    while (v > limit)
      v = next_u64();
    return lo + static_cast<std::int64_t>(v % span);
  }

  std::size_t uniform_index(std::size_t n) {
    assert(n > 0);
    return static_cast<std::size_t>(uniform_int(0, static_cast<std::int64_t>(n) - 1));
  }

  double uniform_real01() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  template <typename T> const T &pick(const std::vector<T> &xs) {
    assert(!xs.empty());
    return xs[uniform_index(xs.size())];
  }

  template <typename T> void shuffle(std::vector<T> &xs) {
    if (xs.empty())
      return;
    for (std::size_t i = xs.size() - 1; i > 0; --i)
      std::swap(xs[i], xs[uniform_index(i + 1)]);
  }

  // Derives an independent child stream. Consumes one draw from this stream,
  // so fork order matters for reproducibility and is part of the contract of
  // every caller.
  Rng fork() { return Rng(splitmix(next_u64())); }

private:
  // splitmix64 finalizer; decorrelates fork seeds from raw engine output.
  static std::uint64_t splitmix(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
  }

  std::mt19937_64 engine_;
};

} // namespace bbdiff

#endif // BBDIFF_RNG_HPP
