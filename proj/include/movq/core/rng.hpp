// Copyright 2026 The MoVQ Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//    http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef MOVQ_CORE_RNG_HPP_
#define MOVQ_CORE_RNG_HPP_

#include <cmath>
#include <cstdint>
#include <random>

namespace movq {

/// Seeded random stream. All transforms are hand-rolled on top of the raw
/// 64-bit output so the draw sequence is identical on every platform.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t next_u64() { return gen_(); }

  /// Uniform double in [0, 1).
  double uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  /// Uniform double in (0, 1]; never returns zero.
  double uniform_open() {
    return (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Standard normal via Box-Muller; the paired draw is cached.
  double normal() {
    if (has_cached_) {
      has_cached_ = false;
      return cached_;
    }
    double u1 = uniform_open();
    double u2 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    double a = 6.283185307179586476925286766559 * u2;
    cached_ = r * std::sin(a);
    has_cached_ = true;
    return r * std::cos(a);
  }

  /// Uniform integer in [0, n).
  int below(int n) {
    return static_cast<int>(uniform() * static_cast<double>(n));
  }

  /// Derives an independent stream; stable under the parent's later use.
  Rng child(std::uint64_t stream) const {
    std::uint64_t x = seed_mix_ ^ (0x9e3779b97f4a7c15ULL * (stream + 1));
    x ^= x >> 30;
    x *= 0xbf58476d1ce4e5b9ULL;
    x ^= x >> 27;
    x *= 0x94d049bb133111ebULL;
    x ^= x >> 31;
    return Rng(x);
  }

 private:
  std::mt19937_64 gen_;
  std::uint64_t seed_mix_ = gen_();
  bool has_cached_ = false;
  double cached_ = 0.0;
};

}  // namespace movq

#endif  // MOVQ_CORE_RNG_HPP_
