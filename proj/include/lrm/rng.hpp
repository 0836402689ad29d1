//
// Copyright 2026 The lrm Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//

#ifndef LRM_RNG_HPP
#define LRM_RNG_HPP

#include <cmath>
#include <cstdint>
#include <stdexcept>

namespace lrm {

// Reproducible pseudo-random streams: xoshiro256** core, seeded through
// splitmix64. Same seed => same sequence on a given platform; streams derived
// from (base, index) are statistically independent.
//
// Stream derivation: the state of stream k under base seed b is produced by
// running splitmix64 from the initial state b + (k+1) * 0x9E3779B97F4A7C15.

inline uint64_t splitmix64_next(uint64_t& state) {
  state += 0x9E3779B97F4A7C15ULL;
  uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

// 64-bit seed of the index-th stream under a base seed.
inline uint64_t derive_stream_seed(uint64_t base, uint64_t index) {
  uint64_t state = base + (index + 1) * 0x9E3779B97F4A7C15ULL;
  return splitmix64_next(state);
}

class Rng {
 public:
  explicit Rng(uint64_t seed) {
    uint64_t sm = seed;
    for (auto& word : state_) word = splitmix64_next(sm);
  }

  static Rng stream(uint64_t base, uint64_t index) {
    return Rng(derive_stream_seed(base, index));
  }

  uint64_t next_u64() {
    const uint64_t result = rotl(state_[1] * 5, 7) * 9;
    const uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
  }

  // Uniform on [0, 1), 53-bit mantissa.
  double next_double() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  // Uniform on the open interval (0, 1); never returns an exact endpoint.
  double next_open_double() {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  }

  // Uniform integer in [0, bound). Modulo reduction; the bias of at most
  // bound/2^64 is irrelevant at the sizes used here.
  uint64_t next_below(uint64_t bound) { return next_u64() % bound; }

  // Standard normal via Box-Muller; the second value of each pair is cached.
  double next_gaussian() {
    if (has_cached_) {
      has_cached_ = false;
      return cached_;
    }
    const double u1 = next_open_double();
    const double u2 = next_double();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * M_PI * u2;
    cached_ = radius * std::sin(angle);
    has_cached_ = true;
    return radius * std::cos(angle);
  }

  // Unit-scale Laplace via inverse CDF: u ~ U(-1/2, 1/2),
  // x = -sign(u) * ln(1 - 2|u|).
  double next_laplace() {
    const double u = next_open_double() - 0.5;
    const double sign = u < 0.0 ? -1.0 : 1.0;
    return -sign * std::log(1.0 - 2.0 * std::abs(u));
  }

 private:
  static uint64_t rotl(uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

  uint64_t state_[4];
  bool has_cached_ = false;
  double cached_ = 0.0;
};

}  // namespace lrm

#endif  // LRM_RNG_HPP
