// Copyright 2026 The convreco Authors.
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

// Deterministic randomness.
//
// The generator is std::mt19937_64, whose output sequence is fixed by the
// C++ standard. Standard distributions are implementation-defined, so every
// derived draw (uniform reals, bounded integers, Bernoulli) is computed here
// from raw 64-bit outputs. Same seed, same draws, on every platform.
//
// Independent streams (per episode, per shard) are derived with
// RandomSource::derive, a splitmix64 mix of (seed, stream id).

#ifndef CONVRECO_RANDOM_HPP_
#define CONVRECO_RANDOM_HPP_

#include <cstddef>
#include <cstdint>
#include <random>
#include <vector>

namespace convreco {

class RandomSource {
 public:
  explicit RandomSource(uint64_t seed) : seed_(seed), engine_(seed) {}

  RandomSource(const RandomSource&) = delete;
  RandomSource& operator=(const RandomSource&) = delete;
  RandomSource(RandomSource&&) = default;
  RandomSource& operator=(RandomSource&&) = default;

  uint64_t seed() const { return seed_; }

  uint64_t next() { return engine_(); }

  // Uniform in [0, 1) with 53 bits of resolution.
  double uniform() {
    return static_cast<double>(next() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform in [0, n). n must be positive. Rejection sampling, no modulo bias.
  size_t index(size_t n);

  bool bernoulli(double p) { return uniform() < p; }

  // Standard normal via Box-Muller (one value per call).
  double normal();

  template <typename T>
  const T& pick(const std::vector<T>& v) {
    return v[index(v.size())];
  }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (size_t i = v.size(); i > 1; --i) {
      std::swap(v[i - 1], v[index(i)]);
    }
  }

  static uint64_t derive(uint64_t seed, uint64_t stream);

 private:
  uint64_t seed_;
  std::mt19937_64 engine_;
};

}  // namespace convreco

#endif  // CONVRECO_RANDOM_HPP_
