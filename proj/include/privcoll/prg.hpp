/*
 * Copyright 2026 The privcoll Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef PRIVCOLL_PRG_HPP_
#define PRIVCOLL_PRG_HPP_

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <limits>
#include <numbers>
#include <span>
#include <utility>

namespace privcoll {

// Purpose tags keep independent streams apart when derived from one seed.
enum class Stream : uint64_t {
  kInit = 1,
  kShare = 2,
  kBatch = 3,
  kData = 4,
  kSimulator = 5,
  kAudit = 6,
};

// SplitMix64 finalizer. Bijective on 64-bit words.
constexpr uint64_t Mix64(uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Folds a sequence of words into one key. Order matters.
constexpr uint64_t DeriveKey(uint64_t seed,
                             std::initializer_list<uint64_t> parts) {
  uint64_t key = Mix64(seed);
  for (uint64_t p : parts) key = Mix64(key ^ Mix64(p + 0x632be59bd9b4e019ULL));
  return key;
}

constexpr uint64_t DeriveKey(uint64_t seed, Stream stream,
                             std::initializer_list<uint64_t> parts = {}) {
  uint64_t key = DeriveKey(seed, {static_cast<uint64_t>(stream)});
  for (uint64_t p : parts) key = Mix64(key ^ Mix64(p + 0x632be59bd9b4e019ULL));
  return key;
}

// Counter-mode generator: output i is Mix64(key + i * golden) passed through
// a second round. Stateless apart from the counter, so a stream can be
// re-derived anywhere from (seed, tags). Satisfies UniformRandomBitGenerator.
class Prg {
 public:
  using result_type = uint64_t;

  explicit Prg(uint64_t key) : key_(key) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() {
    return std::numeric_limits<result_type>::max();
  }

  result_type operator()() { return NextU64(); }

  uint64_t NextU64() {
    uint64_t c = counter_++;
    return Mix64(Mix64(key_ + c * 0x9e3779b97f4a7c15ULL) ^ key_);
  }

  // Uniform in [0, 1) with 53 random bits.
  double NextUnit() { return static_cast<double>(NextU64() >> 11) * 0x1.0p-53; }

  double Uniform(double lo, double hi) { return lo + (hi - lo) * NextUnit(); }

  // Box-Muller; spends two words per call so the stream position is
  // independent of call history.
  double Normal() {
    double u1 = NextUnit();
    double u2 = NextUnit();
    if (u1 < 1e-300) u1 = 1e-300;
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(2.0 * std::numbers::pi * u2);
  }

  // Unbiased integer in [0, bound) by rejection.
  uint64_t Below(uint64_t bound) {
    if (bound <= 1) return 0;
    uint64_t limit = max() - max() % bound;
    uint64_t v;
    do {
      v = NextU64();
    } while (v >= limit);
    return v % bound;
  }

  // Fisher-Yates; std::shuffle is implementation-defined, this is not.
  template <typename T>
  void Shuffle(std::span<T> values) {
    for (size_t i = values.size(); i > 1; --i) {
      size_t j = static_cast<size_t>(Below(i));
      std::swap(values[i - 1], values[j]);
    }
  }

  uint64_t position() const { return counter_; }

 private:
  uint64_t key_;
  uint64_t counter_ = 0;
};

}  // namespace privcoll

#endif  // PRIVCOLL_PRG_HPP_
