#pragma once

#include <cstdint>
#include <initializer_list>
#include <limits>

namespace simplex {

// SplitMix64 (Steele, Lea & Flood). Satisfies UniformRandomBitGenerator.
// Streams are keyed by hashing a base seed with a tuple of counters, so the
// stream for (seed, epoch, batch) does not depend on how work is scheduled.
class SplitMix64 {
 public:
  using result_type = std::uint64_t;

  explicit SplitMix64(std::uint64_t seed = 0) : state_(seed) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() {
    state_ += 0x9e3779b97f4a7c15ULL;
    return mix(state_);
  }

  static constexpr std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

 private:
  std::uint64_t state_;
};

// Stream tags keep independent uses of one seed apart.
enum class StreamTag : std::uint64_t {
  init = 1,
  shuffle = 2,
  negatives = 3,
  validation = 4,
};

constexpr std::uint64_t derive_seed(std::uint64_t seed, std::initializer_list<std::uint64_t> keys) {
  std::uint64_t h = SplitMix64::mix(seed ^ 0x6a09e667f3bcc909ULL);
  for (std::uint64_t k : keys) {
    h = SplitMix64::mix(h ^ SplitMix64::mix(k + 0x9e3779b97f4a7c15ULL));
  }
  return h;
}

constexpr std::uint64_t derive_seed(std::uint64_t seed, StreamTag tag,
                                    std::initializer_list<std::uint64_t> keys = {}) {
  std::uint64_t h = derive_seed(seed, {static_cast<std::uint64_t>(tag)});
  return keys.size() == 0 ? h : derive_seed(h, keys);
}

}  // namespace simplex
