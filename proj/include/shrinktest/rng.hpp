#pragma once

#include <cstdint>
#include <limits>

namespace shrinktest {

// Counter-based generator: output k of stream (seed, replicate, stream_id) is a
// pure function of those three keys and k, so replicates can be drawn in any
// order, on any thread, with identical results. Satisfies
// UniformRandomBitGenerator.
class CounterRng {
 public:
  using result_type = std::uint64_t;

  CounterRng(std::uint64_t seed, std::uint64_t replicate, std::uint64_t stream_id = 0)
      : key_(mix(mix(mix(seed) ^ (replicate + 0x632BE59BD9B4E019ULL)) ^
                 (stream_id + 0x8CB92BA72F3D8DD7ULL))) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() { return mix(key_ + kGolden * ++counter_); }

  std::uint64_t counter() const { return counter_; }

  // SplitMix64 finaliser.
  static constexpr std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

 private:
  static constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace shrinktest
