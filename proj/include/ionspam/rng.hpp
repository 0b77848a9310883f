#pragma once

#include <cstdint>

namespace ionspam {

// Small counter-style generator. Every shot owns an independent stream
// derived from (global seed, shot index), so simulation output does not
// depend on execution order or worker count.
class SplitMix64 {
 public:
  using result_type = std::uint64_t;

  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return ~std::uint64_t{0}; }

  result_type operator()() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

 private:
  std::uint64_t state_;
};

inline SplitMix64 shot_rng(std::uint64_t global_seed, std::uint64_t shot_index) {
  // one scramble round keeps neighboring shot indices decorrelated
  std::uint64_t z = global_seed ^ (0xd1342543de82ef95ull * (shot_index + 1));
  z = (z ^ (z >> 32)) * 0xff51afd7ed558ccdull;
  return SplitMix64(z);
}

}  // namespace ionspam
