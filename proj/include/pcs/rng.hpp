#pragma once

#include <cmath>
#include <cstdint>

namespace pcs {

/// Counter-based pseudo-random stream. Every (seed, stream, substream) triple
/// keys an independent SplitMix64 sequence, so work items can be generated in
/// any order or on any thread with identical output.
class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed, std::uint64_t stream = 0,
                        std::uint64_t substream = 0) {
    state_ = finalize(seed + 0x632be59bd9b4e019ULL);
    state_ = finalize(state_ ^ (stream + 0x9e3779b97f4a7c15ULL));
    state_ = finalize(state_ ^ (substream + 0xd1b54a32d192ed03ULL));
  }

  std::uint64_t next_u64() {
    state_ += 0x9e3779b97f4a7c15ULL;
    return finalize(state_);
  }

  /// Uniform on (0, 1].
  double next_uniform() {
    return (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;
  }

  /// Standard normal via Box-Muller (pairs are cached).
  double next_normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    constexpr double two_pi = 6.283185307179586476925286766559;
    const double r = std::sqrt(-2.0 * std::log(next_uniform()));
    const double a = two_pi * next_uniform();
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
  }

 private:
  static std::uint64_t finalize(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  std::uint64_t state_ = 0;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

}  // namespace pcs
