#pragma once

#include <cstdint>
#include <limits>

namespace hetclutter {

/// SplitMix64 as a UniformRandomBitGenerator. The state is a plain counter, so
/// a generator keyed by (seed, trial, snapshot, component) is a counter-based
/// substream: results never depend on which thread ran which trial.
class SplitMix64 {
 public:
  using result_type = std::uint64_t;

  explicit SplitMix64(std::uint64_t state) : state_(state) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() { return mix(state_ += kGolden); }

  static constexpr std::uint64_t mix(std::uint64_t x) {
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
  }

  static constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

 private:
  std::uint64_t state_;
};

/// Which random quantity of a snapshot a stream feeds.
enum class StreamComponent : std::uint64_t { Texture = 1, Speckle = 2, Noise = 3, Aux = 4 };

/// Substream keyed by (master seed, trial, snapshot, component). Snapshot 0 is
/// the cell under test; secondaries are 1..K.
inline SplitMix64 substream(std::uint64_t master_seed, std::uint64_t trial, std::uint64_t snapshot,
                            StreamComponent component) {
  std::uint64_t key = SplitMix64::mix(master_seed + SplitMix64::kGolden);
  key = SplitMix64::mix(key ^ (trial + 0x632be59bd9b4e019ULL));
  key = SplitMix64::mix(key ^ (snapshot + 0x85157af5ULL));
  key = SplitMix64::mix(key ^ static_cast<std::uint64_t>(component));
  return SplitMix64(key);
}

}  // namespace hetclutter
