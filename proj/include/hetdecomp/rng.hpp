#pragma once

#include <cstdint>
#include <random>

namespace hetdecomp {

// Named substreams derived from one master seed. Every random stage of the
// pipeline owns a stream id so results are reproducible independently of
// scheduling (threads, evaluation order).
enum class Stream : std::uint64_t {
  folds = 1,
  cv = 2,
  simulation = 3,
  ensemble = 4,
};

// splitmix64 finalizer; decorrelates (seed, stream) pairs.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline std::mt19937_64 make_rng(std::uint64_t seed, Stream stream,
                                std::uint64_t substream = 0) {
  return std::mt19937_64(
      mix_seed(mix_seed(seed, static_cast<std::uint64_t>(stream)), substream));
}

}  // namespace hetdecomp
