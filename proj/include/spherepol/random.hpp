#pragma once

#include <cstdint>

namespace spherepol {

// SplitMix64 finalizer; bijective mixing of a 64-bit word.
std::uint64_t mix64(std::uint64_t x);

// Collapses (seed, stream identifiers) into a single stream key so that
// independent substreams never share a counter sequence.
std::uint64_t derive_stream(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0,
                            std::uint64_t c = 0);

// Counter-based generator: every output is a pure function of (key, counter),
// so sequences are reproducible across runs regardless of call interleaving
// elsewhere.  One instance per logical substream.
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t key) : key_(key) {}
  CounterRng(std::uint64_t seed, std::uint64_t stream) : key_(derive_stream(seed, stream)) {}

  std::uint64_t next_u64();
  double uniform();    // [0, 1), 53-bit resolution
  double gaussian();   // standard normal, Box-Muller
  std::int64_t poisson(double mean);

 private:
  std::uint64_t key_ = 0;
  std::uint64_t counter_ = 0;
};

}  // namespace spherepol
