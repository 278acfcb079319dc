#pragma once

#include <cstdint>

namespace predcal {

// Counter-based pseudo-random stream built on the SplitMix64 output
// function.  A stream is (key, counter); each draw hashes the pair and
// advances the counter.  derive(i) produces the key of an independent
// child stream as a pure function of the parent key and i, so substreams
// can be created in any order (or concurrently) and still yield the same
// draws.  This is what makes bootstrap replicate b reproducible no matter
// how replicates are scheduled across threads.
class RandomStream {
 public:
  RandomStream() : RandomStream(std::uint64_t{0}) {}
  explicit RandomStream(std::uint64_t seed);

  // Child stream number `index`; independent of this stream's position.
  RandomStream derive(std::uint64_t index) const;

  std::uint64_t next_u64();

  // Uniform on [0, 1), 53-bit resolution.
  double next_double();

  // Uniform on (0, 1); safe to pass to log().
  double next_open();

  // Uniform integer in [0, bound); bound must be positive.  Unbiased.
  std::uint64_t next_below(std::uint64_t bound);

  std::uint64_t key() const { return key_; }

 private:
  struct RawKeyTag {};
  RandomStream(std::uint64_t key, RawKeyTag) : key_(key) {}

  std::uint64_t key_ = 0;
  std::uint64_t counter_ = 0;
};

}  // namespace predcal
