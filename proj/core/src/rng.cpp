#include "predcal/rng.hpp"

#include <stdexcept>

namespace predcal {
namespace {

constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

// SplitMix64 finalizer (Stafford mix 13); bijective on 64-bit words.
std::uint64_t mix(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace

RandomStream::RandomStream(std::uint64_t seed) : key_(mix(seed + kGolden)) {}

RandomStream RandomStream::derive(std::uint64_t index) const {
  // Distinct constant keeps child keys off the output path of next_u64.
  std::uint64_t child = mix((key_ ^ 0xD1B54A32D192ED03ULL) + kGolden * (index + 1));
  return RandomStream(child, RawKeyTag{});
}

std::uint64_t RandomStream::next_u64() {
  ++counter_;
  return mix(key_ + kGolden * counter_);
}

double RandomStream::next_double() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double RandomStream::next_open() {
  double u;
  do {
    u = next_double();
  } while (u == 0.0);
  return u;
}

std::uint64_t RandomStream::next_below(std::uint64_t bound) {
  if (bound == 0) throw std::invalid_argument("next_below: bound must be > 0");
  // Lemire's multiply-then-reject method.
  while (true) {
    std::uint64_t x = next_u64();
    __uint128_t m = static_cast<__uint128_t>(x) * bound;
    std::uint64_t low = static_cast<std::uint64_t>(m);
    if (low >= bound || low >= (-bound) % bound) {
      return static_cast<std::uint64_t>(m >> 64);
    }
  }
}

}  // namespace predcal
