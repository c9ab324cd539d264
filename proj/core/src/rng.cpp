#include "bcm/rng.hpp"

namespace bcm {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

}  // namespace

RngStream::RngStream(std::uint64_t seed) {
  const std::uint64_t k = splitmix64(seed);
  key_ = {std::uint32_t(k), std::uint32_t(k >> 32)};
}

RngStream RngStream::split(std::uint64_t index) const {
  RngStream child;
  const std::uint64_t k = splitmix64(splitmix64(key()) ^ splitmix64(index + 0x632BE59BD9B4E019ull));
  child.key_ = {std::uint32_t(k), std::uint32_t(k >> 32)};
  return child;
}

}  // namespace bcm
