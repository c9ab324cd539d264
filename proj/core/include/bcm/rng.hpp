#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <span>

namespace bcm {

// Raw Philox4x32-10 bijection.
inline std::array<std::uint32_t, 4> philox4x32_10(std::array<std::uint32_t, 4> ctr,
                                                  std::array<std::uint32_t, 2> key) {
  std::uint32_t c0 = ctr[0], c1 = ctr[1], c2 = ctr[2], c3 = ctr[3];
  std::uint32_t k0 = key[0], k1 = key[1];
  for (int round = 0; round < 10; ++round) {
    const std::uint64_t p0 = std::uint64_t(0xD2511F53u) * c0;
    const std::uint64_t p1 = std::uint64_t(0xCD9E8D57u) * c2;
    const std::uint32_t n0 = std::uint32_t(p1 >> 32) ^ c1 ^ k0;
    const std::uint32_t n2 = std::uint32_t(p0 >> 32) ^ c3 ^ k1;
    c1 = std::uint32_t(p1);
    c3 = std::uint32_t(p0);
    c0 = n0;
    c2 = n2;
    k0 += 0x9E3779B9u;
    k1 += 0xBB67AE85u;
  }
  return {c0, c1, c2, c3};
}

// Philox4x32-10 counter-based generator. Streams are cheap to copy and can be
// split into independent child streams by index, which is how Monte Carlo
// work is sharded: block b always draws from root.split(b).
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed = 0);

  RngStream split(std::uint64_t index) const;

  std::uint64_t next_u64() {
    if (pos_ > 2) refill();
    const std::uint64_t v = (std::uint64_t(buf_[pos_]) << 32) | buf_[pos_ + 1];
    pos_ += 2;
    return v;
  }
  // Uniform on the open interval (0, 1) with 53-bit resolution.
  double uniform() { return (double(next_u64() >> 11) + 0.5) * 0x1.0p-53; }
  // Standard normal (Box-Muller on two uniforms; the second value is cached).
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double u1 = uniform(), u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 6.283185307179586477 * u2;
    spare_ = r * std::sin(a);
    has_spare_ = true;
    return r * std::cos(a);
  }
  void fill_normal(std::span<double> out) {
    for (double& v : out) v = normal();
  }

  std::uint64_t key() const { return (std::uint64_t(key_[1]) << 32) | key_[0]; }

 private:
  void refill() {
    buf_ = philox4x32_10(ctr_, key_);
    if (++ctr_[0] == 0 && ++ctr_[1] == 0 && ++ctr_[2] == 0) ++ctr_[3];
    pos_ = 0;
  }

  std::array<std::uint32_t, 2> key_{};
  std::array<std::uint32_t, 4> ctr_{};
  std::array<std::uint32_t, 4> buf_{};
  int pos_ = 4;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace bcm
