#pragma once

// Counter-based Philox4x32-10. A draw is a pure function of
// (seed, stream, index, step, slot), so results do not depend on scheduling.

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <string_view>

namespace stickymv {

using Philox4x32Ctr = std::array<std::uint32_t, 4>;
using Philox4x32Key = std::array<std::uint32_t, 2>;

inline Philox4x32Ctr philox4x32_10(Philox4x32Ctr ctr, Philox4x32Key key) {
  constexpr std::uint32_t M0 = 0xD2511F53u, M1 = 0xCD9E8D57u;
  constexpr std::uint32_t W0 = 0x9E3779B9u, W1 = 0xBB67AE85u;
  for (int round = 0; round < 10; ++round) {
    const std::uint64_t p0 = std::uint64_t(M0) * ctr[0];
    const std::uint64_t p1 = std::uint64_t(M1) * ctr[2];
    const std::uint32_t hi0 = std::uint32_t(p0 >> 32), lo0 = std::uint32_t(p0);
    const std::uint32_t hi1 = std::uint32_t(p1 >> 32), lo1 = std::uint32_t(p1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    key[0] += W0;
    key[1] += W1;
  }
  return ctr;
}

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

inline std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xCBF29CE484222325ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001B3ull;
  }
  return h;
}

// Open interval (0,1) from the top 53 bits.
inline double to_unit(std::uint32_t hi, std::uint32_t lo) {
  const std::uint64_t x = (std::uint64_t(hi) << 32) | lo;
  return (double(x >> 11) + 0.5) * 0x1.0p-53;
}

class CounterRng {
 public:
  CounterRng(std::uint64_t seed, std::string_view stream) {
    const std::uint64_t k = splitmix64(seed ^ splitmix64(fnv1a(stream)));
    key_ = {std::uint32_t(k), std::uint32_t(k >> 32)};
  }

  // Derived stream, e.g. one per replica.
  CounterRng child(std::uint64_t tag) const {
    CounterRng r = *this;
    const std::uint64_t k = splitmix64(((std::uint64_t(key_[1]) << 32) | key_[0]) ^ splitmix64(tag + 1));
    r.key_ = {std::uint32_t(k), std::uint32_t(k >> 32)};
    return r;
  }

  Philox4x32Ctr block(std::uint64_t index, std::uint64_t step, std::uint32_t slot) const {
    return philox4x32_10({std::uint32_t(index), slot ^ (std::uint32_t(index >> 32) << 16),
                          std::uint32_t(step), std::uint32_t(step >> 32)},
                         key_);
  }

  std::array<double, 2> uniforms(std::uint64_t index, std::uint64_t step, std::uint32_t slot) const {
    const auto b = block(index, step, slot);
    return {to_unit(b[0], b[1]), to_unit(b[2], b[3])};
  }

  double uniform(std::uint64_t index, std::uint64_t step, std::uint32_t slot) const {
    return uniforms(index, step, slot)[0];
  }

  // Box-Muller pair.
  std::array<double, 2> normals(std::uint64_t index, std::uint64_t step, std::uint32_t slot) const {
    const auto u = uniforms(index, step, slot);
    const double rad = std::sqrt(-2.0 * std::log(u[0]));
    const double ang = 2.0 * std::numbers::pi * u[1];
    return {rad * std::cos(ang), rad * std::sin(ang)};
  }

  double normal(std::uint64_t index, std::uint64_t step, std::uint32_t slot) const {
    return normals(index, step, slot)[0];
  }

  const Philox4x32Key& key() const { return key_; }

 private:
  Philox4x32Key key_{};
};

}  // namespace stickymv
