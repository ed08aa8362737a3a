#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <utility>

namespace zfpbias {

// Counter-based generator: output n of stream (seed, stream) is
// mix64(key + (n + 1) * kGamma) with key = mix64(seed ^ mix64(stream + kStreamSalt)).
// mix64 is the SplitMix64 finalizer (Steele, Lea, Flood 2014).
class CounterRng {
 public:
  using result_type = std::uint64_t;
  static constexpr std::uint64_t kGamma = 0x9e3779b97f4a7c15ull;
  static constexpr std::uint64_t kMul1 = 0xbf58476d1ce4e5b9ull;
  static constexpr std::uint64_t kMul2 = 0x94d049bb133111ebull;
  static constexpr std::uint64_t kStreamSalt = 0x6a09e667f3bcc909ull;

  static constexpr std::uint64_t mix64(std::uint64_t z) {
    z = (z ^ (z >> 30)) * kMul1;
    z = (z ^ (z >> 27)) * kMul2;
    return z ^ (z >> 31);
  }

  CounterRng(std::uint64_t seed, std::uint64_t stream = 0)
      : key_(mix64(seed ^ mix64(stream + kStreamSalt))), counter_(0) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() { return mix64(key_ + (++counter_) * kGamma); }

  // jump to absolute position
  void seek(std::uint64_t n) { counter_ = n; }
  std::uint64_t position() const { return counter_; }

  // [0, 1) with 53 random bits
  double uniform01() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

  double uniform(double a, double b) { return a + (b - a) * uniform01(); }

  // unbiased integer in [0, n), Lemire's multiply-and-reject
  std::uint64_t below(std::uint64_t n) {
    unsigned __int128 m = (unsigned __int128)(*this)() * n;
    auto lo = static_cast<std::uint64_t>(m);
    if (lo < n) {
      std::uint64_t t = (0 - n) % n;
      while (lo < t) {
        m = (unsigned __int128)(*this)() * n;
        lo = static_cast<std::uint64_t>(m);
      }
    }
    return static_cast<std::uint64_t>(m >> 64);
  }

  // integer in [lo, hi]
  std::int64_t range(std::int64_t lo, std::int64_t hi) {
    auto span = static_cast<std::uint64_t>(hi - lo) + 1;
    return lo + static_cast<std::int64_t>(span == 0 ? (*this)() : below(span));
  }

  bool coin() { return ((*this)() >> 63) != 0; }

  template <class T>
  void shuffle(std::span<T> v) {
    for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[below(i)]);
  }

 private:
  std::uint64_t key_;
  std::uint64_t counter_;
};

}  // namespace zfpbias
