#pragma once

#include <bit>
#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <limits>
#include <span>
#include <vector>

#include "error.hpp"
#include "rational.hpp"

namespace zfpbias {

enum class Base { SignedBinary, Negabinary };

// Bit vector over indices [-64, 63]. Bit position p in the word holds index p - 64.
class BitVector {
 public:
  using Word = unsigned __int128;
  static constexpr int kMinIndex = -64;
  static constexpr int kMaxIndex = 63;

  BitVector() = default;
  explicit BitVector(Base b) : base_(b) {}

  static BitVector from_word(Base b, bool negative, Word w) {
    BitVector v(b);
    v.word_ = w;
    v.negative_ = (b == Base::SignedBinary) && negative && w != 0;
    return v;
  }

  static BitVector from_indices(Base b, bool negative, std::initializer_list<int> idx) {
    Word w = 0;
    for (int i : idx) {
      if (i < kMinIndex || i > kMaxIndex) fail(Errc::Overflow, "bit index outside window");
      w |= Word(1) << (i - kMinIndex);
    }
    return from_word(b, negative, w);
  }

  Base base() const { return base_; }
  bool negative() const { return negative_; }
  Word word() const { return word_; }
  bool is_zero() const { return word_ == 0; }

  bool bit(int i) const {
    if (i < kMinIndex || i > kMaxIndex) return false;
    return (word_ >> (i - kMinIndex)) & 1;
  }

  std::vector<int> active() const {
    std::vector<int> out;
    for (int i = kMinIndex; i <= kMaxIndex; ++i)
      if (bit(i)) out.push_back(i);
    return out;
  }

  int max_index() const {
    if (is_zero()) fail(Errc::ZeroBlock, "exponent of zero vector");
    auto hi = static_cast<std::uint64_t>(word_ >> 64);
    if (hi) return 127 - std::countl_zero(hi) + kMinIndex;
    return 63 - std::countl_zero(static_cast<std::uint64_t>(word_)) + kMinIndex;
  }

  int min_index() const {
    if (is_zero()) fail(Errc::ZeroBlock, "exponent of zero vector");
    auto lo = static_cast<std::uint64_t>(word_);
    if (lo) return std::countr_zero(lo) + kMinIndex;
    return 64 + std::countr_zero(static_cast<std::uint64_t>(word_ >> 64)) + kMinIndex;
  }

  // number of positions from lowest to highest active bit
  int width() const { return is_zero() ? 0 : max_index() - min_index() + 1; }

  friend bool operator==(const BitVector& a, const BitVector& b) {
    return a.base_ == b.base_ && a.negative_ == b.negative_ && a.word_ == b.word_;
  }

 private:
  Base base_ = Base::SignedBinary;
  bool negative_ = false;
  Word word_ = 0;
};

namespace detail {

inline BigInt word_to_big(BitVector::Word w) {
  BigInt hi = BigInt(static_cast<std::uint64_t>(w >> 64));
  return (hi << 64) | BigInt(static_cast<std::uint64_t>(w));
}

inline const Rational& window_scale() {
  static const Rational s = pow2(BitVector::kMinIndex);
  return s;
}

}  // namespace detail

inline Rational to_real(const BitVector& v) {
  if (v.is_zero()) return Rational(0);
  BigInt acc = 0;
  if (v.base() == Base::SignedBinary) {
    acc = detail::word_to_big(v.word());
    if (v.negative()) acc = -acc;
  } else {
    // sum over p of b_p (-2)^p; the window offset is even so (-2)^-64 = 2^-64
    BigInt term = 1;
    for (int p = 0; p < 128; ++p) {
      if ((v.word() >> p) & 1) acc += term;
      term *= -2;
    }
  }
  return Rational(acc) * detail::window_scale();
}

// Rounded to double; exact whenever the active bits span at most 53 positions.
inline double to_double(const BitVector& v) {
  using U = unsigned __int128;
  auto lo = static_cast<std::uint64_t>(v.word()), hi = static_cast<std::uint64_t>(v.word() >> 64);
  if (v.base() == Base::SignedBinary) {
    double r = std::ldexp(static_cast<double>(hi), 0) + std::ldexp(static_cast<double>(lo), -64);
    return v.negative() ? -r : r;
  }
  // each 64-digit half decoded exactly in 128-bit arithmetic
  const U m = 0xaaaaaaaaaaaaaaaaull;
  auto dec = [&](std::uint64_t w) { return static_cast<__int128>((U(w) ^ m) - m); };
  return static_cast<double>(dec(hi)) + std::ldexp(static_cast<double>(dec(lo)), -64);
}

inline BitVector from_real(const Rational& x, Base base) {
  if (!is_dyadic(x)) fail(Errc::NonDyadicInput, "value has no finite binary expansion: " + x.str());
  Rational scaled = x * pow2(-BitVector::kMinIndex);
  if (!is_integer(scaled)) fail(Errc::Overflow, "value needs bits below the index window");
  BigInt n = numerator(scaled);
  BitVector::Word w = 0;
  if (base == Base::SignedBinary) {
    bool neg = n < 0;
    if (neg) n = -n;
    if (boost::multiprecision::msb(n | 1) >= 128) fail(Errc::Overflow, "value exceeds index window");
    if (n != 0) {
      w = (BitVector::Word(static_cast<std::uint64_t>(n >> 64)) << 64) |
          BitVector::Word(static_cast<std::uint64_t>(n & BigInt(std::numeric_limits<std::uint64_t>::max())));
    }
    return BitVector::from_word(base, neg, w);
  }
  // repeated division by -2 with nonnegative remainder
  int p = 0;
  while (n != 0) {
    if (p >= 128) fail(Errc::Overflow, "negabinary expansion exceeds index window");
    BigInt r = n % 2;
    if (r < 0) r += 2;
    if (r != 0) w |= BitVector::Word(1) << p;
    n = (n - r) / -2;
    ++p;
  }
  return BitVector::from_word(base, false, w);
}

// zero every bit with index <= eta
inline BitVector truncate(const BitVector& v, int eta) {
  int keep_from = eta + 1 - BitVector::kMinIndex;  // first kept bit position
  BitVector::Word w = v.word();
  if (keep_from >= 128) w = 0;
  else if (keep_from > 0) w &= ~((BitVector::Word(1) << keep_from) - 1);
  return BitVector::from_word(v.base(), v.negative(), w);
}

// result bit i = input bit i + l
inline BitVector shift(const BitVector& v, int l) {
  BitVector::Word w = v.word();
  if (l == 0 || w == 0) return v;
  if (l >= 128 || l <= -128) fail(Errc::Overflow, "shift leaves the index window");
  BitVector::Word out;
  if (l > 0) {
    if (w & ((BitVector::Word(1) << l) - 1)) fail(Errc::Overflow, "shift drops bits below the window");
    out = w >> l;
  } else {
    int s = -l;
    if (w >> (128 - s)) fail(Errc::Overflow, "shift drops bits above the window");
    out = w << s;
  }
  return BitVector::from_word(v.base(), v.negative(), out);
}

inline BitVector convert(const BitVector& v, Base target) {
  if (v.base() == target) return v;
  return from_real(to_real(v), target);
}

struct ExponentInfo {
  int e_max = 0;
  int e_min = 0;
  friend bool operator==(const ExponentInfo&, const ExponentInfo&) = default;
};

inline ExponentInfo exponents(const BitVector& v) { return {v.max_index(), v.min_index()}; }

inline ExponentInfo exponents(std::span<const BitVector> vs) {
  bool any = false;
  ExponentInfo r{std::numeric_limits<int>::min(), std::numeric_limits<int>::max()};
  for (const auto& v : vs) {
    if (v.is_zero()) continue;
    any = true;
    r.e_max = std::max(r.e_max, v.max_index());
    r.e_min = std::min(r.e_min, v.min_index());
  }
  if (!any) fail(Errc::ZeroBlock, "exponents of all-zero block");
  return r;
}

// binary exponents of IEEE doubles (sign stripped)
inline ExponentInfo exponents(std::span<const double> xs) {
  bool any = false;
  ExponentInfo r{std::numeric_limits<int>::min(), std::numeric_limits<int>::max()};
  for (double x : xs) {
    if (!std::isfinite(x)) fail(Errc::NonFiniteInput, "non-finite value");
    if (x == 0.0) continue;
    any = true;
    int e = 0;
    double m = std::frexp(std::fabs(x), &e);
    auto mi = static_cast<std::uint64_t>(std::ldexp(m, 53));
    r.e_max = std::max(r.e_max, e - 1);
    r.e_min = std::min(r.e_min, e - 53 + std::countr_zero(mi));
  }
  if (!any) fail(Errc::ZeroBlock, "exponents of all-zero block");
  return r;
}

// Fast two's complement <-> 64-digit negabinary used on the codec hot path.
inline constexpr std::uint64_t kNegabinaryMask = 0xaaaaaaaaaaaaaaaaull;
inline constexpr std::int64_t kNegabinaryMaxPositive = 0x5555555555555555ll;

inline std::uint64_t nb_encode(std::int64_t x) {
  if (x > kNegabinaryMaxPositive) fail(Errc::Overflow, "integer exceeds 64-digit negabinary range");
  return (static_cast<std::uint64_t>(x) + kNegabinaryMask) ^ kNegabinaryMask;
}

inline std::int64_t nb_decode(std::uint64_t n) {
  return static_cast<std::int64_t>((n ^ kNegabinaryMask) - kNegabinaryMask);
}

}  // namespace zfpbias
