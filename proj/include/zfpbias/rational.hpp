#pragma once

#include <cmath>
#include <cstdint>
#include <string>

#include <boost/multiprecision/cpp_int.hpp>

#include "error.hpp"

namespace zfpbias {

using BigInt = boost::multiprecision::cpp_int;
using Rational = boost::multiprecision::cpp_rational;

inline Rational pow2(int e) {
  if (e >= 0) return Rational(BigInt(1) << e);
  return Rational(BigInt(1), BigInt(1) << (-e));
}

// (-2)^e for any integer e
inline Rational pow_m2(int e) {
  Rational r = pow2(e);
  return (e % 2 != 0) ? Rational(-r) : r;
}

inline double to_double(const Rational& r) { return r.convert_to<double>(); }

inline Rational from_double(double x) {
  if (!std::isfinite(x)) fail(Errc::NonFiniteInput, "non-finite value");
  if (x == 0.0) return Rational(0);
  int e = 0;
  double m = std::frexp(x, &e);  // x = m * 2^e, 0.5 <= |m| < 1
  auto mi = static_cast<std::int64_t>(std::ldexp(m, 53));
  return Rational(BigInt(mi)) * pow2(e - 53);
}

inline bool is_integer(const Rational& r) { return denominator(r) == 1; }

inline bool is_dyadic(const Rational& r) {
  BigInt den = denominator(r);
  return den > 0 && (den & (den - 1)) == 0;
}

inline Rational rabs(const Rational& r) { return r < 0 ? Rational(-r) : r; }

// floor(log2|r|) for r != 0
inline int ilog2(const Rational& r) {
  Rational a = rabs(r);
  BigInt n = numerator(a), d = denominator(a);
  int e = static_cast<int>(boost::multiprecision::msb(n)) - static_cast<int>(boost::multiprecision::msb(d));
  // 2^e is within a factor 2 of a; fix up
  if (a < pow2(e)) --e;
  else if (a >= pow2(e + 1)) ++e;
  return e;
}

inline BigInt floor_int(const Rational& r) {
  BigInt n = numerator(r), d = denominator(r);
  BigInt q = n / d;  // truncates toward zero
  if (r < 0 && q * d != n) q -= 1;
  return q;
}

inline BigInt trunc_int(const Rational& r) { return numerator(r) / denominator(r); }

inline std::string to_string(const Rational& r) { return r.str(); }

}  // namespace zfpbias
