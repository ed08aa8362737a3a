#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <numeric>
#include <span>
#include <vector>

#include "error.hpp"
#include "rational.hpp"

namespace zfpbias {

using Int128 = __int128;

inline void check_dimension(int d) {
  if (d < 1 || d > 3) fail(Errc::UnsupportedDimension, "dimension must be 1, 2 or 3");
}

inline constexpr int block_size(int d) { return 1 << (2 * d); }

// Integer numerators: L = kForward / 16, L^-1 = kBackward / 4.
inline constexpr int kForward[4][4] = {{4, 4, 4, 4}, {5, 1, -1, -5}, {-4, 4, 4, -4}, {-2, 6, -6, 2}};
inline constexpr int kBackward[4][4] = {{4, 6, -4, -1}, {4, 2, 4, 5}, {4, -2, 4, -5}, {4, -6, -4, 1}};

using Matrix4 = std::array<std::array<Rational, 4>, 4>;

inline Matrix4 forward_matrix() {
  Matrix4 m;
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) m[i][j] = Rational(kForward[i][j], 16);
  return m;
}

inline Matrix4 backward_matrix() {
  Matrix4 m;
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) m[i][j] = Rational(kBackward[i][j], 4);
  return m;
}

// floor(v/2); arithmetic shift is floor in C++20
inline constexpr std::int64_t round_half_down(std::int64_t v) { return v >> 1; }

namespace detail {

inline std::int64_t add(std::int64_t a, std::int64_t b) {
  std::int64_t r;
  if (__builtin_add_overflow(a, b, &r)) fail(Errc::Overflow, "lifting step overflows 64-bit word");
  return r;
}

inline std::int64_t sub(std::int64_t a, std::int64_t b) {
  std::int64_t r;
  if (__builtin_sub_overflow(a, b, &r)) fail(Errc::Overflow, "lifting step overflows 64-bit word");
  return r;
}

inline std::int64_t dbl(std::int64_t a) { return add(a, a); }

inline void fwd_lift(std::int64_t* p, std::ptrdiff_t s) {
  std::int64_t x = p[0], y = p[s], z = p[2 * s], w = p[3 * s];
  x = add(x, w); x = round_half_down(x); w = sub(w, x);
  z = add(z, y); z = round_half_down(z); y = sub(y, z);
  x = add(x, z); x = round_half_down(x); z = sub(z, x);
  w = add(w, y); w = round_half_down(w); y = sub(y, w);
  w = add(w, round_half_down(y));
  y = sub(y, round_half_down(w));
  p[0] = x; p[s] = y; p[2 * s] = z; p[3 * s] = w;
}

inline void inv_lift(std::int64_t* p, std::ptrdiff_t s) {
  std::int64_t x = p[0], y = p[s], z = p[2 * s], w = p[3 * s];
  y = add(y, round_half_down(w));
  w = sub(w, round_half_down(y));
  y = add(y, w); w = dbl(w); w = sub(w, y);
  z = add(z, x); x = dbl(x); x = sub(x, z);
  y = add(y, z); z = dbl(z); z = sub(z, y);
  w = add(w, x); x = dbl(x); x = sub(x, w);
  p[0] = x; p[s] = y; p[2 * s] = z; p[3 * s] = w;
}

// Apply a 4x4 integer-numerator matrix along one line.
template <class T>
void mat_line(const int (&m)[4][4], T* p, std::ptrdiff_t s) {
  T in[4] = {p[0], p[s], p[2 * s], p[3 * s]};
  for (int i = 0; i < 4; ++i) {
    T acc = T(0);
    for (int j = 0; j < 4; ++j) acc += T(m[i][j]) * in[j];
    p[i * s] = acc;
  }
}

// Visit every axis line of a 4^d block in x, y, z order.
template <class F>
void for_each_line(int d, F&& f) {
  if (d == 1) {
    f(0, 1);
  } else if (d == 2) {
    for (int y = 0; y < 4; ++y) f(4 * y, 1);
    for (int x = 0; x < 4; ++x) f(x, 4);
  } else {
    for (int z = 0; z < 4; ++z)
      for (int y = 0; y < 4; ++y) f(4 * y + 16 * z, 1);
    for (int z = 0; z < 4; ++z)
      for (int x = 0; x < 4; ++x) f(x + 16 * z, 4);
    for (int y = 0; y < 4; ++y)
      for (int x = 0; x < 4; ++x) f(x + 4 * y, 16);
  }
}

template <class F>
void for_each_line_reverse(int d, F&& f) {
  // backward transform undoes axes in reverse order
  if (d == 1) {
    f(0, 1);
  } else if (d == 2) {
    for (int x = 0; x < 4; ++x) f(x, 4);
    for (int y = 0; y < 4; ++y) f(4 * y, 1);
  } else {
    for (int y = 0; y < 4; ++y)
      for (int x = 0; x < 4; ++x) f(x + 4 * y, 16);
    for (int z = 0; z < 4; ++z)
      for (int x = 0; x < 4; ++x) f(x + 16 * z, 4);
    for (int z = 0; z < 4; ++z)
      for (int y = 0; y < 4; ++y) f(4 * y + 16 * z, 1);
  }
}

inline void check_block(std::size_t n, int d) {
  check_dimension(d);
  if (n != static_cast<std::size_t>(block_size(d))) fail(Errc::Config, "block length does not match 4^d");
}

}  // namespace detail

using IntBlock4 = std::array<std::int64_t, 4>;
using RatBlock4 = std::array<Rational, 4>;

inline IntBlock4 forward_lossy_1d(IntBlock4 a) {
  detail::fwd_lift(a.data(), 1);
  return a;
}

inline IntBlock4 backward_lossy_1d(IntBlock4 a) {
  detail::inv_lift(a.data(), 1);
  return a;
}

inline RatBlock4 forward_exact_1d(RatBlock4 a) {
  detail::mat_line(kForward, a.data(), 1);
  for (auto& v : a) v /= 16;
  return a;
}

inline RatBlock4 backward_exact_1d(RatBlock4 a) {
  detail::mat_line(kBackward, a.data(), 1);
  for (auto& v : a) v /= 4;
  return a;
}

// In-place lossy transforms on a 4^d integer block, flat index x + 4y + 16z.
inline void forward_lossy_d(std::span<std::int64_t> b, int d) {
  detail::check_block(b.size(), d);
  detail::for_each_line(d, [&](int off, int s) { detail::fwd_lift(b.data() + off, s); });
}

inline void backward_lossy_d(std::span<std::int64_t> b, int d) {
  detail::check_block(b.size(), d);
  detail::for_each_line_reverse(d, [&](int off, int s) { detail::inv_lift(b.data() + off, s); });
}

// Exact Kronecker transforms in rational arithmetic.
inline void forward_exact_d(std::span<Rational> b, int d) {
  detail::check_block(b.size(), d);
  detail::for_each_line(d, [&](int off, int s) { detail::mat_line(kForward, b.data() + off, s); });
  Rational scale = pow2(-4 * d);
  for (auto& v : b) v *= scale;
}

inline void backward_exact_d(std::span<Rational> b, int d) {
  detail::check_block(b.size(), d);
  detail::for_each_line(d, [&](int off, int s) { detail::mat_line(kBackward, b.data() + off, s); });
  Rational scale = pow2(-2 * d);
  for (auto& v : b) v *= scale;
}

// Scaled exact transforms in 128-bit integers: returns 16^d L_d b and 4^d L_d^-1 b.
inline void forward_scaled_d(std::span<Int128> b, int d) {
  detail::check_block(b.size(), d);
  detail::for_each_line(d, [&](int off, int s) { detail::mat_line(kForward, b.data() + off, s); });
}

inline void backward_scaled_d(std::span<Int128> b, int d) {
  detail::check_block(b.size(), d);
  detail::for_each_line(d, [&](int off, int s) { detail::mat_line(kBackward, b.data() + off, s); });
}

// Generic entry point: lossy requires integer-valued input.
inline std::vector<Rational> forward_d(std::span<const Rational> in, int d, bool lossy) {
  std::vector<Rational> out(in.begin(), in.end());
  if (!lossy) {
    forward_exact_d(out, d);
    return out;
  }
  std::vector<std::int64_t> tmp(in.size());
  for (std::size_t i = 0; i < in.size(); ++i) {
    if (!is_integer(in[i])) fail(Errc::Config, "lossy transform needs integer input");
    tmp[i] = static_cast<std::int64_t>(numerator(in[i]));
  }
  forward_lossy_d(tmp, d);
  for (std::size_t i = 0; i < in.size(); ++i) out[i] = Rational(tmp[i]);
  return out;
}

inline std::vector<Rational> backward_d(std::span<const Rational> in, int d, bool lossy) {
  std::vector<Rational> out(in.begin(), in.end());
  if (!lossy) {
    backward_exact_d(out, d);
    return out;
  }
  std::vector<std::int64_t> tmp(in.size());
  for (std::size_t i = 0; i < in.size(); ++i) {
    if (!is_integer(in[i])) fail(Errc::Config, "lossy transform needs integer input");
    tmp[i] = static_cast<std::int64_t>(numerator(in[i]));
  }
  backward_lossy_d(tmp, d);
  for (std::size_t i = 0; i < in.size(); ++i) out[i] = Rational(tmp[i]);
  return out;
}

// coords of flat index: (x, y, z)
inline std::array<int, 3> block_coords(int flat) { return {flat & 3, (flat >> 2) & 3, (flat >> 4) & 3}; }

// perm[j] = flat index of the j-th coefficient in total-sequency order;
// ties broken lexicographically on (x, y, z).
inline std::vector<int> sequency_permutation(int d) {
  check_dimension(d);
  std::vector<int> perm(block_size(d));
  std::iota(perm.begin(), perm.end(), 0);
  auto key = [](int f) {
    auto c = block_coords(f);
    return std::array<int, 4>{c[0] + c[1] + c[2], c[0], c[1], c[2]};
  };
  std::stable_sort(perm.begin(), perm.end(), [&](int a, int b) { return key(a) < key(b); });
  return perm;
}

inline std::vector<int> inverse_permutation(std::span<const int> perm) {
  std::vector<int> inv(perm.size());
  for (std::size_t j = 0; j < perm.size(); ++j) inv[perm[j]] = static_cast<int>(j);
  return inv;
}

}  // namespace zfpbias
