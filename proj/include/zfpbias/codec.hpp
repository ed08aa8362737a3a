#pragma once

#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "bitplane.hpp"
#include "error.hpp"
#include "parallel.hpp"
#include "rational.hpp"
#include "transform.hpp"

namespace zfpbias {

enum class Rounding : std::uint8_t { Never = 0, First = 1, Last = 2 };

inline const char* rounding_name(Rounding r) {
  switch (r) {
    case Rounding::Never: return "never";
    case Rounding::First: return "first";
    case Rounding::Last: return "last";
  }
  return "never";
}

inline Rounding parse_rounding(const std::string& s) {
  if (s == "never") return Rounding::Never;
  if (s == "first") return Rounding::First;
  if (s == "last") return Rounding::Last;
  fail(Errc::Config, "unknown rounding mode '" + s + "'");
}

struct CodecConfig {
  int d = 1;
  int k = 24;
  int q = 30;
  int beta = 16;
  Rounding rounding = Rounding::Never;

  int n() const { return block_size(d); }
  // index of the most significant discarded plane
  int eta() const { return q + 1 - beta; }
  bool lossless() const { return beta >= q + 2; }
  // Theorem-level analysis assumes at least 2d discarded planes
  bool in_analysis_range() const { return beta >= 0 && beta <= q - 2 * d + 2; }

  void validate() const {
    check_dimension(d);
    if (k < 1 || k > 53) fail(Errc::Config, "k must lie in [1, 53]");
    if (q <= k || q > 62) fail(Errc::Config, "q must satisfy k < q <= 62");
    if (beta < 0 || beta > q + 2) fail(Errc::Config, "beta must lie in [0, q+2]");
  }

  friend bool operator==(const CodecConfig&, const CodecConfig&) = default;
};

inline CodecConfig float_config(int d, int beta, Rounding r = Rounding::Never) { return {d, 24, 30, beta, r}; }
inline CodecConfig double_config(int d, int beta, Rounding r = Rounding::Never) { return {d, 53, 62, beta, r}; }

struct CompressedBlock {
  bool zero = true;
  int e_max = 0;
  // planes[t] holds index q+1-t; bit j is the j-th coefficient in sequency order
  std::vector<std::uint64_t> planes;
  friend bool operator==(const CompressedBlock&, const CompressedBlock&) = default;
};

// ---------------------------------------------------------------- step 2

struct Step2Result {
  std::vector<std::int64_t> ints;
  int e_max = 0;
  int ell = 0;
};

inline bool all_zero(std::span<const double> x) {
  for (double v : x) {
    if (!std::isfinite(v)) fail(Errc::NonFiniteInput, "non-finite value in block");
    if (v != 0.0) return false;
  }
  return true;
}

inline int block_emax(std::span<const double> x) { return exponents(x).e_max; }

// Block floating point: scale by 2^-ell, ell = e_max - q + 1, truncate toward zero.
inline Step2Result step2_forward(std::span<const double> x, const CodecConfig& cfg) {
  Step2Result r;
  r.e_max = block_emax(x);
  r.ell = r.e_max - cfg.q + 1;
  r.ints.resize(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) r.ints[i] = static_cast<std::int64_t>(std::trunc(std::ldexp(x[i], -r.ell)));
  return r;
}

inline std::vector<Rational> step2_forward_exact(std::span<const double> x, const CodecConfig& cfg) {
  int ell = block_emax(x) - cfg.q + 1;
  std::vector<Rational> out;
  out.reserve(x.size());
  Rational s = pow2(-ell);
  for (double v : x) out.push_back(from_double(v) * s);
  return out;
}

// truncate to k significant bits toward zero
inline std::int64_t fl_k(std::int64_t z, int k) {
  if (z == 0) return 0;
  std::uint64_t a = z < 0 ? 0 - static_cast<std::uint64_t>(z) : static_cast<std::uint64_t>(z);
  int w = std::bit_width(a);
  if (w > k) a &= ~((std::uint64_t(1) << (w - k)) - 1);
  return z < 0 ? -static_cast<std::int64_t>(a) : static_cast<std::int64_t>(a);
}

inline Rational fl_k(const Rational& z, int k) {
  if (z == 0) return z;
  int e = ilog2(z);
  Rational unit = pow2(e - k + 1);
  Rational t = Rational(trunc_int(z / unit)) * unit;
  return t;
}

inline std::vector<double> step2_backward(std::span<const std::int64_t> z, int e_max, const CodecConfig& cfg) {
  int ell = e_max - cfg.q + 1;
  std::vector<double> out(z.size());
  for (std::size_t i = 0; i < z.size(); ++i) out[i] = std::ldexp(static_cast<double>(fl_k(z[i], cfg.k)), ell);
  return out;
}

// ---------------------------------------------------------------- rounding

// nearest integer to -(-2)^(eta+1)/6: cancels the mean negabinary truncation error
inline std::int64_t rounding_offset(int eta) {
  if (eta < 0) return 0;
  if (eta > 62) fail(Errc::Config, "rounding offset out of range");
  Int128 p = Int128(1) << (eta + 1);
  if ((eta + 1) % 2) p = -p;
  Int128 v = -p;  // target v/6, never a half-integer
  Int128 num = v + 3;
  Int128 q = num / 6;
  if (num % 6 != 0 && num < 0) q -= 1;  // floor
  return static_cast<std::int64_t>(q);
}

enum class RoundingStage { BeforeTruncate, AfterDecode };

inline void apply_rounding(std::span<std::int64_t> c, const CodecConfig& cfg, RoundingStage stage) {
  if (cfg.lossless() || cfg.rounding == Rounding::Never) return;
  std::int64_t o = rounding_offset(cfg.eta());
  if (stage == RoundingStage::BeforeTruncate && cfg.rounding == Rounding::First) {
    for (auto& v : c) v = detail::add(v, o);
  } else if (stage == RoundingStage::AfterDecode && cfg.rounding == Rounding::Last) {
    for (auto& v : c)
      if (v != 0) v = detail::add(v, o);
  }
}

// ---------------------------------------------------------------- step 8

// digits kept by step 8: indices in (eta, q+1]
inline std::uint64_t plane_mask(const CodecConfig& cfg) {
  int top = cfg.q + 2;  // number of representable digits
  std::uint64_t all = top >= 64 ? ~std::uint64_t(0) : ((std::uint64_t(1) << top) - 1);
  int drop = std::max(0, cfg.eta() + 1);
  if (drop >= 64) return 0;
  return all & ~((std::uint64_t(1) << drop) - 1);
}

inline void check_digits(std::uint64_t nb, const CodecConfig& cfg) {
  if (cfg.q + 2 < 64 && (nb >> (cfg.q + 2)) != 0) fail(Errc::Overflow, "coefficient needs a digit above index q+1");
}

// nb in sequency order -> plane-major compressed form
inline CompressedBlock step8_truncate(std::span<const std::uint64_t> nb, int e_max, const CodecConfig& cfg) {
  CompressedBlock cb;
  cb.zero = false;
  cb.e_max = e_max;
  cb.planes.assign(cfg.beta, 0);
  for (int t = 0; t < cfg.beta; ++t) {
    int idx = cfg.q + 1 - t;
    std::uint64_t plane = 0;
    for (std::size_t j = 0; j < nb.size(); ++j) plane |= ((nb[j] >> idx) & 1) << j;
    cb.planes[t] = plane;
  }
  return cb;
}

inline std::vector<std::uint64_t> step8_expand(const CompressedBlock& cb, const CodecConfig& cfg) {
  std::vector<std::uint64_t> nb(cfg.n(), 0);
  for (int t = 0; t < cfg.beta; ++t) {
    int idx = cfg.q + 1 - t;
    std::uint64_t plane = cb.planes[t];
    for (int j = 0; j < cfg.n(); ++j) nb[j] |= ((plane >> j) & 1) << idx;
  }
  return nb;
}

// Steps 5 and 8 on integer coefficients (any order), including both rounding stages.
inline void quantize_coefficients(std::span<std::int64_t> c, const CodecConfig& cfg) {
  apply_rounding(c, cfg, RoundingStage::BeforeTruncate);
  std::uint64_t mask = plane_mask(cfg);
  for (auto& v : c) {
    std::uint64_t nb = nb_encode(v);
    check_digits(nb, cfg);
    v = nb_decode(nb & mask);
  }
  apply_rounding(c, cfg, RoundingStage::AfterDecode);
}

// ---------------------------------------------------------------- block codec

class BlockCodec {
 public:
  explicit BlockCodec(const CodecConfig& cfg) : cfg_(cfg) {
    cfg_.validate();
    perm_ = sequency_permutation(cfg_.d);
  }

  const CodecConfig& config() const { return cfg_; }
  const std::vector<int>& permutation() const { return perm_; }

  CompressedBlock compress(std::span<const double> x) const {
    check_len(x.size());
    if (all_zero(x)) return zero_block();
    Step2Result s2 = step2_forward(x, cfg_);
    forward_lossy_d(s2.ints, cfg_.d);
    apply_rounding(s2.ints, cfg_, RoundingStage::BeforeTruncate);
    std::vector<std::uint64_t> nb(cfg_.n());
    for (int j = 0; j < cfg_.n(); ++j) {
      nb[j] = nb_encode(s2.ints[perm_[j]]);
      check_digits(nb[j], cfg_);
    }
    return step8_truncate(nb, s2.e_max, cfg_);
  }

  std::vector<double> decompress(const CompressedBlock& cb) const {
    if (cb.zero) return std::vector<double>(cfg_.n(), 0.0);
    if (static_cast<int>(cb.planes.size()) != cfg_.beta) fail(Errc::Format, "plane count does not match beta");
    std::vector<std::uint64_t> nb = step8_expand(cb, cfg_);
    std::vector<std::int64_t> c(cfg_.n());
    for (int j = 0; j < cfg_.n(); ++j) c[perm_[j]] = nb_decode(nb[j]);
    apply_rounding(c, cfg_, RoundingStage::AfterDecode);
    backward_lossy_d(c, cfg_.d);
    return step2_backward(c, cb.e_max, cfg_);
  }

  // decompress(compress(x)) starting from forward-transformed coefficients
  void reconstruct(std::span<const std::int64_t> coeffs, int e_max, std::span<double> out) const {
    std::int64_t c[64];
    std::span<std::int64_t> cs(c, cfg_.n());
    std::copy(coeffs.begin(), coeffs.end(), cs.begin());
    quantize_coefficients(cs, cfg_);
    backward_lossy_d(cs, cfg_.d);
    int ell = e_max - cfg_.q + 1;
    for (int i = 0; i < cfg_.n(); ++i) out[i] = std::ldexp(static_cast<double>(fl_k(c[i], cfg_.k)), ell);
  }

  CompressedBlock zero_block() const {
    CompressedBlock cb;
    cb.planes.assign(cfg_.beta, 0);
    return cb;
  }

 private:
  void check_len(std::size_t n) const {
    if (n != static_cast<std::size_t>(cfg_.n())) fail(Errc::Config, "block length does not match 4^d");
  }
  CodecConfig cfg_;
  std::vector<int> perm_;
};

inline CompressedBlock compress(std::span<const double> x, const CodecConfig& cfg) { return BlockCodec(cfg).compress(x); }
inline std::vector<double> decompress(const CompressedBlock& cb, const CodecConfig& cfg) { return BlockCodec(cfg).decompress(cb); }

// smallest beta with 2^ell * 2^(q+1-beta) <= tol, clamped to [0, q+2]
inline int beta_for_tolerance(double tol, int e_max, const CodecConfig& cfg) {
  if (!(tol > 0)) fail(Errc::Config, "tolerance must be positive");
  for (int beta = 0; beta <= cfg.q + 2; ++beta) {
    int e = e_max - cfg.q + 1 + cfg.q + 1 - beta;
    if (std::ldexp(1.0, e) <= tol) return beta;
  }
  return cfg.q + 2;
}

// ---------------------------------------------------------------- exact reference and trace

// Lossless C: exact block float then exact transform; natural coefficient order.
inline std::vector<Rational> compress_reference(std::span<const double> x, const CodecConfig& cfg) {
  cfg.validate();
  if (all_zero(x)) return std::vector<Rational>(x.size(), Rational(0));
  auto c = step2_forward_exact(x, cfg);
  forward_exact_d(c, cfg.d);
  return c;
}

inline std::vector<Rational> decompress_reference(std::span<const Rational> c, int e_max, const CodecConfig& cfg) {
  std::vector<Rational> v(c.begin(), c.end());
  backward_exact_d(v, cfg.d);
  Rational s = pow2(e_max - cfg.q + 1);
  for (auto& e : v) e *= s;
  return v;
}

struct StepTrace {
  CodecConfig cfg;
  bool zero = false;
  int e_max = 0;
  int ell = 0;
  std::vector<Rational> x;          // input
  std::vector<std::int64_t> w;      // lossy step 2
  std::vector<std::int64_t> y;      // lossy transform of w (natural order)
  std::vector<Rational> y_hat;      // after step 8 and rounding, decoded
  std::vector<Rational> z;          // exact inverse transform of y_hat
  std::vector<Rational> out;        // 2^ell fl_k(z)
  std::vector<double> codec_out;    // decompress(compress(x)) via lifting
  bool lifting_matches_exact = false;  // lossy backward(y_hat) == z
};

inline StepTrace trace(std::span<const double> x, const CodecConfig& cfg) {
  BlockCodec codec(cfg);
  StepTrace t;
  t.cfg = cfg;
  int n = cfg.n();
  t.x.reserve(n);
  for (double v : x) t.x.push_back(from_double(v));
  t.codec_out = codec.decompress(codec.compress(x));
  if (all_zero(x)) {
    t.zero = true;
    t.w.assign(n, 0);
    t.y.assign(n, 0);
    t.y_hat.assign(n, Rational(0));
    t.z = t.y_hat;
    t.out = t.y_hat;
    t.lifting_matches_exact = true;
    return t;
  }
  Step2Result s2 = step2_forward(x, cfg);
  t.e_max = s2.e_max;
  t.ell = s2.ell;
  t.w = s2.ints;
  t.y = t.w;
  forward_lossy_d(t.y, cfg.d);
  std::vector<std::int64_t> yh = t.y;
  quantize_coefficients(yh, cfg);
  t.y_hat.assign(yh.begin(), yh.end());
  t.z = t.y_hat;
  backward_exact_d(t.z, cfg.d);
  std::vector<std::int64_t> lift = yh;
  backward_lossy_d(lift, cfg.d);
  t.lifting_matches_exact = true;
  for (int i = 0; i < n; ++i)
    if (Rational(lift[i]) != t.z[i]) t.lifting_matches_exact = false;
  Rational s = pow2(t.ell);
  t.out.reserve(n);
  for (const auto& zi : t.z) t.out.push_back(fl_k(zi, cfg.k) * s);
  return t;
}

// Four-term split of the total error out - x:
//   [0] 2^ell (fl_k(z) - z)          decode rounding
//   [1] 2^ell L^-1 (y_hat - y)       bit-plane truncation (+ rounding offsets)
//   [2] 2^ell L^-1 (y - L w)         lossy forward transform
//   [3] 2^ell w - x                  block floating point
struct Decomposition {
  std::array<std::vector<Rational>, 4> terms;
  std::vector<Rational> total;
};

inline Decomposition decompose(const StepTrace& t) {
  int n = t.cfg.n(), d = t.cfg.d;
  Decomposition dc;
  for (auto& v : dc.terms) v.assign(n, Rational(0));
  dc.total.assign(n, Rational(0));
  for (int i = 0; i < n; ++i) dc.total[i] = t.out[i] - t.x[i];
  if (t.zero) return dc;
  Rational s = pow2(t.ell);
  std::vector<Rational> a(n), b(n), lw(n);
  for (int i = 0; i < n; ++i) {
    dc.terms[0][i] = t.out[i] - t.z[i] * s;
    a[i] = t.y_hat[i] - Rational(t.y[i]);
    lw[i] = Rational(t.w[i]);
  }
  forward_exact_d(lw, d);
  for (int i = 0; i < n; ++i) b[i] = Rational(t.y[i]) - lw[i];
  backward_exact_d(a, d);
  backward_exact_d(b, d);
  for (int i = 0; i < n; ++i) {
    dc.terms[1][i] = a[i] * s;
    dc.terms[2][i] = b[i] * s;
    dc.terms[3][i] = Rational(t.w[i]) * s - t.x[i];
  }
  return dc;
}

// ---------------------------------------------------------------- arrays

using Dims = std::array<std::uint64_t, 3>;  // dims[0] varies fastest

inline void check_dims(const Dims& dims, int d) {
  check_dimension(d);
  for (int a = 0; a < 3; ++a) {
    if (a < d && dims[a] == 0) fail(Errc::Config, "array extent must be positive");
    if (a >= d && dims[a] != 1) fail(Errc::Config, "extents beyond the block dimension must be 1");
  }
}

inline Dims block_grid(const Dims& dims, int d) {
  Dims g{1, 1, 1};
  for (int a = 0; a < d; ++a) g[a] = (dims[a] + 3) / 4;
  return g;
}

inline std::uint64_t element_count(const Dims& dims) { return dims[0] * dims[1] * dims[2]; }

// Blocks in x-fastest order; boundary blocks replicate the last valid sample.
inline std::vector<std::vector<double>> partition(std::span<const double> data, const Dims& dims, int d) {
  check_dims(dims, d);
  if (data.size() != element_count(dims)) fail(Errc::Config, "sample count does not match dims");
  for (double v : data)
    if (!std::isfinite(v)) fail(Errc::NonFiniteInput, "non-finite value in array");
  Dims g = block_grid(dims, d);
  std::vector<std::vector<double>> blocks;
  blocks.reserve(element_count(g));
  int n = block_size(d);
  for (std::uint64_t bz = 0; bz < g[2]; ++bz)
    for (std::uint64_t by = 0; by < g[1]; ++by)
      for (std::uint64_t bx = 0; bx < g[0]; ++bx) {
        std::vector<double> blk(n);
        for (int f = 0; f < n; ++f) {
          auto c = block_coords(f);
          std::uint64_t ix = std::min(bx * 4 + c[0], dims[0] - 1);
          std::uint64_t iy = std::min(by * 4 + c[1], dims[1] - 1);
          std::uint64_t iz = std::min(bz * 4 + c[2], dims[2] - 1);
          blk[f] = data[ix + dims[0] * (iy + dims[1] * iz)];
        }
        blocks.push_back(std::move(blk));
      }
  return blocks;
}

inline std::vector<double> reassemble(const std::vector<std::vector<double>>& blocks, const Dims& dims, int d) {
  check_dims(dims, d);
  Dims g = block_grid(dims, d);
  if (blocks.size() != element_count(g)) fail(Errc::Config, "block count does not match dims");
  std::vector<double> out(element_count(dims));
  int n = block_size(d);
  std::uint64_t b = 0;
  for (std::uint64_t bz = 0; bz < g[2]; ++bz)
    for (std::uint64_t by = 0; by < g[1]; ++by)
      for (std::uint64_t bx = 0; bx < g[0]; ++bx, ++b)
        for (int f = 0; f < n; ++f) {
          auto c = block_coords(f);
          std::uint64_t ix = bx * 4 + c[0], iy = by * 4 + c[1], iz = bz * 4 + c[2];
          if (ix >= dims[0] || iy >= dims[1] || iz >= dims[2]) continue;
          out[ix + dims[0] * (iy + dims[1] * iz)] = blocks[b][f];
        }
  return out;
}

inline std::vector<CompressedBlock> compress_array(std::span<const double> data, const Dims& dims, const CodecConfig& cfg,
                                                   int threads = 1) {
  BlockCodec codec(cfg);
  auto blocks = partition(data, dims, cfg.d);
  std::vector<CompressedBlock> out(blocks.size());
  parallel_for(blocks.size(), threads, [&](std::uint64_t i) { out[i] = codec.compress(blocks[i]); });
  return out;
}

inline std::vector<double> decompress_array(const std::vector<CompressedBlock>& cbs, const Dims& dims, const CodecConfig& cfg,
                                            int threads = 1) {
  BlockCodec codec(cfg);
  std::vector<std::vector<double>> blocks(cbs.size());
  parallel_for(cbs.size(), threads, [&](std::uint64_t i) { blocks[i] = codec.decompress(cbs[i]); });
  return reassemble(blocks, dims, cfg.d);
}

}  // namespace zfpbias
