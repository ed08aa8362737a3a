#pragma once

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string>
#include <vector>

#include "codec.hpp"
#include "error.hpp"

namespace zfpbias {

// ---------------------------------------------------------------- byte helpers

namespace detail {

class Writer {
 public:
  void bytes(const void* p, std::size_t n) {
    auto* c = static_cast<const char*>(p);
    buf_.insert(buf_.end(), c, c + n);
  }
  template <class T>
  void le(T v) {
    static_assert(std::is_integral_v<T>);
    using U = std::make_unsigned_t<T>;
    auto u = static_cast<U>(v);
    for (std::size_t i = 0; i < sizeof(T); ++i) buf_.push_back(static_cast<char>((u >> (8 * i)) & 0xff));
  }
  void f32(float v) { le(std::bit_cast<std::uint32_t>(v)); }
  void f64(double v) { le(std::bit_cast<std::uint64_t>(v)); }
  const std::string& str() const { return buf_; }

 private:
  std::string buf_;
};

class Reader {
 public:
  explicit Reader(const std::string& s) : s_(s) {}
  void need(std::size_t n) const {
    if (pos_ + n > s_.size()) fail(Errc::Format, "unexpected end of data");
  }
  std::string bytes(std::size_t n) {
    need(n);
    std::string r = s_.substr(pos_, n);
    pos_ += n;
    return r;
  }
  template <class T>
  T le() {
    static_assert(std::is_integral_v<T>);
    need(sizeof(T));
    using U = std::make_unsigned_t<T>;
    U u = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) u |= static_cast<U>(static_cast<unsigned char>(s_[pos_ + i])) << (8 * i);
    pos_ += sizeof(T);
    return static_cast<T>(u);
  }
  float f32() { return std::bit_cast<float>(le<std::uint32_t>()); }
  double f64() { return std::bit_cast<double>(le<std::uint64_t>()); }
  bool done() const { return pos_ == s_.size(); }

 private:
  const std::string& s_;
  std::size_t pos_ = 0;
};

}  // namespace detail

inline std::string read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) fail(Errc::Io, "cannot open '" + path + "' for reading");
  std::ostringstream ss;
  ss << f.rdbuf();
  if (f.bad()) fail(Errc::Io, "read error on '" + path + "'");
  return ss.str();
}

inline void write_file(const std::string& path, const std::string& data) {
  std::ofstream f(path, std::ios::binary);
  if (!f) fail(Errc::Io, "cannot open '" + path + "' for writing");
  f.write(data.data(), static_cast<std::streamsize>(data.size()));
  if (!f) fail(Errc::Io, "write error on '" + path + "'");
}

// ---------------------------------------------------------------- raw grids

enum class DType : std::uint8_t { F32 = 0, F64 = 1 };

inline const char* dtype_name(DType t) { return t == DType::F32 ? "f32" : "f64"; }

inline DType parse_dtype(const std::string& s) {
  if (s == "f32") return DType::F32;
  if (s == "f64") return DType::F64;
  fail(Errc::Config, "unknown dtype '" + s + "'");
}

inline constexpr std::uint8_t kRawVersion = 1;

struct RawGrid {
  int ndims = 1;
  Dims dims{1, 1, 1};  // dims[0] fastest, unused extents 1
  DType dtype = DType::F64;
  std::vector<double> data;
};

inline void check_grid(const RawGrid& g) {
  if (g.ndims < 1 || g.ndims > 3) fail(Errc::Format, "ndims must be 1, 2 or 3");
  for (int a = 0; a < 3; ++a) {
    if (a < g.ndims && g.dims[a] == 0) fail(Errc::Format, "zero extent");
    if (a >= g.ndims && g.dims[a] != 1) fail(Errc::Format, "unused extents must be 1");
  }
  if (g.data.size() != element_count(g.dims)) fail(Errc::Format, "sample count does not match dims");
  for (double v : g.data)
    if (!std::isfinite(v)) fail(Errc::NonFiniteInput, "non-finite sample in grid");
}

inline std::string encode_raw(const RawGrid& g) {
  check_grid(g);
  detail::Writer w;
  w.bytes("ZRAW", 4);
  w.le<std::uint8_t>(kRawVersion);
  w.le<std::uint8_t>(static_cast<std::uint8_t>(g.dtype));
  w.le<std::uint8_t>(static_cast<std::uint8_t>(g.ndims));
  for (auto e : g.dims) w.le<std::uint64_t>(e);
  for (double v : g.data) {
    if (g.dtype == DType::F32) {
      if (static_cast<double>(static_cast<float>(v)) != v) fail(Errc::Config, "sample not representable as f32");
      w.f32(static_cast<float>(v));
    } else {
      w.f64(v);
    }
  }
  return w.str();
}

inline RawGrid decode_raw(const std::string& s) {
  detail::Reader r(s);
  if (r.bytes(4) != "ZRAW") fail(Errc::Format, "bad magic, expected ZRAW");
  if (r.le<std::uint8_t>() != kRawVersion) fail(Errc::Format, "unsupported ZRAW version");
  RawGrid g;
  auto t = r.le<std::uint8_t>();
  if (t > 1) fail(Errc::Format, "unknown dtype code");
  g.dtype = static_cast<DType>(t);
  g.ndims = r.le<std::uint8_t>();
  for (auto& e : g.dims) e = r.le<std::uint64_t>();
  if (g.ndims < 1 || g.ndims > 3) fail(Errc::Format, "ndims must be 1, 2 or 3");
  std::uint64_t n = 1;
  for (auto e : g.dims) {
    if (e == 0 || n > (std::uint64_t(1) << 40) / e) fail(Errc::Format, "implausible dims");
    n *= e;
  }
  std::size_t width = g.dtype == DType::F32 ? 4 : 8;
  r.need(n * width);
  g.data.resize(n);
  for (auto& v : g.data) v = g.dtype == DType::F32 ? static_cast<double>(r.f32()) : r.f64();
  if (!r.done()) fail(Errc::Format, "trailing bytes after samples");
  check_grid(g);
  return g;
}

// ---------------------------------------------------------------- compressed container

inline constexpr std::uint8_t kContainerVersion = 1;

struct Container {
  CodecConfig cfg;
  Dims dims{1, 1, 1};
  std::vector<CompressedBlock> blocks;
};

inline std::size_t plane_bytes(const CodecConfig& cfg) { return (static_cast<std::size_t>(cfg.beta) * cfg.n() + 7) / 8; }

inline std::string encode_container(const Container& c) {
  c.cfg.validate();
  check_dims(c.dims, c.cfg.d);
  if (c.blocks.size() != element_count(block_grid(c.dims, c.cfg.d))) fail(Errc::Config, "block count does not match dims");
  detail::Writer w;
  w.bytes("ZBLB", 4);
  w.le<std::uint8_t>(kContainerVersion);
  w.le<std::uint8_t>(static_cast<std::uint8_t>(c.cfg.d));
  w.le<std::uint8_t>(static_cast<std::uint8_t>(c.cfg.k));
  w.le<std::uint8_t>(static_cast<std::uint8_t>(c.cfg.q));
  w.le<std::uint16_t>(static_cast<std::uint16_t>(c.cfg.beta));
  w.le<std::uint8_t>(static_cast<std::uint8_t>(c.cfg.rounding));
  for (auto e : c.dims) w.le<std::uint64_t>(e);
  const int n = c.cfg.n();
  for (const auto& b : c.blocks) {
    w.le<std::uint8_t>(b.zero ? 1 : 0);
    w.le<std::int16_t>(static_cast<std::int16_t>(b.zero ? 0 : b.e_max));
    std::string bits(plane_bytes(c.cfg), '\0');
    if (!b.zero) {
      if (static_cast<int>(b.planes.size()) != c.cfg.beta) fail(Errc::Config, "plane count does not match beta");
      std::size_t pos = 0;
      for (int t = 0; t < c.cfg.beta; ++t)
        for (int j = 0; j < n; ++j, ++pos)
          if ((b.planes[t] >> j) & 1) bits[pos / 8] = static_cast<char>(bits[pos / 8] | (0x80 >> (pos % 8)));
    }
    w.bytes(bits.data(), bits.size());
  }
  return w.str();
}

inline Container decode_container(const std::string& s) {
  detail::Reader r(s);
  if (r.bytes(4) != "ZBLB") fail(Errc::Format, "bad magic, expected ZBLB");
  if (r.le<std::uint8_t>() != kContainerVersion) fail(Errc::Format, "unsupported ZBLB version");
  Container c;
  c.cfg.d = r.le<std::uint8_t>();
  c.cfg.k = r.le<std::uint8_t>();
  c.cfg.q = r.le<std::uint8_t>();
  c.cfg.beta = r.le<std::uint16_t>();
  auto rm = r.le<std::uint8_t>();
  if (rm > 2) fail(Errc::Format, "unknown rounding code");
  c.cfg.rounding = static_cast<Rounding>(rm);
  for (auto& e : c.dims) e = r.le<std::uint64_t>();
  try {
    c.cfg.validate();
    check_dims(c.dims, c.cfg.d);
  } catch (const Error& e) {
    fail(Errc::Format, std::string("invalid header: ") + e.what());
  }
  std::uint64_t nblocks = element_count(block_grid(c.dims, c.cfg.d));
  const int n = c.cfg.n();
  const std::size_t pb = plane_bytes(c.cfg);
  r.need(nblocks * (3 + pb));
  c.blocks.resize(nblocks);
  for (auto& b : c.blocks) {
    auto z = r.le<std::uint8_t>();
    if (z > 1) fail(Errc::Format, "bad zero flag");
    b.zero = z == 1;
    b.e_max = r.le<std::int16_t>();
    std::string bits = r.bytes(pb);
    b.planes.assign(c.cfg.beta, 0);
    std::size_t pos = 0;
    for (int t = 0; t < c.cfg.beta; ++t)
      for (int j = 0; j < n; ++j, ++pos)
        if (static_cast<unsigned char>(bits[pos / 8]) & (0x80 >> (pos % 8))) b.planes[t] |= std::uint64_t(1) << j;
    if (b.zero && (b.e_max != 0 || std::any_of(b.planes.begin(), b.planes.end(), [](auto p) { return p != 0; })))
      fail(Errc::Format, "zero block carries data");
  }
  if (!r.done()) fail(Errc::Format, "trailing bytes after blocks");
  return c;
}

}  // namespace zfpbias
