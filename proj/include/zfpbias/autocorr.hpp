#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <mutex>
#include <span>
#include <vector>

#include <fftw3.h>

#include "codec.hpp"
#include "error.hpp"

namespace zfpbias {

namespace detail {

inline std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}

// g = (x - mean) / sd (population sd)
inline std::vector<double> standardize(std::span<const double> x) {
  if (x.empty()) fail(Errc::DegenerateField, "empty field");
  double mu = 0;
  for (double v : x) mu += v;
  mu /= static_cast<double>(x.size());
  double ss = 0;
  for (double v : x) ss += (v - mu) * (v - mu);
  double sd = std::sqrt(ss / static_cast<double>(x.size()));
  if (!(sd > 0)) fail(Errc::DegenerateField, "field has zero variance");
  std::vector<double> g(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) g[i] = (x[i] - mu) / sd;
  return g;
}

// In-place complex DFT over a field with extents dims[0] (fastest) .. dims[nd-1].
inline void dft(std::vector<std::complex<double>>& a, const Dims& dims, int nd, int sign) {
  int n[3];
  for (int i = 0; i < nd; ++i) n[i] = static_cast<int>(dims[nd - 1 - i]);  // FFTW wants slowest first
  auto* p = reinterpret_cast<fftw_complex*>(a.data());
  fftw_plan plan;
  {
    std::lock_guard lk(fftw_planner_mutex());
    plan = fftw_plan_dft(nd, n, p, p, sign, FFTW_ESTIMATE);
  }
  if (!plan) fail(Errc::Config, "FFT plan creation failed");
  fftw_execute(plan);
  std::lock_guard lk(fftw_planner_mutex());
  fftw_destroy_plan(plan);
}

inline void check_field(std::size_t size, const Dims& dims, int nd) {
  if (nd < 1 || nd > 3) fail(Errc::UnsupportedDimension, "field must be 1-, 2- or 3-dimensional");
  for (int a = nd; a < 3; ++a)
    if (dims[a] != 1) fail(Errc::Config, "unused extents must be 1");
  if (size != element_count(dims)) fail(Errc::Config, "field size does not match dims");
}

}  // namespace detail

// Circular autocorrelation via FFT; zero lag at index 0, normalized to 1 there.
inline std::vector<double> autocorrelation(std::span<const double> field, const Dims& dims, int nd) {
  detail::check_field(field.size(), dims, nd);
  auto g = detail::standardize(field);
  std::vector<std::complex<double>> h(g.begin(), g.end());
  detail::dft(h, dims, nd, FFTW_FORWARD);
  for (auto& c : h) c = std::norm(c);
  detail::dft(h, dims, nd, FFTW_BACKWARD);
  std::vector<double> r(h.size());
  double r0 = h[0].real();
  for (std::size_t i = 0; i < h.size(); ++i) r[i] = h[i].real() / r0;
  return r;
}

// Direct evaluation of one circular lag (lag components indexed like dims).
inline double autocorrelation_at(std::span<const double> g, const Dims& dims, const std::array<std::uint64_t, 3>& lag) {
  double acc = 0, ss = 0;
  for (std::uint64_t z = 0; z < dims[2]; ++z)
    for (std::uint64_t y = 0; y < dims[1]; ++y)
      for (std::uint64_t x = 0; x < dims[0]; ++x) {
        std::uint64_t i = x + dims[0] * (y + dims[1] * z);
        std::uint64_t xs = (x + lag[0]) % dims[0], ys = (y + lag[1]) % dims[1], zs = (z + lag[2]) % dims[2];
        acc += g[i] * g[xs + dims[0] * (ys + dims[1] * zs)];
        ss += g[i] * g[i];
      }
  return acc / ss;
}

// O(n^2) reference.
inline std::vector<double> autocorrelation_direct(std::span<const double> field, const Dims& dims, int nd) {
  detail::check_field(field.size(), dims, nd);
  auto g = detail::standardize(field);
  std::vector<double> r(g.size());
  for (std::uint64_t z = 0; z < dims[2]; ++z)
    for (std::uint64_t y = 0; y < dims[1]; ++y)
      for (std::uint64_t x = 0; x < dims[0]; ++x) r[x + dims[0] * (y + dims[1] * z)] = autocorrelation_at(g, dims, {x, y, z});
  return r;
}

// Spatial autocorrelation with zero lag along the slowest axis (e.g. time):
// per-slice power spectra are summed before the inverse transform.
inline std::vector<double> autocorrelation_time_slice(std::span<const double> field, const Dims& dims, int nd) {
  detail::check_field(field.size(), dims, nd);
  if (nd < 2) fail(Errc::UnsupportedDimension, "time-slice autocorrelation needs at least 2 dimensions");
  auto g = detail::standardize(field);
  Dims sd = dims;
  sd[nd - 1] = 1;
  std::uint64_t slice = element_count(sd), nslices = dims[nd - 1];
  std::vector<std::complex<double>> acc(slice, 0.0);
  for (std::uint64_t t = 0; t < nslices; ++t) {
    std::vector<std::complex<double>> h(g.begin() + t * slice, g.begin() + (t + 1) * slice);
    detail::dft(h, sd, nd - 1, FFTW_FORWARD);
    for (std::uint64_t i = 0; i < slice; ++i) acc[i] += std::norm(h[i]);
  }
  detail::dft(acc, sd, nd - 1, FFTW_BACKWARD);
  std::vector<double> r(slice);
  double r0 = acc[0].real();
  for (std::uint64_t i = 0; i < slice; ++i) r[i] = acc[i].real() / r0;
  return r;
}

// move zero lag to the array center (for display)
inline std::vector<double> fftshift(std::span<const double> r, const Dims& dims) {
  std::vector<double> out(r.size());
  for (std::uint64_t z = 0; z < dims[2]; ++z)
    for (std::uint64_t y = 0; y < dims[1]; ++y)
      for (std::uint64_t x = 0; x < dims[0]; ++x) {
        std::uint64_t xs = (x + dims[0] / 2) % dims[0], ys = (y + dims[1] / 2) % dims[1], zs = (z + dims[2] / 2) % dims[2];
        out[xs + dims[0] * (ys + dims[1] * zs)] = r[x + dims[0] * (y + dims[1] * z)];
      }
  return out;
}

inline double l2_norm(std::span<const double> r) {
  double s = 0;
  for (double v : r) s += v * v;
  return std::sqrt(s);
}

}  // namespace zfpbias
