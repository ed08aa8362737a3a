#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <optional>
#include <vector>

#include "bitplane.hpp"
#include "codec.hpp"
#include "error.hpp"
#include "rational.hpp"
#include "transform.hpp"

namespace zfpbias {

// E_1 = E[L a - L~ a] for uniformly distributed integer a
inline std::array<Rational, 4> expected_transform_error_1d() {
  return {Rational(1, 2), Rational(-9, 16), Rational(-1, 4), Rational(1, 8)};
}

// E_d = E[L_d a - L~_d a], flat index x + 4y + 16z. The lossy pass along axis a
// leaves E_1 on that axis; later (exact) passes map the constant error to the
// DC slot of every following axis.
inline std::vector<Rational> expected_transform_error(int d) {
  check_dimension(d);
  auto e1 = expected_transform_error_1d();
  int n = block_size(d);
  std::vector<Rational> e(n, Rational(0));
  for (int f = 0; f < n; ++f) {
    auto c = block_coords(f);
    for (int a = 0; a < d; ++a) {
      bool later_dc = true;
      for (int b = a + 1; b < d; ++b) later_dc = later_dc && c[b] == 0;
      if (later_dc) e[f] += e1[c[a]];
    }
  }
  return e;
}

// Exact marginal pmfs of the four components of L a - L~ a under six
// independent rounding losses theta_j in {-1/2, 0} (equiprobable).
inline std::array<std::map<Rational, Rational>, 4> theta1_distribution() {
  std::array<std::map<Rational, Rational>, 4> pmf;
  Rational h(-1, 2), w(1, 64);
  for (int mask = 0; mask < 64; ++mask) {
    Rational t[6];
    for (int j = 0; j < 6; ++j) t[j] = (mask >> j) & 1 ? h : Rational(0);
    Rational e[4] = {
        -((t[0] + t[1]) / 2 + t[3]),
        -((5 * t[0] - t[1]) / 8 - Rational(5, 4) * t[2] - t[4] / 2 - t[5]),
        -((t[1] - t[0]) / 2 - t[3]),
        -(-(t[0] + 3 * t[1]) / 4 + t[2] / 2 + t[4]),
    };
    for (int c = 0; c < 4; ++c) pmf[c][e[c]] += w;
  }
  return pmf;
}

// row sums of L_d^-1
inline std::vector<Rational> backward_row_sums(int d) {
  std::vector<Rational> ones(block_size(d), Rational(1));
  backward_exact_d(ones, d);
  return ones;
}

// truncation mean for uniform negabinary digits below eta+1 (continuous limit)
inline Rational negabinary_truncation_mean(int eta) { return pow_m2(eta + 1) / 6; }

struct BiasPrediction {
  CodecConfig cfg;
  int e_max = 0;
  int ell = 0;
  std::vector<Rational> e_d;
  std::vector<Rational> step2;       // block floating point term (zero)
  std::vector<Rational> transform;   // lossy forward transform term
  std::vector<Rational> truncation;  // bit-plane truncation term
  std::vector<Rational> decode;      // fl_k term (zero)
  std::vector<Rational> total;
  std::vector<bool> below_floor;     // |total_i| < 2^(e_max - k)
  bool in_analysis_range = true;

  std::vector<double> total_double() const {
    std::vector<double> o;
    o.reserve(total.size());
    for (const auto& v : total) o.push_back(to_double(v));
    return o;
  }
};

inline BiasPrediction predict_total_bias(const CodecConfig& cfg, int e_max) {
  cfg.validate();
  BiasPrediction p;
  p.cfg = cfg;
  p.e_max = e_max;
  p.ell = e_max - cfg.q + 1;
  p.in_analysis_range = cfg.in_analysis_range();
  int n = cfg.n();
  Rational s = pow2(p.ell);
  p.e_d = expected_transform_error(cfg.d);

  std::vector<Rational> t = p.e_d;
  backward_exact_d(t, cfg.d);
  p.transform.resize(n);
  for (int i = 0; i < n; ++i) p.transform[i] = -s * t[i];

  Rational per_coeff = (cfg.rounding == Rounding::Never && !cfg.lossless()) ? negabinary_truncation_mean(cfg.eta()) : Rational(0);
  auto rows = backward_row_sums(cfg.d);
  p.truncation.resize(n);
  for (int i = 0; i < n; ++i) p.truncation[i] = s * per_coeff * rows[i];

  p.step2.assign(n, Rational(0));
  p.decode.assign(n, Rational(0));
  p.total.resize(n);
  p.below_floor.resize(n);
  Rational floor_v = pow2(e_max - cfg.k);
  for (int i = 0; i < n; ++i) {
    p.total[i] = p.step2[i] + p.transform[i] + p.truncation[i] + p.decode[i];
    p.below_floor[i] = rabs(p.total[i]) < floor_v;
  }
  return p;
}

// 0-based element where relative prediction error is expected to be largest:
// smallest |row sum| of L_d^-1 (ties -> smallest index).
inline int worst_predicted_element(int d) {
  auto rows = backward_row_sums(d);
  int best = 0;
  for (int i = 1; i < static_cast<int>(rows.size()); ++i)
    if (rabs(rows[i]) < rabs(rows[best])) best = i;
  return best;
}

// ---------------------------------------------------------------- truncation lemmas

enum class Regime { LeadingBitRetained, LeadingBitTruncated };

struct TruncationStats {
  // nullopt when the mean is minus the input mean (distribution dependent)
  std::optional<Rational> mean;
  // error interval; lo/hi meaningless when mean is nullopt
  Rational lo, hi;
  bool closed = false;
};

// Error t_S(a) - a of truncating all bits with index <= eta.
inline TruncationStats truncation_stats(Base base, int eta, Regime regime, bool rounded = false) {
  TruncationStats st;
  if (regime == Regime::LeadingBitTruncated) return st;
  Rational u = pow2(eta + 1);
  if (base == Base::SignedBinary) {
    st.mean = Rational(0);
    st.lo = 1 - u;
    st.hi = u - 1;
    st.closed = true;
    return st;
  }
  if (rounded) {
    st.mean = Rational(0);
    st.lo = -u / 2;
    st.hi = u / 2;
    return st;
  }
  st.mean = negabinary_truncation_mean(eta);
  if (eta % 2 == 0) {
    st.lo = -u * 2 / 3;
    st.hi = u / 3;
  } else {
    st.lo = -u / 3;
    st.hi = u * 2 / 3;
  }
  return st;
}

// ---------------------------------------------------------------- quantization error densities

// Density of X_i = (L^-1 Y)_i for i.i.d. uniform Y of unit width (Delta = 1).
// Biased: Y ~ U(-2/3, 1/3); unbiased: Y ~ U(-1/2, 1/2).
struct ErrorDensity {
  int i = 1;  // 1-based position
  bool biased = true;
  Rational s, c;
  std::array<Rational, 4> u, v;

  Rational lo() const { return c - u[3]; }
  Rational hi() const { return c + u[3]; }

  // signed knot list: (position, weight)
  std::vector<std::pair<Rational, int>> knots() const {
    std::vector<std::pair<Rational, int>> k;
    for (int j = 0; j < 4; ++j) {
      k.push_back({c - u[j], 1});
      k.push_back({c + u[j], 1});
      k.push_back({c - v[j], -1});
      k.push_back({c + v[j], -1});
    }
    return k;
  }

  double operator()(double x) const {
    if (x <= to_double(lo()) || x >= to_double(hi())) return 0.0;
    double acc = 0;
    for (auto& [t, w] : knots()) {
      double a = std::fabs(x - to_double(t));
      acc += w * a * a * a;
    }
    double r = to_double(s) * acc;
    return r < 0 ? 0.0 : r;
  }

  Rational eval(const Rational& x) const {
    Rational acc = 0;
    for (auto& [t, w] : knots()) {
      Rational a = rabs(x - t);
      acc += w * a * a * a;
    }
    return s * acc;
  }

  // sorted distinct breakpoints covering the support
  std::vector<Rational> breakpoints() const {
    std::vector<Rational> b;
    for (auto& kw : knots()) b.push_back(kw.first);
    std::sort(b.begin(), b.end());
    b.erase(std::unique(b.begin(), b.end()), b.end());
    return b;
  }

  // cubic coefficients (x^0..x^3) of f on an interval containing `mid`
  std::array<Rational, 4> piece(const Rational& mid) const {
    std::array<Rational, 4> p{0, 0, 0, 0};
    for (auto& [t, w] : knots()) {
      int sg = (mid > t) ? w : -w;  // |x-t|^3 = sign * (x-t)^3
      p[3] += sg;
      p[2] += sg * (-3 * t);
      p[1] += sg * (3 * t * t);
      p[0] += sg * (-t * t * t);
    }
    for (auto& e : p) e *= s;
    return p;
  }

  // exact integral of x^m f(x) over [a, b]
  Rational integrate_moment(int m, Rational a, Rational b) const {
    if (b <= a) return Rational(0);
    a = std::max(a, lo());
    b = std::min(b, hi());
    if (b <= a) return Rational(0);
    auto bp = breakpoints();
    std::vector<Rational> cuts{a};
    for (auto& x : bp)
      if (x > a && x < b) cuts.push_back(x);
    cuts.push_back(b);
    Rational total = 0;
    for (std::size_t k = 0; k + 1 < cuts.size(); ++k) {
      Rational l = cuts[k], r = cuts[k + 1];
      auto p = piece((l + r) / 2);
      for (int deg = 0; deg < 4; ++deg) {
        int e = deg + m + 1;
        Rational rl = 1, rr = 1;
        for (int t = 0; t < e; ++t) {
          rl *= l;
          rr *= r;
        }
        total += p[deg] * (rr - rl) / e;
      }
    }
    return total;
  }

  Rational moment(int m) const { return integrate_moment(m, lo(), hi()); }
  Rational mean() const { return moment(1); }
  Rational variance() const {
    Rational mu = mean();
    return moment(2) - mu * mu;
  }
  Rational abs_mean() const {
    Rational zero = 0;
    return integrate_moment(1, zero, hi()) - integrate_moment(1, lo(), zero);
  }
  Rational probability(const Rational& a, const Rational& b) const { return integrate_moment(0, a, b); }

  // Gauss-Legendre quadrature per cubic piece, in double precision
  double integrate_numeric(double a, double b) const {
    static const double xg[3] = {-0.7745966692414834, 0.0, 0.7745966692414834};
    static const double wg[3] = {5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0};
    a = std::max(a, to_double(lo()));
    b = std::min(b, to_double(hi()));
    if (b <= a) return 0.0;
    std::vector<double> cuts{a};
    for (auto& x : breakpoints()) {
      double xd = to_double(x);
      if (xd > a && xd < b) cuts.push_back(xd);
    }
    cuts.push_back(b);
    double total = 0;
    for (std::size_t k = 0; k + 1 < cuts.size(); ++k) {
      double h = 0.5 * (cuts[k + 1] - cuts[k]), m = 0.5 * (cuts[k + 1] + cuts[k]);
      for (int g = 0; g < 3; ++g) total += wg[g] * h * (*this)(m + h * xg[g]);
    }
    return total;
  }
};

inline ErrorDensity quantization_density(int i, bool biased) {
  if (i < 1 || i > 4) fail(Errc::Config, "density index must be 1..4");
  ErrorDensity f;
  f.i = i;
  f.biased = biased;
  static const int uh_outer[4] = {1, 5, 5, 15}, vh_outer[4] = {3, 7, 7, 13};
  static const int uh_inner[4] = {1, 3, 3, 15}, vh_inner[4] = {5, 7, 7, 11};
  bool outer = (i == 1 || i == 4);
  f.s = outer ? Rational(2, 9) : Rational(2, 15);
  for (int j = 0; j < 4; ++j) {
    f.u[j] = Rational(outer ? uh_outer[j] : uh_inner[j], 8);
    f.v[j] = Rational(outer ? vh_outer[j] : vh_inner[j], 8);
  }
  static const Rational centers[4] = {Rational(-5, 24), Rational(-5, 8), Rational(-1, 24), Rational(5, 24)};
  f.c = biased ? centers[i - 1] : Rational(0);
  return f;
}

}  // namespace zfpbias
