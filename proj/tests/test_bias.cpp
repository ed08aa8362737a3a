#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include <zfpbias/bias.hpp>
#include <zfpbias/rng.hpp>
#include <zfpbias/stats.hpp>

using namespace zfpbias;

namespace {

Rational row_sum(int i) {
  auto m = backward_matrix();
  Rational s = 0;
  for (int j = 0; j < 4; ++j) s += m[i][j];
  return s;
}

}  // namespace

TEST(TransformError, Values) {
  auto e1 = expected_transform_error(1);
  auto ref = expected_transform_error_1d();
  for (int i = 0; i < 4; ++i) EXPECT_EQ(e1[i], ref[i]);
  auto e2 = expected_transform_error(2);
  ASSERT_EQ(e2.size(), 16u);
  // x pass error E_1[x] lands in row y = 0 after the y pass, which adds E_1[y] everywhere
  for (int y = 0; y < 4; ++y)
    for (int x = 0; x < 4; ++x) EXPECT_EQ(e2[x + 4 * y], (y == 0 ? ref[x] : Rational(0)) + ref[y]);
  auto e3 = expected_transform_error(3);
  EXPECT_EQ(e3[0], 3 * ref[0]);
  EXPECT_EQ(e3[2], ref[2] + ref[0] + ref[0]);
  EXPECT_EQ(e3[16 * 2], ref[2]);
  EXPECT_EQ(e3[1 + 16], ref[1]);
  EXPECT_THROW(expected_transform_error(0), Error);
}

TEST(TransformError, ThetaPmfConsistent) {
  auto pmf = theta1_distribution();
  auto e1 = expected_transform_error_1d();
  for (int c = 0; c < 4; ++c) {
    Rational total = 0, mean = 0;
    for (auto& [v, p] : pmf[c]) {
      total += p;
      mean += v * p;
    }
    EXPECT_EQ(total, 1);
    EXPECT_EQ(mean, e1[c]) << c;
  }
}

TEST(TransformError, ThetaSupportMatchesEnumeration) {
  // every residue class mod 16 of a 4-vector; the lifting error is periodic in it
  auto pmf = theta1_distribution();
  std::array<std::map<Rational, int>, 4> seen;
  for (int m = 0; m < 65536; ++m) {
    IntBlock4 a{m & 15, (m >> 4) & 15, (m >> 8) & 15, (m >> 12) & 15};
    RatBlock4 r{Rational(a[0]), Rational(a[1]), Rational(a[2]), Rational(a[3])};
    auto lossy = forward_lossy_1d(a);
    auto exact = forward_exact_1d(r);
    for (int c = 0; c < 4; ++c) seen[c][exact[c] - Rational(lossy[c])]++;
  }
  for (int c = 0; c < 4; ++c) {
    for (auto& [v, cnt] : seen[c]) EXPECT_TRUE(pmf[c].count(v)) << c << " " << to_string(v);
    for (auto& [v, p] : pmf[c]) EXPECT_TRUE(seen[c].count(v)) << c << " " << to_string(v);
  }
}

TEST(Prediction, RowSumsAndWorstElement) {
  auto r1 = backward_row_sums(1);
  for (int i = 0; i < 4; ++i) EXPECT_EQ(r1[i], row_sum(i));
  EXPECT_EQ(r1[0], Rational(5, 4));
  EXPECT_EQ(r1[1], Rational(15, 4));
  EXPECT_EQ(r1[2], Rational(1, 4));
  EXPECT_EQ(r1[3], Rational(-5, 4));
  auto r2 = backward_row_sums(2);
  for (int f = 0; f < 16; ++f) EXPECT_EQ(r2[f], r1[f & 3] * r1[f >> 2]);
  EXPECT_EQ(worst_predicted_element(1), 2);
  EXPECT_EQ(worst_predicted_element(2), 10);
  EXPECT_EQ(worst_predicted_element(3), 42);
}

TEST(Prediction, TruncationTermFormula) {
  for (int d = 1; d <= 3; ++d)
    for (int beta = 0; beta <= 30 - 2 * d + 2; beta += 5) {
      auto cfg = float_config(d, beta);
      auto p = predict_total_bias(cfg, 3);
      auto rows = backward_row_sums(d);
      Rational s = pow2(3 - 29);
      for (int i = 0; i < cfg.n(); ++i) {
        EXPECT_EQ(p.truncation[i], s * pow_m2(cfg.eta() + 1) / 6 * rows[i]);
        EXPECT_EQ(p.total[i] - p.transform[i], p.truncation[i]);
      }
    }
}

TEST(Prediction, TransformTermSign) {
  auto cfg = float_config(1, 10);
  auto p = predict_total_bias(cfg, 0);
  auto e = expected_transform_error_1d();
  auto m = backward_matrix();
  for (int i = 0; i < 4; ++i) {
    Rational acc = 0;
    for (int j = 0; j < 4; ++j) acc += m[i][j] * e[j];
    EXPECT_EQ(p.transform[i], -pow2(-29) * acc);
  }
}

TEST(Prediction, RoundingRemovesTruncation) {
  for (auto r : {Rounding::First, Rounding::Last}) {
    auto p = predict_total_bias(float_config(2, 12, r), 0);
    for (int i = 0; i < 16; ++i) {
      EXPECT_EQ(p.truncation[i], 0);
      EXPECT_EQ(p.total[i], p.transform[i]);
    }
  }
  auto lossless = predict_total_bias(float_config(1, 32), 0);
  for (auto& t : lossless.truncation) EXPECT_EQ(t, 0);
}

TEST(Prediction, SignAlternatesAndScales) {
  auto a = predict_total_bias(float_config(1, 10), 0);
  auto b = predict_total_bias(float_config(1, 11), 0);
  for (int i = 0; i < 4; ++i) EXPECT_EQ(a.truncation[i], -2 * b.truncation[i]);
  auto c = predict_total_bias(float_config(1, 10), 5);
  for (int i = 0; i < 4; ++i) EXPECT_EQ(c.total[i], 32 * a.total[i]);
  EXPECT_TRUE(a.in_analysis_range);
  EXPECT_FALSE(predict_total_bias(float_config(3, 27), 0).in_analysis_range);
}

TEST(Prediction, FloorFlag) {
  auto p = predict_total_bias(float_config(1, 29), 0);
  Rational floor_v = pow2(-24);
  for (int i = 0; i < 4; ++i) EXPECT_EQ(p.below_floor[i], rabs(p.total[i]) < floor_v);
  auto q = predict_total_bias(float_config(1, 8), 0);
  for (int i = 0; i < 4; ++i) EXPECT_FALSE(q.below_floor[i]);
}

TEST(TruncationStats, Branches) {
  auto sb = truncation_stats(Base::SignedBinary, 4, Regime::LeadingBitRetained);
  ASSERT_TRUE(sb.mean);
  EXPECT_EQ(*sb.mean, 0);
  EXPECT_EQ(sb.lo, -31);
  EXPECT_EQ(sb.hi, 31);
  auto even = truncation_stats(Base::Negabinary, 4, Regime::LeadingBitRetained);
  EXPECT_EQ(*even.mean, Rational(-32, 6));
  EXPECT_EQ(even.lo, Rational(-64, 3));
  EXPECT_EQ(even.hi, Rational(32, 3));
  auto odd = truncation_stats(Base::Negabinary, 5, Regime::LeadingBitRetained);
  EXPECT_EQ(*odd.mean, Rational(64, 6));
  EXPECT_EQ(odd.lo, Rational(-64, 3));
  EXPECT_EQ(odd.hi, Rational(128, 3));
  auto rd = truncation_stats(Base::Negabinary, 5, Regime::LeadingBitRetained, true);
  EXPECT_EQ(*rd.mean, 0);
  EXPECT_EQ(rd.hi, 32);
  EXPECT_FALSE(truncation_stats(Base::Negabinary, 5, Regime::LeadingBitTruncated).mean);
}

TEST(TruncationStats, NegabinaryBandByEnumeration) {
  // error of dropping digits 0..eta is minus the value of those digits
  for (int eta = 1; eta <= 14; ++eta) {
    auto st = truncation_stats(Base::Negabinary, eta, Regime::LeadingBitRetained);
    std::int64_t lo = 0, hi = 0;
    for (std::uint64_t low = 0; low < (std::uint64_t(1) << (eta + 1)); ++low) {
      std::int64_t e = -nb_decode(low);
      lo = std::min(lo, e);
      hi = std::max(hi, e);
    }
    EXPECT_GT(Rational(lo), st.lo) << eta;
    EXPECT_LT(Rational(hi), st.hi) << eta;
    // band is tight to within one unit
    EXPECT_LE(Rational(lo) - st.lo, 1);
    EXPECT_LE(st.hi - Rational(hi), 1);
  }
}

TEST(Density, IntegratesToOne) {
  for (bool biased : {true, false})
    for (int i = 1; i <= 4; ++i) {
      auto f = quantization_density(i, biased);
      EXPECT_EQ(f.moment(0), 1) << i;
      EXPECT_NEAR(f.integrate_numeric(-3, 3), 1.0, 1e-9) << i;
    }
  EXPECT_THROW(quantization_density(0, true), Error);
}

TEST(Density, MomentsMatchLinearCombination) {
  // X_i = sum_j Linv[i][j] Y_j with Y_j iid uniform of unit width
  auto m = backward_matrix();
  for (int i = 0; i < 4; ++i) {
    Rational var = 0, half = 0;
    for (int j = 0; j < 4; ++j) {
      var += m[i][j] * m[i][j] / 12;
      half += rabs(m[i][j]) / 2;
    }
    auto fb = quantization_density(i + 1, true);
    auto fu = quantization_density(i + 1, false);
    EXPECT_EQ(fb.mean(), -row_sum(i) / 6) << i;
    EXPECT_EQ(fu.mean(), 0);
    EXPECT_EQ(fb.variance(), var);
    EXPECT_EQ(fu.variance(), var);
    EXPECT_EQ(fu.hi(), half);
    EXPECT_EQ(fu.lo(), -half);
  }
  EXPECT_EQ(quantization_density(1, true).mean(), Rational(-5, 24));
  EXPECT_EQ(quantization_density(2, true).mean(), Rational(-5, 8));
  EXPECT_EQ(quantization_density(3, true).mean(), Rational(-1, 24));
  EXPECT_EQ(quantization_density(4, true).mean(), Rational(5, 24));
  EXPECT_EQ(quantization_density(1, true).variance(), Rational(23, 64));
  EXPECT_EQ(quantization_density(2, true).variance(), Rational(61, 192));
}

TEST(Density, NonNegativeAndSymmetric) {
  auto f1 = quantization_density(1, false), f2 = quantization_density(2, false);
  auto f3 = quantization_density(3, false), f4 = quantization_density(4, false);
  for (int t = -130; t <= 130; ++t) {
    Rational x(t, 64);
    for (int i = 1; i <= 4; ++i) {
      auto f = quantization_density(i, true);
      Rational v = f.eval(x);
      if (x > f.lo() && x < f.hi()) {
        EXPECT_GE(v, 0);
      }
      EXPECT_EQ(f.eval(x), quantization_density(i, false).eval(x - f.c));
    }
    EXPECT_EQ(f1.eval(x), f1.eval(-x));
    EXPECT_EQ(f2.eval(x), f2.eval(-x));
    EXPECT_EQ(f1.eval(x), f4.eval(x));
    EXPECT_EQ(f2.eval(x), f3.eval(x));
    EXPECT_NEAR(f1(to_double(x)), x > f1.lo() && x < f1.hi() ? to_double(f1.eval(x)) : 0.0, 1e-12);
  }
}

TEST(Density, BinsAgainstSampling) {
  auto m = backward_matrix();
  double md[4][4];
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) md[i][j] = to_double(m[i][j]);
  CounterRng rng(21);
  const int n = 400000;
  std::vector<Histogram> h(4, Histogram(-2.5, 2.5, 20));
  for (int t = 0; t < n; ++t) {
    double y[4];
    for (double& v : y) v = rng.uniform(-2.0 / 3, 1.0 / 3);
    for (int i = 0; i < 4; ++i) h[i].add(md[i][0] * y[0] + md[i][1] * y[1] + md[i][2] * y[2] + md[i][3] * y[3]);
  }
  for (int i = 0; i < 4; ++i) {
    auto f = quantization_density(i + 1, true);
    for (int b = 0; b < 20; ++b) {
      double p = to_double(f.probability(from_double(h[i].edge(b)), from_double(h[i].edge(b + 1))));
      EXPECT_LT(std::fabs(binomial_z(h[i].counts[b], n, p)), 5.0) << i << " " << b;
    }
  }
}
