#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include <zfpbias/bias.hpp>
#include <zfpbias/codec.hpp>
#include <zfpbias/harness.hpp>
#include <zfpbias/rng.hpp>
#include <zfpbias/stats.hpp>

using namespace zfpbias;

namespace {

std::vector<double> random_block(CounterRng& rng, int d, int k, int spread) {
  std::vector<double> x(block_size(d));
  for (auto& v : x) {
    double m = snap_to_bits(rng.uniform(1.0, 2.0), k);
    v = std::ldexp(rng.coin() ? -m : m, static_cast<int>(rng.range(-spread, 0)));
  }
  return x;
}

double max_abs(const std::vector<double>& x) {
  double m = 0;
  for (double v : x) m = std::max(m, std::fabs(v));
  return m;
}

}  // namespace

TEST(Config, Validation) {
  EXPECT_NO_THROW((CodecConfig{1, 24, 30, 16}.validate()));
  EXPECT_THROW((CodecConfig{1, 24, 24, 16}.validate()), Error);
  EXPECT_THROW((CodecConfig{1, 24, 30, 33}.validate()), Error);
  EXPECT_THROW((CodecConfig{4, 24, 30, 16}.validate()), Error);
  EXPECT_THROW(parse_rounding("sometimes"), Error);
  EXPECT_EQ(parse_rounding("last"), Rounding::Last);
}

TEST(Partition, TenByTen) {
  Dims dims{10, 10, 1};
  std::vector<double> a(100);
  for (int i = 0; i < 100; ++i) a[i] = i;
  auto blocks = partition(a, dims, 2);
  ASSERT_EQ(blocks.size(), 9u);
  // block (2,2) covers x,y in 8..11; x,y = 10,11 replicate index 9
  const auto& b = blocks[8];
  EXPECT_EQ(b[0], a[8 + 10 * 8]);
  EXPECT_EQ(b[3], a[9 + 10 * 8]);
  EXPECT_EQ(b[15], a[9 + 10 * 9]);
  EXPECT_EQ(reassemble(blocks, dims, 2), a);
}

TEST(Partition, SingleBlockAndRoundTrip) {
  Dims d4{4, 4, 1};
  std::vector<double> a(16, 1.5);
  EXPECT_EQ(partition(a, d4, 2).size(), 1u);
  CounterRng rng(1);
  Dims dims{7, 13, 1};
  std::vector<double> r(91);
  for (auto& v : r) v = rng.uniform(-1, 1);
  EXPECT_EQ(reassemble(partition(r, dims, 2), dims, 2), r);
  Dims d3{5, 6, 7};
  std::vector<double> r3(210);
  for (auto& v : r3) v = rng.uniform(-1, 1);
  EXPECT_EQ(reassemble(partition(r3, d3, 3), d3, 3), r3);
}

TEST(Partition, Errors) {
  std::vector<double> a(4, 1.0);
  a[2] = NAN;
  try {
    partition(a, Dims{4, 1, 1}, 1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::NonFiniteInput);
  }
  EXPECT_THROW(partition(a, Dims{5, 1, 1}, 1), Error);
  EXPECT_THROW(partition(a, Dims{2, 2, 1}, 1), Error);
}

TEST(Step2, Examples) {
  auto cfg = float_config(1, 16);
  std::vector<double> ones(4, 1.0);
  auto r = step2_forward(ones, cfg);
  EXPECT_EQ(r.ell, -29);
  EXPECT_EQ(r.e_max, 0);
  for (auto v : r.ints) EXPECT_EQ(v, 1 << 29);
  // exponent range beyond q-1 truncates the small element
  std::vector<double> wide{1.0, std::ldexp(1.0, -40), 0.5, -0.25};
  auto w = step2_forward(wide, cfg);
  EXPECT_EQ(w.ints[1], 0);
  EXPECT_EQ(w.ints[3], -(1 << 27));
}

TEST(Step2, ForwardBound) {
  CounterRng rng(2);
  for (int d = 1; d <= 3; ++d) {
    auto cfg = float_config(d, 16);
    double eps_q = std::ldexp(1.0, 1 - cfg.q);
    for (int t = 0; t < 100000 / d; ++t) {
      auto x = random_block(rng, d, 24, 40);
      auto s2 = step2_forward(x, cfg);
      double bound = eps_q * max_abs(x);
      for (std::size_t i = 0; i < x.size(); ++i)
        ASSERT_LE(std::fabs(std::ldexp(static_cast<double>(s2.ints[i]), s2.ell) - x[i]), bound);
    }
  }
}

TEST(Step2, BackwardFlk) {
  auto cfg = float_config(1, 16);
  std::vector<std::int64_t> small{5, -7, 1 << 20, 0};
  auto out = step2_backward(small, 0, cfg);
  for (int i = 0; i < 4; ++i) EXPECT_EQ(out[i], std::ldexp(static_cast<double>(small[i]), -29));
  std::int64_t big = (1 << 29) + 63;
  EXPECT_EQ(fl_k(big, 24), 1 << 29);
  EXPECT_EQ(fl_k(-big, 24), -(1 << 29));
  EXPECT_EQ(fl_k(Rational(big), 24), Rational(1 << 29));
  EXPECT_EQ(fl_k(Rational(-63, 64), 3), Rational(-56, 64));
}

TEST(Step2, BackwardSymmetricSignMeanZero) {
  CounterRng rng(3);
  Welford w;
  for (int t = 0; t < 1000000; ++t) {
    std::int64_t z = rng.range(1 << 28, (1 << 30) - 1);
    if (rng.coin()) z = -z;
    w.add(static_cast<double>(fl_k(z, 24) - z));
  }
  EXPECT_NEAR(w.mean, 0.0, 4 * w.stderr_mean());
  // one-sided inputs are biased toward zero
  Welford pos;
  for (int t = 0; t < 100000; ++t) {
    std::int64_t z = rng.range(1 << 28, (1 << 30) - 1);
    pos.add(static_cast<double>(fl_k(z, 24) - z));
  }
  EXPECT_LT(pos.mean, -10 * pos.stderr_mean());
}

TEST(Step8, LosslessAndEmpty) {
  CounterRng rng(4);
  for (int d = 1; d <= 3; ++d) {
    CodecConfig full{d, 24, 30, 32}, none{d, 24, 30, 0};
    for (int t = 0; t < 200; ++t) {
      std::vector<std::int64_t> c(block_size(d)), c0;
      for (auto& v : c) v = rng.range(-(1 << 29), 1 << 29);
      c0 = c;
      quantize_coefficients(c, full);
      EXPECT_EQ(c, c0);
      quantize_coefficients(c0, none);
      for (auto v : c0) EXPECT_EQ(v, 0);
    }
  }
}

TEST(Step8, PlanesRoundTrip) {
  CounterRng rng(5);
  CodecConfig cfg{2, 24, 30, 11};
  auto mask = plane_mask(cfg);
  for (int t = 0; t < 500; ++t) {
    std::vector<std::uint64_t> nb(16);
    for (auto& v : nb) v = nb_encode(rng.range(-(1 << 29), 1 << 29));
    auto cb = step8_truncate(nb, 3, cfg);
    ASSERT_EQ(cb.planes.size(), 11u);
    auto back = step8_expand(cb, cfg);
    for (int j = 0; j < 16; ++j) EXPECT_EQ(back[j], nb[j] & mask);
  }
  // a digit above q+1 is an overflow
  std::vector<std::uint64_t> bad{std::uint64_t(1) << 40, 0, 0, 0};
  EXPECT_THROW(check_digits(bad[0], CodecConfig{1, 24, 30, 11}), Error);
}

// Integers with uniform digits from index 0: exact mean ((-2)^(eta+1) - 1)/6,
// computed by enumerating every digit pattern below the cut.
TEST(Step8, IntegerTruncationMeanByEnumeration) {
  for (int eta = 0; eta <= 10; ++eta) {
    Rational sum = 0;
    std::uint64_t count = std::uint64_t(1) << (eta + 1);
    for (std::uint64_t low = 0; low < count; ++low) sum -= Rational(nb_decode(low));
    EXPECT_EQ(sum / Rational(static_cast<long long>(count)), (pow_m2(eta + 1) - 1) / 6) << eta;
  }
}

TEST(Step8, TruncationMeanMonteCarlo) {
  // coefficients spanning the full digit range of q = 30; fraction digits ignored
  CounterRng rng(6);
  for (int beta : {14, 17, 20, 23}) {
    CodecConfig cfg{1, 24, 30, beta};
    Welford w;
    std::uint64_t mask = plane_mask(cfg);
    for (int t = 0; t < 400000; ++t) {
      std::uint64_t nb = (rng() & ((std::uint64_t(1) << 31) - 1)) | (std::uint64_t(1) << 31);
      w.add(static_cast<double>(nb_decode(nb & mask) - nb_decode(nb)));
    }
    double expect = to_double((pow_m2(cfg.eta() + 1) - 1) / 6);
    EXPECT_NEAR(w.mean, expect, 0.01 * std::fabs(expect)) << beta;
  }
}

TEST(Rounding, Offsets) {
  // nearest integer to -(-2)^(eta+1)/6
  EXPECT_EQ(rounding_offset(3), -3);
  EXPECT_EQ(rounding_offset(2), 1);
  EXPECT_EQ(rounding_offset(0), 0);
  EXPECT_EQ(rounding_offset(1), -1);
  for (int eta = 0; eta < 40; ++eta) {
    Rational target = -pow_m2(eta + 1) / 6;
    EXPECT_LE(rabs(Rational(rounding_offset(eta)) - target), Rational(1, 2)) << eta;
  }
}

TEST(Rounding, CenteredBandAndMean) {
  CounterRng rng(7);
  for (int eta : {3, 4, 9}) {
    double u = std::ldexp(1.0, eta + 1);
    std::int64_t o = rounding_offset(eta);
    Welford w;
    std::uint64_t mask = ~((std::uint64_t(1) << (eta + 1)) - 1);
    for (int t = 0; t < 200000; ++t) {
      std::int64_t a = rng.range(-(1 << 24), 1 << 24);
      double e = static_cast<double>(nb_decode(nb_encode(a + o) & mask) - a);
      ASSERT_GT(e, -u / 2 - 1);
      ASSERT_LT(e, u / 2 + 1);
      w.add(e);
    }
    EXPECT_LT(std::fabs(w.mean), 1.0 + 4 * w.stderr_mean()) << eta;
  }
}

TEST(Rounding, NeverAndLosslessAreIdentity) {
  CounterRng rng(8);
  for (int t = 0; t < 200; ++t) {
    std::vector<std::int64_t> c(4), c0;
    for (auto& v : c) v = rng.range(-1000, 1000);
    c0 = c;
    apply_rounding(c, CodecConfig{1, 24, 30, 10, Rounding::Never}, RoundingStage::BeforeTruncate);
    apply_rounding(c, CodecConfig{1, 24, 30, 10, Rounding::Never}, RoundingStage::AfterDecode);
    apply_rounding(c, CodecConfig{1, 24, 30, 32, Rounding::First}, RoundingStage::BeforeTruncate);
    apply_rounding(c, CodecConfig{1, 24, 30, 32, Rounding::Last}, RoundingStage::AfterDecode);
    EXPECT_EQ(c, c0);
  }
  auto x = std::vector<double>{1.0, -0.75, 0.125, 0.5};
  EXPECT_EQ(compress(x, CodecConfig{1, 24, 30, 32, Rounding::First}), compress(x, CodecConfig{1, 24, 30, 32}));
}

TEST(Rounding, LastSkipsZeroCoefficients) {
  CodecConfig cfg{1, 24, 30, 5, Rounding::Last};
  std::vector<std::int64_t> c{0, 0, 0, 0};
  apply_rounding(c, cfg, RoundingStage::AfterDecode);
  EXPECT_EQ(c, (std::vector<std::int64_t>{0, 0, 0, 0}));
}

TEST(Codec, ConstantBlock) {
  // constants whose scaled value has at most beta leading negabinary digits
  for (double c : {1.0, -1.0, 0.75, 3.0, -0.375})
    for (int d = 1; d <= 3; ++d)
      for (int beta = 2 * d + 2; beta <= 32; ++beta) {
        auto cfg = float_config(d, beta);
        std::vector<double> x(block_size(d), c);
        auto out = decompress(compress(x, cfg), cfg);
        for (double v : out) EXPECT_LE(std::fabs(v - c), std::ldexp(1.0, 1 - cfg.k) * std::fabs(c)) << c << " " << d << " " << beta;
      }
}

TEST(Codec, ConstantBlockNeedsEnoughPlanes) {
  // 3.25 scales to 13 * 4^13 = digits {26, 28, 29, 30}; four planes keep only 28..31
  auto cfg = float_config(1, 4);
  std::vector<double> x(4, 3.25);
  auto out = decompress(compress(x, cfg), cfg);
  EXPECT_EQ(out[0], 3.25 - std::ldexp(1.0, 26 - 28));
  cfg.beta = 6;
  EXPECT_EQ(decompress(compress(x, cfg), cfg), x);
}

TEST(Codec, ZeroBlock) {
  for (int d = 1; d <= 3; ++d) {
    auto cfg = float_config(d, 12, Rounding::Last);
    std::vector<double> x(block_size(d), 0.0);
    auto cb = compress(x, cfg);
    EXPECT_TRUE(cb.zero);
    for (double v : decompress(cb, cfg)) EXPECT_EQ(v, 0.0);
  }
}

TEST(Codec, NearLosslessAtFullPrecision) {
  CounterRng rng(9);
  for (int d = 1; d <= 3; ++d) {
    auto cfg = float_config(d, 32);
    for (int t = 0; t < 300; ++t) {
      auto x = random_block(rng, d, 24, 3);
      auto out = decompress(compress(x, cfg), cfg);
      double tol = std::ldexp(1.0, block_emax(x) - 22);
      for (int i = 0; i < cfg.n(); ++i) EXPECT_LE(std::fabs(out[i] - x[i]), tol);
    }
  }
}

TEST(Codec, Deterministic) {
  CounterRng rng(10);
  auto cfg = float_config(3, 14, Rounding::First);
  for (int t = 0; t < 50; ++t) {
    auto x = random_block(rng, 3, 24, 10);
    EXPECT_EQ(compress(x, cfg), compress(x, cfg));
  }
}

// squared error summed over many blocks shrinks with beta once the top planes
// are in (with d+1 or fewer planes the leading negabinary digit can overshoot)
// and until the decode floor takes over
TEST(Codec, FidelityImprovesWithBeta) {
  CounterRng rng(11);
  for (int d = 1; d <= 3; ++d) {
    std::vector<std::vector<double>> blocks;
    for (int t = 0; t < 500; ++t) blocks.push_back(random_block(rng, d, 24, 6));
    double prev = INFINITY;
    for (int beta = d + 1; beta <= 30 - 2 * d - 2; ++beta) {
      auto cfg = float_config(d, beta);
      double energy = 0;
      for (const auto& x : blocks) {
        auto out = decompress(compress(x, cfg), cfg);
        for (int i = 0; i < cfg.n(); ++i) energy += (out[i] - x[i]) * (out[i] - x[i]);
      }
      if (beta > d + 1) {
        EXPECT_LE(energy, prev) << d << " " << beta;
      }
      prev = energy;
    }
  }
}

TEST(Codec, PointwiseErrorNotMonotone) {
  // 13 = 16 - 8 + 4 + 1: cutting digits <= 2 leaves 8 (error 5), cutting <= 3 leaves 16 (error 3)
  auto cut = [](std::int64_t a, int eta) {
    return std::llabs(nb_decode(nb_encode(a) & ~((std::uint64_t(1) << (eta + 1)) - 1)) - a);
  };
  EXPECT_EQ(cut(13, 2), 5);
  EXPECT_EQ(cut(13, 3), 3);
}

TEST(Codec, ArrayMatchesBlocksAndThreads) {
  CounterRng rng(12);
  Dims dims{9, 6, 5};
  std::vector<double> a(element_count(dims));
  for (auto& v : a) v = static_cast<float>(rng.uniform(-4, 4));
  auto cfg = float_config(3, 18, Rounding::Last);
  auto c1 = compress_array(a, dims, cfg, 1);
  auto c3 = compress_array(a, dims, cfg, 3);
  EXPECT_EQ(c1, c3);
  auto blocks = partition(a, dims, 3);
  for (std::size_t b = 0; b < blocks.size(); ++b) EXPECT_EQ(c1[b], compress(blocks[b], cfg));
  EXPECT_EQ(decompress_array(c1, dims, cfg, 1), decompress_array(c1, dims, cfg, 4));
}

TEST(Trace, DecompositionIdentityExact) {
  CounterRng rng(13);
  for (int t = 0; t < 1000; ++t) {
    int d = 1 + t % 3;
    Rounding r = static_cast<Rounding>(t % 3);
    auto cfg = float_config(d, static_cast<int>(rng.range(0, 32)), r);
    auto x = random_block(rng, d, 24, 12);
    auto tr = trace(x, cfg);
    auto dc = decompose(tr);
    for (int i = 0; i < cfg.n(); ++i) {
      Rational sum = dc.terms[0][i] + dc.terms[1][i] + dc.terms[2][i] + dc.terms[3][i];
      ASSERT_EQ(sum, dc.total[i]);
      ASSERT_EQ(dc.total[i], tr.out[i] - tr.x[i]);
    }
  }
}

TEST(Trace, LiftingMatchesExactInAnalysisRange) {
  CounterRng rng(14);
  for (int t = 0; t < 600; ++t) {
    int d = 1 + t % 3;
    Rounding r = t % 2 ? Rounding::First : Rounding::Never;
    CodecConfig cfg = float_config(d, static_cast<int>(rng.range(0, 30 - 2 * d + 2)), r);
    auto x = random_block(rng, d, 24, 8);
    auto tr = trace(x, cfg);
    ASSERT_TRUE(tr.lifting_matches_exact);
    for (int i = 0; i < cfg.n(); ++i) ASSERT_EQ(from_double(tr.codec_out[i]), tr.out[i]);
  }
}

// mean of the lossy-transform term over many blocks is -2^ell L^-1 E_d
TEST(Trace, TransformTermSign) {
  CounterRng rng(15);
  for (int d = 1; d <= 2; ++d) {
    auto cfg = float_config(d, 16);
    int n = cfg.n();
    std::vector<Welford> w(n);
    for (int t = 0; t < 20000; ++t) {
      // full-width integers after scaling so the lifting sees random low bits
      std::vector<double> x(n);
      for (auto& v : x) v = std::ldexp(static_cast<double>(rng.range(-(1 << 29) + 1, (1 << 29) - 1)), -29);
      x[0] = std::ldexp(static_cast<double>((1 << 29) + rng.range(0, 1 << 28)), -29);  // pin e_max = 0
      auto tr = trace(x, cfg);
      auto dc = decompose(tr);
      for (int i = 0; i < n; ++i) w[i].add(to_double(dc.terms[2][i] * pow2(-tr.ell)));
    }
    auto pred = predict_total_bias(cfg, 0);
    for (int i = 0; i < n; ++i) {
      double expect = to_double(pred.transform[i] * pow2(-pred.ell));
      EXPECT_NEAR(w[i].mean, expect, 5 * w[i].stderr_mean() + 1e-3) << d << " " << i;
    }
  }
}

TEST(Tolerance, BetaForTolerance) {
  CodecConfig cfg{1, 24, 30, 0};
  EXPECT_EQ(beta_for_tolerance(std::ldexp(1.0, -8), 8, cfg), 18);
  EXPECT_EQ(beta_for_tolerance(std::ldexp(1.0, -9), 8, cfg), 19);
  EXPECT_EQ(beta_for_tolerance(std::ldexp(1.0, 10), 8, cfg), 0);
  EXPECT_EQ(beta_for_tolerance(1e-300, 8, cfg), 32);
  EXPECT_THROW(beta_for_tolerance(0.0, 8, cfg), Error);
}

TEST(Reference, ExactRoundTrip) {
  CounterRng rng(16);
  for (int d = 1; d <= 3; ++d) {
    auto cfg = float_config(d, 20);
    for (int t = 0; t < 100; ++t) {
      auto x = random_block(rng, d, 24, 4);
      auto c = compress_reference(x, cfg);
      auto back = decompress_reference(c, block_emax(x), cfg);
      for (int i = 0; i < cfg.n(); ++i) EXPECT_EQ(back[i], from_double(x[i]));
    }
  }
}

TEST(Step3, GapBound) {
  CounterRng rng(17);
  for (int d = 1; d <= 3; ++d) {
    auto cfg = float_config(d, 16);
    int n = cfg.n();
    // (15/4)^d (7/4)(2^d - 1) eps_q ||x||, scaled by 2^-ell so eps_q ||x|| -> 2^(e_max-ell-q+1) <= 1 unit
    Rational kl = Rational(7, 4) * ((1 << d) - 1);
    Rational g = 1;
    for (int a = 0; a < d; ++a) g *= Rational(15, 4);
    for (int t = 0; t < 2000; ++t) {
      auto x = random_block(rng, d, 24, 8);
      auto s2 = step2_forward(x, cfg);
      std::vector<Rational> exact(s2.ints.begin(), s2.ints.end());
      std::vector<std::int64_t> lossy = s2.ints;
      forward_lossy_d(lossy, d);
      forward_exact_d(exact, d);
      std::vector<Rational> diff(n);
      for (int i = 0; i < n; ++i) diff[i] = Rational(lossy[i]) - exact[i];
      backward_exact_d(diff, d);
      Rational bound = g * kl * pow2(1 - cfg.q) * from_double(max_abs(x)) * pow2(-s2.ell);
      for (int i = 0; i < n; ++i) ASSERT_LE(rabs(diff[i]), bound);
    }
  }
}
