#pragma once

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <map>
#include <span>
#include <vector>

#include "autocorr.hpp"
#include "bias.hpp"
#include "bitplane.hpp"
#include "codec.hpp"
#include "parallel.hpp"
#include "rng.hpp"
#include "stats.hpp"
#include "transform.hpp"

namespace zfpbias {

// ---------------------------------------------------------------- synthetic blocks

struct SyntheticBlockSpec {
  int d = 1;
  int e_min = -20;
  int rho = 0;
  std::uint64_t trials = 100000;
  std::uint64_t seed = 1;

  int e_max() const { return e_min + rho; }
};

// truncate a double to k significant bits
inline double snap_to_bits(double x, int k) {
  if (x == 0.0) return 0.0;
  int e = 0;
  double m = std::frexp(x, &e);
  return std::ldexp(std::trunc(std::ldexp(m, k)), e - k);
}

// The exponent range [e_min, e_min + rho + 1) is split into 4^d equal
// subintervals; one magnitude is drawn uniformly from each, snapped to k bits,
// given a random sign, and the block is shuffled.
inline void gen_block(const SyntheticBlockSpec& s, int k, CounterRng& rng, std::span<double> out) {
  int n = block_size(s.d);
  double w = static_cast<double>(s.rho + 1) / n;
  for (int h = 0; h < n; ++h) {
    double a = s.e_min + h * w;
    double lo = std::exp2(a), hi = std::exp2(a + w);
    double m = snap_to_bits(rng.uniform(lo, hi), k);
    out[h] = rng.coin() ? -m : m;
  }
  rng.shuffle(out.subspan(0, n));
}

// probability that a generated block has e_max = e_min + rho
inline double top_binade_probability(int d, int rho) {
  double w = static_cast<double>(rho + 1) / block_size(d);
  if (w <= 1.0) return 1.0;
  return 1.0 / (2.0 - std::exp2(1.0 - w));
}

// draw blocks until one has the nominal e_max; returns the number of rejected draws
inline std::uint64_t gen_conditioned_block(const SyntheticBlockSpec& s, int k, CounterRng& rng, std::span<double> out) {
  std::uint64_t rejected = 0;
  for (;;) {
    gen_block(s, k, rng, out);
    if (exponents(std::span<const double>(out.data(), block_size(s.d))).e_max == s.e_max()) return rejected;
    ++rejected;
  }
}

// step 2 without allocation; returns e_max
inline int step2_into(std::span<const double> x, int q, std::span<std::int64_t> out) {
  int e_max = exponents(x).e_max;
  int ell = e_max - q + 1;
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = static_cast<std::int64_t>(std::trunc(std::ldexp(x[i], -ell)));
  return e_max;
}

// ---------------------------------------------------------------- bias experiment

struct BiasExperimentConfig {
  SyntheticBlockSpec spec;
  int k = 24;
  int q = 30;
  Rounding rounding = Rounding::Never;
  std::vector<int> betas;
  int threads = 1;
  std::uint64_t chunk = 1 << 14;
};

struct BetaResult {
  int beta = 0;
  bool in_analysis_range = true;
  std::vector<double> mean, stderr_mean, predicted, ratio, rel_error;
  std::vector<bool> masked;  // |mean| below 2^(e_max - k)
};

struct BiasReport {
  BiasExperimentConfig cfg;
  int e_max = 0;
  double floor = 0;
  std::uint64_t accepted = 0;
  std::uint64_t rejected = 0;
  std::vector<BetaResult> results;
};

inline CodecConfig codec_for(const BiasExperimentConfig& c, int beta) { return {c.spec.d, c.k, c.q, beta, c.rounding}; }

inline BiasReport run_bias_experiment(const BiasExperimentConfig& c) {
  if (c.betas.empty()) fail(Errc::Config, "no beta values given");
  if (c.spec.trials == 0) fail(Errc::Config, "trials must be positive");
  std::vector<BlockCodec> codecs;
  for (int b : c.betas) codecs.emplace_back(codec_for(c, b));
  const int n = block_size(c.spec.d);
  const std::size_t nb = c.betas.size();

  struct Acc {
    std::vector<TrialStats> per_beta;
    std::uint64_t rejected = 0;
  };
  Acc init;
  init.per_beta.assign(nb, TrialStats(n));

  auto work = [&](std::uint64_t chunk, std::uint64_t b, std::uint64_t e) {
    Acc a = init;
    CounterRng rng(c.spec.seed, chunk);
    double x[64], out[64], err[64];
    std::int64_t w[64];
    for (std::uint64_t t = b; t < e; ++t) {
      a.rejected += gen_conditioned_block(c.spec, c.k, rng, {x, std::size_t(n)});
      int e_max = step2_into({x, std::size_t(n)}, c.q, {w, std::size_t(n)});
      forward_lossy_d({w, std::size_t(n)}, c.spec.d);
      for (std::size_t k = 0; k < nb; ++k) {
        codecs[k].reconstruct({w, std::size_t(n)}, e_max, {out, std::size_t(n)});
        for (int i = 0; i < n; ++i) err[i] = out[i] - x[i];
        a.per_beta[k].add({err, std::size_t(n)});
      }
    }
    return a;
  };
  auto merge = [](Acc& into, const Acc& p) {
    for (std::size_t k = 0; k < into.per_beta.size(); ++k) into.per_beta[k].merge(p.per_beta[k]);
    into.rejected += p.rejected;
  };
  Acc total = chunked_reduce(c.spec.trials, c.chunk, c.threads, init, work, merge);

  BiasReport r;
  r.cfg = c;
  r.e_max = c.spec.e_max();
  r.floor = std::ldexp(1.0, r.e_max - c.k);
  r.accepted = c.spec.trials;
  r.rejected = total.rejected;
  for (std::size_t k = 0; k < nb; ++k) {
    BetaResult br;
    br.beta = c.betas[k];
    auto cfg = codec_for(c, br.beta);
    br.in_analysis_range = cfg.in_analysis_range();
    auto pred = predict_total_bias(cfg, r.e_max).total_double();
    for (int i = 0; i < n; ++i) {
      const Welford& wf = total.per_beta[k].elems[i];
      br.mean.push_back(wf.mean);
      br.stderr_mean.push_back(wf.stderr_mean());
      br.predicted.push_back(pred[i]);
      br.ratio.push_back(pred[i] != 0 ? wf.mean / pred[i] : NAN);
      br.rel_error.push_back(pred[i] != 0 ? std::fabs(wf.mean - pred[i]) / std::fabs(pred[i]) : NAN);
      br.masked.push_back(std::fabs(wf.mean) < r.floor);
    }
    r.results.push_back(std::move(br));
  }
  return r;
}

// ---------------------------------------------------------------- lossy transform error

struct TransformErrorResult {
  int d = 1;
  std::uint64_t trials = 0;
  std::vector<Welford> stats;  // per element, L_d a - L~_d a
  // d = 1 only: counts keyed by 16 * error
  std::array<std::map<std::int64_t, std::uint64_t>, 4> atoms;
};

inline TransformErrorResult transform_error_experiment(int d, std::uint64_t trials, std::uint64_t seed,
                                                       std::int64_t bound = std::int64_t(1) << 30, int threads = 1) {
  check_dimension(d);
  const int n = block_size(d);
  const Int128 scale = Int128(1) << (4 * d);
  TransformErrorResult init;
  init.d = d;
  init.stats.assign(n, Welford{});
  auto work = [&](std::uint64_t chunk, std::uint64_t b, std::uint64_t e) {
    TransformErrorResult r = init;
    CounterRng rng(seed, chunk);
    std::int64_t a[64];
    Int128 ex[64];
    for (std::uint64_t t = b; t < e; ++t) {
      for (int i = 0; i < n; ++i) {
        a[i] = rng.range(-bound, bound);
        ex[i] = a[i];
      }
      forward_scaled_d({ex, std::size_t(n)}, d);
      forward_lossy_d({a, std::size_t(n)}, d);
      for (int i = 0; i < n; ++i) {
        Int128 diff = ex[i] - scale * a[i];
        r.stats[i].add(static_cast<double>(diff) / static_cast<double>(scale));
        if (d == 1) ++r.atoms[i][static_cast<std::int64_t>(diff)];
      }
    }
    r.trials = e - b;
    return r;
  };
  auto merge = [](TransformErrorResult& into, const TransformErrorResult& p) {
    for (std::size_t i = 0; i < into.stats.size(); ++i) into.stats[i].merge(p.stats[i]);
    for (int c = 0; c < 4; ++c)
      for (auto& [k, v] : p.atoms[c]) into.atoms[c][k] += v;
    into.trials += p.trials;
  };
  return chunked_reduce(trials, 1 << 15, threads, init, work, merge);
}

// ---------------------------------------------------------------- negabinary truncation

struct TruncationExperimentResult {
  int eta = 0;
  Welford error;
  double min_error = INFINITY, max_error = -INFINITY;
  std::uint64_t support_violations = 0;
  double predicted = 0;  // (-2)^(eta+1)/6
  double lo = 0, hi = 0; // open support interval
};

// Uniform negabinary digits on indices [low_index, eta + above] with the top digit
// set (leading bit retained), truncated at eta through the bitplane operators.
inline TruncationExperimentResult negabinary_truncation_experiment(int eta, std::uint64_t trials, std::uint64_t seed,
                                                                   int low_index, int above = 12) {
  int top = eta + above;
  if (low_index > eta || top > BitVector::kMaxIndex || low_index < BitVector::kMinIndex || above < 1)
    fail(Errc::Config, "digit range outside the index window");
  auto st = truncation_stats(Base::Negabinary, eta, Regime::LeadingBitRetained);
  TruncationExperimentResult r;
  r.eta = eta;
  r.predicted = to_double(*st.mean);
  r.lo = to_double(st.lo);
  r.hi = to_double(st.hi);
  CounterRng rng(seed, static_cast<std::uint64_t>(eta));
  int ndig = top - low_index;  // random digits below the forced top digit
  for (std::uint64_t t = 0; t < trials; ++t) {
    BitVector::Word w = BitVector::Word(1) << (top - BitVector::kMinIndex);
    BitVector::Word rnd = (BitVector::Word(rng()) << 64) | rng();
    if (ndig < 128) rnd &= (BitVector::Word(1) << ndig) - 1;
    w |= rnd << (low_index - BitVector::kMinIndex);
    BitVector v = BitVector::from_word(Base::Negabinary, false, w);
    double e = to_double(truncate(v, eta)) - to_double(v);
    r.error.add(e);
    r.min_error = std::min(r.min_error, e);
    r.max_error = std::max(r.max_error, e);
    if (!(e > r.lo && e < r.hi)) ++r.support_violations;
  }
  return r;
}

// ---------------------------------------------------------------- quantization error draws

struct DensityFit {
  std::vector<Welford> moments;   // per position
  std::vector<Histogram> hists;   // per position
  std::vector<double> sup_gap;    // max |empirical - exact| bin density
  std::vector<double> max_abs_z;  // largest binomial z-score over bins
};

inline void fit_densities(DensityFit& f, bool biased) {
  f.sup_gap.assign(f.hists.size(), 0.0);
  f.max_abs_z.assign(f.hists.size(), 0.0);
  for (std::size_t i = 0; i < f.hists.size(); ++i) {
    auto dens = quantization_density(static_cast<int>(i) + 1, biased);
    const Histogram& h = f.hists[i];
    std::uint64_t n = h.total();
    for (int b = 0; b < h.bins(); ++b) {
      double p = to_double(dens.probability(from_double(h.edge(b)), from_double(h.edge(b + 1))));
      double emp = static_cast<double>(h.counts[b]) / static_cast<double>(n);
      f.sup_gap[i] = std::max(f.sup_gap[i], std::fabs(emp - p) / h.width());
      if (p > 0) f.max_abs_z[i] = std::max(f.max_abs_z[i], std::fabs(binomial_z(h.counts[b], n, p)));
    }
  }
}

// X = L^-1 Y for i.i.d. Y ~ U(-2/3, 1/3) (biased) or U(-1/2, 1/2)
inline DensityFit quantization_error_draws(bool biased, std::uint64_t n, std::uint64_t seed, int bins = 40, int threads = 1) {
  DensityFit init;
  init.moments.assign(4, Welford{});
  init.hists.assign(4, Histogram(-2.5, 2.5, bins));
  double lo = biased ? -2.0 / 3.0 : -0.5;
  auto work = [&](std::uint64_t chunk, std::uint64_t b, std::uint64_t e) {
    DensityFit f = init;
    CounterRng rng(seed, chunk);
    for (std::uint64_t t = b; t < e; ++t) {
      double y[4], x[4];
      for (double& v : y) v = lo + rng.uniform01();
      for (int i = 0; i < 4; ++i) {
        x[i] = 0;
        for (int j = 0; j < 4; ++j) x[i] += kBackward[i][j] * y[j];
        x[i] /= 4;
        f.moments[i].add(x[i]);
        f.hists[i].add(x[i]);
      }
    }
    return f;
  };
  auto merge = [](DensityFit& into, const DensityFit& p) {
    for (int i = 0; i < 4; ++i) {
      into.moments[i].merge(p.moments[i]);
      into.hists[i].merge(p.hists[i]);
    }
  };
  DensityFit out = chunked_reduce(n, 1 << 15, threads, init, work, merge);
  fit_densities(out, biased);
  return out;
}

// ---------------------------------------------------------------- codec error distribution (1-d)

struct DistributionConfig {
  int k = 24;
  int q = 30;
  double tolerance = 1.0 / 256.0;
  int e_max = 8;  // blocks whose maximum lies in [2^e_max, 2^(e_max+1))
  int rho = 4;
  Rounding rounding = Rounding::Never;
  std::uint64_t trials = 100000;
  std::uint64_t seed = 1;
  int bins = 40;
  int threads = 1;
};

struct DistributionReport {
  DistributionConfig cfg;
  int beta = 0;
  int eta = 0;
  double delta = 0;     // quantization step in value units
  int parity_sign = 1;  // errors multiplied by this so the biased case has E[Y] = -1/6
  DensityFit fit;
};

inline DistributionReport run_distribution_experiment(const DistributionConfig& c) {
  CodecConfig probe{1, c.k, c.q, 0, c.rounding};
  DistributionReport r;
  r.cfg = c;
  r.beta = beta_for_tolerance(c.tolerance, c.e_max, probe);
  CodecConfig cfg{1, c.k, c.q, r.beta, c.rounding};
  BlockCodec codec(cfg);
  r.eta = cfg.eta();
  int ell = c.e_max - c.q + 1;
  r.delta = std::ldexp(1.0, ell + r.eta + 1);
  r.parity_sign = (r.eta % 2 == 0) ? 1 : -1;
  SyntheticBlockSpec spec{1, c.e_max - c.rho, c.rho, c.trials, c.seed};

  DensityFit init;
  init.moments.assign(4, Welford{});
  init.hists.assign(4, Histogram(-2.5, 2.5, c.bins));
  auto work = [&](std::uint64_t chunk, std::uint64_t b, std::uint64_t e) {
    DensityFit f = init;
    CounterRng rng(c.seed, chunk);
    double x[4], out[4];
    std::int64_t w[4];
    for (std::uint64_t t = b; t < e; ++t) {
      gen_conditioned_block(spec, c.k, rng, x);
      int e_max = step2_into(std::span<const double>(x, 4), c.q, w);
      forward_lossy_d(w, 1);
      codec.reconstruct(w, e_max, out);
      for (int i = 0; i < 4; ++i) {
        double v = r.parity_sign * (out[i] - x[i]) / r.delta;
        f.moments[i].add(v);
        f.hists[i].add(v);
      }
    }
    return f;
  };
  auto merge = [](DensityFit& into, const DensityFit& p) {
    for (int i = 0; i < 4; ++i) {
      into.moments[i].merge(p.moments[i]);
      into.hists[i].merge(p.hists[i]);
    }
  };
  r.fit = chunked_reduce(c.trials, 1 << 14, c.threads, init, work, merge);
  fit_densities(r.fit, c.rounding == Rounding::Never);
  return r;
}

// ---------------------------------------------------------------- error fields

// Grid of synthetic blocks (conditioned on the nominal e_max); block b uses
// stream b of the seed. Returns decompressed - original, x fastest.
inline std::vector<double> synthetic_error_field(const SyntheticBlockSpec& s, const CodecConfig& cfg, const Dims& grid,
                                                 Dims& field_dims, int threads = 1) {
  if (cfg.d != s.d) fail(Errc::Config, "codec and generator dimensions differ");
  check_dims(grid, s.d);
  for (int a = 0; a < 3; ++a) field_dims[a] = a < s.d ? grid[a] * 4 : 1;
  BlockCodec codec(cfg);
  const int n = block_size(s.d);
  std::uint64_t nblocks = element_count(grid);
  std::vector<std::vector<double>> errs(nblocks);
  parallel_for(nblocks, threads, [&](std::uint64_t b) {
    CounterRng rng(s.seed, b);
    std::vector<double> x(n);
    gen_conditioned_block(s, cfg.k, rng, x);
    auto out = codec.decompress(codec.compress(x));
    errs[b].resize(n);
    for (int i = 0; i < n; ++i) errs[b][i] = out[i] - x[i];
  });
  return reassemble(errs, field_dims, s.d);
}

// ---------------------------------------------------------------- bit-plane statistics

struct BitStats {
  int n = 4;
  // ones[w][j][b]: coefficient j (sequency order) with negabinary width w has digit b set
  std::vector<std::vector<std::vector<std::uint64_t>>> ones;
  std::vector<std::vector<std::uint64_t>> count;  // [w][j]
  std::uint64_t blocks = 0;
  std::uint64_t zero_blocks = 0;

  explicit BitStats(int n_ = 4) : n(n_), ones(65, std::vector<std::vector<std::uint64_t>>(n_, std::vector<std::uint64_t>(64, 0))),
                                  count(65, std::vector<std::uint64_t>(n_, 0)) {}

  double frequency(int w, int j, int b) const {
    return count[w][j] ? static_cast<double>(ones[w][j][b]) / static_cast<double>(count[w][j]) : NAN;
  }

  void merge(const BitStats& o) {
    for (int w = 0; w <= 64; ++w)
      for (int j = 0; j < n; ++j) {
        count[w][j] += o.count[w][j];
        for (int b = 0; b < 64; ++b) ones[w][j][b] += o.ones[w][j][b];
      }
    blocks += o.blocks;
    zero_blocks += o.zero_blocks;
  }
};

// accumulate step-5 digits of one block given its step-2 integers
inline void accumulate_bits(std::span<const std::int64_t> ints, const CodecConfig& cfg, const std::vector<int>& perm, BitStats& st) {
  bool zero = std::all_of(ints.begin(), ints.end(), [](std::int64_t v) { return v == 0; });
  if (zero) {
    ++st.zero_blocks;
    return;
  }
  std::int64_t c[64];
  std::copy(ints.begin(), ints.end(), c);
  forward_lossy_d({c, ints.size()}, cfg.d);
  for (std::size_t j = 0; j < ints.size(); ++j) {
    std::uint64_t nb = nb_encode(c[perm[j]]);
    int w = std::bit_width(nb);
    ++st.count[w][j];
    for (int b = 0; b < w; ++b) st.ones[w][j][b] += (nb >> b) & 1;
  }
  ++st.blocks;
}

inline BitStats bitplane_randomness(const std::vector<std::vector<double>>& blocks, const CodecConfig& cfg) {
  cfg.validate();
  BitStats st(cfg.n());
  auto perm = sequency_permutation(cfg.d);
  std::vector<std::int64_t> w(cfg.n());
  for (const auto& b : blocks) {
    if (all_zero(b)) {
      ++st.zero_blocks;
      continue;
    }
    step2_into(b, cfg.q, w);
    accumulate_bits(w, cfg, perm, st);
  }
  return st;
}

}  // namespace zfpbias
