#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "error.hpp"

namespace zfpbias {

// Running mean / variance with Chan's pairwise merge.
struct Welford {
  std::uint64_t n = 0;
  double mean = 0.0;
  double m2 = 0.0;

  void add(double x) {
    ++n;
    double d = x - mean;
    mean += d / static_cast<double>(n);
    m2 += d * (x - mean);
  }

  void merge(const Welford& o) {
    if (o.n == 0) return;
    if (n == 0) {
      *this = o;
      return;
    }
    double na = static_cast<double>(n), nb = static_cast<double>(o.n), nt = na + nb;
    double d = o.mean - mean;
    mean += d * nb / nt;
    m2 += o.m2 + d * d * na * nb / nt;
    n += o.n;
  }

  double variance() const { return n > 1 ? m2 / static_cast<double>(n - 1) : 0.0; }
  double population_variance() const { return n > 0 ? m2 / static_cast<double>(n) : 0.0; }
  double stddev() const { return std::sqrt(variance()); }
  double stderr_mean() const { return n > 0 ? std::sqrt(variance() / static_cast<double>(n)) : 0.0; }
};

struct Histogram {
  double lo = 0.0, hi = 1.0;
  std::vector<std::uint64_t> counts;
  std::uint64_t below = 0, above = 0;

  Histogram() = default;
  Histogram(double lo_, double hi_, int bins) : lo(lo_), hi(hi_), counts(bins, 0) {
    if (bins <= 0 || !(hi_ > lo_)) fail(Errc::Config, "invalid histogram range");
  }

  int bins() const { return static_cast<int>(counts.size()); }
  double width() const { return (hi - lo) / bins(); }
  double edge(int b) const { return lo + (hi - lo) * b / bins(); }

  void add(double x) {
    if (x < lo) { ++below; return; }
    if (x >= hi) { ++above; return; }
    auto b = static_cast<int>((x - lo) / (hi - lo) * bins());
    if (b >= bins()) b = bins() - 1;
    ++counts[b];
  }

  std::uint64_t total() const {
    std::uint64_t t = below + above;
    for (auto c : counts) t += c;
    return t;
  }

  void merge(const Histogram& o) {
    if (o.counts.empty()) return;
    if (counts.empty()) {
      *this = o;
      return;
    }
    if (o.counts.size() != counts.size() || o.lo != lo || o.hi != hi) fail(Errc::Config, "histogram layout mismatch");
    for (std::size_t i = 0; i < counts.size(); ++i) counts[i] += o.counts[i];
    below += o.below;
    above += o.above;
  }
};

// Per-element accumulator for a vector-valued trial.
struct TrialStats {
  std::vector<Welford> elems;
  std::vector<Histogram> hists;  // optional, one per element

  TrialStats() = default;
  explicit TrialStats(std::size_t n) : elems(n) {}

  void add(std::span<const double> x) {
    for (std::size_t i = 0; i < x.size(); ++i) {
      elems[i].add(x[i]);
      if (!hists.empty()) hists[i].add(x[i]);
    }
  }

  void merge(const TrialStats& o) {
    if (elems.empty()) {
      *this = o;
      return;
    }
    for (std::size_t i = 0; i < elems.size(); ++i) elems[i].merge(o.elems[i]);
    for (std::size_t i = 0; i < hists.size() && i < o.hists.size(); ++i) hists[i].merge(o.hists[i]);
  }

  std::uint64_t count() const { return elems.empty() ? 0 : elems[0].n; }
};

// Binomial z-score of an observed count against probability p.
inline double binomial_z(std::uint64_t count, std::uint64_t n, double p) {
  double mu = static_cast<double>(n) * p;
  double sd = std::sqrt(static_cast<double>(n) * p * (1 - p));
  if (sd == 0) return count == mu ? 0.0 : INFINITY;
  return (static_cast<double>(count) - mu) / sd;
}

}  // namespace zfpbias
