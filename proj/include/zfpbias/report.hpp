#pragma once

#include <cmath>
#include <cstdio>
#include <sstream>
#include <string>

#include <json.hpp>

#include "bias.hpp"
#include "harness.hpp"
#include "rng.hpp"

namespace zfpbias {

using json = nlohmann::ordered_json;

inline constexpr int kReportSchema = 1;

inline std::string fmt_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline json rng_json(std::uint64_t seed) {
  return {{"name", "splitmix64-counter"},
          {"seed", seed},
          {"gamma", "0x9e3779b97f4a7c15"},
          {"mul1", "0xbf58476d1ce4e5b9"},
          {"mul2", "0x94d049bb133111eb"},
          {"stream_salt", "0x6a09e667f3bcc909"}};
}

inline json to_json(const CodecConfig& c) {
  return {{"d", c.d}, {"k", c.k}, {"q", c.q}, {"beta", c.beta}, {"rounding", rounding_name(c.rounding)}};
}

inline json rationals_json(const std::vector<Rational>& v) {
  json a = json::array();
  for (const auto& r : v) a.push_back(to_string(r));
  return a;
}

inline json doubles_json(const std::vector<Rational>& v) {
  json a = json::array();
  for (const auto& r : v) a.push_back(to_double(r));
  return a;
}

inline json to_json(const BiasPrediction& p) {
  return {{"schema", kReportSchema},
          {"kind", "prediction"},
          {"config", to_json(p.cfg)},
          {"e_max", p.e_max},
          {"ell", p.ell},
          {"eta", p.cfg.eta()},
          {"in_analysis_range", p.in_analysis_range},
          {"floor", std::ldexp(1.0, p.e_max - p.cfg.k)},
          {"total", doubles_json(p.total)},
          {"total_exact", rationals_json(p.total)},
          {"transform", doubles_json(p.transform)},
          {"truncation", doubles_json(p.truncation)},
          {"below_floor", p.below_floor}};
}

inline json experiment_header(const BiasReport& r) {
  const auto& c = r.cfg;
  return {{"d", c.spec.d}, {"k", c.k}, {"q", c.q}, {"rounding", rounding_name(c.rounding)}, {"rho", c.spec.rho},
          {"e_min", c.spec.e_min}, {"e_max", r.e_max}, {"trials", c.spec.trials}, {"chunk", c.chunk}};
}

inline json to_json(const BiasReport& r) {
  json res = json::array();
  for (const auto& b : r.results) {
    res.push_back({{"beta", b.beta},
                   {"in_analysis_range", b.in_analysis_range},
                   {"mean", b.mean},
                   {"stderr", b.stderr_mean},
                   {"predicted", b.predicted},
                   {"ratio", b.ratio},
                   {"rel_error", b.rel_error},
                   {"masked", b.masked}});
  }
  return {{"schema", kReportSchema},
          {"kind", "bias_experiment"},
          {"config", experiment_header(r)},
          {"rng", rng_json(r.cfg.spec.seed)},
          {"accepted", r.accepted},
          {"rejected", r.rejected},
          {"floor", r.floor},
          {"results", res}};
}

inline std::string to_csv(const BiasReport& r) {
  std::ostringstream o;
  o << "# schema=" << kReportSchema << " kind=bias_experiment d=" << r.cfg.spec.d << " k=" << r.cfg.k << " q=" << r.cfg.q
    << " rounding=" << rounding_name(r.cfg.rounding) << " rho=" << r.cfg.spec.rho << " e_min=" << r.cfg.spec.e_min
    << " trials=" << r.cfg.spec.trials << " seed=" << r.cfg.spec.seed << " rejected=" << r.rejected << "\n";
  o << "beta,element,mean,stderr,predicted,ratio,rel_error,masked\n";
  for (const auto& b : r.results)
    for (std::size_t i = 0; i < b.mean.size(); ++i)
      o << b.beta << ',' << i << ',' << fmt_double(b.mean[i]) << ',' << fmt_double(b.stderr_mean[i]) << ','
        << fmt_double(b.predicted[i]) << ',' << fmt_double(b.ratio[i]) << ',' << fmt_double(b.rel_error[i]) << ','
        << (b.masked[i] ? 1 : 0) << "\n";
  return o.str();
}

inline json to_json(const DensityFit& f) {
  json pos = json::array();
  for (std::size_t i = 0; i < f.hists.size(); ++i) {
    const auto& h = f.hists[i];
    pos.push_back({{"position", i + 1},
                   {"mean", f.moments[i].mean},
                   {"variance", f.moments[i].variance()},
                   {"sup_gap", f.sup_gap[i]},
                   {"max_abs_z", f.max_abs_z[i]},
                   {"hist_lo", h.lo},
                   {"hist_hi", h.hi},
                   {"counts", h.counts},
                   {"below", h.below},
                   {"above", h.above}});
  }
  return pos;
}

inline json to_json(const DistributionReport& r) {
  const auto& c = r.cfg;
  return {{"schema", kReportSchema},
          {"kind", "distribution"},
          {"config",
           {{"d", 1}, {"k", c.k}, {"q", c.q}, {"rounding", rounding_name(c.rounding)}, {"tolerance", c.tolerance},
            {"e_max", c.e_max}, {"rho", c.rho}, {"trials", c.trials}, {"bins", c.bins}}},
          {"rng", rng_json(c.seed)},
          {"beta", r.beta},
          {"eta", r.eta},
          {"delta", r.delta},
          {"parity_sign", r.parity_sign},
          {"positions", to_json(r.fit)}};
}

inline json to_json(const BitStats& s, const CodecConfig& cfg) {
  json widths = json::array();
  for (int w = 0; w <= 64; ++w) {
    bool any = false;
    for (int j = 0; j < s.n; ++j) any = any || s.count[w][j];
    if (!any) continue;
    json coeffs = json::array();
    for (int j = 0; j < s.n; ++j) {
      json freq = json::array();
      for (int b = 0; b < w; ++b) freq.push_back(s.count[w][j] ? json(s.frequency(w, j, b)) : json(nullptr));
      coeffs.push_back({{"coefficient", j}, {"count", s.count[w][j]}, {"one_frequency", freq}});
    }
    widths.push_back({{"width", w}, {"coefficients", coeffs}});
  }
  return {{"schema", kReportSchema}, {"kind", "bitstats"}, {"config", to_json(cfg)},
          {"blocks", s.blocks},      {"zero_blocks", s.zero_blocks}, {"by_width", widths}};
}

}  // namespace zfpbias
