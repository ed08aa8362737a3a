#pragma once

#include <algorithm>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "autocorr.hpp"
#include "bias.hpp"
#include "codec.hpp"
#include "harness.hpp"
#include "io.hpp"
#include "report.hpp"

namespace zfpbias {

inline constexpr int kExitOk = 0;
inline constexpr int kExitParse = 2;
inline constexpr int kExitConfig = 3;
inline constexpr int kExitRuntime = 4;

inline int exit_code(Errc c) {
  switch (c) {
    case Errc::Format:
    case Errc::NonFiniteInput:
      return kExitParse;
    case Errc::Config:
    case Errc::UnsupportedDimension:
    case Errc::NonDyadicInput:
      return kExitConfig;
    default:
      return kExitRuntime;
  }
}

namespace cli_detail {

inline Dims parse_dims(const std::string& s, int& nd) {
  Dims d{1, 1, 1};
  nd = 0;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (nd == 3) fail(Errc::Config, "at most 3 extents");
    try {
      std::size_t pos = 0;
      long long v = std::stoll(tok, &pos);
      if (pos != tok.size() || v <= 0) throw std::invalid_argument(tok);
      d[nd++] = static_cast<std::uint64_t>(v);
    } catch (const std::logic_error&) {
      fail(Errc::Config, "bad extent '" + tok + "'");
    }
  }
  if (nd == 0) fail(Errc::Config, "empty --dims");
  return d;
}

inline std::pair<int, int> parse_range(const std::string& s) {
  auto c = s.find(':');
  try {
    if (c == std::string::npos) {
      int v = std::stoi(s);
      return {v, v};
    }
    return {std::stoi(s.substr(0, c)), std::stoi(s.substr(c + 1))};
  } catch (const std::logic_error&) {
    fail(Errc::Config, "bad range '" + s + "', expected a:b");
  }
}

// ZRAW file, or headerless little-endian samples when dims and dtype are given
inline RawGrid load_grid(const std::string& path, const std::string& dims, const std::string& dtype) {
  std::string bytes = read_file(path);
  if (bytes.rfind("ZRAW", 0) == 0) return decode_raw(bytes);
  if (dims.empty() || dtype.empty()) fail(Errc::Format, "input is not ZRAW; pass --dims and --dtype for headerless data");
  RawGrid g;
  g.dims = parse_dims(dims, g.ndims);
  g.dtype = parse_dtype(dtype);
  std::size_t w = g.dtype == DType::F32 ? 4 : 8;
  if (bytes.size() != element_count(g.dims) * w) fail(Errc::Format, "headerless file size does not match dims");
  detail::Reader r(bytes);
  g.data.resize(element_count(g.dims));
  for (auto& v : g.data) v = g.dtype == DType::F32 ? static_cast<double>(r.f32()) : r.f64();
  check_grid(g);
  return g;
}

inline void default_kq(DType t, int& k, int& q) {
  if (k == 0) k = t == DType::F32 ? 24 : 53;
  if (q == 0) q = t == DType::F32 ? 30 : 62;
}

}  // namespace cli_detail

// Runs the tool with argv-style arguments (args[0] is the program name).
inline int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Block transform codec with bias analysis and Monte Carlo harness", "zfpbias"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "zfpbias 1.0");

  // compress
  std::string c_in, c_out, c_dims, c_dtype, c_mode = "never";
  int c_beta = -1, c_d = 0, c_k = 0, c_q = 0, threads = 1;
  auto* cc = app.add_subcommand("compress", "compress a grid into a ZBLB container");
  cc->add_option("--in", c_in, "input grid (ZRAW or headerless)")->required();
  cc->add_option("--out", c_out, "output container")->required();
  cc->add_option("--precision,--beta", c_beta, "retained bit planes")->required();
  cc->add_option("--mode", c_mode, "rounding mode: never, first, last");
  cc->add_option("--dims", c_dims, "extents for headerless input, x fastest: nx[,ny[,nz]]");
  cc->add_option("--dtype", c_dtype, "sample type for headerless input: f32 or f64");
  cc->add_option("--d", c_d, "block dimension (default: grid ndims)");
  cc->add_option("--k", c_k, "input precision (default: 24 for f32, 53 for f64)");
  cc->add_option("--q", c_q, "block-float precision (default: 30 for f32, 62 for f64)");
  cc->add_option("--threads", threads, "worker threads (0 = all cores)");

  // decompress
  std::string d_in, d_out, d_dtype;
  auto* dc = app.add_subcommand("decompress", "decompress a ZBLB container to ZRAW");
  dc->add_option("--in", d_in, "input container")->required();
  dc->add_option("--out", d_out, "output ZRAW grid")->required();
  dc->add_option("--dtype", d_dtype, "output type (default: f32 when k <= 24)");
  dc->add_option("--threads", threads, "worker threads");

  // predict
  int p_d = 1, p_k = 24, p_q = 30, p_beta = 16, p_emax = 0;
  std::string p_mode = "never";
  auto* pc = app.add_subcommand("predict", "closed-form total bias per element");
  pc->add_option("--d", p_d);
  pc->add_option("--k", p_k);
  pc->add_option("--q", p_q);
  pc->add_option("--beta", p_beta)->required();
  pc->add_option("--emax", p_emax)->required();
  pc->add_option("--mode", p_mode);

  // simulate
  int s_d = 1, s_rho = 0, s_emin = -20, s_k = 24, s_q = 30;
  std::uint64_t s_trials = 100000, s_chunk = 1 << 14;
  std::uint64_t seed = 0;
  std::string s_betas, s_mode = "never", s_format = "csv";
  auto* sc = app.add_subcommand("simulate", "Monte Carlo bias experiment on synthetic blocks");
  sc->add_option("--d", s_d);
  sc->add_option("--rho", s_rho);
  sc->add_option("--emin", s_emin);
  sc->add_option("--k", s_k);
  sc->add_option("--q", s_q);
  sc->add_option("--beta-range", s_betas, "a:b inclusive")->required();
  sc->add_option("--trials", s_trials);
  sc->add_option("--seed", seed)->required();
  sc->add_option("--mode", s_mode);
  sc->add_option("--format", s_format)->check(CLI::IsMember({"csv", "json"}));
  sc->add_option("--chunk", s_chunk, "trials per RNG stream");
  sc->add_option("--threads", threads);

  // distribution
  DistributionConfig dist;
  std::string t_mode = "never";
  auto* tc = app.add_subcommand("distribution", "1-d error distributions against the closed-form densities");
  tc->add_option("--k", dist.k);
  tc->add_option("--q", dist.q);
  tc->add_option("--tolerance", dist.tolerance);
  tc->add_option("--emax", dist.e_max);
  tc->add_option("--rho", dist.rho);
  tc->add_option("--trials", dist.trials);
  tc->add_option("--bins", dist.bins);
  tc->add_option("--seed", seed)->required();
  tc->add_option("--mode", t_mode);
  tc->add_option("--threads", threads);

  // autocorr
  std::string a_in, a_ref, a_out, a_mode = "never";
  bool a_slice = false, a_synth = false;
  int a_d = 2, a_rho = 7, a_emin = -20, a_beta = 16, a_k = 24, a_q = 30;
  std::uint64_t a_grid = 16;
  auto* ac = app.add_subcommand("autocorr", "circular autocorrelation of an error field");
  ac->add_option("--in", a_in, "field (ZRAW); with --ref the field is in - ref");
  ac->add_option("--ref", a_ref, "reference grid subtracted from --in");
  ac->add_option("--out", a_out, "write R as a ZRAW f64 grid (zero lag at index 0)");
  ac->add_flag("--time-slice", a_slice, "zero lag along the slowest axis");
  ac->add_flag("--synthetic", a_synth, "use a synthetic block-grid error field");
  ac->add_option("--d", a_d);
  ac->add_option("--rho", a_rho);
  ac->add_option("--emin", a_emin);
  ac->add_option("--beta", a_beta);
  ac->add_option("--k", a_k);
  ac->add_option("--q", a_q);
  ac->add_option("--mode", a_mode);
  ac->add_option("--grid", a_grid, "blocks per axis for --synthetic");
  ac->add_option("--seed", seed, "required with --synthetic");
  ac->add_option("--threads", threads);

  // bitstats
  std::string b_in, b_dims, b_dtype;
  int b_d = 0, b_k = 0, b_q = 0;
  std::uint64_t b_uniform = 0;
  auto* bc = app.add_subcommand("bitstats", "one-bit frequency per coefficient and negabinary digit");
  bc->add_option("--in", b_in, "grid (ZRAW or headerless)");
  bc->add_option("--dims", b_dims);
  bc->add_option("--dtype", b_dtype);
  bc->add_option("--uniform-int", b_uniform, "use this many uniform random integer blocks instead of --in");
  bc->add_option("--seed", seed, "required with --uniform-int");
  bc->add_option("--d", b_d);
  bc->add_option("--k", b_k);
  bc->add_option("--q", b_q);

  try {
    std::vector<std::string> rev(args.rbegin(), args.rend());
    if (!rev.empty()) rev.pop_back();
    app.parse(rev);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e, out, err);
    return rc == 0 ? kExitOk : kExitParse;
  }

  try {
    if (*cc) {
      RawGrid g = cli_detail::load_grid(c_in, c_dims, c_dtype);
      int k = c_k, q = c_q;
      cli_detail::default_kq(g.dtype, k, q);
      CodecConfig cfg{c_d ? c_d : g.ndims, k, q, c_beta, parse_rounding(c_mode)};
      cfg.validate();
      if (g.ndims > cfg.d) fail(Errc::Config, "grid has more dimensions than --d");
      Container ct{cfg, g.dims, compress_array(g.data, g.dims, cfg, threads)};
      std::string bytes = encode_container(ct);
      write_file(c_out, bytes);
      double bpv = 8.0 * static_cast<double>(bytes.size()) / static_cast<double>(g.data.size());
      out << json{{"schema", kReportSchema}, {"kind", "compress"}, {"config", to_json(cfg)}, {"dims", g.dims},
                  {"blocks", ct.blocks.size()}, {"bytes", bytes.size()}, {"bits_per_value", bpv}}
                 .dump()
          << "\n";
    } else if (*dc) {
      Container ct = decode_container(read_file(d_in));
      RawGrid g;
      g.ndims = ct.cfg.d;
      g.dims = ct.dims;
      g.dtype = d_dtype.empty() ? (ct.cfg.k <= 24 ? DType::F32 : DType::F64) : parse_dtype(d_dtype);
      g.data = decompress_array(ct.blocks, ct.dims, ct.cfg, threads);
      write_file(d_out, encode_raw(g));
      out << json{{"schema", kReportSchema}, {"kind", "decompress"}, {"config", to_json(ct.cfg)}, {"dims", g.dims},
                  {"dtype", dtype_name(g.dtype)}}
                 .dump()
          << "\n";
    } else if (*pc) {
      CodecConfig cfg{p_d, p_k, p_q, p_beta, parse_rounding(p_mode)};
      out << to_json(predict_total_bias(cfg, p_emax)).dump() << "\n";
    } else if (*sc) {
      BiasExperimentConfig c;
      c.spec = {s_d, s_emin, s_rho, s_trials, seed};
      c.k = s_k;
      c.q = s_q;
      c.rounding = parse_rounding(s_mode);
      c.threads = threads;
      c.chunk = s_chunk;
      auto [lo, hi] = cli_detail::parse_range(s_betas);
      if (lo > hi) fail(Errc::Config, "empty beta range");
      for (int b = lo; b <= hi; ++b) c.betas.push_back(b);
      codec_for(c, lo).validate();
      codec_for(c, hi).validate();
      if (s_rho < 0) fail(Errc::Config, "rho must be nonnegative");
      if (s_chunk == 0) fail(Errc::Config, "chunk must be positive");
      auto r = run_bias_experiment(c);
      if (s_format == "json") out << to_json(r).dump() << "\n";
      else out << to_csv(r);
    } else if (*tc) {
      dist.rounding = parse_rounding(t_mode);
      dist.seed = seed;
      dist.threads = threads;
      CodecConfig{1, dist.k, dist.q, 0, dist.rounding}.validate();
      out << to_json(run_distribution_experiment(dist)).dump() << "\n";
    } else if (*ac) {
      std::vector<double> field;
      Dims dims;
      int nd = 0;
      json src;
      if (a_synth) {
        if (ac->count("--seed") == 0) fail(Errc::Config, "--synthetic requires --seed");
        SyntheticBlockSpec s{a_d, a_emin, a_rho, 0, seed};
        CodecConfig cfg{a_d, a_k, a_q, a_beta, parse_rounding(a_mode)};
        cfg.validate();
        Dims grid{1, 1, 1};
        for (int i = 0; i < a_d; ++i) grid[i] = a_grid;
        field = synthetic_error_field(s, cfg, grid, dims, threads);
        nd = a_d;
        src = {{"synthetic", true}, {"config", to_json(cfg)}, {"rho", a_rho}, {"e_min", a_emin}, {"grid", a_grid},
               {"rng", rng_json(seed)}};
      } else {
        if (a_in.empty()) fail(Errc::Config, "--in or --synthetic is required");
        RawGrid g = decode_raw(read_file(a_in));
        field = g.data;
        if (!a_ref.empty()) {
          RawGrid r = decode_raw(read_file(a_ref));
          if (r.dims != g.dims) fail(Errc::Config, "--ref dims differ from --in");
          for (std::size_t i = 0; i < field.size(); ++i) field[i] -= r.data[i];
        }
        dims = g.dims;
        nd = g.ndims;
        src = {{"synthetic", false}, {"in", a_in}, {"ref", a_ref}};
      }
      std::vector<double> R = a_slice ? autocorrelation_time_slice(field, dims, nd) : autocorrelation(field, dims, nd);
      Dims rd = dims;
      int rnd = nd;
      if (a_slice) {
        rd[nd - 1] = 1;
        rnd = nd - 1;
      }
      if (!a_out.empty()) write_file(a_out, encode_raw(RawGrid{rnd, rd, DType::F64, R}));
      out << json{{"schema", kReportSchema}, {"kind", "autocorr"}, {"source", src}, {"dims", rd}, {"ndims", rnd},
                  {"time_slice", a_slice}, {"center", R[0]}, {"l2_norm", l2_norm(R)}}
                 .dump()
          << "\n";
    } else if (*bc) {
      CodecConfig cfg;
      BitStats st;
      json src;
      if (b_uniform > 0) {
        if (bc->count("--seed") == 0) fail(Errc::Config, "--uniform-int requires --seed");
        cfg = {b_d ? b_d : 1, b_k ? b_k : 24, b_q ? b_q : 30, 0, Rounding::Never};
        cfg.validate();
        st = BitStats(cfg.n());
        auto perm = sequency_permutation(cfg.d);
        CounterRng rng(seed, 0);
        std::int64_t bound = (std::int64_t(1) << (cfg.q - 2)) - 1;
        std::vector<std::int64_t> w(cfg.n());
        for (std::uint64_t t = 0; t < b_uniform; ++t) {
          for (auto& v : w) v = rng.range(-bound, bound);
          accumulate_bits(w, cfg, perm, st);
        }
        src = {{"uniform_int_blocks", b_uniform}, {"rng", rng_json(seed)}};
      } else {
        if (b_in.empty()) fail(Errc::Config, "--in or --uniform-int is required");
        RawGrid g = cli_detail::load_grid(b_in, b_dims, b_dtype);
        int k = b_k, q = b_q;
        cli_detail::default_kq(g.dtype, k, q);
        cfg = {b_d ? b_d : g.ndims, k, q, 0, Rounding::Never};
        cfg.validate();
        if (g.ndims > cfg.d) fail(Errc::Config, "grid has more dimensions than --d");
        st = bitplane_randomness(partition(g.data, g.dims, cfg.d), cfg);
        src = {{"in", b_in}};
      }
      json j = to_json(st, cfg);
      j["source"] = src;
      out << j.dump() << "\n";
    }
  } catch (const Error& e) {
    int rc = exit_code(e.code());
    err << json{{"error", errc_name(e.code())}, {"message", e.what()}, {"exit_code", rc}}.dump() << "\n";
    return rc;
  } catch (const std::exception& e) {
    err << json{{"error", "RuntimeError"}, {"message", e.what()}, {"exit_code", kExitRuntime}}.dump() << "\n";
    return kExitRuntime;
  }
  return kExitOk;
}

}  // namespace zfpbias
