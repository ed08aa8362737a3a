// Compress a smooth 2-d field at several precisions and print the error.
#include <cmath>
#include <cstdio>
#include <vector>

#include <zfpbias/codec.hpp>

using namespace zfpbias;

int main() {
  Dims dims{37, 21, 1};
  std::vector<double> f(dims[0] * dims[1]);
  for (std::uint64_t y = 0; y < dims[1]; ++y)
    for (std::uint64_t x = 0; x < dims[0]; ++x)
      f[x + dims[0] * y] = static_cast<float>(std::sin(0.3 * x) * std::cos(0.2 * y) + 2.0);
  std::printf("%6s %6s %14s %14s\n", "beta", "mode", "max|err|", "mean err");
  for (int beta : {8, 12, 16, 20, 24}) {
    for (Rounding r : {Rounding::Never, Rounding::First}) {
      auto cfg = float_config(2, beta, r);
      auto out = decompress_array(compress_array(f, dims, cfg), dims, cfg);
      double mx = 0, mean = 0;
      for (std::size_t i = 0; i < f.size(); ++i) {
        mx = std::max(mx, std::fabs(out[i] - f[i]));
        mean += out[i] - f[i];
      }
      std::printf("%6d %6s %14.6g %14.6g\n", beta, rounding_name(r), mx, mean / f.size());
    }
  }
}
