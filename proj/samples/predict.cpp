// Predicted per-element bias for 1-d float blocks with e_max = 0.
#include <cstdio>

#include <zfpbias/bias.hpp>

using namespace zfpbias;

int main() {
  for (int beta = 4; beta <= 28; beta += 4) {
    auto p = predict_total_bias(float_config(1, beta), 0);
    std::printf("beta %2d:", beta);
    for (double v : p.total_double()) std::printf(" %13.5e", v);
    std::printf("\n");
  }
}
