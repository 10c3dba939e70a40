// Times the dispatched kernels against the scalar reference on training-sized shapes.
#include <chrono>
#include <cstdio>
#include <random>
#include <vector>

#include "romo/kernels/kernels.hpp"
#include "romo/nn/mlp.hpp"

namespace {

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

}  // namespace

int main() {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> dist;
  for (const auto* table : romo::kernels::available()) {
    romo::kernels::set_active(*table);
    for (std::size_t n : {64u, 256u}) {
      const std::size_t m = 256, k = n;
      std::vector<double> a(m * k), b(k * n), c(m * n, 0.0);
      for (double& v : a) v = dist(rng);
      for (double& v : b) v = dist(rng);
      int reps = 0;
      const auto start = std::chrono::steady_clock::now();
      while (seconds_since(start) < 0.5) {
        table->gemm_acc(m, n, k, a.data(), k, b.data(), n, c.data(), n);
        ++reps;
      }
      const double gflops = 2.0 * m * n * k * reps / seconds_since(start) / 1e9;
      std::printf("%-7s gemm %zux%zux%zu  %6.2f GFLOP/s\n", std::string(table->name).c_str(), m, n, k, gflops);
    }
    romo::Mlp mlp({8, 256, 256, 256, 256, 6}, romo::Activation::Identity);
    mlp.init_fan_in_uniform(rng);
    romo::Matrix x(256, 8);
    for (double& v : x.values()) v = dist(rng);
    romo::Matrix up(256, 6, 1.0);
    std::vector<double> grad(mlp.num_params());
    int reps = 0;
    const auto start = std::chrono::steady_clock::now();
    while (seconds_since(start) < 0.5) {
      romo::MlpTrace trace;
      mlp.forward(x, trace);
      mlp.backward(trace, up, grad);
      ++reps;
    }
    std::printf("%-7s 4x256 mlp fwd+bwd batch 256: %.2f ms\n", std::string(table->name).c_str(),
                1e3 * seconds_since(start) / reps);
  }
  return 0;
}
