#pragma once

// Dense double-precision kernels behind the neural-network engine.
//
// Every kernel has a portable scalar reference implementation. SIMD variants
// (AVX2+FMA on x86-64, NEON on AArch64) are compiled into separate translation
// units and selected once at runtime from the CPU feature set. All variants
// of a kernel accumulate each output element in the same order, so results
// differ from the scalar reference only by FMA rounding (gemm) or not at all
// (element-wise kernels).
//
// Set ROMO_KERNELS=scalar|avx2|neon in the environment to force a variant.

#include <cstddef>
#include <string_view>
#include <vector>

namespace romo::kernels {

/// Per-step Adam constants. bias1 = 1 - beta1^t, bias2 = 1 - beta2^t.
struct AdamCoefficients {
  double lr;
  double beta1;
  double beta2;
  double eps;
  double bias1;
  double bias2;
};

struct KernelTable {
  std::string_view name;

  /// C[m x n] += A[m x k] * B[k x n], all row-major with leading dimensions.
  void (*gemm_acc)(std::size_t m, std::size_t n, std::size_t k, const double* a, std::size_t lda,
                   const double* b, std::size_t ldb, double* c, std::size_t ldc);

  /// y += alpha * x
  void (*axpy)(std::size_t n, double alpha, const double* x, double* y);

  /// x = max(x, 0) in place
  void (*relu)(std::size_t n, double* x);

  /// grad[i] = pre[i] > 0 ? grad[i] : 0
  void (*relu_backward)(std::size_t n, const double* pre, double* grad);

  /// Bias-corrected Adam update of param, m and v in place.
  void (*adam)(std::size_t n, double* param, const double* grad, double* m, double* v,
               const AdamCoefficients& c);

  /// dst = (1 - tau) * dst + tau * src
  void (*lerp)(std::size_t n, double tau, const double* src, double* dst);
};

const KernelTable& scalar_table();

/// Variant tables compiled into this binary; nullptr when not built for this target.
const KernelTable* avx2_table();
const KernelTable* neon_table();

/// Compiled variants the running CPU supports, scalar first.
std::vector<const KernelTable*> available();

/// Variant used by the nn engine. Resolved on first call.
const KernelTable& active();

/// Overrides the active variant (tests and benchmarks). Not thread-safe.
void set_active(const KernelTable& table);

}  // namespace romo::kernels
