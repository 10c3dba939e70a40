// AArch64 Advanced SIMD variant. NEON is mandatory on AArch64, so no runtime
// probe is needed beyond the compile-time target check.
#include "romo/kernels/kernels.hpp"

#if defined(__aarch64__)

#include <arm_neon.h>

#include <cmath>

namespace romo::kernels {
namespace {

constexpr std::size_t kRows = 4;
constexpr std::size_t kCols = 4;

inline void tile_4x4(std::size_t k, const double* a, std::size_t lda, const double* b,
                     std::size_t ldb, double* c, std::size_t ldc) {
  float64x2_t acc[kRows][2];
  for (std::size_t r = 0; r < kRows; ++r) {
    acc[r][0] = vld1q_f64(c + r * ldc);
    acc[r][1] = vld1q_f64(c + r * ldc + 2);
  }
  for (std::size_t p = 0; p < k; ++p) {
    const float64x2_t b0 = vld1q_f64(b + p * ldb);
    const float64x2_t b1 = vld1q_f64(b + p * ldb + 2);
    for (std::size_t r = 0; r < kRows; ++r) {
      const float64x2_t av = vdupq_n_f64(a[r * lda + p]);
      acc[r][0] = vfmaq_f64(acc[r][0], av, b0);
      acc[r][1] = vfmaq_f64(acc[r][1], av, b1);
    }
  }
  for (std::size_t r = 0; r < kRows; ++r) {
    vst1q_f64(c + r * ldc, acc[r][0]);
    vst1q_f64(c + r * ldc + 2, acc[r][1]);
  }
}

inline void row_strip(std::size_t n, std::size_t j0, std::size_t k, const double* arow,
                      const double* b, std::size_t ldb, double* crow) {
  std::size_t j = j0;
  for (; j + 2 <= n; j += 2) {
    float64x2_t acc = vld1q_f64(crow + j);
    for (std::size_t p = 0; p < k; ++p) acc = vfmaq_f64(acc, vdupq_n_f64(arow[p]), vld1q_f64(b + p * ldb + j));
    vst1q_f64(crow + j, acc);
  }
  for (; j < n; ++j) {
    double acc = crow[j];
    for (std::size_t p = 0; p < k; ++p) acc = std::fma(arow[p], b[p * ldb + j], acc);
    crow[j] = acc;
  }
}

void gemm_acc(std::size_t m, std::size_t n, std::size_t k, const double* a, std::size_t lda,
              const double* b, std::size_t ldb, double* c, std::size_t ldc) {
  const std::size_t n_tiled = n - n % kCols;
  const std::size_t m_tiled = m - m % kRows;
  for (std::size_t j = 0; j < n_tiled; j += kCols) {
    for (std::size_t i = 0; i < m_tiled; i += kRows) {
      tile_4x4(k, a + i * lda, lda, b + j, ldb, c + i * ldc + j, ldc);
    }
  }
  if (n_tiled < n) {
    for (std::size_t i = 0; i < m_tiled; ++i) row_strip(n, n_tiled, k, a + i * lda, b, ldb, c + i * ldc);
  }
  for (std::size_t i = m_tiled; i < m; ++i) row_strip(n, 0, k, a + i * lda, b, ldb, c + i * ldc);
}

void axpy(std::size_t n, double alpha, const double* x, double* y) {
  const float64x2_t av = vdupq_n_f64(alpha);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) vst1q_f64(y + i, vaddq_f64(vld1q_f64(y + i), vmulq_f64(av, vld1q_f64(x + i))));
  for (; i < n; ++i) y[i] += alpha * x[i];
}

void relu(std::size_t n, double* x) {
  const float64x2_t zero = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    const float64x2_t v = vld1q_f64(x + i);
    const uint64x2_t mask = vcgtq_f64(v, zero);
    vst1q_f64(x + i, vreinterpretq_f64_u64(vandq_u64(vreinterpretq_u64_f64(v), mask)));
  }
  for (; i < n; ++i) x[i] = x[i] > 0.0 ? x[i] : 0.0;
}

void relu_backward(std::size_t n, const double* pre, double* grad) {
  const float64x2_t zero = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    const uint64x2_t mask = vcgtq_f64(vld1q_f64(pre + i), zero);
    const uint64x2_t g = vreinterpretq_u64_f64(vld1q_f64(grad + i));
    vst1q_f64(grad + i, vreinterpretq_f64_u64(vandq_u64(g, mask)));
  }
  for (; i < n; ++i) grad[i] = pre[i] > 0.0 ? grad[i] : 0.0;
}

void adam(std::size_t n, double* param, const double* grad, double* m, double* v,
          const AdamCoefficients& c) {
  const double one_minus_b1 = 1.0 - c.beta1;
  const double one_minus_b2 = 1.0 - c.beta2;
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    const float64x2_t g = vld1q_f64(grad + i);
    const float64x2_t mi = vaddq_f64(vmulq_n_f64(vld1q_f64(m + i), c.beta1), vmulq_n_f64(g, one_minus_b1));
    const float64x2_t vi = vaddq_f64(vmulq_n_f64(vld1q_f64(v + i), c.beta2), vmulq_n_f64(vmulq_f64(g, g), one_minus_b2));
    vst1q_f64(m + i, mi);
    vst1q_f64(v + i, vi);
    const float64x2_t m_hat = vdivq_f64(mi, vdupq_n_f64(c.bias1));
    const float64x2_t v_hat = vdivq_f64(vi, vdupq_n_f64(c.bias2));
    const float64x2_t step = vdivq_f64(vmulq_n_f64(m_hat, c.lr), vaddq_f64(vsqrtq_f64(v_hat), vdupq_n_f64(c.eps)));
    vst1q_f64(param + i, vsubq_f64(vld1q_f64(param + i), step));
  }
  for (; i < n; ++i) {
    const double g = grad[i];
    m[i] = c.beta1 * m[i] + one_minus_b1 * g;
    v[i] = c.beta2 * v[i] + one_minus_b2 * (g * g);
    param[i] -= c.lr * (m[i] / c.bias1) / (std::sqrt(v[i] / c.bias2) + c.eps);
  }
}

void lerp(std::size_t n, double tau, const double* src, double* dst) {
  const double keep = 1.0 - tau;
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    vst1q_f64(dst + i, vaddq_f64(vmulq_n_f64(vld1q_f64(dst + i), keep), vmulq_n_f64(vld1q_f64(src + i), tau)));
  }
  for (; i < n; ++i) dst[i] = keep * dst[i] + tau * src[i];
}

}  // namespace

const KernelTable* neon_table() {
  static const KernelTable table{"neon", gemm_acc, axpy, relu, relu_backward, adam, lerp};
  return &table;
}

}  // namespace romo::kernels

#endif
