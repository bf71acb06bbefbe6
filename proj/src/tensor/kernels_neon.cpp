// NEON kernel variants for aarch64, mirroring the AVX2 blocking. Same tail
// rule: per-element arithmetic is identical whether an element lands in a
// vector lane or the scalar remainder.

#if defined(__aarch64__)

#include <arm_neon.h>

#include <cmath>
#include <cstdint>

#include "nsdf/tensor/kernels.hpp"
#include "sincos_poly.hpp"

namespace nsdf::tensor::kernels {
namespace {

using namespace sincos;

template <int MR>
void gemm_rows_f32(const float* a, const float* b, const float* bias, float* c,
                   int n, int k) {
  int j = 0;
  for (; j + 8 <= n; j += 8) {
    float32x4_t acc[MR][2];
    for (int r = 0; r < MR; ++r) {
      float32x4_t init = bias ? vdupq_n_f32(bias[r]) : vdupq_n_f32(0.0f);
      acc[r][0] = init;
      acc[r][1] = init;
    }
    const float* bp = b + j;
    for (int kk = 0; kk < k; ++kk) {
      float32x4_t b0 = vld1q_f32(bp);
      float32x4_t b1 = vld1q_f32(bp + 4);
      bp += n;
      for (int r = 0; r < MR; ++r) {
        float32x4_t av = vdupq_n_f32(a[size_t(r) * k + kk]);
        acc[r][0] = vfmaq_f32(acc[r][0], av, b0);
        acc[r][1] = vfmaq_f32(acc[r][1], av, b1);
      }
    }
    for (int r = 0; r < MR; ++r) {
      vst1q_f32(c + size_t(r) * n + j, acc[r][0]);
      vst1q_f32(c + size_t(r) * n + j + 4, acc[r][1]);
    }
  }
  for (; j < n; ++j) {
    for (int r = 0; r < MR; ++r) {
      float acc = bias ? bias[r] : 0.0f;
      const float* ar = a + size_t(r) * k;
      for (int kk = 0; kk < k; ++kk)
        acc = std::fma(ar[kk], b[size_t(kk) * n + j], acc);
      c[size_t(r) * n + j] = acc;
    }
  }
}

void gemm_f32_neon(const float* a, const float* b, const float* bias, float* c,
                   int m, int n, int k) {
  int i = 0;
  for (; i + 4 <= m; i += 4)
    gemm_rows_f32<4>(a + size_t(i) * k, b, bias ? bias + i : nullptr,
                     c + size_t(i) * n, n, k);
  for (; i < m; ++i)
    gemm_rows_f32<1>(a + size_t(i) * k, b, bias ? bias + i : nullptr,
                     c + size_t(i) * n, n, k);
}

template <int MR>
void gemm_rows_f64(const double* a, const double* b, const double* bias,
                   double* c, int n, int k) {
  int j = 0;
  for (; j + 4 <= n; j += 4) {
    float64x2_t acc[MR][2];
    for (int r = 0; r < MR; ++r) {
      float64x2_t init = bias ? vdupq_n_f64(bias[r]) : vdupq_n_f64(0.0);
      acc[r][0] = init;
      acc[r][1] = init;
    }
    const double* bp = b + j;
    for (int kk = 0; kk < k; ++kk) {
      float64x2_t b0 = vld1q_f64(bp);
      float64x2_t b1 = vld1q_f64(bp + 2);
      bp += n;
      for (int r = 0; r < MR; ++r) {
        float64x2_t av = vdupq_n_f64(a[size_t(r) * k + kk]);
        acc[r][0] = vfmaq_f64(acc[r][0], av, b0);
        acc[r][1] = vfmaq_f64(acc[r][1], av, b1);
      }
    }
    for (int r = 0; r < MR; ++r) {
      vst1q_f64(c + size_t(r) * n + j, acc[r][0]);
      vst1q_f64(c + size_t(r) * n + j + 2, acc[r][1]);
    }
  }
  for (; j < n; ++j) {
    for (int r = 0; r < MR; ++r) {
      double acc = bias ? bias[r] : 0.0;
      const double* ar = a + size_t(r) * k;
      for (int kk = 0; kk < k; ++kk)
        acc = std::fma(ar[kk], b[size_t(kk) * n + j], acc);
      c[size_t(r) * n + j] = acc;
    }
  }
}

void gemm_f64_neon(const double* a, const double* b, const double* bias,
                   double* c, int m, int n, int k) {
  int i = 0;
  for (; i + 4 <= m; i += 4)
    gemm_rows_f64<4>(a + size_t(i) * k, b, bias ? bias + i : nullptr,
                     c + size_t(i) * n, n, k);
  for (; i < m; ++i)
    gemm_rows_f64<1>(a + size_t(i) * k, b, bias ? bias + i : nullptr,
                     c + size_t(i) * n, n, k);
}

void hadamard_f32_neon(const float* a, const float* b, float* out, size_t n) {
  size_t i = 0;
  for (; i + 4 <= n; i += 4)
    vst1q_f32(out + i, vmulq_f32(vld1q_f32(a + i), vld1q_f32(b + i)));
  for (; i < n; ++i) out[i] = a[i] * b[i];
}

void hadamard_f64_neon(const double* a, const double* b, double* out, size_t n) {
  size_t i = 0;
  for (; i + 2 <= n; i += 2)
    vst1q_f64(out + i, vmulq_f64(vld1q_f64(a + i), vld1q_f64(b + i)));
  for (; i < n; ++i) out[i] = a[i] * b[i];
}

void scale_rows_f32_neon(const float* col, const float* m, float* out, int rows, int cols) {
  for (int i = 0; i < rows; ++i) {
    float32x4_t s = vdupq_n_f32(col[i]);
    const float* mi = m + size_t(i) * cols;
    float* oi = out + size_t(i) * cols;
    int j = 0;
    for (; j + 4 <= cols; j += 4) vst1q_f32(oi + j, vmulq_f32(s, vld1q_f32(mi + j)));
    for (; j < cols; ++j) oi[j] = col[i] * mi[j];
  }
}

void scale_rows_f64_neon(const double* col, const double* m, double* out, int rows, int cols) {
  for (int i = 0; i < rows; ++i) {
    float64x2_t s = vdupq_n_f64(col[i]);
    const double* mi = m + size_t(i) * cols;
    double* oi = out + size_t(i) * cols;
    int j = 0;
    for (; j + 2 <= cols; j += 2) vst1q_f64(oi + j, vmulq_f64(s, vld1q_f64(mi + j)));
    for (; j < cols; ++j) oi[j] = col[i] * mi[j];
  }
}

// Vectorizing the polynomial on NEON would need a lane-exact float->int
// truncation path; per-element evaluation of the identical scalar form keeps
// the cross-backend contract simple.
void sine_f32_neon(const float* x, float* out, size_t n, float omega, bool derivative) {
  if (derivative) {
    for (size_t i = 0; i < n; ++i) out[i] = omega * eval_scalar(omega * x[i]).cos;
  } else {
    for (size_t i = 0; i < n; ++i) out[i] = eval_scalar(omega * x[i]).sin;
  }
}

void sine_f64_neon(const double* x, double* out, size_t n, double omega, bool derivative) {
  if (derivative) {
    for (size_t i = 0; i < n; ++i) out[i] = omega * std::cos(omega * x[i]);
  } else {
    for (size_t i = 0; i < n; ++i) out[i] = std::sin(omega * x[i]);
  }
}

}  // namespace

const Table neon_table = {
    gemm_f32_neon,     gemm_f64_neon,     hadamard_f32_neon,
    hadamard_f64_neon, scale_rows_f32_neon, scale_rows_f64_neon,
    sine_f32_neon,     sine_f64_neon,     "neon",
};

}  // namespace nsdf::tensor::kernels

#endif  // __aarch64__
