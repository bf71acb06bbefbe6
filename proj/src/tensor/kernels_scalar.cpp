#include <cmath>
#include <cstddef>

#include "nsdf/tensor/kernels.hpp"

// Reference kernels: straightforward loops, no FMA, no reordering. These are
// both the correctness baseline for the SIMD variants and the fallback on
// machines without them.

namespace nsdf::tensor::kernels {
namespace {

template <typename T>
void gemm_ref(const T* a, const T* b, const T* bias, T* c, int m, int n, int k) {
  for (int i = 0; i < m; ++i) {
    const T* ai = a + size_t(i) * k;
    T* ci = c + size_t(i) * n;
    for (int j = 0; j < n; ++j) {
      T acc = bias ? bias[i] : T(0);
      for (int kk = 0; kk < k; ++kk) acc += ai[kk] * b[size_t(kk) * n + j];
      ci[j] = acc;
    }
  }
}

template <typename T>
void hadamard_ref(const T* a, const T* b, T* out, size_t n) {
  for (size_t i = 0; i < n; ++i) out[i] = a[i] * b[i];
}

template <typename T>
void scale_rows_ref(const T* col, const T* m, T* out, int rows, int cols) {
  for (int i = 0; i < rows; ++i) {
    T s = col[i];
    const T* mi = m + size_t(i) * cols;
    T* oi = out + size_t(i) * cols;
    for (int j = 0; j < cols; ++j) oi[j] = s * mi[j];
  }
}

void sine_f32_ref(const float* x, float* out, size_t n, float omega, bool derivative) {
  if (derivative) {
    for (size_t i = 0; i < n; ++i) out[i] = omega * std::cos(omega * x[i]);
  } else {
    for (size_t i = 0; i < n; ++i) out[i] = std::sin(omega * x[i]);
  }
}

void sine_f64_ref(const double* x, double* out, size_t n, double omega, bool derivative) {
  if (derivative) {
    for (size_t i = 0; i < n; ++i) out[i] = omega * std::cos(omega * x[i]);
  } else {
    for (size_t i = 0; i < n; ++i) out[i] = std::sin(omega * x[i]);
  }
}

}  // namespace

const Table scalar_table = {
    gemm_ref<float>,  gemm_ref<double>,  hadamard_ref<float>,
    hadamard_ref<double>, scale_rows_ref<float>, scale_rows_ref<double>,
    sine_f32_ref,     sine_f64_ref,      "scalar",
};

}  // namespace nsdf::tensor::kernels
