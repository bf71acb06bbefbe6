#pragma once

#include <cstddef>

namespace nsdf::tensor {

// Kernel backends. The scalar kernels are the reference implementation; the
// SIMD variants must produce the same numbers up to rounding and are selected
// at runtime (override with NSDF_BACKEND=scalar|avx2|neon or set_backend()).
enum class Backend { scalar, avx2, neon };

const char* backend_name(Backend b);
bool backend_available(Backend b);
Backend active_backend();
void set_backend(Backend b);  // throws Error(config) if unavailable

namespace kernels {

// All kernels operate on row-major dense buffers. Within one backend the
// per-element arithmetic is independent of the batch width (tails replicate
// the vector-lane operation order), so splitting a batch into smaller batches
// reproduces the same bits.
struct Table {
  // c[m x n] = a[m x k] * b[k x n]; bias (length m, may be null) is added to
  // every column of the result.
  void (*gemm_f32)(const float* a, const float* b, const float* bias, float* c,
                   int m, int n, int k);
  void (*gemm_f64)(const double* a, const double* b, const double* bias,
                   double* c, int m, int n, int k);

  void (*hadamard_f32)(const float* a, const float* b, float* out, std::size_t n);
  void (*hadamard_f64)(const double* a, const double* b, double* out, std::size_t n);

  // out[i,j] = col[i] * m[i,j]  (column vector broadcast across columns)
  void (*scale_rows_f32)(const float* col, const float* m, float* out, int rows, int cols);
  void (*scale_rows_f64)(const double* col, const double* m, double* out, int rows, int cols);

  // out = sin(omega*x), or omega*cos(omega*x) when derivative is set.
  void (*sine_f32)(const float* x, float* out, std::size_t n, float omega, bool derivative);
  void (*sine_f64)(const double* x, double* out, std::size_t n, double omega, bool derivative);

  const char* name;
};

const Table& table(Backend b);  // throws Error(config) if unavailable
const Table& active();

extern const Table scalar_table;
#if defined(__x86_64__) || defined(_M_X64)
extern const Table avx2_table;
#endif
#if defined(__aarch64__)
extern const Table neon_table;
#endif

}  // namespace kernels
}  // namespace nsdf::tensor
