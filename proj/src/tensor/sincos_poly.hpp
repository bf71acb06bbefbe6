#pragma once

// Single-precision sin/cos via quadrant reduction (3-term pi/4 split) and
// degree-7 minimax polynomials, the classic Cephes scheme. Shared between the
// SIMD kernel translation units; the scalar form below replicates the vector
// lane arithmetic operation-for-operation so column tails match lanes bitwise.

#include <bit>
#include <cstdint>

namespace nsdf::tensor::kernels::sincos {

constexpr float kFourOverPi = 1.27323954473516f;
constexpr float kDp1 = -0.78515625f;
constexpr float kDp2 = -2.4187564849853515625e-4f;
constexpr float kDp3 = -3.77489497744594108e-8f;
constexpr float kSin0 = -1.9515295891e-4f;
constexpr float kSin1 = 8.3321608736e-3f;
constexpr float kSin2 = -1.6666654611e-1f;
constexpr float kCos0 = 2.443315711809948e-5f;
constexpr float kCos1 = -1.388731625493765e-3f;
constexpr float kCos2 = 4.166664568298827e-2f;

struct SinCos {
  float sin;
  float cos;
};

// Double-precision counterpart (Cephes-style coefficients). Same quadrant
// logic; accuracy ~1e-15 relative on the trainer's argument range.
constexpr double kFourOverPiD = 1.2732395447351626862;
constexpr double kDp1D = -7.85398125648498535156e-1;
constexpr double kDp2D = -3.77489470793079817668e-8;
constexpr double kDp3D = -2.69515142907905952645e-15;
constexpr double kSinD[6] = {1.58962301576546568060e-10, -2.50507477628578072866e-8,
                             2.75573136213857245213e-6,  -1.98412698295895385996e-4,
                             8.33333333332211858878e-3,  -1.66666666666666307295e-1};
constexpr double kCosD[6] = {-1.13585365213876817300e-11, 2.08757008419747316778e-9,
                             -2.75573141792967388112e-7,  2.48015872888517179954e-5,
                             -1.38888888888730564116e-3,  4.16666666666665929218e-2};

struct SinCosD {
  double sin;
  double cos;
};

inline SinCosD eval_scalar_d(double x) {
  uint64_t bits = std::bit_cast<uint64_t>(x);
  uint64_t sign_sin = bits & 0x8000000000000000ull;
  double ax = std::bit_cast<double>(bits & 0x7fffffffffffffffull);

  double y = ax * kFourOverPiD;
  int64_t q = int64_t(y);
  q = (q + 1) & ~int64_t(1);
  y = double(q);

  uint64_t swap_sign = uint64_t(q & 4) << 61;
  bool poly_sin = (q & 2) == 0;

  double r = ax;
  r = r + y * kDp1D;
  r = r + y * kDp2D;
  r = r + y * kDp3D;

  double z = r * r;

  double pc = kCosD[0];
  for (int i = 1; i < 6; ++i) pc = pc * z + kCosD[i];
  pc = pc * z * z;
  pc = pc - z * 0.5;
  pc = pc + 1.0;

  double ps = kSinD[0];
  for (int i = 1; i < 6; ++i) ps = ps * z + kSinD[i];
  ps = ps * z * r;
  ps = ps + r;

  double ysin = poly_sin ? ps : pc;
  ysin = std::bit_cast<double>(std::bit_cast<uint64_t>(ysin) ^ sign_sin ^ swap_sign);

  int64_t qc = q - 2;
  uint64_t cos_sign = uint64_t(~qc & 4) << 61;
  bool cos_poly_sin = (qc & 2) == 0;
  double ycos = cos_poly_sin ? ps : pc;
  ycos = std::bit_cast<double>(std::bit_cast<uint64_t>(ycos) ^ cos_sign);

  return {ysin, ycos};
}

inline SinCos eval_scalar(float x) {
  uint32_t bits = std::bit_cast<uint32_t>(x);
  uint32_t sign_sin = bits & 0x80000000u;
  float ax = std::bit_cast<float>(bits & 0x7fffffffu);

  float y = ax * kFourOverPi;
  int32_t q = int32_t(y);  // truncate toward zero, as cvttps
  q = (q + 1) & ~1;
  y = float(q);

  uint32_t swap_sign = uint32_t(q & 4) << 29;
  bool poly_sin = (q & 2) == 0;

  float r = ax;
  r = r + y * kDp1;
  r = r + y * kDp2;
  r = r + y * kDp3;

  float z = r * r;

  float pc = kCos0;
  pc = pc * z + kCos1;
  pc = pc * z + kCos2;
  pc = pc * z * z;
  pc = pc - z * 0.5f;
  pc = pc + 1.0f;

  float ps = kSin0;
  ps = ps * z + kSin1;
  ps = ps * z + kSin2;
  ps = ps * z * r;
  ps = ps + r;

  float ysin = poly_sin ? ps : pc;
  ysin = std::bit_cast<float>(std::bit_cast<uint32_t>(ysin) ^ sign_sin ^ swap_sign);

  int32_t qc = q - 2;
  uint32_t cos_sign = uint32_t(~qc & 4) << 29;
  bool cos_poly_sin = (qc & 2) == 0;
  float ycos = cos_poly_sin ? ps : pc;
  ycos = std::bit_cast<float>(std::bit_cast<uint32_t>(ycos) ^ cos_sign);

  return {ysin, ycos};
}

}  // namespace nsdf::tensor::kernels::sincos
