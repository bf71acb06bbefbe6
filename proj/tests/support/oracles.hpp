#pragma once

// Independent reference implementations the tests check against. Everything
// here is deliberately written without the library's kernel or tracing code
// paths: naive loops, closed forms, brute-force marching.

#include <cmath>
#include <vector>

#include "nsdf/core.hpp"
#include "nsdf/tensor/matrix.hpp"

namespace oracles {

using nsdf::Vec3;
using nsdf::tensor::Matrix;

// Plain triple-loop matrix product with optional per-row bias.
template <typename T>
Matrix<T> naive_gemm(const Matrix<T>& a, const Matrix<T>& b, const Matrix<T>* bias = nullptr) {
  Matrix<T> c(a.rows(), b.cols());
  for (int i = 0; i < a.rows(); ++i)
    for (int j = 0; j < b.cols(); ++j) {
      T acc = bias ? (*bias)(i, 0) : T(0);
      for (int k = 0; k < a.cols(); ++k) acc += a(i, k) * b(k, j);
      c(i, j) = acc;
    }
  return c;
}

template <typename T>
Matrix<T> naive_hadamard(const Matrix<T>& a, const Matrix<T>& b) {
  Matrix<T> c(a.rows(), a.cols());
  for (size_t i = 0; i < a.size(); ++i) c.data()[i] = a.data()[i] * b.data()[i];
  return c;
}

template <typename T>
double max_rel_error(const Matrix<T>& got, const Matrix<T>& want) {
  double worst = 0;
  double scale = 0;
  for (size_t i = 0; i < want.size(); ++i)
    scale = std::max(scale, std::abs(double(want.data()[i])));
  if (scale == 0) scale = 1;
  for (size_t i = 0; i < got.size(); ++i)
    worst = std::max(worst, std::abs(double(got.data()[i]) - double(want.data()[i])) / scale);
  return worst;
}

template <typename T>
Matrix<T> random_matrix(int rows, int cols, nsdf::Rng& rng, double lo = -1.0, double hi = 1.0) {
  Matrix<T> m(rows, cols);
  for (size_t i = 0; i < m.size(); ++i) m.data()[i] = T(rng.uniform(lo, hi));
  return m;
}

// Central finite difference of a scalar function of one variable.
template <typename F>
double central_diff(F f, double x, double h) {
  return (f(x + h) - f(x - h)) / (2 * h);
}

// Brute-force ray march: steps of fixed size, returns the first parameter
// with f <= threshold, or a negative value for a miss.
template <typename FieldLike>
double dense_ray_march(const FieldLike& field, const Vec3& origin, const Vec3& dir, double step,
                       double t_max, double threshold) {
  for (double t = 0; t <= t_max; t += step) {
    Vec3 p = origin + t * dir;
    if (field.eval(p) <= threshold) return t;
  }
  return -1.0;
}

}  // namespace oracles
