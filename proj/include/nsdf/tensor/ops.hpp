#pragma once

#include <cstdint>
#include <optional>

#include "nsdf/tensor/kernels.hpp"
#include "nsdf/tensor/matrix.hpp"

namespace nsdf::tensor {

enum class Activation { identity, sine };

struct ActivationSpec {
  Activation kind = Activation::sine;
  double omega0 = 30.0;  // frequency for sine(omega0 * x)

  static ActivationSpec sine(double omega0) { return {Activation::sine, omega0}; }
  static ActivationSpec identity() { return {Activation::identity, 0.0}; }
};

ActivationSpec parse_activation(const std::string& name, double omega0);
std::string activation_name(const ActivationSpec& spec);

// c = a*b, with an optional column vector (a.rows x 1) added to every column.
template <typename T>
Matrix<T> gemm(const Matrix<T>& a, const Matrix<T>& b, const Matrix<T>* bias = nullptr);

template <typename T>
Matrix<T> hadamard(const Matrix<T>& a, const Matrix<T>& b);

// Elementwise activation (or its derivative) of every entry.
template <typename T>
Matrix<T> activate(const Matrix<T>& a, const ActivationSpec& spec, bool derivative = false);

// out[i,j] = col[i] * m[i,j]; col must be m.rows x 1.
template <typename T>
Matrix<T> scale_rows(const Matrix<T>& col, const Matrix<T>& m);

template <typename T>
Matrix<T> transpose(const Matrix<T>& a);

// Rough multiply-add based operation count, used to compare evaluation
// strategies. Thread-local; only the calling thread's work is counted.
uint64_t flops_performed();
void reset_flops();

}  // namespace nsdf::tensor
