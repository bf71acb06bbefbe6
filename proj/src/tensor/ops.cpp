#include "nsdf/tensor/ops.hpp"

#include <string>

namespace nsdf::tensor {

namespace {
thread_local uint64_t t_flops = 0;
}

uint64_t flops_performed() { return t_flops; }
void reset_flops() { t_flops = 0; }

ActivationSpec parse_activation(const std::string& name, double omega0) {
  if (name == "sine") return ActivationSpec::sine(omega0);
  if (name == "identity") return ActivationSpec::identity();
  throw Error(ErrorKind::config, "unknown activation kind '" + name + "' (expected sine or identity)");
}

std::string activation_name(const ActivationSpec& spec) {
  return spec.kind == Activation::sine ? "sine" : "identity";
}

template <typename T>
Matrix<T> gemm(const Matrix<T>& a, const Matrix<T>& b, const Matrix<T>* bias) {
  if (a.cols() != b.rows())
    throw Error(ErrorKind::contract,
                "gemm: inner dimensions differ, A is " + a.shape_str() + " but B is " + b.shape_str());
  if (bias && (bias->rows() != a.rows() || bias->cols() != 1))
    throw Error(ErrorKind::contract, "gemm: bias must be " + std::to_string(a.rows()) +
                                         "x1, got " + bias->shape_str());
  Matrix<T> c = Matrix<T>::uninitialized(a.rows(), b.cols());
  const auto& kt = kernels::active();
  if constexpr (std::is_same_v<T, float>)
    kt.gemm_f32(a.data(), b.data(), bias ? bias->data() : nullptr, c.data(),
                a.rows(), b.cols(), a.cols());
  else
    kt.gemm_f64(a.data(), b.data(), bias ? bias->data() : nullptr, c.data(),
                a.rows(), b.cols(), a.cols());
  t_flops += 2ull * a.rows() * b.cols() * a.cols() + (bias ? uint64_t(a.rows()) * b.cols() : 0);
  return c;
}

template <typename T>
Matrix<T> hadamard(const Matrix<T>& a, const Matrix<T>& b) {
  if (!a.same_shape(b))
    throw Error(ErrorKind::contract,
                "hadamard: shapes differ, " + a.shape_str() + " vs " + b.shape_str());
  Matrix<T> out = Matrix<T>::uninitialized(a.rows(), a.cols());
  const auto& kt = kernels::active();
  if constexpr (std::is_same_v<T, float>)
    kt.hadamard_f32(a.data(), b.data(), out.data(), a.size());
  else
    kt.hadamard_f64(a.data(), b.data(), out.data(), a.size());
  t_flops += a.size();
  return out;
}

template <typename T>
Matrix<T> activate(const Matrix<T>& a, const ActivationSpec& spec, bool derivative) {
  switch (spec.kind) {
    case Activation::identity: {
      if (!derivative) return a;
      Matrix<T> out = Matrix<T>::uninitialized(a.rows(), a.cols());
      for (size_t i = 0; i < out.size(); ++i) out.data()[i] = T(1);
      return out;
    }
    case Activation::sine: {
      Matrix<T> out = Matrix<T>::uninitialized(a.rows(), a.cols());
      const auto& kt = kernels::active();
      if constexpr (std::is_same_v<T, float>)
        kt.sine_f32(a.data(), out.data(), a.size(), float(spec.omega0), derivative);
      else
        kt.sine_f64(a.data(), out.data(), a.size(), spec.omega0, derivative);
      t_flops += 2 * a.size();
      return out;
    }
  }
  throw Error(ErrorKind::config, "unknown activation kind");
}

template <typename T>
Matrix<T> scale_rows(const Matrix<T>& col, const Matrix<T>& m) {
  if (col.rows() != m.rows() || col.cols() != 1)
    throw Error(ErrorKind::contract, "scale_rows: column must be " + std::to_string(m.rows()) +
                                         "x1, got " + col.shape_str());
  Matrix<T> out = Matrix<T>::uninitialized(m.rows(), m.cols());
  const auto& kt = kernels::active();
  if constexpr (std::is_same_v<T, float>)
    kt.scale_rows_f32(col.data(), m.data(), out.data(), m.rows(), m.cols());
  else
    kt.scale_rows_f64(col.data(), m.data(), out.data(), m.rows(), m.cols());
  t_flops += m.size();
  return out;
}

template <typename T>
Matrix<T> transpose(const Matrix<T>& a) {
  Matrix<T> out = Matrix<T>::uninitialized(a.cols(), a.rows());
  for (int i = 0; i < a.rows(); ++i)
    for (int j = 0; j < a.cols(); ++j) out(j, i) = a(i, j);
  return out;
}

template Matrix<float> gemm(const Matrix<float>&, const Matrix<float>&, const Matrix<float>*);
template Matrix<double> gemm(const Matrix<double>&, const Matrix<double>&, const Matrix<double>*);
template Matrix<float> hadamard(const Matrix<float>&, const Matrix<float>&);
template Matrix<double> hadamard(const Matrix<double>&, const Matrix<double>&);
template Matrix<float> activate(const Matrix<float>&, const ActivationSpec&, bool);
template Matrix<double> activate(const Matrix<double>&, const ActivationSpec&, bool);
template Matrix<float> scale_rows(const Matrix<float>&, const Matrix<float>&);
template Matrix<double> scale_rows(const Matrix<double>&, const Matrix<double>&);
template Matrix<float> transpose(const Matrix<float>&);
template Matrix<double> transpose(const Matrix<double>&);

}  // namespace nsdf::tensor
