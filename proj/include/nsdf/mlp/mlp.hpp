#pragma once

#include <filesystem>
#include <utility>
#include <vector>

#include "nsdf/core.hpp"
#include "nsdf/tensor/ops.hpp"

namespace nsdf::mlp {

using tensor::ActivationSpec;
using tensor::Matrix;

template <typename T>
struct LayerParams {
  Matrix<T> weights;  // out_dim x in_dim
  Matrix<T> bias;     // out_dim x 1
};

// Weights of one scalar-output network: hidden layers apply the activation,
// the last layer is affine only. Immutable once built.
template <typename T>
struct MlpParams {
  std::vector<LayerParams<T>> layers;
  ActivationSpec activation = ActivationSpec::sine(30.0);
  int input_dim = 3;

  int output_dim() const { return layers.empty() ? 0 : layers.back().weights.rows(); }
  size_t parameter_count() const {
    size_t n = 0;
    for (const auto& l : layers) n += l.weights.size() + l.bias.size();
    return n;
  }
  size_t memory_bytes_f32() const { return parameter_count() * 4; }

  // Throws Error(validation) naming the offending layers.
  void validate() const;

  template <typename U>
  MlpParams<U> cast() const {
    MlpParams<U> out;
    out.activation = activation;
    out.input_dim = input_dim;
    out.layers.reserve(layers.size());
    for (const auto& l : layers)
      out.layers.push_back({l.weights.template cast<U>(), l.bias.template cast<U>()});
    return out;
  }
};

// Architecture shorthand: k hidden width x width matrices between an
// input_dim -> width layer and a width -> 1 output layer.
struct Architecture {
  int width = 64;
  int hidden_blocks = 1;  // the "k" in width x k
  int input_dim = 3;

  size_t parameter_count() const {
    size_t n = size_t(width) * input_dim + width;                       // input layer
    n += size_t(hidden_blocks) * (size_t(width) * width + width);       // hidden blocks
    n += size_t(width) + 1;                                             // output layer
    return n;
  }
  std::string name() const {
    return std::to_string(width) + "x" + std::to_string(hidden_blocks);
  }
};

Architecture parse_architecture(const std::string& spec, int input_dim = 3);

MlpParams<double> random_init(const Architecture& arch, double omega0, Rng& rng);

// distances: 1 x k row, column j = network value at P column j.
template <typename T>
Matrix<T> forward_batch(const MlpParams<T>& params, const Matrix<T>& points);

// 3 x k matrix of gradients; requires input_dim == 3.
template <typename T>
Matrix<T> gradient_batch(const MlpParams<T>& params, const Matrix<T>& points);

// Spatial gradient of a 4-input network at fixed time (points are 4 x k with
// the time row filled in); only the first three input-layer columns enter.
template <typename T>
Matrix<T> spatial_gradient_batch(const MlpParams<T>& params, const Matrix<T>& points);

// Both outputs from one pass over the layer activations; results are
// bit-identical to the two separate calls.
template <typename T>
std::pair<Matrix<T>, Matrix<T>> forward_and_gradient_batch(const MlpParams<T>& params,
                                                           const Matrix<T>& points);

void save_params(const MlpParams<double>& params, const std::filesystem::path& destination);
MlpParams<double> load_params(const std::filesystem::path& source);

}  // namespace nsdf::mlp
