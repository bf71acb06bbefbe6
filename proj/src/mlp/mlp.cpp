#include "nsdf/mlp/mlp.hpp"

#include <cmath>
#include <string>

namespace nsdf::mlp {

using tensor::activate;
using tensor::gemm;
using tensor::hadamard;
using tensor::scale_rows;

template <typename T>
void MlpParams<T>::validate() const {
  if (layers.empty())
    throw Error(ErrorKind::validation, "network has no layers");
  if (input_dim != 3 && input_dim != 4)
    throw Error(ErrorKind::validation,
                "input_dim must be 3 or 4, got " + std::to_string(input_dim));
  if (layers.front().weights.cols() != input_dim)
    throw Error(ErrorKind::validation,
                "layer 0 expects input dim " + std::to_string(layers.front().weights.cols()) +
                    " but network input_dim is " + std::to_string(input_dim));
  for (size_t i = 0; i < layers.size(); ++i) {
    const auto& l = layers[i];
    if (l.bias.rows() != l.weights.rows() || l.bias.cols() != 1)
      throw Error(ErrorKind::validation, "layer " + std::to_string(i) + " bias is " +
                                             l.bias.shape_str() + ", weights are " +
                                             l.weights.shape_str());
    if (i + 1 < layers.size() && layers[i + 1].weights.cols() != l.weights.rows())
      throw Error(ErrorKind::validation,
                  "dimension chain broken between layers " + std::to_string(i) + "," +
                      std::to_string(i + 1) + ": " + l.weights.shape_str() + " feeds " +
                      layers[i + 1].weights.shape_str());
  }
  if (layers.back().weights.rows() != 1)
    throw Error(ErrorKind::validation, "output layer must have a single output, got " +
                                           std::to_string(layers.back().weights.rows()));
}

template void MlpParams<float>::validate() const;
template void MlpParams<double>::validate() const;

Architecture parse_architecture(const std::string& spec, int input_dim) {
  auto x = spec.find('x');
  if (x == std::string::npos || x == 0 || x + 1 >= spec.size())
    throw Error(ErrorKind::config,
                "architecture '" + spec + "' does not match the WxK grammar (e.g. 64x1)");
  try {
    Architecture arch;
    arch.width = std::stoi(spec.substr(0, x));
    arch.hidden_blocks = std::stoi(spec.substr(x + 1));
    arch.input_dim = input_dim;
    if (arch.width < 1 || arch.hidden_blocks < 0)
      throw Error(ErrorKind::config, "architecture '" + spec + "' has non-positive dimensions");
    return arch;
  } catch (const std::invalid_argument&) {
    throw Error(ErrorKind::config,
                "architecture '" + spec + "' does not match the WxK grammar (e.g. 64x1)");
  }
}

MlpParams<double> random_init(const Architecture& arch, double omega0, Rng& rng) {
  MlpParams<double> p;
  p.input_dim = arch.input_dim;
  p.activation = ActivationSpec::sine(omega0);

  auto make_layer = [&](int out_dim, int in_dim, bool first) {
    LayerParams<double> l{Matrix<double>(out_dim, in_dim), Matrix<double>(out_dim, 1)};
    // Sinusoidal-network scheme: first layer ~ U(-1/fan_in, 1/fan_in), deeper
    // layers ~ U(-sqrt(6/fan_in)/omega0, +...). Keeps omega0*(W x + b) well
    // distributed at init.
    double bound = first ? 1.0 / in_dim : std::sqrt(6.0 / in_dim) / omega0;
    for (size_t i = 0; i < l.weights.size(); ++i)
      l.weights.data()[i] = rng.uniform(-bound, bound);
    double bias_bound = 1.0 / std::sqrt(double(in_dim));
    for (size_t i = 0; i < l.bias.size(); ++i)
      l.bias.data()[i] = rng.uniform(-bias_bound, bias_bound);
    return l;
  };

  p.layers.push_back(make_layer(arch.width, arch.input_dim, true));
  for (int i = 0; i < arch.hidden_blocks; ++i)
    p.layers.push_back(make_layer(arch.width, arch.width, false));
  p.layers.push_back(make_layer(1, arch.width, false));
  p.validate();
  return p;
}

namespace {

template <typename T>
void check_points(const MlpParams<T>& params, const Matrix<T>& points, int expected_rows) {
  if (points.rows() != expected_rows)
    throw Error(ErrorKind::contract, "point batch is " + points.shape_str() + " but " +
                                         std::to_string(expected_rows) + " rows are required");
  if (params.layers.empty()) throw Error(ErrorKind::contract, "network has no layers");
}

// One pass over the layer chain. The pre-activation of each layer is computed
// once and shared between the value chain and the three per-coordinate
// gradient chains (the gradient chains start from the respective input-layer
// weight column and stay completely independent of each other).
template <typename T>
void evaluate_network(const MlpParams<T>& params, const Matrix<T>& points,
                      Matrix<T>* distances_out, Matrix<T>* gradients_out,
                      int gradient_coords) {
  const int n_layers = int(params.layers.size());
  const int k = points.cols();
  const auto& act = params.activation;

  std::vector<Matrix<T>> grad_chains;
  if (gradients_out) grad_chains.resize(gradient_coords);

  if (n_layers == 1) {
    // Degenerate affine network: gradient is the weight row itself.
    const auto& layer = params.layers[0];
    if (distances_out) *distances_out = gemm(layer.weights, points, &layer.bias);
    if (gradients_out) {
      Matrix<T> g(gradient_coords, k);
      for (int c = 0; c < gradient_coords; ++c)
        for (int j = 0; j < k; ++j) g(c, j) = layer.weights(0, c);
      *gradients_out = std::move(g);
    }
    return;
  }

  Matrix<T> current = points;
  for (int li = 0; li < n_layers; ++li) {
    const auto& layer = params.layers[li];
    const bool last = li + 1 == n_layers;

    if (last) {
      if (gradients_out)
        for (int c = 0; c < gradient_coords; ++c)
          grad_chains[c] = gemm(layer.weights, grad_chains[c]);
      if (distances_out) *distances_out = gemm(layer.weights, current, &layer.bias);
      break;
    }

    Matrix<T> pre = gemm(layer.weights, current, &layer.bias);
    if (gradients_out) {
      Matrix<T> dphi = activate(pre, act, /*derivative=*/true);
      if (li == 0) {
        for (int c = 0; c < gradient_coords; ++c) {
          Matrix<T> wcol(layer.weights.rows(), 1);
          for (int r = 0; r < layer.weights.rows(); ++r) wcol(r, 0) = layer.weights(r, c);
          grad_chains[c] = scale_rows(wcol, dphi);
        }
      } else {
        for (int c = 0; c < gradient_coords; ++c)
          grad_chains[c] = hadamard(gemm(layer.weights, grad_chains[c]), dphi);
      }
    }
    // The value chain feeds the next pre-activation; when only gradients are
    // requested the output layer's input is never consumed.
    if (distances_out || li + 2 < n_layers)
      current = activate(pre, act, /*derivative=*/false);
  }

  if (gradients_out) {
    Matrix<T> g(gradient_coords, k);
    for (int c = 0; c < gradient_coords; ++c)
      for (int j = 0; j < k; ++j) g(c, j) = grad_chains[c](0, j);
    *gradients_out = std::move(g);
  }
}

}  // namespace

template <typename T>
Matrix<T> forward_batch(const MlpParams<T>& params, const Matrix<T>& points) {
  check_points(params, points, params.input_dim);
  Matrix<T> distances;
  evaluate_network(params, points, &distances, static_cast<Matrix<T>*>(nullptr), 0);
  return distances;
}

template <typename T>
Matrix<T> gradient_batch(const MlpParams<T>& params, const Matrix<T>& points) {
  if (params.input_dim != 3)
    throw Error(ErrorKind::contract,
                "gradient_batch expects a 3-input network; use spatial_gradient_batch "
                "for time-extended networks");
  check_points(params, points, 3);
  Matrix<T> gradients;
  evaluate_network(params, points, static_cast<Matrix<T>*>(nullptr), &gradients, 3);
  return gradients;
}

template <typename T>
Matrix<T> spatial_gradient_batch(const MlpParams<T>& params, const Matrix<T>& points) {
  if (params.input_dim != 4)
    throw Error(ErrorKind::contract, "spatial_gradient_batch expects a 4-input network");
  check_points(params, points, 4);
  Matrix<T> gradients;
  evaluate_network(params, points, static_cast<Matrix<T>*>(nullptr), &gradients, 3);
  return gradients;
}

template <typename T>
std::pair<Matrix<T>, Matrix<T>> forward_and_gradient_batch(const MlpParams<T>& params,
                                                           const Matrix<T>& points) {
  if (params.input_dim != 3)
    throw Error(ErrorKind::contract, "forward_and_gradient_batch expects a 3-input network");
  check_points(params, points, 3);
  Matrix<T> distances, gradients;
  evaluate_network(params, points, &distances, &gradients, 3);
  return {std::move(distances), std::move(gradients)};
}

template Matrix<float> forward_batch(const MlpParams<float>&, const Matrix<float>&);
template Matrix<double> forward_batch(const MlpParams<double>&, const Matrix<double>&);
template Matrix<float> gradient_batch(const MlpParams<float>&, const Matrix<float>&);
template Matrix<double> gradient_batch(const MlpParams<double>&, const Matrix<double>&);
template Matrix<float> spatial_gradient_batch(const MlpParams<float>&, const Matrix<float>&);
template Matrix<double> spatial_gradient_batch(const MlpParams<double>&, const Matrix<double>&);
template std::pair<Matrix<float>, Matrix<float>> forward_and_gradient_batch(
    const MlpParams<float>&, const Matrix<float>&);
template std::pair<Matrix<double>, Matrix<double>> forward_and_gradient_batch(
    const MlpParams<double>&, const Matrix<double>&);

}  // namespace nsdf::mlp
