#include <cmath>

#include "nsdf/trainer/trainer.hpp"

namespace nsdf::trainer {

using tensor::activate;
using tensor::gemm;
using tensor::hadamard;
using tensor::transpose;

namespace {

// Per-chunk gradient of sum_j (f(p_j) - y_j)^2 scaled by `scale` (2/N of the
// full batch). The reverse pass reuses the layer-Jacobian structure of the
// forward gradient, transposed.
ParamGradients backprop_chunk(const MlpParams<double>& params, const Matrix<double>& points,
                              const Matrix<double>& targets, double scale, double* sse_out) {
  const int n_layers = int(params.layers.size());
  const auto& act = params.activation;

  std::vector<Matrix<double>> inputs;  // P_{i-1}: input to layer i
  std::vector<Matrix<double>> pre;     // A_i
  inputs.reserve(n_layers);
  pre.reserve(n_layers);

  Matrix<double> current = points;
  for (int li = 0; li < n_layers; ++li) {
    inputs.push_back(current);
    Matrix<double> a = gemm(params.layers[li].weights, current, &params.layers[li].bias);
    if (li + 1 < n_layers) current = activate(a, act, false);
    pre.push_back(std::move(a));
  }
  const Matrix<double>& output = pre.back();  // 1 x k

  Matrix<double> delta(1, output.cols());
  double sse = 0;
  for (int j = 0; j < output.cols(); ++j) {
    double r = output(0, j) - targets(0, j);
    sse += r * r;
    delta(0, j) = scale * r;
  }
  if (sse_out) *sse_out = sse;

  ParamGradients grads;
  grads.layers.resize(n_layers);
  Matrix<double> ones(delta.cols(), 1);
  for (int j = 0; j < delta.cols(); ++j) ones(j, 0) = 1.0;

  for (int li = n_layers - 1; li >= 0; --li) {
    grads.layers[li].weights = gemm(delta, transpose(inputs[li]));
    grads.layers[li].bias = gemm(delta, ones);
    if (li > 0) {
      Matrix<double> back = gemm(transpose(params.layers[li].weights), delta);
      delta = hadamard(back, activate(pre[li - 1], act, true));
      ones = Matrix<double>(delta.cols(), 1);
      for (int j = 0; j < delta.cols(); ++j) ones(j, 0) = 1.0;
    }
  }
  return grads;
}

}  // namespace

ParamGradients backprop_sine_mlp(const MlpParams<double>& params, const Matrix<double>& points,
                                 const Matrix<double>& targets, double* loss_out) {
  if (points.rows() != params.input_dim)
    throw Error(ErrorKind::contract, "points are " + points.shape_str() + " but the network expects " +
                                         std::to_string(params.input_dim) + " rows");
  if (targets.rows() != 1 || targets.cols() != points.cols())
    throw Error(ErrorKind::contract, "targets must be 1x" + std::to_string(points.cols()) +
                                         ", got " + targets.shape_str());
  const int n = points.cols();
  double sse = 0;
  ParamGradients grads = backprop_chunk(params, points, targets, 2.0 / n, &sse);
  if (loss_out) *loss_out = sse / n;
  return grads;
}

namespace detail {

// Full-batch loss and gradients, chunked for memory and parallelism. Chunk
// boundaries are fixed and partials are reduced in chunk order, so the result
// is independent of the worker count.
constexpr int kTrainChunk = 4096;

void accumulate(ParamGradients& into, const ParamGradients& from) {
  if (into.layers.empty()) {
    into = from;
    return;
  }
  for (size_t li = 0; li < into.layers.size(); ++li) {
    auto& w = into.layers[li].weights;
    auto& b = into.layers[li].bias;
    const auto& wf = from.layers[li].weights;
    const auto& bf = from.layers[li].bias;
    for (size_t i = 0; i < w.size(); ++i) w.data()[i] += wf.data()[i];
    for (size_t i = 0; i < b.size(); ++i) b.data()[i] += bf.data()[i];
  }
}

double batch_gradients(const MlpParams<double>& params, const Matrix<double>& points,
                       const Matrix<double>& targets, ParamGradients& grads) {
  const int n = points.cols();
  const int chunks = (n + kTrainChunk - 1) / kTrainChunk;
  std::vector<ParamGradients> partials(chunks);
  std::vector<double> sse(chunks, 0.0);

  parallel_chunks(chunks, [&](int ci) {
    int lo = ci * kTrainChunk, hi = std::min(n, lo + kTrainChunk);
    int k = hi - lo;
    auto p = Matrix<double>::uninitialized(points.rows(), k);
    auto y = Matrix<double>::uninitialized(1, k);
    for (int r = 0; r < points.rows(); ++r)
      for (int j = 0; j < k; ++j) p(r, j) = points(r, lo + j);
    for (int j = 0; j < k; ++j) y(0, j) = targets(0, lo + j);
    partials[ci] = backprop_chunk(params, p, y, 2.0 / n, &sse[ci]);
  });

  grads.layers.clear();
  double total_sse = 0;
  for (int ci = 0; ci < chunks; ++ci) {
    accumulate(grads, partials[ci]);
    total_sse += sse[ci];
  }
  return total_sse / n;
}

double full_batch_loss(const MlpParams<double>& params, const Matrix<double>& points,
                       const Matrix<double>& targets) {
  const int n = points.cols();
  const int chunks = (n + kTrainChunk - 1) / kTrainChunk;
  std::vector<double> sse(chunks, 0.0);
  parallel_chunks(chunks, [&](int ci) {
    int lo = ci * kTrainChunk, hi = std::min(n, lo + kTrainChunk);
    int k = hi - lo;
    auto p = Matrix<double>::uninitialized(points.rows(), k);
    for (int r = 0; r < points.rows(); ++r)
      for (int j = 0; j < k; ++j) p(r, j) = points(r, lo + j);
    Matrix<double> out = mlp::forward_batch(params, p);
    double s = 0;
    for (int j = 0; j < k; ++j) {
      double r = out(0, j) - targets(0, lo + j);
      s += r * r;
    }
    sse[ci] = s;
  });
  double total = 0;
  for (double s : sse) total += s;
  return total / n;
}

}  // namespace detail

}  // namespace nsdf::trainer
