#pragma once

#include "nsdf/trainer/trainer.hpp"

namespace nsdf::trainer::detail {

// Mean-squared loss and its parameter gradients over a batch, chunked with a
// fixed reduction order (deterministic for any worker count).
double batch_gradients(const MlpParams<double>& params, const tensor::Matrix<double>& points,
                       const tensor::Matrix<double>& targets, ParamGradients& grads);

// Loss only (forward pass), same chunking.
double full_batch_loss(const MlpParams<double>& params, const tensor::Matrix<double>& points,
                       const tensor::Matrix<double>& targets);

}  // namespace nsdf::trainer::detail
