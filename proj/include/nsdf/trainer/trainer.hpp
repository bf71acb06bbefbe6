#pragma once

#include <filesystem>
#include <vector>

#include "nsdf/fields/nesting.hpp"

namespace nsdf::trainer {

using fields::Field;
using fields::NestedSequence;
using fields::TimeVaryingField;
using mlp::Architecture;
using mlp::MlpParams;
using tensor::Matrix;

// ---------------------------------------------------------------------------
// Training data
// ---------------------------------------------------------------------------

struct TrainingSet {
  Matrix<double> points;       // input_dim x n
  Matrix<double> targets;      // 1 x n, reference distances
  Matrix<double> val_points;   // held-out set for the final report
  Matrix<double> val_targets;
  uint64_t seed = 0;
  int input_dim = 3;
};

struct SampleConfig {
  size_t n_uniform = 100000;
  size_t n_surface = 100000;
  double sigma = 0.01;  // gaussian offset along the gradient for surface samples
  size_t n_validation = 10000;
  uint64_t seed = 1;
};

TrainingSet sample_training_set(const Field& oracle, const SampleConfig& config);

// Space-time samples for a 4-input network: a stratified set of time slices
// with both endpoints always included.
TrainingSet sample_training_set_4d(const TimeVaryingField& oracle, const SampleConfig& config,
                                   int time_slices = 16);

// ---------------------------------------------------------------------------
// Gradients
// ---------------------------------------------------------------------------

struct ParamGradients {
  std::vector<mlp::LayerParams<double>> layers;  // same shapes as the network
};

// Exact gradients of the mean squared error over the batch with respect to
// every weight and bias; also returns the loss value.
ParamGradients backprop_sine_mlp(const MlpParams<double>& params, const Matrix<double>& points,
                                 const Matrix<double>& targets, double* loss_out = nullptr);

// ---------------------------------------------------------------------------
// Fitting
// ---------------------------------------------------------------------------

struct TrainConfig {
  Architecture arch;
  int epochs = 800;
  int batch_size = 8192;  // 0 = full batch; one epoch is one shuffled pass
  double learning_rate = 0.3;  // peak rate after warmup
  double momentum = 0.9;
  double omega0 = 30.0;
  uint64_t seed = 7;

  // Schedule: linear warmup to the peak rate, then halve whenever the best
  // loss improved by less than plateau_threshold (relative) over the last
  // plateau_patience epochs; runaway steps roll back to the checkpoint.
  int warmup_epochs = 100;
  int plateau_patience = 60;
  double plateau_threshold = 0.05;
  double min_learning_rate = 1e-10;
};

struct TrainReport {
  std::vector<double> epoch_loss;  // accepted full-batch loss per epoch
  double final_loss = 0;
  double validation_mse = 0;
  double validation_max_error = 0;
  bool diverged = false;
  int halvings = 0;
  double final_learning_rate = 0;
  // |grad| in [0.8, 1.2] near the surface (reported, not asserted)
  double unit_gradient_fraction = -1;
  std::string summary() const;
  void write(const std::filesystem::path& path) const;
};

struct FitResult {
  MlpParams<double> params;
  TrainReport report;
};

FitResult fit_mlp(const TrainConfig& config, const TrainingSet& data);

// ---------------------------------------------------------------------------
// Capacity-sorted sequences fitted against a single reference field
// ---------------------------------------------------------------------------

struct SequenceFitConfig {
  TrainConfig train;                 // arch is overridden per member
  SampleConfig samples;
  fields::SupSamplerConfig sup;
  fields::VerifyConfig verify;
  std::vector<int> epochs_per_arch;  // optional override, matches archs
};

struct SequenceFitResult {
  NestedSequence sequence;                  // certified, coarse to fine
  std::vector<MlpParams<double>> params;    // per member
  std::vector<TrainReport> reports;
  std::vector<double> eps;                  // measured deviations, margin included
  fields::NestingReport certification;
};

SequenceFitResult fit_sequence(const std::vector<Architecture>& archs, const Field& oracle,
                               const SequenceFitConfig& config);

struct AnimatedFitResult {
  fields::AnimatedSequence sequence;
  std::vector<MlpParams<double>> params;
  std::vector<TrainReport> reports;
  std::vector<double> eps;
  std::vector<fields::NestingReport> per_slice;  // certification per time slice
  std::vector<double> slice_times;
};

AnimatedFitResult fit_sequence_4d(const std::vector<Architecture>& archs,
                                  const TimeVaryingField& oracle,
                                  const SequenceFitConfig& config,
                                  const std::vector<double>& certify_times = {0.0, 0.25, 0.5,
                                                                              0.75, 1.0});

// Fraction of points where |grad f| lies in [0.8, 1.2].
double unit_gradient_fraction(const MlpParams<double>& params, const Matrix<double>& points);

}  // namespace nsdf::trainer
