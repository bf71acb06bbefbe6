#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "nsdf/trainer/trainer.hpp"
#include "support/oracles.hpp"

using namespace nsdf;
using namespace nsdf::trainer;
using fields::SphereField;
using fields::TorusField;
using tensor::Matrix;

TEST_CASE("training samples: sphere targets are exact distances") {
  SphereField sphere({0, 0, 0}, 0.7);
  SampleConfig cfg;
  cfg.n_uniform = 500;
  cfg.n_surface = 0;
  cfg.n_validation = 100;
  TrainingSet set = sample_training_set(sphere, cfg);
  REQUIRE(set.points.cols() == 500);
  for (int j = 0; j < set.points.cols(); ++j) {
    double r = std::sqrt(set.points(0, j) * set.points(0, j) +
                         set.points(1, j) * set.points(1, j) +
                         set.points(2, j) * set.points(2, j));
    CHECK(set.targets(0, j) == doctest::Approx(r - 0.7).epsilon(1e-12));
  }
}

TEST_CASE("training samples: zero-noise surface samples have zero targets") {
  SphereField sphere({0, 0, 0}, 0.7);
  SampleConfig cfg;
  cfg.n_uniform = 0;
  cfg.n_surface = 400;
  cfg.sigma = 0.0;
  cfg.n_validation = 10;
  TrainingSet set = sample_training_set(sphere, cfg);
  for (int j = 0; j < set.points.cols(); ++j)
    CHECK(std::abs(set.targets(0, j)) < 5e-3);  // projection tolerance
}

TEST_CASE("uniform-sample target histogram matches a dense grid") {
  TorusField torus(0.6, 0.3);
  SampleConfig cfg;
  cfg.n_uniform = 200000;
  cfg.n_surface = 0;
  cfg.n_validation = 10;
  TrainingSet set = sample_training_set(torus, cfg);

  // Dense-grid distribution of distances over the same box.
  const int grid = 64;
  std::vector<double> grid_values;
  grid_values.reserve(grid * grid * grid);
  for (int ix = 0; ix < grid; ++ix)
    for (int iy = 0; iy < grid; ++iy)
      for (int iz = 0; iz < grid; ++iz) {
        Vec3 p{-1 + 2 * (ix + 0.5) / grid, -1 + 2 * (iy + 0.5) / grid,
               -1 + 2 * (iz + 0.5) / grid};
        grid_values.push_back(torus.eval(p));
      }

  auto histogram = [](const std::vector<double>& values, double lo, double hi, int bins) {
    std::vector<double> h(bins, 0.0);
    for (double v : values) {
      int b = int((v - lo) / (hi - lo) * bins);
      if (b >= 0 && b < bins) h[b] += 1.0 / values.size();
    }
    return h;
  };

  std::vector<double> sampled(set.targets.storage().begin(), set.targets.storage().end());
  auto h1 = histogram(sampled, -0.3, 1.2, 10);
  auto h2 = histogram(grid_values, -0.3, 1.2, 10);
  for (int b = 0; b < 10; ++b) {
    // Within 5% of the bin mass (absolute, on bins holding real mass).
    if (h2[b] > 0.02) CHECK(std::abs(h1[b] - h2[b]) < 0.05 * std::max(h2[b], 0.05));
  }
}

TEST_CASE("backprop: zero residual gives zero gradients") {
  Rng rng(3);
  auto net = mlp::random_init({8, 1, 3}, 30.0, rng);
  Matrix<double> pts = oracles::random_matrix<double>(3, 32, rng);
  Matrix<double> targets = mlp::forward_batch(net, pts);
  double loss = -1;
  ParamGradients grads = backprop_sine_mlp(net, pts, targets, &loss);
  CHECK(loss == 0.0);
  for (const auto& l : grads.layers) {
    for (double g : l.weights.storage()) CHECK(g == 0.0);
    for (double g : l.bias.storage()) CHECK(g == 0.0);
  }
}

TEST_CASE("backprop matches central finite differences over the parameters") {
  Rng rng(5);
  auto net = mlp::random_init({8, 1, 3}, 30.0, rng);
  Matrix<double> pts = oracles::random_matrix<double>(3, 16, rng);
  Matrix<double> targets = oracles::random_matrix<double>(1, 16, rng);

  auto loss_at = [&](const mlp::MlpParams<double>& p) {
    Matrix<double> out = mlp::forward_batch(p, pts);
    double sum = 0;
    for (int j = 0; j < out.cols(); ++j) {
      double r = out(0, j) - targets(0, j);
      sum += r * r;
    }
    return sum / out.cols();
  };

  ParamGradients grads = backprop_sine_mlp(net, pts, targets);
  const double h = 1e-5;
  for (size_t li = 0; li < net.layers.size(); ++li) {
    auto check_block = [&](Matrix<double>& block, const Matrix<double>& grad_block) {
      for (size_t i = 0; i < block.size(); i += 3) {  // spot-check a third of the entries
        double saved = block.data()[i];
        block.data()[i] = saved + h;
        double up = loss_at(net);
        block.data()[i] = saved - h;
        double down = loss_at(net);
        block.data()[i] = saved;
        double fd = (up - down) / (2 * h);
        CHECK(grad_block.data()[i] ==
              doctest::Approx(fd).epsilon(1e-5).scale(std::max(1.0, std::abs(fd))));
      }
    };
    check_block(net.layers[li].weights, grads.layers[li].weights);
    check_block(net.layers[li].bias, grads.layers[li].bias);
  }
}

TEST_CASE("backprop: output bias gradient is twice the mean residual") {
  Rng rng(7);
  auto net = mlp::random_init({8, 1, 3}, 30.0, rng);
  Matrix<double> pts = oracles::random_matrix<double>(3, 64, rng);
  Matrix<double> targets = oracles::random_matrix<double>(1, 64, rng);
  Matrix<double> out = mlp::forward_batch(net, pts);
  double mean_residual = 0;
  for (int j = 0; j < 64; ++j) mean_residual += (out(0, j) - targets(0, j)) / 64.0;
  ParamGradients grads = backprop_sine_mlp(net, pts, targets);
  CHECK(grads.layers.back().bias(0, 0) == doctest::Approx(2.0 * mean_residual).epsilon(1e-12));
}

TEST_CASE("fitting a constant-zero target flattens the network output") {
  SphereField sphere({0, 0, 0}, 0.7);
  SampleConfig sc;
  sc.n_uniform = 2000;
  sc.n_surface = 0;
  sc.n_validation = 500;
  TrainingSet set = sample_training_set(sphere, sc);
  for (int j = 0; j < set.targets.cols(); ++j) set.targets(0, j) = 0.0;
  for (int j = 0; j < set.val_targets.cols(); ++j) set.val_targets(0, j) = 0.0;

  TrainConfig tc;
  tc.arch = {16, 1, 3};
  tc.epochs = 400;
  FitResult fit = fit_mlp(tc, set);
  CHECK_FALSE(fit.report.diverged);
  CHECK(fit.report.validation_max_error < 1e-3);
}

TEST_CASE("training loss never increases and the same seed reproduces the weights") {
  SphereField sphere({0, 0, 0}, 0.7);
  SampleConfig sc;
  sc.n_uniform = 4000;
  sc.n_surface = 4000;
  sc.n_validation = 1000;
  sc.seed = 21;
  TrainingSet set = sample_training_set(sphere, sc);

  TrainConfig tc;
  tc.arch = {16, 1, 3};
  tc.epochs = 150;
  tc.seed = 33;
  FitResult a = fit_mlp(tc, set);
  for (size_t e = 1; e < a.report.epoch_loss.size(); ++e)
    CHECK(a.report.epoch_loss[e] <= a.report.epoch_loss[e - 1] * (1 + 1e-12));

  FitResult b = fit_mlp(tc, set);
  REQUIRE(a.params.layers.size() == b.params.layers.size());
  for (size_t li = 0; li < a.params.layers.size(); ++li) {
    CHECK(a.params.layers[li].weights == b.params.layers[li].weights);
    CHECK(a.params.layers[li].bias == b.params.layers[li].bias);
  }
}

TEST_CASE("a short sphere fit reaches usable accuracy") {
  SphereField sphere({0, 0, 0}, 0.7);
  SampleConfig sc;
  sc.n_uniform = 8000;
  sc.n_surface = 8000;
  sc.sigma = 0.25;
  sc.seed = 5;
  sc.n_validation = 2000;  // the spec's examples validate at this scale
  TrainingSet set = sample_training_set(sphere, sc);
  TrainConfig tc;
  tc.arch = {16, 1, 3};
  tc.epochs = 450;
  tc.omega0 = 10.0;
  tc.seed = 6;
  FitResult fit = fit_mlp(tc, set);
  CHECK_FALSE(fit.report.diverged);
  CHECK(fit.report.validation_max_error < 5e-2);
}

TEST_CASE("sequence fitting rejects unsorted capacities and degenerate input") {
  SphereField sphere({0, 0, 0}, 0.7);
  SequenceFitConfig cfg;
  CHECK_THROWS_AS(fit_sequence({{64, 1, 3}, {16, 1, 3}}, sphere, cfg), Error);
  CHECK_THROWS_AS(fit_sequence({}, sphere, cfg), Error);
}

TEST_CASE("single-architecture sequences get the degenerate threshold") {
  SphereField sphere({0, 0, 0}, 0.7);
  SequenceFitConfig cfg;
  cfg.train.epochs = 120;
  cfg.train.omega0 = 10.0;
  cfg.samples.n_uniform = 4000;
  cfg.samples.n_surface = 4000;
  cfg.sup.n_uniform = 20000;
  cfg.sup.n_surface = 20000;
  cfg.verify.samples = 100000;
  SequenceFitResult fit = fit_sequence({{16, 1, 3}}, sphere, cfg);
  REQUIRE(fit.sequence.size() == 1);
  CHECK(fit.sequence.deltas[0] == doctest::Approx(fit.eps[0] + cfg.sup.margin));
  CHECK(fit.sequence.provenance.proposition == 0);
}
