#include <cmath>

#include "nsdf/trainer/trainer.hpp"

namespace nsdf::trainer {

using fields::SurfaceNoise;

namespace {

Matrix<double> points_to_matrix(const std::vector<Vec3>& pts) {
  Matrix<double> m(3, int(pts.size()));
  for (size_t j = 0; j < pts.size(); ++j) {
    m(0, int(j)) = pts[j].x;
    m(1, int(j)) = pts[j].y;
    m(2, int(j)) = pts[j].z;
  }
  return m;
}

Matrix<double> eval_targets(const Field& oracle, const Matrix<double>& points) {
  return oracle.eval_batch(points);
}

}  // namespace

TrainingSet sample_training_set(const Field& oracle, const SampleConfig& config) {
  Rng rng(config.seed);
  const Aabb& box = oracle.domain();

  std::vector<Vec3> pts;
  pts.reserve(config.n_uniform + config.n_surface);
  for (size_t i = 0; i < config.n_uniform; ++i) pts.push_back(rng.uniform_in_box(box));
  if (config.n_surface) {
    auto near = fields::sample_near_surface(
        oracle, config.n_surface, {SurfaceNoise::Kind::gaussian, config.sigma}, rng);
    pts.insert(pts.end(), near.begin(), near.end());
  }

  TrainingSet set;
  set.seed = config.seed;
  set.input_dim = 3;
  set.points = points_to_matrix(pts);
  set.targets = eval_targets(oracle, set.points);

  std::vector<Vec3> val;
  val.reserve(config.n_validation);
  for (size_t i = 0; i < config.n_validation; ++i) val.push_back(rng.uniform_in_box(box));
  set.val_points = points_to_matrix(val);
  set.val_targets = eval_targets(oracle, set.val_points);
  return set;
}

TrainingSet sample_training_set_4d(const TimeVaryingField& oracle, const SampleConfig& config,
                                   int time_slices) {
  if (time_slices < 2)
    throw Error(ErrorKind::config, "at least two time slices are required");
  Rng rng(config.seed);
  const Aabb& box = oracle.domain();

  // Stratified slice times; both endpoints are always present so the fitted
  // family is anchored where the animation starts and stops.
  std::vector<double> times(time_slices);
  for (int s = 0; s < time_slices; ++s) times[s] = double(s) / double(time_slices - 1);

  std::vector<Vec3> pts;
  std::vector<double> ts;
  size_t per_slice_uniform = config.n_uniform / time_slices;
  size_t per_slice_surface = config.n_surface / time_slices;
  pts.reserve((per_slice_uniform + per_slice_surface) * time_slices);

  for (int s = 0; s < time_slices; ++s) {
    double t = times[s];
    auto sliced = fields::time_slice(
        std::shared_ptr<const TimeVaryingField>(&oracle, [](const TimeVaryingField*) {}), t);
    for (size_t i = 0; i < per_slice_uniform; ++i) {
      pts.push_back(rng.uniform_in_box(box));
      ts.push_back(t);
    }
    if (per_slice_surface) {
      auto near = fields::sample_near_surface(
          *sliced, per_slice_surface, {SurfaceNoise::Kind::gaussian, config.sigma}, rng);
      for (const auto& p : near) {
        pts.push_back(p);
        ts.push_back(t);
      }
    }
  }

  TrainingSet set;
  set.seed = config.seed;
  set.input_dim = 4;
  set.points = Matrix<double>(4, int(pts.size()));
  set.targets = Matrix<double>(1, int(pts.size()));
  for (size_t j = 0; j < pts.size(); ++j) {
    set.points(0, int(j)) = pts[j].x;
    set.points(1, int(j)) = pts[j].y;
    set.points(2, int(j)) = pts[j].z;
    set.points(3, int(j)) = ts[j];
    set.targets(0, int(j)) = oracle.eval(pts[j], ts[j]);
  }

  size_t n_val = config.n_validation;
  set.val_points = Matrix<double>(4, int(n_val));
  set.val_targets = Matrix<double>(1, int(n_val));
  for (size_t j = 0; j < n_val; ++j) {
    Vec3 p = rng.uniform_in_box(box);
    double t = times[j % times.size()];
    set.val_points(0, int(j)) = p.x;
    set.val_points(1, int(j)) = p.y;
    set.val_points(2, int(j)) = p.z;
    set.val_points(3, int(j)) = t;
    set.val_targets(0, int(j)) = oracle.eval(p, t);
  }
  return set;
}

}  // namespace nsdf::trainer
