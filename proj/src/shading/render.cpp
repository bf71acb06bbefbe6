#include <algorithm>
#include <cmath>

#include "nsdf/shading/shading.hpp"

namespace nsdf::shading {

namespace {
constexpr size_t kShadeChunk = 8192;
}

ImageBuffer render(const NestedSequence& seq, const Camera& camera, const RenderConfig& config) {
  seq.validate();
  config.trace.validate(seq.size());

  int effective_final = 0;
  for (size_t j = 0; j < seq.size(); ++j)
    if (config.trace.budgets[j] > 0) effective_final = int(j);

  int fine_index = config.mapped_fine_index;
  if (fine_index < 0) fine_index = int(seq.size()) - 1;
  if (config.normal_source == NormalSource::mapped && fine_index >= int(seq.size()))
    throw Error(ErrorKind::config, "mapped-normal field index " + std::to_string(fine_index) +
                                       " is out of range");

  std::vector<HitRecord> records = tracer::trace_image(seq, camera, config.trace);

  ImageBuffer img(camera.width, camera.height);
  for (size_t p = 0; p < img.pixel_count(); ++p) {
    img.rgb[p * 3 + 0] = config.shade.background.x;
    img.rgb[p * 3 + 1] = config.shade.background.y;
    img.rgb[p * 3 + 2] = config.shade.background.z;
  }

  std::vector<int> hits;
  hits.reserve(records.size());
  for (size_t i = 0; i < records.size(); ++i)
    if (records[i].hit) hits.push_back(int(i));
  if (hits.empty()) return img;

  const Field& own_field = seq.field(effective_final);
  const Field& normal_field =
      config.normal_source == NormalSource::mapped ? seq.field(fine_index) : own_field;
  const double normal_delta = seq.deltas[config.normal_source == NormalSource::mapped
                                             ? fine_index
                                             : effective_final];

  const size_t chunks = (hits.size() + kShadeChunk - 1) / kShadeChunk;
  parallel_chunks(int(chunks), [&](int ci) {
    size_t lo = size_t(ci) * kShadeChunk;
    size_t hi = std::min(hits.size(), lo + kShadeChunk);
    const int k = int(hi - lo);
    Matrix<float> points(3, k);
    for (int j = 0; j < k; ++j) {
      const HitRecord& r = records[hits[lo + j]];
      points(0, j) = r.point.x;
      points(1, j) = r.point.y;
      points(2, j) = r.point.z;
    }

    Matrix<float> normals;
    if (config.normal_source == NormalSource::mapped && fine_index != effective_final) {
      // Zero-gradient points fall back to the traced surface's own normal.
      Matrix<float> own = neural_normal_map(own_field, points, seq.deltas[effective_final]).normals;
      normals = neural_normal_map(normal_field, points, normal_delta, &own).normals;
    } else {
      normals = neural_normal_map(normal_field, points, normal_delta).normals;
    }

    Matrix<float> rgb = shade(points, normals, config.shade, camera);
    for (int j = 0; j < k; ++j) {
      const int pixel = hits[lo + j];
      const HitRecord& r = records[pixel];
      img.rgb[size_t(pixel) * 3 + 0] = rgb(0, j);
      img.rgb[size_t(pixel) * 3 + 1] = rgb(1, j);
      img.rgb[size_t(pixel) * 3 + 2] = rgb(2, j);
      img.depth[pixel] = r.t;
      img.mask[pixel] = 1;
    }
  });
  return img;
}

}  // namespace nsdf::shading
