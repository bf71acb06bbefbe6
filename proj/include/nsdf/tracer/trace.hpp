#pragma once

#include <array>
#include <vector>

#include "nsdf/fields/nesting.hpp"

namespace nsdf::tracer {

using fields::Field;
using fields::NestedSequence;

struct Camera {
  Vec3 position{0, 0, 3};
  Vec3 look_at{0, 0, 0};
  Vec3 up{0, 1, 0};
  double vertical_fov_deg = 40.0;
  int width = 256;
  int height = 256;

  void validate() const;
};

struct Ray {
  Vec3f origin;
  Vec3f direction;  // unit length
};

// Pinhole rays through pixel centers, row-major from the top-left pixel.
std::vector<Ray> generate_rays(const Camera& camera);

constexpr int kMaxLevels = 8;

struct HitRecord {
  bool hit = false;
  Vec3f point{};
  float t = 0;                 // ray parameter at the end point
  int level_reached = -1;      // deepest level entered
  std::array<uint16_t, kMaxLevels> iterations_used{};  // field evaluations per level
  float final_distance = 0;    // |f| of the last traced field at the end point

  int total_iterations() const {
    int n = 0;
    for (auto c : iterations_used) n += c;
    return n;
  }
};

struct TraceConfig {
  std::vector<int> budgets;  // per-level iteration budgets, coarse to fine
  float eps_stop = 1e-3f;
  float t_max = 10.0f;

  void validate(size_t sequence_size) const;
};

// Classic sphere tracing of the delta-offset level set of a single field.
HitRecord sphere_trace(const Field& field, const Ray& ray, float delta, float eps_stop,
                       int max_iters, float t_max = 10.0f);

// Level-by-level tracing of a nested sequence: each level traces the
// delta_j-offset surface of its field and hands the end point to the next.
// The last level with a nonzero budget traces the actual zero set; trailing
// zero-budget levels mean "normals only" and are skipped. A level whose
// condition already holds at entry is passed through after one evaluation.
HitRecord multiscale_sphere_trace(const NestedSequence& seq, const Ray& ray,
                                  const TraceConfig& config);

// One record per camera ray (row-major). Rays advance in lockstep batches;
// converged rays idle. Results are identical to per-ray calls.
std::vector<HitRecord> trace_image(const NestedSequence& seq, const Camera& camera,
                                   const TraceConfig& config);

}  // namespace nsdf::tracer
