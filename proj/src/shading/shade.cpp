#include <algorithm>
#include <cmath>

#include "nsdf/shading/shading.hpp"

namespace nsdf::shading {

NormalMapResult neural_normal_map(const Field& fine, const Matrix<float>& points, double delta,
                                  const Matrix<float>* fallback_normals) {
  if (points.rows() != 3)
    throw Error(ErrorKind::contract, "points must be 3xk, got " + points.shape_str());
  if (fallback_normals && !fallback_normals->same_shape(points))
    throw Error(ErrorKind::contract, "fallback normals must match the point batch shape");

  NormalMapResult result;
  result.normals = fine.grad_batch(points);
  Matrix<float> values = fine.eval_batch(points);

  for (int j = 0; j < points.cols(); ++j) {
    if (std::abs(double(values(0, j))) > delta) ++result.outside_count;
    float gx = result.normals(0, j), gy = result.normals(1, j), gz = result.normals(2, j);
    float n2 = gx * gx + gy * gy + gz * gz;
    if (n2 < 1e-16f) {
      ++result.fallback_count;
      if (fallback_normals) {
        result.normals(0, j) = (*fallback_normals)(0, j);
        result.normals(1, j) = (*fallback_normals)(1, j);
        result.normals(2, j) = (*fallback_normals)(2, j);
      } else {
        result.normals(0, j) = 0;
        result.normals(1, j) = 1;
        result.normals(2, j) = 0;
      }
      continue;
    }
    float inv = 1.0f / std::sqrt(n2);
    result.normals(0, j) = gx * inv;
    result.normals(1, j) = gy * inv;
    result.normals(2, j) = gz * inv;
  }
  return result;
}

Matrix<float> shade(const Matrix<float>& points, const Matrix<float>& normals,
                    const ShadeConfig& config, const Camera& camera) {
  if (points.rows() != 3 || !points.same_shape(normals))
    throw Error(ErrorKind::contract, "points and normals must both be 3xk");
  if (config.lights.empty())
    throw Error(ErrorKind::contract, "at least one directional light is required");

  const int k = points.cols();
  Matrix<float> rgb(3, k);
  const Vec3f cam = Vec3f::from(camera.position);

  struct Light {
    float x, y, z, intensity;
  };
  std::vector<Light> lights;
  for (const auto& l : config.lights) {
    float n = std::sqrt(l.direction.x * l.direction.x + l.direction.y * l.direction.y +
                        l.direction.z * l.direction.z);
    if (n == 0) throw Error(ErrorKind::contract, "light direction must be nonzero");
    lights.push_back({l.direction.x / n, l.direction.y / n, l.direction.z / n, l.intensity});
  }

  const Material& m = config.material;
  for (int j = 0; j < k; ++j) {
    float nx = normals(0, j), ny = normals(1, j), nz = normals(2, j);
    float lit = m.ambient;
    float spec = 0.0f;
    for (const auto& l : lights) {
      float ndotl = nx * l.x + ny * l.y + nz * l.z;
      if (ndotl > 0) lit += m.diffuse * l.intensity * ndotl;
      if (m.specular > 0 && ndotl > 0) {
        // Blinn-Phong with the half vector between the light and the eye.
        float vx = cam.x - points(0, j), vy = cam.y - points(1, j), vz = cam.z - points(2, j);
        float vn = std::sqrt(vx * vx + vy * vy + vz * vz);
        if (vn > 0) {
          float hx = l.x + vx / vn, hy = l.y + vy / vn, hz = l.z + vz / vn;
          float hn = std::sqrt(hx * hx + hy * hy + hz * hz);
          if (hn > 0) {
            float ndoth = (nx * hx + ny * hy + nz * hz) / hn;
            if (ndoth > 0) spec += m.specular * l.intensity * std::pow(ndoth, m.shininess);
          }
        }
      }
    }
    rgb(0, j) = std::clamp(m.albedo.x * lit + spec, 0.0f, 1.0f);
    rgb(1, j) = std::clamp(m.albedo.y * lit + spec, 0.0f, 1.0f);
    rgb(2, j) = std::clamp(m.albedo.z * lit + spec, 0.0f, 1.0f);
  }
  return rgb;
}

}  // namespace nsdf::shading
