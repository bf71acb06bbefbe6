#include <cmath>

#include "nsdf/tracer/trace.hpp"

namespace nsdf::tracer {

void Camera::validate() const {
  if (width <= 0 || height <= 0)
    throw Error(ErrorKind::config, "image size must be positive, got " + std::to_string(width) +
                                       "x" + std::to_string(height));
  if (!(vertical_fov_deg > 0) || !(vertical_fov_deg < 180))
    throw Error(ErrorKind::config, "vertical fov must be in (0,180) degrees");
  Vec3 forward = (look_at - position).normalized();
  if (forward.norm() == 0)
    throw Error(ErrorKind::config, "camera position and look_at coincide");
  if (forward.cross(up).norm() < 1e-9)
    throw Error(ErrorKind::config, "up vector is parallel to the view direction");
}

std::vector<Ray> generate_rays(const Camera& camera) {
  camera.validate();
  const Vec3 forward = (camera.look_at - camera.position).normalized();
  const Vec3 right = forward.cross(camera.up).normalized();
  const Vec3 up = right.cross(forward);

  const double half_h = std::tan(camera.vertical_fov_deg * M_PI / 360.0);
  const double half_w = half_h * double(camera.width) / double(camera.height);

  std::vector<Ray> rays;
  rays.reserve(size_t(camera.width) * camera.height);
  const Vec3f origin = Vec3f::from(camera.position);
  for (int py = 0; py < camera.height; ++py) {
    double v = (py + 0.5) / camera.height;      // 0 at top
    double sy = (1.0 - 2.0 * v) * half_h;
    for (int px = 0; px < camera.width; ++px) {
      double u = (px + 0.5) / camera.width;
      double sx = (2.0 * u - 1.0) * half_w;
      Vec3 dir = (forward + sx * right + sy * up).normalized();
      rays.push_back({origin, Vec3f::from(dir)});
    }
  }
  return rays;
}

}  // namespace nsdf::tracer
