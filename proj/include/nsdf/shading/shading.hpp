#pragma once

#include <filesystem>
#include <optional>
#include <vector>

#include "nsdf/tracer/trace.hpp"

namespace nsdf::shading {

using fields::Field;
using fields::NestedSequence;
using tensor::Matrix;
using tracer::Camera;
using tracer::HitRecord;
using tracer::TraceConfig;

// ---------------------------------------------------------------------------
// Images
// ---------------------------------------------------------------------------

struct ImageBuffer {
  int width = 0;
  int height = 0;
  std::vector<float> rgb;       // 3 floats per pixel, row-major, [0,1]
  std::vector<float> depth;     // ray parameter at the hit, 0 for misses
  std::vector<uint8_t> mask;    // 1 where a surface was hit

  ImageBuffer() = default;
  ImageBuffer(int w, int h)
      : width(w), height(h), rgb(size_t(w) * h * 3, 0.0f), depth(size_t(w) * h, 0.0f),
        mask(size_t(w) * h, 0) {}
  size_t pixel_count() const { return size_t(width) * height; }
};

// Mean over pixels and channels of the squared rgb difference.
double image_mse(const ImageBuffer& a, const ImageBuffer& b);

void write_ppm(const ImageBuffer& image, const std::filesystem::path& path);
ImageBuffer read_ppm(const std::filesystem::path& path);
void write_png(const ImageBuffer& image, const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Meshes (Wavefront OBJ with v/vn/f records)
// ---------------------------------------------------------------------------

struct Mesh {
  std::vector<Vec3> vertices;
  std::vector<std::array<int, 3>> triangles;      // vertex indices
  std::vector<Vec3> normals;                      // per-vertex, optional
  bool has_normals() const { return !normals.empty(); }
};

Mesh load_obj(const std::filesystem::path& path);
void save_obj(const Mesh& mesh, const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Normal mapping: shade a nearby surface with the gradient field of a finer
// SDF. Points are expected inside the delta-neighborhood of the fine zero
// set; outliers are counted (and keep their fallback normal when given).
// ---------------------------------------------------------------------------

struct NormalMapResult {
  Matrix<float> normals;      // 3 x k unit vectors
  size_t outside_count = 0;   // points with |fine(p)| > delta
  size_t fallback_count = 0;  // zero-gradient points mapped to the fallback
};

NormalMapResult neural_normal_map(const Field& fine, const Matrix<float>& points, double delta,
                                  const Matrix<float>* fallback_normals = nullptr);

struct MeshMapReport {
  size_t mapped = 0;
  size_t violators = 0;   // vertices outside the neighborhood, normals kept
  size_t fallbacks = 0;   // zero-gradient vertices, normals kept
  double violator_fraction() const {
    size_t n = mapped + violators + fallbacks;
    return n ? double(violators) / double(n) : 0.0;
  }
};

// Replaces per-vertex normals with the fine field's mapped normals; topology
// and violator vertices' normals are untouched.
MeshMapReport map_normals_to_mesh(Mesh& mesh, const Field& fine, double delta);

// ---------------------------------------------------------------------------
// Shading and full renders
// ---------------------------------------------------------------------------

struct DirectionalLight {
  Vec3f direction{0.4f, 0.7f, 0.5f};  // toward the light, normalized on use
  float intensity = 1.0f;
};

struct Material {
  Vec3f albedo{0.8f, 0.8f, 0.8f};
  float ambient = 0.1f;
  float diffuse = 0.9f;
  float specular = 0.0f;  // Blinn-Phong strength, 0 disables
  float shininess = 32.0f;
};

struct ShadeConfig {
  Material material;
  std::vector<DirectionalLight> lights{DirectionalLight{}};
  Vec3f background{0.0f, 0.0f, 0.0f};
};

// Lambert + optional Blinn-Phong for unit normals; one rgb triple per point.
Matrix<float> shade(const Matrix<float>& points, const Matrix<float>& normals,
                    const ShadeConfig& config, const Camera& camera);

enum class NormalSource { own, mapped };

struct RenderConfig {
  TraceConfig trace;
  ShadeConfig shade;
  NormalSource normal_source = NormalSource::own;
  int mapped_fine_index = -1;  // index into the sequence; -1 = finest
};

ImageBuffer render(const NestedSequence& seq, const Camera& camera, const RenderConfig& config);

}  // namespace nsdf::shading
