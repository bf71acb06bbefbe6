#include <fstream>
#include <sstream>

#include "nsdf/shading/shading.hpp"

namespace nsdf::shading {

namespace {

// "7", "7//3" or "7/2/3" -> vertex index and optional normal index (1-based).
void parse_face_corner(const std::string& token, int line_no, int& vertex, int& normal) {
  vertex = normal = 0;
  size_t first = token.find('/');
  try {
    if (first == std::string::npos) {
      vertex = std::stoi(token);
      return;
    }
    vertex = std::stoi(token.substr(0, first));
    size_t second = token.find('/', first + 1);
    if (second == std::string::npos) return;  // v/vt
    std::string vn = token.substr(second + 1);
    if (!vn.empty()) normal = std::stoi(vn);
  } catch (const std::exception&) {
    throw Error(ErrorKind::parse,
                "line " + std::to_string(line_no) + ": bad face corner '" + token + "'");
  }
}

}  // namespace

Mesh load_obj(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::parse, "cannot open mesh " + path.string());

  Mesh mesh;
  std::vector<Vec3> file_normals;
  std::vector<int> vertex_normal_index;  // per vertex, 0 = unset
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream ss(line);
    std::string tag;
    ss >> tag;
    if (tag == "v") {
      Vec3 v;
      if (!(ss >> v.x >> v.y >> v.z))
        throw Error(ErrorKind::parse, "line " + std::to_string(line_no) + ": bad vertex record");
      mesh.vertices.push_back(v);
      vertex_normal_index.push_back(0);
    } else if (tag == "vn") {
      Vec3 n;
      if (!(ss >> n.x >> n.y >> n.z))
        throw Error(ErrorKind::parse, "line " + std::to_string(line_no) + ": bad normal record");
      file_normals.push_back(n);
    } else if (tag == "f") {
      std::vector<int> corners;
      std::string token;
      while (ss >> token) {
        int v = 0, n = 0;
        parse_face_corner(token, line_no, v, n);
        if (v < 0) v = int(mesh.vertices.size()) + 1 + v;  // relative index
        if (n < 0) n = int(file_normals.size()) + 1 + n;
        if (v < 1 || v > int(mesh.vertices.size()))
          throw Error(ErrorKind::parse, "line " + std::to_string(line_no) +
                                            ": vertex index " + std::to_string(v) +
                                            " out of range");
        if (n != 0) {
          if (n < 1 || n > int(file_normals.size()))
            throw Error(ErrorKind::parse, "line " + std::to_string(line_no) +
                                              ": normal index " + std::to_string(n) +
                                              " out of range");
          if (vertex_normal_index[v - 1] == 0) vertex_normal_index[v - 1] = n;
        }
        corners.push_back(v - 1);
      }
      if (corners.size() < 3)
        throw Error(ErrorKind::parse,
                    "line " + std::to_string(line_no) + ": face needs at least 3 corners");
      for (size_t c = 1; c + 1 < corners.size(); ++c)  // fan triangulation
        mesh.triangles.push_back({corners[0], corners[c], corners[c + 1]});
    }
    // other records (vt, o, g, usemtl, comments) are ignored
  }

  // Attach normals per vertex when the file referenced them.
  bool any = false;
  for (int idx : vertex_normal_index)
    if (idx) any = true;
  if (any && !file_normals.empty()) {
    mesh.normals.assign(mesh.vertices.size(), Vec3{0, 0, 0});
    for (size_t i = 0; i < mesh.vertices.size(); ++i)
      if (vertex_normal_index[i]) mesh.normals[i] = file_normals[vertex_normal_index[i] - 1];
  }
  return mesh;
}

void save_obj(const Mesh& mesh, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::validation, "cannot write mesh " + path.string());
  out.precision(17);
  for (const auto& v : mesh.vertices) out << "v " << v.x << " " << v.y << " " << v.z << "\n";
  const bool normals = mesh.has_normals();
  if (normals) {
    if (mesh.normals.size() != mesh.vertices.size())
      throw Error(ErrorKind::validation, "mesh has " + std::to_string(mesh.normals.size()) +
                                             " normals for " +
                                             std::to_string(mesh.vertices.size()) + " vertices");
    for (const auto& n : mesh.normals) out << "vn " << n.x << " " << n.y << " " << n.z << "\n";
  }
  for (const auto& t : mesh.triangles) {
    out << "f";
    for (int c : t) {
      out << " " << c + 1;
      if (normals) out << "//" << c + 1;
    }
    out << "\n";
  }
}

MeshMapReport map_normals_to_mesh(Mesh& mesh, const Field& fine, double delta) {
  if (mesh.vertices.empty())
    throw Error(ErrorKind::contract, "mesh has no vertices");

  const int k = int(mesh.vertices.size());
  Matrix<float> points(3, k);
  for (int j = 0; j < k; ++j) {
    points(0, j) = float(mesh.vertices[j].x);
    points(1, j) = float(mesh.vertices[j].y);
    points(2, j) = float(mesh.vertices[j].z);
  }

  Matrix<float> values = fine.eval_batch(points);
  Matrix<float> grads = fine.grad_batch(points);

  MeshMapReport report;
  std::vector<Vec3> updated =
      mesh.has_normals() ? mesh.normals : std::vector<Vec3>(mesh.vertices.size(), Vec3{0, 0, 0});
  for (int j = 0; j < k; ++j) {
    if (std::abs(double(values(0, j))) > delta) {
      ++report.violators;
      continue;
    }
    Vec3 g{grads(0, j), grads(1, j), grads(2, j)};
    double n = g.norm();
    if (n < 1e-8) {  // critical point of the fine field: keep the original normal
      ++report.fallbacks;
      continue;
    }
    updated[j] = g / n;
    ++report.mapped;
  }
  if (report.mapped > 0) mesh.normals = std::move(updated);
  return report;
}

}  // namespace nsdf::shading
