#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>

namespace nsdf {

enum class ErrorKind {
  contract,    // precondition / shape violation
  config,      // bad configuration value
  validation,  // inconsistent data (files, sequences)
  parse,       // unreadable input file
  divergence,  // numeric blow-up
};

class Error : public std::runtime_error {
public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}
  ErrorKind kind() const { return kind_; }

private:
  ErrorKind kind_;
};

struct Vec3 {
  double x = 0, y = 0, z = 0;

  Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
  Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
  Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
  Vec3 operator/(double s) const { return {x / s, y / s, z / s}; }
  Vec3& operator+=(const Vec3& o) { x += o.x; y += o.y; z += o.z; return *this; }
  double dot(const Vec3& o) const { return x * o.x + y * o.y + z * o.z; }
  Vec3 cross(const Vec3& o) const {
    return {y * o.z - z * o.y, z * o.x - x * o.z, x * o.y - y * o.x};
  }
  double norm() const { return std::sqrt(dot(*this)); }
  Vec3 normalized() const {
    double n = norm();
    return n > 0 ? *this / n : Vec3{0, 0, 0};
  }
};

inline Vec3 operator*(double s, const Vec3& v) { return v * s; }

struct Vec3f {
  float x = 0, y = 0, z = 0;
  Vec3 to_double() const { return {x, y, z}; }
  static Vec3f from(const Vec3& v) {
    return {float(v.x), float(v.y), float(v.z)};
  }
};

// Axis-aligned box, the evaluation domain of a field.
struct Aabb {
  Vec3 lo{-1, -1, -1};
  Vec3 hi{1, 1, 1};

  bool contains(const Vec3& p) const {
    return p.x >= lo.x && p.x <= hi.x && p.y >= lo.y && p.y <= hi.y &&
           p.z >= lo.z && p.z <= hi.z;
  }
  Vec3 extent() const { return hi - lo; }
  double diameter() const { return extent().norm(); }
  static Aabb cube(double half) { return {{-half, -half, -half}, {half, half, half}}; }
};

// xoshiro256++ with a splitmix64 seeder. Self-contained so that streams are
// identical on every platform and standard library.
class Rng {
public:
  explicit Rng(uint64_t seed) {
    uint64_t x = seed;
    for (auto& si : s_) {
      x += 0x9e3779b97f4a7c15ull;
      uint64_t z = x;
      z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
      z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
      si = z ^ (z >> 31);
    }
  }

  uint64_t next_u64() {
    auto rotl = [](uint64_t v, int k) { return (v << k) | (v >> (64 - k)); };
    uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
    uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

  // uniform in [0,1)
  double uniform() { return double(next_u64() >> 11) * 0x1.0p-53; }
  double uniform(double a, double b) { return a + (b - a) * uniform(); }

  double normal(double mean = 0.0, double sigma = 1.0) {
    // Box-Muller; one value per call keeps the stream layout simple.
    double u1 = uniform();
    double u2 = uniform();
    while (u1 <= 1e-300) u1 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    return mean + sigma * r * std::cos(2.0 * M_PI * u2);
  }

  Vec3 uniform_in_box(const Aabb& box) {
    return {uniform(box.lo.x, box.hi.x), uniform(box.lo.y, box.hi.y),
            uniform(box.lo.z, box.hi.z)};
  }

  // Independent stream for chunked/parallel sampling.
  Rng fork(uint64_t stream_index) const {
    Rng r(0);
    r.s_ = s_;
    Rng mix(stream_index * 0x2545f4914f6cdd1dull + 0x9e3779b97f4a7c15ull);
    for (int i = 0; i < 4; ++i) r.s_[i] ^= mix.next_u64();
    r.next_u64();
    return r;
  }

private:
  std::array<uint64_t, 4> s_{};
};

// Runs fn(chunk_index) for chunk_index in [0, chunk_count) on a small thread
// pool. Chunk boundaries are the caller's, so results never depend on the
// number of worker threads. Thread count: NSDF_THREADS env or hardware.
void parallel_chunks(int chunk_count, const std::function<void(int)>& fn);

int worker_thread_count();

}  // namespace nsdf
